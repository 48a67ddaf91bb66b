//! Small dense kernels. Active sets are at most a few hundred atoms, so a
//! plain Cholesky on the normal equations is all that is needed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::{Error, Result, Scalar};

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = a`.
pub(crate) fn cholesky<S: Scalar>(a: ArrayView2<S>) -> Result<Array2<S>> {
    let k = a.nrows();
    debug_assert_eq!(k, a.ncols());
    let mut l = Array2::<S>::zeros((k, k));
    for j in 0..k {
        let mut diag = a[[j, j]];
        for p in 0..j {
            diag = diag - l[[j, p]] * l[[j, p]];
        }
        if !(diag > S::zero()) {
            return Err(Error::NotPositiveDefinite);
        }
        let d = diag.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..k {
            let mut s = a[[i, j]];
            for p in 0..j {
                s = s - l[[i, p]] * l[[j, p]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L z = b`.
pub(crate) fn forward_sub<S: Scalar>(l: &Array2<S>, b: ArrayView1<S>) -> Array1<S> {
    let k = l.nrows();
    let mut z = Array1::<S>::zeros(k);
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s = s - l[[i, p]] * z[p];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Solves `Lᵀ x = b`.
pub(crate) fn backward_sub_t<S: Scalar>(l: &Array2<S>, b: ArrayView1<S>) -> Array1<S> {
    let k = l.nrows();
    let mut x = Array1::<S>::zeros(k);
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in (i + 1)..k {
            s = s - l[[p, i]] * x[p];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `a x = b` for symmetric positive definite `a` through a
/// square-root-free `L D Lᵀ` factorization, so diagonal systems are solved
/// exactly.
pub(crate) fn spd_solve<S: Scalar>(a: ArrayView2<S>, b: ArrayView1<S>) -> Result<Array1<S>> {
    let k = a.nrows();
    debug_assert_eq!(k, a.ncols());
    let mut l = Array2::<S>::eye(k);
    let mut d = Array1::<S>::zeros(k);
    for j in 0..k {
        let mut dj = a[[j, j]];
        for p in 0..j {
            dj = dj - l[[j, p]] * l[[j, p]] * d[p];
        }
        if !(dj > S::zero()) {
            return Err(Error::NotPositiveDefinite);
        }
        d[j] = dj;
        for i in (j + 1)..k {
            let mut s = a[[i, j]];
            for p in 0..j {
                s = s - l[[i, p]] * l[[j, p]] * d[p];
            }
            l[[i, j]] = s / dj;
        }
    }
    let mut z = Array1::<S>::zeros(k);
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s = s - l[[i, p]] * z[p];
        }
        z[i] = s;
    }
    let mut x = Array1::<S>::zeros(k);
    for i in (0..k).rev() {
        let mut s = z[i] / d[i];
        for p in (i + 1)..k {
            s = s - l[[p, i]] * x[p];
        }
        x[i] = s;
    }
    Ok(x)
}

/// Orthonormalizes the columns of `m` in place (modified Gram-Schmidt,
/// applied twice for stability).
pub(crate) fn orthonormalize_columns(m: &mut Array2<f64>) -> Result<()> {
    let cols = m.ncols();
    for _pass in 0..2 {
        for j in 0..cols {
            for p in 0..j {
                let proj = m.column(p).dot(&m.column(j));
                let pcol = m.column(p).to_owned();
                m.column_mut(j).scaled_add(-proj, &pcol);
            }
            let norm = m.column(j).dot(&m.column(j)).sqrt();
            if norm < 1e-12 {
                return Err(Error::Shape("rank-deficient basis".into()));
            }
            m.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
    Ok(())
}

/// Largest eigenvalue of `aᵀa` (squared spectral norm) by power iteration.
pub(crate) fn spectral_norm_sq<S: Scalar>(a: ArrayView2<S>) -> S {
    let n = a.ncols();
    if n == 0 {
        return S::zero();
    }
    let mut v = Array1::from_elem(n, S::one() / S::lit(n as f64).sqrt());
    let mut estimate = S::zero();
    for _ in 0..500 {
        let w = a.t().dot(&a.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == S::zero() {
            return S::zero();
        }
        let next = norm;
        v = w / norm;
        if (next - estimate).abs() <= S::lit(1e-12) * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a: Array2<f64> = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let x = spd_solve(a.view(), b.view()).unwrap();
        let back = a.dot(&x);
        for (u, v) in back.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            cholesky(a.view()),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a: Array2<f64> = array![[3.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        assert!((spectral_norm_sq(a.view()) - 9.0).abs() < 1e-9);
    }
}
