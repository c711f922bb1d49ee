//! Small dense linear-algebra helpers shared by the geometric modules.
//!
//! Everything here works at desk scale (real dimensions up to a few hundred),
//! so the routines favour clarity over blocking or workspace reuse.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GeometryError, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Candidates whose remaining norm falls below `drop_tol` (relative to their
/// original norm) are skipped.
pub fn orthonormalize(candidates: &[RVec], drop_tol: f64) -> Vec<RVec> {
    let mut basis: Vec<RVec> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if let Some(v) = orthogonalize_against(&basis, c, drop_tol) {
            basis.push(v);
        }
    }
    basis
}

/// Orthogonalize `c` against an orthonormal `basis` (two MGS sweeps) and
/// normalize. Returns `None` if nothing substantial is left.
pub fn orthogonalize_against(basis: &[RVec], c: &RVec, drop_tol: f64) -> Option<RVec> {
    let norm0 = c.norm();
    if norm0 == 0.0 {
        return None;
    }
    let mut v = c.clone();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(&v);
            v.axpy(-proj, b, 1.0);
        }
    }
    let norm = v.norm();
    if norm <= drop_tol * norm0 {
        return None;
    }
    Some(v / norm)
}

/// Stack column vectors into a matrix (`rows` is used when `cols` is empty).
pub fn columns_to_matrix(rows: usize, cols: &[RVec]) -> RMat {
    let mut m = RMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The scaled matrix has 1-norm at most 1/2, where 20 Taylor terms are
/// accurate to well below 1e-16 relative.
pub fn matrix_exp(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix_exp requires a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(squarings as i32);
    let scaled = a * Complex64::new(scale, 0.0);

    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for j in 1..=20 {
        term = &term * &scaled * Complex64::new(1.0 / j as f64, 0.0);
        result += &term;
        if one_norm(&term) < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Unitary polar factor `M (M†M)^{-1/2}` of a full-column-rank matrix.
pub fn polar_factor(m: &CMat) -> Result<CMat> {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(GeometryError::SingularNormalization(smin));
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    Ok(u * v_t)
}

/// Singular values of a real matrix, descending.
pub fn singular_values(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Orthonormal basis of the row space of `m` (numerical rank with relative
/// threshold `rel_tol`), as columns.
pub fn row_space_basis(m: &RMat, rel_tol: f64) -> (RMat, Vec<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut cols = Vec::new();
    let mut kept = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        kept.push(s);
        if s > rel_tol * smax.max(1e-300) && s > 0.0 {
            cols.push(v_t.row(i).transpose());
        }
    }
    kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (columns_to_matrix(m.ncols(), &cols), kept)
}

/// Frobenius norm of a complex matrix.
pub fn cnorm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-abs deviation of `u†u` from the identity.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let k = u.ncols();
    let g = u.adjoint() * u;
    cnorm(&(g - CMat::identity(k, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    #[test]
    fn exp_matches_nalgebra_on_skew_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_cmat(&mut rng, 3, 3) * Complex64::new(2.0, 0.0);
            let xi = (&m - m.adjoint()) * Complex64::new(0.5, 0.0);
            let ours = matrix_exp(&xi);
            let theirs = xi.clone().exp();
            assert!(cnorm(&(&ours - &theirs)) < 1e-12);
            assert!(unitarity_residual(&ours) < 1e-12);
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMat::zeros(4, 4);
        assert_eq!(matrix_exp(&z), CMat::identity(4, 4));
    }

    #[test]
    fn mgs_gives_orthonormal_frame_and_drops_dependent() {
        let a = RVec::from_vec(vec![1.0, 1.0, 0.0]);
        let b = RVec::from_vec(vec![2.0, 2.0, 0.0]);
        let c = RVec::from_vec(vec![0.0, 1.0, 1.0]);
        let basis = orthonormalize(&[a, b, c], 1e-10);
        assert_eq!(basis.len(), 2);
        assert!((basis[0].dot(&basis[1])).abs() < 1e-15);
        assert!((basis[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polar_rejects_rank_deficient() {
        let m = CMat::zeros(3, 2);
        assert!(matches!(
            polar_factor(&m),
            Err(GeometryError::SingularNormalization(_))
        ));
    }

    #[test]
    fn polar_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_cmat(&mut rng, 5, 3);
        let p = polar_factor(&m).unwrap();
        assert!(unitarity_residual(&p) < 1e-13);
    }
}
