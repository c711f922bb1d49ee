//! Complex ambient spaces and their linear Kähler structure.
//!
//! An ambient element is always stored as an `n × k` complex matrix: `ℂⁿ` is
//! the `k = 1` case and `Hom(ℂᵏ, ℂⁿ)` the general one. The Hermitian metric is
//! `h(a, b) = Tr(a b†) = Σ a_j conj(b_j)`, with Riemannian part `g = Re h` and
//! symplectic part `ω = Im h`.
//!
//! Real computations use the realification: entry `j` (column-major) becomes
//! the pair `(2j, 2j + 1) = (Re, Im)`, so the Euclidean dot product of
//! realified vectors is exactly `g`, and multiplication by `i` acts blockwise.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::linalg::{CMat, RVec};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical tolerances used by the level-set machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum level residual `‖μ(q) − c‖` for a point to count as on `N`.
    pub on_manifold: f64,
    /// Maximum relative tangency residual accepted by `apply_J`.
    pub tangent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on_manifold: 1e-10,
            tangent: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmbientSpace {
    /// `ℂⁿ`, stored as `n × 1` columns.
    Vector { dim: usize },
    /// `Hom(ℂᵏ, ℂⁿ)`, stored as `n × k` matrices.
    Matrix { k: usize, n: usize },
}

impl AmbientSpace {
    pub fn rows(&self) -> usize {
        match *self {
            AmbientSpace::Vector { dim } => dim,
            AmbientSpace::Matrix { n, .. } => n,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            AmbientSpace::Vector { .. } => 1,
            AmbientSpace::Matrix { k, .. } => k,
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim()
    }

    pub fn zeros(&self) -> CMat {
        CMat::zeros(self.rows(), self.cols())
    }

    pub fn check(&self, a: &CMat) -> Result<()> {
        if a.nrows() == self.rows() && a.ncols() == self.cols() {
            Ok(())
        } else {
            Err(GeometryError::shape(
                format!("{}x{}", self.rows(), self.cols()),
                format!("{}x{}", a.nrows(), a.ncols()),
            ))
        }
    }

    /// `h(a, b) = Tr(a b†)`; in the vector case `Σ a_j conj(b_j)`.
    pub fn hermitian(&self, a: &CMat, b: &CMat) -> Result<Complex64> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum())
    }

    /// Riemannian part `g = Re h`.
    pub fn metric(&self, a: &CMat, b: &CMat) -> Result<f64> {
        Ok(self.hermitian(a, b)?.re)
    }

    /// Symplectic part `ω = Im h`.
    pub fn symplectic(&self, a: &CMat, b: &CMat) -> Result<f64> {
        Ok(self.hermitian(a, b)?.im)
    }

    /// Liouville form `θ|_A(B) = Im Tr(A B†)`.
    pub fn liouville(&self, a: &CMat, b: &CMat) -> Result<f64> {
        self.symplectic(a, b)
    }

    pub fn realify(&self, a: &CMat) -> RVec {
        realify(a)
    }

    pub fn complexify(&self, v: &RVec) -> Result<CMat> {
        if v.len() != self.real_dim() {
            return Err(GeometryError::shape(self.real_dim(), v.len()));
        }
        Ok(complexify(v, self.rows(), self.cols()))
    }

    /// The `j`-th real basis vector of the realification, as an ambient element.
    pub fn real_basis(&self, j: usize) -> CMat {
        let mut a = self.zeros();
        let entry = j / 2;
        let (r, c) = (entry % self.rows(), entry / self.rows());
        a[(r, c)] = if j % 2 == 0 { Complex64::new(1.0, 0.0) } else { I };
        a
    }

    /// Standard complex Gaussian element (independent N(0,1) real and imaginary parts).
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        random_cmat(rng, self.rows(), self.cols())
    }

    /// Human-readable label used in reports.
    pub fn label(&self) -> String {
        match *self {
            AmbientSpace::Vector { dim } => format!("C^{dim}"),
            AmbientSpace::Matrix { k, n } => format!("Hom(C^{k},C^{n})"),
        }
    }
}

pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

pub fn realify(a: &CMat) -> RVec {
    let mut v = DVector::zeros(2 * a.len());
    for (j, z) in a.iter().enumerate() {
        v[2 * j] = z.re;
        v[2 * j + 1] = z.im;
    }
    v
}

pub fn complexify(v: &RVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |r, c| {
        let j = c * rows + r;
        Complex64::new(v[2 * j], v[2 * j + 1])
    })
}

/// Multiplication by `i` on a realified vector.
pub fn mul_i(v: &RVec) -> RVec {
    let mut w = v.clone();
    for j in 0..v.len() / 2 {
        w[2 * j] = -v[2 * j + 1];
        w[2 * j + 1] = v[2 * j];
    }
    w
}

/// Embedded constraint sets with a closed-form retraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ManifoldKind {
    /// Product of round spheres: the complex coordinates listed in each block
    /// (column-major flat indices) have Euclidean norm equal to the block's
    /// radius. Coordinates outside every block are unconstrained.
    Spheres { blocks: Vec<Vec<usize>>, radii: Vec<f64> },
    /// Scaled Stiefel manifold `A†A = scale² 𝕀`.
    Stiefel { scale: f64 },
}

impl ManifoldKind {
    /// The unit sphere in `ℂⁿ` (or the unit Frobenius sphere of a matrix space).
    pub fn unit_sphere(space: &AmbientSpace) -> Self {
        ManifoldKind::Spheres {
            blocks: vec![(0..space.complex_dim()).collect()],
            radii: vec![1.0],
        }
    }

    /// Resolve a kind by name: `"sphere"` (unit sphere) or `"stiefel"`.
    pub fn parse(name: &str, space: &AmbientSpace) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::unit_sphere(space)),
            "stiefel" => Ok(ManifoldKind::Stiefel { scale: 1.0 }),
            other => Err(GeometryError::UnknownManifoldKind(other.to_string())),
        }
    }

    /// Normalization (spheres) or polar (Stiefel) retraction of `q + v`.
    pub fn retract(&self, q: &CMat, v: &CMat) -> Result<CMat> {
        if q.shape() != v.shape() {
            return Err(GeometryError::shape(
                format!("{:?}", q.shape()),
                format!("{:?}", v.shape()),
            ));
        }
        let x = q + v;
        match self {
            ManifoldKind::Spheres { blocks, radii } => {
                let mut out = x;
                let flat = out.as_mut_slice();
                for (block, &radius) in blocks.iter().zip(radii) {
                    let norm = block.iter().map(|&j| flat[j].norm_sqr()).sum::<f64>().sqrt();
                    if !(norm > 1e-300) {
                        return Err(GeometryError::SingularNormalization(norm));
                    }
                    let s = radius / norm;
                    for &j in block {
                        flat[j] *= s;
                    }
                }
                Ok(out)
            }
            ManifoldKind::Stiefel { scale } => {
                Ok(crate::linalg::polar_factor(&x)? * Complex64::new(*scale, 0.0))
            }
        }
    }

    /// Constraint residual: max deviation of block norms, or `‖A†A − scale²𝕀‖`.
    pub fn residual(&self, q: &CMat) -> f64 {
        match self {
            ManifoldKind::Spheres { blocks, radii } => {
                let flat = q.as_slice();
                blocks
                    .iter()
                    .zip(radii)
                    .map(|(b, r)| {
                        let n2 = b.iter().map(|&j| flat[j].norm_sqr()).sum::<f64>();
                        (n2 - r * r).abs()
                    })
                    .fold(0.0, f64::max)
            }
            ManifoldKind::Stiefel { scale } => {
                let k = q.ncols();
                let g = q.adjoint() * q - CMat::identity(k, k) * Complex64::new(scale * scale, 0.0);
                crate::linalg::cnorm(&g)
            }
        }
    }

    /// Random point: normalized Gaussian blocks, or Gram–Schmidt of the
    /// columns of a Gaussian matrix.
    pub fn sample<R: Rng + ?Sized>(&self, space: &AmbientSpace, rng: &mut R) -> CMat {
        let g = space.random_element(rng);
        match self {
            ManifoldKind::Spheres { .. } => self
                .retract(&g, &space.zeros())
                .expect("Gaussian blocks are almost surely nonzero"),
            ManifoldKind::Stiefel { scale } => {
                gram_schmidt_columns(&g) * Complex64::new(*scale, 0.0)
            }
        }
    }
}

/// Orthonormalize the columns of `a` under the Hermitian product (two MGS sweeps).
pub fn gram_schmidt_columns(a: &CMat) -> CMat {
    let mut q = a.clone();
    for c in 0..q.ncols() {
        for _ in 0..2 {
            for p in 0..c {
                let proj: Complex64 = (0..q.nrows()).map(|r| q[(r, p)].conj() * q[(r, c)]).sum();
                for r in 0..q.nrows() {
                    let d = q[(r, p)] * proj;
                    q[(r, c)] -= d;
                }
            }
        }
        let norm = q.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for r in 0..q.nrows() {
            q[(r, c)] /= norm;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e1(dim: usize) -> CMat {
        let mut a = CMat::zeros(dim, 1);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a
    }

    #[test]
    fn unit_vector_has_unit_norm() {
        let sp = AmbientSpace::Vector { dim: 3 };
        assert_eq!(sp.hermitian(&e1(3), &e1(3)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn identity_matrix_has_trace_two() {
        let sp = AmbientSpace::Matrix { k: 2, n: 2 };
        let id = CMat::identity(2, 2);
        assert_eq!(sp.hermitian(&id, &id).unwrap(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let sp = AmbientSpace::Vector { dim: 3 };
        let bad = CMat::zeros(2, 1);
        assert!(matches!(
            sp.hermitian(&bad, &e1(3)),
            Err(GeometryError::ShapeMismatch { .. })
        ));
        assert!(sp.liouville(&e1(3), &bad).is_err());
    }

    #[test]
    fn liouville_examples() {
        let sp = AmbientSpace::Vector { dim: 2 };
        let a = e1(2);
        let ib = &a * I;
        assert_eq!(sp.liouville(&a, &ib).unwrap(), -1.0);
        assert_eq!(sp.liouville(&a, &a).unwrap(), 0.0);
        let zero = sp.zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = sp.random_element(&mut rng);
        assert_eq!(sp.liouville(&zero, &b).unwrap(), 0.0);
    }

    #[test]
    fn real_basis_roundtrip() {
        let sp = AmbientSpace::Matrix { k: 2, n: 3 };
        for j in 0..sp.real_dim() {
            let v = sp.realify(&sp.real_basis(j));
            assert_eq!(v[j], 1.0);
            assert_eq!(v.norm(), 1.0);
        }
    }

    #[test]
    fn i_squares_to_minus_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sp = AmbientSpace::Matrix { k: 2, n: 4 };
        let v = sp.realify(&sp.random_element(&mut rng));
        let w = mul_i(&mul_i(&v));
        assert!((w + &v).amax() <= 1e-15);
    }


    #[test]
    fn sphere_retraction_examples() {
        let sp = AmbientSpace::Vector { dim: 3 };
        let kind = ManifoldKind::parse("sphere", &sp).unwrap();
        let q = e1(3);
        assert_eq!(kind.retract(&q, &sp.zeros()).unwrap(), q);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let q = kind.sample(&sp, &mut rng);
            let v = sp.random_element(&mut rng);
            let r = kind.retract(&q, &v).unwrap();
            assert!(kind.residual(&r) <= 1e-14);
        }
    }

    #[test]
    fn stiefel_retraction_is_orthonormal() {
        let sp = AmbientSpace::Matrix { k: 2, n: 4 };
        let kind = ManifoldKind::Stiefel { scale: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let a = kind.sample(&sp, &mut rng);
            assert!(kind.residual(&a) <= 1e-13);
            let v = sp.random_element(&mut rng) * Complex64::new(0.3, 0.0);
            let x = kind.retract(&a, &v).unwrap();
            assert!(kind.residual(&x) <= 1e-12);
        }
    }

    #[test]
    fn retraction_errors() {
        let sp = AmbientSpace::Matrix { k: 2, n: 3 };
        assert!(matches!(
            ManifoldKind::parse("torus", &sp),
            Err(GeometryError::UnknownManifoldKind(_))
        ));
        let kind = ManifoldKind::Stiefel { scale: 1.0 };
        let a = gram_schmidt_columns(&CMat::from_fn(3, 2, |r, c| {
            Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)
        }));
        // A + V with V = −A collapses to zero
        assert!(matches!(
            kind.retract(&a, &(-&a)),
            Err(GeometryError::SingularNormalization(_))
        ));
    }

    #[test]
    fn retraction_is_first_order() {
        let sp = AmbientSpace::Matrix { k: 2, n: 4 };
        let kind = ManifoldKind::Stiefel { scale: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = kind.sample(&sp, &mut rng);
        // tangent direction: project a random matrix onto A†V + V†A = 0
        let g = sp.random_element(&mut rng);
        let sym = a.adjoint() * &g;
        let herm = (&sym + sym.adjoint()) * Complex64::new(0.5, 0.0);
        let v = &g - &a * herm;
        let mut ratios = Vec::new();
        for t in [1e-3, 1e-4] {
            let step = &v * Complex64::new(t, 0.0);
            let x = kind.retract(&a, &step).unwrap();
            let err = crate::linalg::cnorm(&((x - &a) * Complex64::new(1.0 / t, 0.0) - &v));
            ratios.push(err / t);
        }
        // ‖(R(q,tv) − q)/t − v‖ ≤ C t with a finite, t-independent C
        assert!(ratios.iter().all(|c| c.is_finite() && *c < 10.0 * crate::linalg::cnorm(&v).powi(2) + 1.0));
    }

    proptest! {
        #[test]
        fn kahler_triple_is_compatible(seed in any::<u64>(), k in 1usize..3, n in 1usize..5) {
            let sp = AmbientSpace::Matrix { k, n };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = sp.random_element(&mut rng);
            let v = sp.random_element(&mut rng);
            let scale = sp.metric(&u, &u).unwrap().sqrt() * sp.metric(&v, &v).unwrap().sqrt();
            // ω antisymmetric, g symmetric
            let w_uv = sp.symplectic(&u, &v).unwrap();
            let w_vu = sp.symplectic(&v, &u).unwrap();
            prop_assert!((w_uv + w_vu).abs() <= 1e-14 * scale.max(1.0));
            prop_assert!((sp.metric(&u, &v).unwrap() - sp.metric(&v, &u).unwrap()).abs() <= 1e-14 * scale.max(1.0));
            // ω(u, v) = g(u, i v) = −g(i u, v)
            let iu = &u * I;
            let iv = &v * I;
            prop_assert!((w_uv - sp.metric(&u, &iv).unwrap()).abs() <= 1e-13 * scale.max(1.0));
            prop_assert!((w_uv + sp.metric(&iu, &v).unwrap()).abs() <= 1e-13 * scale.max(1.0));
            // realification carries g as the dot product and i as mul_i
            let (ru, rv) = (realify(&u), realify(&v));
            prop_assert!((ru.dot(&rv) - sp.metric(&u, &v).unwrap()).abs() <= 1e-13 * scale.max(1.0));
            prop_assert!((mul_i(&ru) - realify(&iu)).amax() == 0.0);
        }
    }
}
