//! Weighted tori and unitary groups: Lie algebras, exponentials, and their
//! actions on ambient spaces.
//!
//! [`LieGroup`] is the abstract group (what both factors of a product must
//! share); [`GroupSpec`] is a concrete action of it on one ambient space.
//!
//! Conventions:
//! * torus element `θ ∈ ℝᵖ` acts by `z_j ↦ e^{2πi⟨W_j, θ⟩} z_j`; `exp` is the
//!   identity map on `ℝᵖ`, and elements are reduced mod 1 only on comparison;
//! * unitary `u` acts by `A ↦ A u†`, and the generator of `ξ ∈ 𝔲(k)` at `A` is
//!   `A ξ`, the velocity of `t ↦ A exp(tξ)` (see [`GroupSpec::flow`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ambient::{gram_schmidt_columns, random_cmat, AmbientSpace, I};
use crate::error::{GeometryError, Result};
use crate::linalg::{cnorm, matrix_exp, unitarity_residual, CMat, RVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LieGroup {
    Torus { rank: usize },
    Unitary { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraElement {
    /// `θ ∈ ℝᵖ`.
    Torus(RVec),
    /// Skew-Hermitian `k × k` matrix.
    Unitary(CMat),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    /// `θ ∈ ℝᵖ`, meaningful mod `ℤᵖ`.
    Torus(RVec),
    /// Unitary `k × k` matrix.
    Unitary(CMat),
}

/// Element of the dual Lie algebra. Unitary duals are identified with
/// skew-Hermitian matrices, as in `μ(A) = i A†A`.
#[derive(Debug, Clone, PartialEq)]
pub enum DualElement {
    Torus(RVec),
    Unitary(CMat),
}

fn mixed(what: &str) -> GeometryError {
    GeometryError::MixedGroupKinds(what.to_string())
}

impl LieGroup {
    pub fn dim(&self) -> usize {
        match *self {
            LieGroup::Torus { rank } => rank,
            LieGroup::Unitary { k } => k * k,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match *self {
            LieGroup::Torus { .. } => true,
            LieGroup::Unitary { k } => k <= 1,
        }
    }

    /// Fixed algebra basis.
    ///
    /// Torus: the standard basis of `ℝᵖ`. `𝔲(k)`: first `i E_aa` for every
    /// `a`, then `E_ab − E_ba` for `a < b` (lexicographic), then
    /// `i (E_ab + E_ba)` for `a < b`.
    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.dim())
            .map(|j| {
                let mut c = RVec::zeros(self.dim());
                c[j] = 1.0;
                self.from_coords(&c)
            })
            .collect()
    }

    /// Coordinates of `ξ` in the fixed basis.
    pub fn coords(&self, xi: &AlgebraElement) -> Result<RVec> {
        match (self, xi) {
            (LieGroup::Torus { rank }, AlgebraElement::Torus(t)) if t.len() == *rank => {
                Ok(t.clone())
            }
            (LieGroup::Unitary { k }, AlgebraElement::Unitary(m))
                if m.nrows() == *k && m.ncols() == *k =>
            {
                let k = *k;
                let pairs = upper_pairs(k);
                let mut c = RVec::zeros(k * k);
                for a in 0..k {
                    c[a] = m[(a, a)].im;
                }
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    c[k + p] = m[(a, b)].re;
                    c[k + pairs.len() + p] = m[(a, b)].im;
                }
                Ok(c)
            }
            _ => Err(mixed("algebra element does not belong to this group")),
        }
    }

    pub fn from_coords(&self, c: &RVec) -> AlgebraElement {
        match *self {
            LieGroup::Torus { .. } => AlgebraElement::Torus(c.clone()),
            LieGroup::Unitary { k } => {
                let pairs = upper_pairs(k);
                let mut m = CMat::zeros(k, k);
                for a in 0..k {
                    m[(a, a)] = I * c[a];
                }
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let re = c[k + p];
                    let im = c[k + pairs.len() + p];
                    m[(a, b)] = Complex64::new(re, im);
                    m[(b, a)] = Complex64::new(-re, im);
                }
                AlgebraElement::Unitary(m)
            }
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        self.from_coords(&RVec::zeros(self.dim()))
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            LieGroup::Torus { rank } => GroupElement::Torus(RVec::zeros(rank)),
            LieGroup::Unitary { k } => GroupElement::Unitary(CMat::identity(k, k)),
        }
    }

    /// Check skew-Hermitian-ness (unitary case) and shape.
    pub fn validate_algebra(&self, xi: &AlgebraElement) -> Result<()> {
        self.coords(xi)?;
        if let AlgebraElement::Unitary(m) = xi {
            let res = cnorm(&(m + m.adjoint()));
            if res > 1e-14 * cnorm(m).max(1.0) {
                return Err(mixed("unitary algebra element is not skew-Hermitian"));
            }
        }
        Ok(())
    }

    pub fn validate_element(&self, g: &GroupElement) -> Result<()> {
        match (self, g) {
            (LieGroup::Torus { rank }, GroupElement::Torus(t)) if t.len() == *rank => Ok(()),
            (LieGroup::Unitary { k }, GroupElement::Unitary(u))
                if u.nrows() == *k && u.ncols() == *k =>
            {
                let res = unitarity_residual(u);
                if res > 1e-12 {
                    Err(GeometryError::NonUnitary(res))
                } else {
                    Ok(())
                }
            }
            _ => Err(mixed("group element does not belong to this group")),
        }
    }

    /// Lie bracket: zero on tori, `ξη − ηξ` on `𝔲(k)`.
    pub fn bracket(&self, xi: &AlgebraElement, eta: &AlgebraElement) -> Result<AlgebraElement> {
        self.coords(xi)?;
        self.coords(eta)?;
        match (xi, eta) {
            (AlgebraElement::Torus(_), AlgebraElement::Torus(_)) => Ok(self.zero()),
            (AlgebraElement::Unitary(x), AlgebraElement::Unitary(y)) => {
                Ok(AlgebraElement::Unitary(x * y - y * x))
            }
            _ => Err(mixed("bracket of torus and unitary elements")),
        }
    }

    pub fn exp(&self, xi: &AlgebraElement) -> Result<GroupElement> {
        self.coords(xi)?;
        Ok(match xi {
            AlgebraElement::Torus(t) => GroupElement::Torus(t.clone()),
            AlgebraElement::Unitary(m) => GroupElement::Unitary(matrix_exp(m)),
        })
    }

    /// Group product `g₂ g₁`.
    pub fn compose(&self, g2: &GroupElement, g1: &GroupElement) -> Result<GroupElement> {
        self.validate_element(g1)?;
        self.validate_element(g2)?;
        Ok(match (g2, g1) {
            (GroupElement::Torus(a), GroupElement::Torus(b)) => GroupElement::Torus(a + b),
            (GroupElement::Unitary(a), GroupElement::Unitary(b)) => GroupElement::Unitary(a * b),
            _ => unreachable!("validated above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.validate_element(g)?;
        Ok(match g {
            GroupElement::Torus(t) => GroupElement::Torus(-t),
            GroupElement::Unitary(u) => GroupElement::Unitary(u.adjoint()),
        })
    }

    /// `Ad_g ξ = g ξ g†` (identity on tori).
    pub fn adjoint(&self, g: &GroupElement, xi: &AlgebraElement) -> Result<AlgebraElement> {
        self.validate_element(g)?;
        self.coords(xi)?;
        Ok(match (g, xi) {
            (GroupElement::Unitary(u), AlgebraElement::Unitary(m)) => {
                AlgebraElement::Unitary(u * m * u.adjoint())
            }
            _ => xi.clone(),
        })
    }

    /// Coadjoint action on dual elements, `m ↦ u m u†`. On tori the action is
    /// trivial and `m` is returned unchanged.
    pub fn adjoint_orbit_map(&self, g: &GroupElement, m: &DualElement) -> Result<DualElement> {
        self.validate_element(g)?;
        match (g, m) {
            (GroupElement::Unitary(u), DualElement::Unitary(d)) => {
                if d.nrows() != u.nrows() || d.ncols() != u.ncols() {
                    return Err(GeometryError::shape(
                        format!("{0}x{0}", u.nrows()),
                        format!("{}x{}", d.nrows(), d.ncols()),
                    ));
                }
                Ok(DualElement::Unitary(u * d * u.adjoint()))
            }
            (GroupElement::Torus(_), DualElement::Torus(_)) => Ok(m.clone()),
            _ => Err(mixed("dual element does not belong to this group")),
        }
    }

    /// Random algebra element with standard normal basis coordinates.
    pub fn random_algebra<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let c = RVec::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        self.from_coords(&c)
    }

    /// Random group element: uniform angles on tori, Gram–Schmidt of a
    /// Gaussian matrix for `U(k)`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match *self {
            LieGroup::Torus { rank } => {
                GroupElement::Torus(RVec::from_fn(rank, |_, _| rng.random::<f64>()))
            }
            LieGroup::Unitary { k } => {
                GroupElement::Unitary(gram_schmidt_columns(&random_cmat(rng, k, k)))
            }
        }
    }

    /// Distance of two group elements (torus angles compared mod 1).
    pub fn element_distance(&self, a: &GroupElement, b: &GroupElement) -> f64 {
        match (a, b) {
            (GroupElement::Torus(x), GroupElement::Torus(y)) => (x - y)
                .iter()
                .map(|d| {
                    let r = d - d.round();
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
            (GroupElement::Unitary(x), GroupElement::Unitary(y)) => cnorm(&(x - y)),
            _ => f64::INFINITY,
        }
    }
}

fn upper_pairs(k: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            v.push((a, b));
        }
    }
    v
}

impl AlgebraElement {
    pub fn scale(&self, s: f64) -> AlgebraElement {
        match self {
            AlgebraElement::Torus(t) => AlgebraElement::Torus(t * s),
            AlgebraElement::Unitary(m) => AlgebraElement::Unitary(m * Complex64::new(s, 0.0)),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            AlgebraElement::Torus(t) => t.norm(),
            AlgebraElement::Unitary(m) => cnorm(m),
        }
    }
}

impl DualElement {
    pub fn distance(&self, other: &DualElement) -> f64 {
        match (self, other) {
            (DualElement::Torus(a), DualElement::Torus(b)) => (a - b).norm(),
            (DualElement::Unitary(a), DualElement::Unitary(b)) if a.shape() == b.shape() => {
                cnorm(&(a - b))
            }
            _ => f64::INFINITY,
        }
    }
}

/// A concrete action of a torus or unitary group on one ambient space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupSpec {
    /// Integer weights: one row per complex ambient coordinate (column-major
    /// flat index), one column per torus factor.
    Torus { weights: Vec<Vec<i64>> },
    /// `U(k)` acting on `Hom(ℂᵏ, ℂⁿ)` by `A ↦ A u†`.
    Unitary { k: usize },
}

impl GroupSpec {
    /// Rank-one torus acting with weight one on all `dim` coordinates (Hopf circle).
    pub fn hopf_circle(dim: usize) -> Self {
        GroupSpec::Torus {
            weights: vec![vec![1]; dim],
        }
    }

    pub fn group(&self) -> LieGroup {
        match self {
            GroupSpec::Torus { weights } => LieGroup::Torus {
                rank: weights.first().map_or(0, |r| r.len()),
            },
            GroupSpec::Unitary { k } => LieGroup::Unitary { k: *k },
        }
    }

    pub fn check_ambient(&self, space: &AmbientSpace) -> Result<()> {
        match self {
            GroupSpec::Torus { weights } => {
                if weights.len() != space.complex_dim() {
                    return Err(GeometryError::shape(
                        format!("{} weight rows", space.complex_dim()),
                        weights.len(),
                    ));
                }
                let rank = weights.first().map_or(0, |r| r.len());
                if weights.iter().any(|r| r.len() != rank) {
                    return Err(GeometryError::InvalidInstance("ragged torus weights".into()));
                }
                Ok(())
            }
            GroupSpec::Unitary { k } => match *space {
                AmbientSpace::Matrix { k: kk, .. } if kk == *k => Ok(()),
                _ => Err(GeometryError::shape(
                    format!("Hom(C^{k},C^n)"),
                    space.label(),
                )),
            },
        }
    }

    fn check_point(&self, q: &CMat) -> Result<()> {
        match self {
            GroupSpec::Torus { weights } if weights.len() != q.len() => {
                Err(GeometryError::shape(format!("{} coordinates", weights.len()), q.len()))
            }
            GroupSpec::Unitary { k } if q.ncols() != *k => {
                Err(GeometryError::shape(format!("n x {k}"), format!("{}x{}", q.nrows(), q.ncols())))
            }
            _ => Ok(()),
        }
    }

    /// Phase multiplier `2π⟨W_j, θ⟩` for every coordinate.
    fn phase_rates(&self, theta: &RVec) -> Vec<f64> {
        match self {
            GroupSpec::Torus { weights } => weights
                .iter()
                .map(|w| 2.0 * PI * w.iter().zip(theta.iter()).map(|(&a, b)| a as f64 * b).sum::<f64>())
                .collect(),
            GroupSpec::Unitary { .. } => unreachable!("torus only"),
        }
    }

    fn scale_coordinates(q: &CMat, angles: &[f64]) -> CMat {
        let mut out = q.clone();
        for (z, &a) in out.iter_mut().zip(angles) {
            *z *= Complex64::from_polar(1.0, a);
        }
        out
    }

    /// `act(g, q)`.
    pub fn act(&self, g: &GroupElement, q: &CMat) -> Result<CMat> {
        self.group().validate_element(g)?;
        self.check_point(q)?;
        Ok(match g {
            GroupElement::Torus(theta) => Self::scale_coordinates(q, &self.phase_rates(theta)),
            GroupElement::Unitary(u) => q * u.adjoint(),
        })
    }

    /// Infinitesimal generator `ξ_N(q)`: `2πi⟨W_j,θ⟩ z_j` or `A ξ`.
    pub fn generator(&self, xi: &AlgebraElement, q: &CMat) -> Result<CMat> {
        self.group().coords(xi)?;
        self.check_point(q)?;
        Ok(match xi {
            AlgebraElement::Torus(theta) => {
                let rates = self.phase_rates(theta);
                let mut out = q.clone();
                for (z, &r) in out.iter_mut().zip(&rates) {
                    *z *= I * r;
                }
                out
            }
            AlgebraElement::Unitary(m) => q * m,
        })
    }

    /// Integral curve of the generator field: the point reached from `q`
    /// after time `t`. Torus: `act(exp(tθ), q)`; unitary: `A exp(tξ)`, which
    /// is `act(exp(−tξ), A)` for the left action `A ↦ A u†`.
    pub fn flow(&self, xi: &AlgebraElement, t: f64, q: &CMat) -> Result<CMat> {
        self.group().coords(xi)?;
        self.check_point(q)?;
        Ok(match xi {
            AlgebraElement::Torus(theta) => {
                let angles: Vec<f64> = self.phase_rates(theta).iter().map(|r| r * t).collect();
                Self::scale_coordinates(q, &angles)
            }
            AlgebraElement::Unitary(m) => q * matrix_exp(&(m * Complex64::new(t, 0.0))),
        })
    }

    /// Integer per-coordinate winding numbers of the circle generated by `ξ`,
    /// when its flow is diagonal in ambient coordinates with period one:
    /// `flow(ξ, t, q)_j = e^{2πi m_j t} q_j`. `None` otherwise.
    pub fn coordinate_weights(&self, xi: &AlgebraElement, space: &AmbientSpace) -> Option<Vec<i64>> {
        let to_int = |x: f64| {
            let r = x.round();
            ((x - r).abs() < 1e-12).then_some(r as i64)
        };
        match (self, xi) {
            (GroupSpec::Torus { weights }, AlgebraElement::Torus(theta)) => weights
                .iter()
                .map(|w| to_int(w.iter().zip(theta.iter()).map(|(&a, b)| a as f64 * b).sum()))
                .collect(),
            (GroupSpec::Unitary { k }, AlgebraElement::Unitary(m)) => {
                let k = *k;
                for a in 0..k {
                    for b in 0..k {
                        if a != b && m[(a, b)].norm() > 1e-14 {
                            return None;
                        }
                    }
                }
                let col_weights: Option<Vec<i64>> =
                    (0..k).map(|c| to_int(m[(c, c)].im / (2.0 * PI))).collect();
                let col_weights = col_weights?;
                let rows = space.rows();
                Some((0..space.complex_dim()).map(|j| col_weights[j / rows]).collect())
            }
            _ => None,
        }
    }

    /// The circle acting by `e^{2πit}` on every coordinate, as an algebra element.
    pub fn central_circle(&self) -> AlgebraElement {
        match self {
            GroupSpec::Torus { weights } => {
                AlgebraElement::Torus(RVec::from_element(weights.first().map_or(0, |r| r.len()), 1.0))
            }
            GroupSpec::Unitary { k } => {
                AlgebraElement::Unitary(CMat::identity(*k, *k) * (I * (2.0 * PI)))
            }
        }
    }
}
