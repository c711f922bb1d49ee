//! The additive `ℂ`-action `Ψ` on `N₁ × N₂` and its period lattice.
//!
//! A circle `e^{2πit}` acts on both factors (the flow of a fixed algebra
//! element with period one). For an integer mixing matrix `A` and
//! `z = a + ib`,
//!
//! ```text
//! Ψ(z, (x, y)) = (e^{2πi(A₁₁a + A₂₁b)}·x, e^{2πi(A₁₂a + A₂₂b)}·y).
//! ```
//!
//! `Ψ_z = id` exactly when `Aᵀ(a, b) ∈ ℤ²`, so the period lattice is
//! `(Aᵀ)⁻¹ℤ²`, computed here in exact rational arithmetic.
//!
//! `Ψ` is `J`-holomorphic iff `A₂₁ = A₁₂` and `A₂₂ = −A₁₁`: the `b`-velocity
//! must equal `J` of the `a`-velocity.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::group::AlgebraElement;
use crate::product::{Factor, ProductACS, ProductPoint, ProductTangent};

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PsiAction {
    /// Row-major `[[A₁₁, A₁₂], [A₂₁, A₂₂]]`.
    pub mixing: [[i64; 2]; 2],
    /// Algebra element whose flow is the period-one circle on both factors.
    pub circle: AlgebraElement,
}

impl PsiAction {
    pub const DEFAULT_MIXING: [[i64; 2]; 2] = [[1, 1], [1, -1]];

    /// Mixing `A` with the central circle of the product's group, which must
    /// close up after time one on both factors.
    pub fn new(acs: &ProductACS, mixing: [[i64; 2]; 2]) -> Result<Self> {
        let circle = acs.factor(Factor::First).spec().central_circle();
        Self::with_circle(acs, mixing, circle)
    }

    pub fn with_circle(acs: &ProductACS, mixing: [[i64; 2]; 2], circle: AlgebraElement) -> Result<Self> {
        for f in [Factor::First, Factor::Second] {
            let level = acs.factor(f);
            if level.spec().coordinate_weights(&circle, level.ambient()).is_none() {
                return Err(GeometryError::InvalidInstance(
                    "circle does not act diagonally with period one".into(),
                ));
            }
        }
        Ok(PsiAction { mixing, circle })
    }

    pub fn default_for(acs: &ProductACS) -> Result<Self> {
        Self::new(acs, Self::DEFAULT_MIXING)
    }

    pub fn det(&self) -> i64 {
        let [[a, b], [c, d]] = self.mixing;
        a * d - b * c
    }

    pub fn is_holomorphic_mixing(&self) -> bool {
        let [[a11, a12], [a21, a22]] = self.mixing;
        a21 == a12 && a22 == -a11
    }

    /// Circle times `(φ₁, φ₂)` applied to the two factors for `z = a + ib`.
    pub fn phases(&self, z: (f64, f64)) -> (f64, f64) {
        let [[a11, a12], [a21, a22]] = self.mixing;
        let (a, b) = z;
        (
            a11 as f64 * a + a21 as f64 * b,
            a12 as f64 * a + a22 as f64 * b,
        )
    }

    /// `Ψ_z(q)`.
    pub fn apply(&self, acs: &ProductACS, z: (f64, f64), q: &ProductPoint) -> Result<ProductPoint> {
        let (t1, t2) = self.phases(z);
        Ok(ProductPoint {
            p1: acs.factor(Factor::First).spec().flow(&self.circle, t1, &q.p1)?,
            p2: acs.factor(Factor::Second).spec().flow(&self.circle, t2, &q.p2)?,
        })
    }

    /// `dΨ_z`: the same coordinate rotation applied to tangent vectors.
    pub fn differential(&self, acs: &ProductACS, z: (f64, f64), w: &ProductTangent) -> Result<ProductTangent> {
        let (t1, t2) = self.phases(z);
        Ok(ProductTangent {
            v1: acs.factor(Factor::First).spec().flow(&self.circle, t1, &w.v1)?,
            v2: acs.factor(Factor::Second).spec().flow(&self.circle, t2, &w.v2)?,
        })
    }

    /// Velocities of `s ↦ Ψ_{z+s}(q)` and `s ↦ Ψ_{z+is}(q)` at `s = 0`.
    pub fn orbit_velocities(
        &self,
        acs: &ProductACS,
        z: (f64, f64),
        q: &ProductPoint,
    ) -> Result<(ProductTangent, ProductTangent)> {
        let p = self.apply(acs, z, q)?;
        let x1 = acs.factor(Factor::First).spec().generator(&self.circle, &p.p1)?;
        let x2 = acs.factor(Factor::Second).spec().generator(&self.circle, &p.p2)?;
        let [[a11, a12], [a21, a22]] = self.mixing;
        let c = |k: i64| num_complex::Complex64::new(k as f64, 0.0);
        let u1 = ProductTangent::new(&x1 * c(a11), &x2 * c(a12));
        let u2 = ProductTangent::new(&x1 * c(a21), &x2 * c(a22));
        Ok((u1, u2))
    }

    /// `‖dΨ(i) − J dΨ(1)‖` at `Ψ_z(q)`.
    pub fn check_orbit_holomorphy(&self, acs: &ProductACS, q: &ProductPoint, z: (f64, f64)) -> Result<f64> {
        let p = self.apply(acs, z, q)?;
        let (u1, u2) = self.orbit_velocities(acs, z, q)?;
        Ok(u2.sub(&acs.apply_j(&p, &u1)?).norm())
    }

    /// `‖dΨ_z(J w) − J dΨ_z(w)‖` for one tangent `w` at `q`.
    pub fn translation_residual(
        &self,
        acs: &ProductACS,
        z: (f64, f64),
        q: &ProductPoint,
        w: &ProductTangent,
    ) -> Result<f64> {
        let p = self.apply(acs, z, q)?;
        let lhs = self.differential(acs, z, &acs.apply_j(q, w)?)?;
        let rhs = acs.apply_j(&p, &self.differential(acs, z, w)?)?;
        Ok(lhs.sub(&rhs).norm())
    }

    /// Max of [`translation_residual`](Self::translation_residual) over random tangents.
    pub fn check_translation_holomorphy<R: Rng + ?Sized>(
        &self,
        acs: &ProductACS,
        z: (f64, f64),
        q: &ProductPoint,
        samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let w = acs.random_tangent(q, rng)?;
            worst = worst.max(self.translation_residual(acs, z, q, &w)?);
        }
        Ok(worst)
    }

    pub fn period_lattice(&self) -> Result<Lattice2D> {
        period_lattice(self.mixing)
    }
}

/// A full-rank lattice in `ℂ ≅ ℝ²` with rational generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice2D {
    pub generators: [(Rational, Rational); 2],
    pub covolume: Rational,
}

fn det2(u: (Rational, Rational), v: (Rational, Rational)) -> Rational {
    u.0 * v.1 - u.1 * v.0
}

fn rabs(r: Rational) -> Rational {
    if r < Rational::from_integer(0) { -r } else { r }
}

fn norm2(u: (Rational, Rational)) -> Rational {
    u.0 * u.0 + u.1 * u.1
}

impl Lattice2D {
    pub fn generators_f64(&self) -> [(f64, f64); 2] {
        let f = |r: Rational| *r.numer() as f64 / *r.denom() as f64;
        self.generators.map(|(a, b)| (f(a), f(b)))
    }

    pub fn covolume_f64(&self) -> f64 {
        *self.covolume.numer() as f64 / *self.covolume.denom() as f64
    }

    /// Reduce `z` into the fundamental cell `{s v₁ + t v₂ : s, t ∈ [0, 1)}`.
    pub fn reduce(&self, z: (f64, f64)) -> (f64, f64) {
        let [v1, v2] = self.generators_f64();
        let det = v1.0 * v2.1 - v1.1 * v2.0;
        let s = (z.0 * v2.1 - z.1 * v2.0) / det;
        let t = (v1.0 * z.1 - v1.1 * z.0) / det;
        let wrap = |x: f64| {
            let f = x - x.floor();
            if f > 1.0 - 1e-12 { 0.0 } else { f }
        };
        let (s, t) = (wrap(s), wrap(t));
        (s * v1.0 + t * v2.0, s * v1.1 + t * v2.1)
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn distance_to_lattice(&self, z: (f64, f64)) -> f64 {
        let [v1, v2] = self.generators_f64();
        let r = self.reduce(z);
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                let p = (
                    i as f64 * v1.0 + j as f64 * v2.0,
                    i as f64 * v1.1 + j as f64 * v2.1,
                );
                best = best.min(((r.0 - p.0).powi(2) + (r.1 - p.1).powi(2)).sqrt());
            }
        }
        best
    }
}

fn check_det(mixing: [[i64; 2]; 2]) -> Result<i64> {
    let [[a, b], [c, d]] = mixing;
    let det = a * d - b * c;
    if det == 0 {
        Err(GeometryError::DegenerateMixing)
    } else {
        Ok(det)
    }
}

/// Whether `Aᵀ(a, b) ∈ ℤ²`.
pub fn is_period(mixing: [[i64; 2]; 2], z: (Rational, Rational)) -> bool {
    let [[a11, a12], [a21, a22]] = mixing;
    let (a, b) = z;
    let r1 = a * a11 + b * a21;
    let r2 = a * a12 + b * a22;
    r1.is_integer() && r2.is_integer()
}

/// Columns of `(Aᵀ)⁻¹ = adj(Aᵀ) / det A`: an unreduced basis of the period lattice.
pub fn adjugate_basis(mixing: [[i64; 2]; 2]) -> Result<[(Rational, Rational); 2]> {
    let det = check_det(mixing)?;
    let [[a11, a12], [a21, a22]] = mixing;
    // Aᵀ = [[a11, a21], [a12, a22]], adj(Aᵀ) = [[a22, −a21], [−a12, a11]]
    let r = |n: i64| Rational::new(n, det);
    Ok([(r(a22), r(-a12)), (r(-a21), r(a11))])
}

/// Exact period lattice `{a + ib : Aᵀ(a, b) ∈ ℤ²}` with a reduced basis.
pub fn period_lattice(mixing: [[i64; 2]; 2]) -> Result<Lattice2D> {
    let det = check_det(mixing)?;
    let d = det.abs();
    // The lattice contains ℤ², so its successive minima are at most 1 and a
    // reduced basis lies in the box [−1, 1]², i.e. numerators in [−d, d].
    let mut members: Vec<(Rational, Rational)> = Vec::new();
    for x in -d..=d {
        for y in -d..=d {
            if (x, y) == (0, 0) {
                continue;
            }
            let z = (Rational::new(x, d), Rational::new(y, d));
            if is_period(mixing, z) {
                members.push(z);
            }
        }
    }
    let zero = Rational::from_integer(0);
    let canonical = |z: &(Rational, Rational)| z.0 > zero || (z.0 == zero && z.1 > zero);
    members.sort_by(|u, v| {
        norm2(*u)
            .cmp(&norm2(*v))
            .then(canonical(v).cmp(&canonical(u)))
            .then(v.0.cmp(&u.0))
            .then(v.1.cmp(&u.1))
    });
    let v1 = members[0];
    let v2 = *members
        .iter()
        .find(|v| det2(v1, **v) != zero)
        .expect("lattice contains ℤ²");
    let covolume = Rational::new(1, d);
    debug_assert_eq!(rabs(det2(v1, v2)), covolume);
    Ok(Lattice2D {
        generators: [v1, v2],
        covolume,
    })
}

/// Comparison of the claimed lattice `(ℤ/q) + i(ℤ/q)` with the true one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeClaim {
    pub denominator: i64,
    pub contained: bool,
    pub equal: bool,
    /// A claimed element that is not a period, when containment fails.
    pub witness: Option<(Rational, Rational)>,
}

/// Check `(ℤ/q) + i(ℤ/q) ⊂ period lattice`; `q = 0` means `q = |det A|`.
pub fn check_lattice_claim(mixing: [[i64; 2]; 2], denominator: i64) -> Result<LatticeClaim> {
    let det = check_det(mixing)?;
    let q = if denominator == 0 { det.abs() } else { denominator.abs() };
    let zero = Rational::from_integer(0);
    let gens = [(Rational::new(1, q), zero), (zero, Rational::new(1, q))];
    let witness = gens.into_iter().find(|g| !is_period(mixing, *g));
    let contained = witness.is_none();
    let equal = contained && Rational::new(1, q * q) == Rational::new(1, det.abs());
    Ok(LatticeClaim {
        denominator: q,
        contained,
        equal,
        witness,
    })
}

/// Format `a + ib` with rational parts, e.g. `1/2+1/2i`.
pub fn format_rational_complex(z: (Rational, Rational)) -> String {
    let zero = Rational::from_integer(0);
    match (z.0 == zero, z.1 == zero) {
        (_, true) => format!("{}", z.0),
        (true, false) => format!("{}i", z.1),
        (false, false) if z.1 > zero => format!("{}+{}i", z.0, z.1),
        _ => format!("{}{}i", z.0, z.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{stiefel, unit_sphere};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn spheres() -> ProductACS {
        ProductACS::new(unit_sphere(2).unwrap(), unit_sphere(3).unwrap()).unwrap()
    }

    #[test]
    fn psi_apply_examples() {
        let acs = spheres();
        let psi = PsiAction::default_for(&acs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = acs.sample(&mut rng);
        assert_eq!(psi.apply(&acs, (0.0, 0.0), &q).unwrap(), q);
        assert!(psi.apply(&acs, (0.5, 0.5), &q).unwrap().distance(&q) <= 1e-12);
        let z1 = (0.3, -0.7);
        let z2 = (1.1, 0.25);
        let a = psi.apply(&acs, z1, &psi.apply(&acs, z2, &q).unwrap()).unwrap();
        let b = psi.apply(&acs, (z1.0 + z2.0, z1.1 + z2.1), &q).unwrap();
        assert!(a.distance(&b) <= 1e-12);
        for f in [Factor::First, Factor::Second] {
            assert!(acs.factor(f).residual(a.get(f)).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn orbit_holomorphy_examples() {
        let acs = spheres();
        let psi = PsiAction::default_for(&acs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = acs.sample(&mut rng);
        let r0 = psi.check_orbit_holomorphy(&acs, &q, (0.0, 0.0)).unwrap();
        let r1 = psi.check_orbit_holomorphy(&acs, &q, (0.37, -1.2)).unwrap();
        assert!(r0 <= 1e-8 && r1 <= 1e-8);
        assert!((r0 - r1).abs() <= 1e-8);
    }

    #[test]
    fn holomorphy_condition_on_mixing() {
        let acs = spheres();
        let q = acs.sample(&mut ChaCha8Rng::seed_from_u64(3));
        for m in [[[1, 1], [1, -1]], [[2, 3], [3, -2]], [[1, 0], [0, -1]]] {
            let psi = PsiAction::new(&acs, m).unwrap();
            assert!(psi.is_holomorphic_mixing());
            assert!(psi.check_orbit_holomorphy(&acs, &q, (0.2, 0.1)).unwrap() <= 1e-8);
        }
        for m in [[[1, 0], [0, 1]], [[2, 0], [0, 1]], [[1, 1], [-1, 1]]] {
            let psi = PsiAction::new(&acs, m).unwrap();
            assert!(!psi.is_holomorphic_mixing());
            assert!(psi.check_orbit_holomorphy(&acs, &q, (0.2, 0.1)).unwrap() > 1e-3);
        }
    }

    #[test]
    fn translation_holomorphy_examples() {
        let acs = spheres();
        let psi = PsiAction::default_for(&acs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = acs.sample(&mut rng);
        assert_eq!(psi.check_translation_holomorphy(&acs, (0.0, 0.0), &q, 5, &mut rng).unwrap(), 0.0);
        let xi = acs.group().basis()[0].clone();
        let v = acs.generator(&q, Factor::First, &xi).unwrap();
        assert!(psi.translation_residual(&acs, (0.3, 0.4), &q, &v).unwrap() <= 1e-10);
        let h = acs.random_horizontal(&q, Factor::Second, &mut rng).unwrap();
        assert!(psi.translation_residual(&acs, (0.3, 0.4), &q, &h).unwrap() <= 1e-8);
        assert!(psi.check_translation_holomorphy(&acs, (-0.8, 0.15), &q, 20, &mut rng).unwrap() <= 1e-8);
    }

    #[test]
    fn unitary_circle_is_accepted() {
        let acs = ProductACS::new(stiefel(2, 3).unwrap(), stiefel(2, 3).unwrap()).unwrap();
        let psi = PsiAction::default_for(&acs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = acs.sample(&mut rng);
        assert!(psi.check_orbit_holomorphy(&acs, &q, (0.1, 0.2)).unwrap() <= 1e-8);
        let lat = psi.period_lattice().unwrap();
        for g in lat.generators_f64() {
            assert!(psi.apply(&acs, g, &q).unwrap().distance(&q) <= 1e-12);
        }
    }

    #[test]
    fn period_lattice_examples() {
        let lat = period_lattice([[1, 1], [1, -1]]).unwrap();
        assert_eq!(lat.generators, [(r(1, 2), r(1, 2)), (r(1, 2), r(-1, 2))]);
        assert_eq!(lat.covolume, r(1, 2));
        let id = period_lattice([[1, 0], [0, 1]]).unwrap();
        assert_eq!(id.generators, [(r(1, 1), r(0, 1)), (r(0, 1), r(1, 1))]);
        assert_eq!(id.covolume, r(1, 1));
        let diag = period_lattice([[2, 0], [0, 1]]).unwrap();
        assert_eq!(diag.generators, [(r(1, 2), r(0, 1)), (r(0, 1), r(1, 1))]);
        assert_eq!(diag.covolume, r(1, 2));
        assert!(matches!(period_lattice([[1, 2], [2, 4]]), Err(GeometryError::DegenerateMixing)));
    }

    #[test]
    fn lattice_claim_examples() {
        let c = check_lattice_claim([[1, 1], [1, -1]], 2).unwrap();
        assert!(!c.contained && !c.equal);
        assert_eq!(c.witness, Some((r(1, 2), r(0, 1))));
        assert_eq!(format_rational_complex(c.witness.unwrap()), "1/2");
        let c = check_lattice_claim([[1, 0], [0, 1]], 0).unwrap();
        assert!(c.contained && c.equal && c.denominator == 1);
        let c = check_lattice_claim([[2, 0], [0, 1]], 0).unwrap();
        assert_eq!(c.witness, Some((r(0, 1), r(1, 2))));
        assert_eq!(format_rational_complex(c.witness.unwrap()), "1/2i");
    }

    #[test]
    fn adjugate_basis_spans_the_same_lattice() {
        for m in [[[1, 1], [1, -1]], [[3, 1], [2, 5]], [[0, 2], [-3, 1]]] {
            let lat = period_lattice(m).unwrap();
            let adj = adjugate_basis(m).unwrap();
            for g in adj {
                assert!(is_period(m, g));
            }
            assert_eq!(rabs(det2(adj[0], adj[1])), lat.covolume);
            assert_eq!(rabs(det2(lat.generators[0], lat.generators[1])), lat.covolume);
        }
    }

    #[test]
    fn reduce_lands_in_cell() {
        let lat = period_lattice([[1, 1], [1, -1]]).unwrap();
        let z = lat.reduce((2.3, -1.7));
        assert!(lat.distance_to_lattice((z.0 - 2.3, z.1 + 1.7)) <= 1e-12);
        assert!(lat.distance_to_lattice((0.5, 0.5)) <= 1e-12);
        assert!((lat.distance_to_lattice((0.5, 0.0)) - 0.5).abs() <= 1e-12);
    }
}
