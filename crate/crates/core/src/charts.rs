//! Local charts of `N₁ × N₂` as a principal `T²`-bundle.
//!
//! A slice `Σ` through a base point `b` is `t ↦ R(b, Σ_a t_a e_a)` for an
//! orthonormal horizontal frame `(e_a)` at `b`; it is transverse to the
//! circle orbits. The chart map is `Φ(t₁, t₂, z) = Ψ_z(Σ₁(t₁), Σ₂(t₂))`.
//! Charts need a one-dimensional group, so that `T²` is the whole orbit of
//! `Ψ` and `dim Φ-domain = dim N₁ + dim N₂`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ambient::{complexify, realify};
use crate::error::{GeometryError, Result};
use crate::holomorphy::{Lattice2D, PsiAction};
use crate::linalg::{singular_values, CMat, RMat, RVec};
use crate::product::{Factor, ProductACS, ProductPoint, ProductTangent};

/// Finite-difference step for chart differentials.
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Slice {
    pub factor: Factor,
    pub base: CMat,
    /// Orthonormal horizontal frame at `base`, as realified columns.
    pub frame: RMat,
    /// `J̃`: coordinates of `i·e_b` in the frame.
    pub complex_structure: RMat,
    pub radius: f64,
}

impl Slice {
    pub fn new(acs: &ProductACS, factor: Factor, base: CMat, radius: f64) -> Result<Self> {
        let split = acs.factor(factor).split(&base)?;
        let red = split.reduced_kahler_data();
        Ok(Slice {
            factor,
            base,
            frame: split.horizontal_frame,
            complex_structure: red.complex_structure,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    /// Ambient horizontal vector `Σ_a t_a e_a`.
    pub fn direction(&self, t: &RVec) -> Result<CMat> {
        if t.len() != self.dim() {
            return Err(GeometryError::shape(self.dim(), t.len()));
        }
        Ok(complexify(&(&self.frame * t), self.base.nrows(), self.base.ncols()))
    }

    pub fn map(&self, acs: &ProductACS, t: &RVec) -> Result<CMat> {
        let norm = t.norm();
        if norm > self.radius {
            return Err(GeometryError::OutOfRadius {
                norm,
                radius: self.radius,
            });
        }
        acs.factor(self.factor).retract(&self.base, &self.direction(t)?)
    }
}

/// Chart coordinates `(t₁, t₂, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoords {
    pub t1: RVec,
    pub t2: RVec,
    pub z: (f64, f64),
}

impl ChartCoords {
    pub fn origin(c: &ChartMap) -> Self {
        ChartCoords {
            t1: RVec::zeros(c.slices[0].dim()),
            t2: RVec::zeros(c.slices[1].dim()),
            z: (0.0, 0.0),
        }
    }

    pub fn to_vec(&self) -> RVec {
        let mut v: Vec<f64> = self.t1.iter().chain(self.t2.iter()).copied().collect();
        v.push(self.z.0);
        v.push(self.z.1);
        RVec::from_vec(v)
    }

    pub fn from_vec(v: &RVec, d1: usize, d2: usize) -> Self {
        ChartCoords {
            t1: v.rows(0, d1).into_owned(),
            t2: v.rows(d1, d2).into_owned(),
            z: (v[d1 + d2], v[d1 + d2 + 1]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChartMap {
    pub slices: [Slice; 2],
    pub psi: PsiAction,
    pub lattice: Lattice2D,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDiffeoReport {
    pub rank_at_base: usize,
    pub expected_rank: usize,
    pub min_singular_at_base: f64,
    pub min_singular_over_samples: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexLinearReport {
    /// Max residual over sampled points of the zero section `t = 0`.
    pub max_residual: f64,
    /// Max residual at points with `t ≠ 0` (reported, not a contract).
    pub max_residual_off_section: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionSample {
    pub s: f64,
    pub r: f64,
    pub h: (f64, f64),
    pub roundtrip: f64,
    pub g_independence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReport {
    pub samples: Vec<TransitionSample>,
    pub max_roundtrip: f64,
    pub max_g_independence: f64,
    pub max_neighbor_jump: f64,
    pub grid_spacing: f64,
    pub lipschitz_estimate: f64,
    pub continuous: bool,
}

impl ChartMap {
    pub fn new(
        acs: &ProductACS,
        psi: PsiAction,
        bases: &ProductPoint,
        radius: f64,
    ) -> Result<Self> {
        if acs.group().dim() != 1 {
            return Err(GeometryError::InvalidInstance(
                "charts need a one-dimensional group".into(),
            ));
        }
        let lattice = psi.period_lattice()?;
        Ok(ChartMap {
            slices: [
                Slice::new(acs, Factor::First, bases.p1.clone(), radius)?,
                Slice::new(acs, Factor::Second, bases.p2.clone(), radius)?,
            ],
            psi,
            lattice,
        })
    }

    pub fn base(&self) -> ProductPoint {
        ProductPoint::new(self.slices[0].base.clone(), self.slices[1].base.clone())
    }

    pub fn domain_dim(&self) -> usize {
        self.slices[0].dim() + self.slices[1].dim() + 2
    }

    /// `Φ(t₁, t₂, z)`.
    pub fn apply(&self, acs: &ProductACS, x: &ChartCoords) -> Result<ProductPoint> {
        let s = ProductPoint::new(self.slices[0].map(acs, &x.t1)?, self.slices[1].map(acs, &x.t2)?);
        self.psi.apply(acs, x.z, &s)
    }

    /// Central-difference `dΦ_x(d)` for a domain direction `d`.
    pub fn differential(&self, acs: &ProductACS, x: &ChartCoords, d: &RVec) -> Result<ProductTangent> {
        let (d1, d2) = (self.slices[0].dim(), self.slices[1].dim());
        let xv = x.to_vec();
        let plus = self.apply(acs, &ChartCoords::from_vec(&(&xv + d * FD_STEP), d1, d2))?;
        let minus = self.apply(acs, &ChartCoords::from_vec(&(&xv - d * FD_STEP), d1, d2))?;
        let c = Complex64::new(0.5 / FD_STEP, 0.0);
        Ok(ProductTangent::new((plus.p1 - minus.p1) * c, (plus.p2 - minus.p2) * c))
    }

    pub fn jacobian(&self, acs: &ProductACS, x: &ChartCoords) -> Result<RMat> {
        let n = self.domain_dim();
        let cols: Vec<RVec> = (0..n)
            .map(|j| {
                let mut e = RVec::zeros(n);
                e[j] = 1.0;
                Ok(RVec::from_vec(self.differential(acs, x, &e)?.to_flat()))
            })
            .collect::<Result<_>>()?;
        Ok(crate::linalg::columns_to_matrix(cols[0].len(), &cols))
    }

    /// Domain complex structure: `J̃ᵢ` on `tᵢ`, multiplication by `i` on `z`.
    pub fn domain_j(&self, d: &RVec) -> RVec {
        let (d1, d2) = (self.slices[0].dim(), self.slices[1].dim());
        let c = ChartCoords::from_vec(d, d1, d2);
        ChartCoords {
            t1: &self.slices[0].complex_structure * c.t1,
            t2: &self.slices[1].complex_structure * c.t2,
            z: (-c.z.1, c.z.0),
        }
        .to_vec()
    }

    /// Random domain point with `‖tᵢ‖ ≤ scale · radius`, `z` in the cell.
    pub fn random_coords<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> ChartCoords {
        let mut t = |s: &Slice| {
            let v = RVec::from_fn(s.dim(), |_, _| StandardNormal.sample(rng));
            let n = v.norm();
            let r: f64 = rng.random::<f64>() * scale * s.radius;
            if n > 0.0 { v * (r / n) } else { v }
        };
        let t1 = t(&self.slices[0]);
        let t2 = t(&self.slices[1]);
        let z = self.lattice.reduce((rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0));
        ChartCoords { t1, t2, z }
    }

    pub fn check_local_diffeo<R: Rng + ?Sized>(
        &self,
        acs: &ProductACS,
        samples: usize,
        rng: &mut R,
    ) -> Result<LocalDiffeoReport> {
        let origin = ChartCoords::origin(self);
        let sv = singular_values(&self.jacobian(acs, &origin)?);
        let smax = sv.first().copied().unwrap_or(0.0);
        let rank_at_base = sv.iter().filter(|s| **s > 1e-8 * smax).count();
        let min_at_base = sv.last().copied().unwrap_or(0.0);
        let mut min_samples = min_at_base;
        for _ in 0..samples {
            let x = self.random_coords(rng, 0.5);
            let s = singular_values(&self.jacobian(acs, &x)?);
            min_samples = min_samples.min(s.last().copied().unwrap_or(0.0));
        }
        Ok(LocalDiffeoReport {
            rank_at_base,
            expected_rank: acs.dim(),
            min_singular_at_base: min_at_base,
            min_singular_over_samples: min_samples,
        })
    }

    /// `‖dΦ(J_dom d) − J dΦ(d)‖` for unit `d`.
    pub fn complex_linear_residual(&self, acs: &ProductACS, x: &ChartCoords, d: &RVec) -> Result<f64> {
        let q = self.apply(acs, x)?;
        let lhs = self.differential(acs, x, &self.domain_j(d))?;
        let jd = acs.apply_j(&q, &acs.project(&q, &self.differential(acs, x, d)?)?)?;
        Ok(lhs.sub(&jd).norm())
    }

    pub fn check_complex_linear<R: Rng + ?Sized>(
        &self,
        acs: &ProductACS,
        samples: usize,
        rng: &mut R,
    ) -> Result<ComplexLinearReport> {
        let n = self.domain_dim();
        let mut on = 0.0f64;
        let mut off = 0.0f64;
        let unit = |rng: &mut R| {
            let v = RVec::from_fn(n, |_, _| StandardNormal.sample(rng));
            v.normalize()
        };
        for k in 0..samples {
            let mut x = self.random_coords(rng, 0.5);
            let d = unit(rng);
            let r_off = self.complex_linear_residual(acs, &x, &d)?;
            off = off.max(r_off);
            x.t1.fill(0.0);
            x.t2.fill(0.0);
            // include the base point itself and the pure directions there
            if k == 0 {
                x.z = (0.0, 0.0);
            }
            on = on.max(self.complex_linear_residual(acs, &x, &d)?);
        }
        Ok(ComplexLinearReport {
            max_residual: on,
            max_residual_off_section: off,
            samples,
        })
    }

    /// Recover `(t₁, t₂, z)` from a point of the chart image (Gauss–Newton
    /// per factor on the slice coordinates and the circle phase).
    pub fn invert(&self, acs: &ProductACS, q: &ProductPoint) -> Result<ChartCoords> {
        let (t1, phi1) = self.invert_factor(acs, 0, &q.p1)?;
        let (t2, phi2) = self.invert_factor(acs, 1, &q.p2)?;
        let z = phases_to_z(&self.psi, (phi1, phi2));
        Ok(ChartCoords {
            t1,
            t2,
            z: self.lattice.reduce(z),
        })
    }

    fn invert_factor(&self, acs: &ProductACS, i: usize, p: &CMat) -> Result<(RVec, f64)> {
        let slice = &self.slices[i];
        let spec = acs.factor(slice.factor).spec();
        let circle = &self.psi.circle;
        let n = slice.dim();
        let residual = |x: &RVec| -> Result<RVec> {
            let t = x.rows(0, n).into_owned();
            let s = acs.factor(slice.factor).retract(&slice.base, &slice.direction(&t)?)?;
            Ok(realify(&(spec.flow(circle, x[n], &s)? - p)))
        };
        let mut x = RVec::zeros(n + 1);
        x[n] = initial_phase(spec, acs.factor(slice.factor).ambient(), circle, &slice.base, p)?;
        let mut f = residual(&x)?;
        for _ in 0..60 {
            if f.norm() <= 1e-14 {
                break;
            }
            let mut jac = RMat::zeros(f.len(), n + 1);
            for j in 0..=n {
                let mut e = RVec::zeros(n + 1);
                e[j] = 1e-7;
                let col = (residual(&(&x + &e))? - residual(&(&x - &e))?) / 2e-7;
                jac.set_column(j, &col);
            }
            let step = jac
                .svd(true, true)
                .solve(&f, 1e-12)
                .map_err(|e| GeometryError::NoConvergence(e.to_string()))?;
            x -= step;
            let f_new = residual(&x)?;
            if f_new.norm() >= f.norm() && f_new.norm() > 1e-12 {
                f = f_new;
                break;
            }
            f = f_new;
        }
        if f.norm() > 1e-8 {
            return Err(GeometryError::NoConvergence(format!(
                "slice inversion residual {:e}",
                f.norm()
            )));
        }
        Ok((x.rows(0, n).into_owned(), x[n]))
    }

    /// `h(p)` on a `5 × 5` style grid `t₁ = s·d₁`, `t₂ = r·d₂` of this chart,
    /// comparing with `other`: `Φ̃(Π̃⁻¹(p), 0) = Ψ_{h(p)} Φ(Π⁻¹(p), 0)`.
    #[allow(clippy::too_many_arguments)]
    pub fn transition<R: Rng + ?Sized>(
        &self,
        other: &ChartMap,
        acs: &ProductACS,
        directions: (&RVec, &RVec),
        extent: f64,
        grid: usize,
        g_samples: usize,
        rng: &mut R,
    ) -> Result<TransitionReport> {
        let steps: Vec<f64> = (0..grid)
            .map(|k| if grid == 1 { 0.0 } else { -extent + 2.0 * extent * k as f64 / (grid - 1) as f64 })
            .collect();
        let spacing = if grid > 1 { 2.0 * extent / (grid - 1) as f64 } else { 0.0 };
        let (d1, d2) = (directions.0.normalize(), directions.1.normalize());
        let h_at = |s: f64, r: f64| -> Result<((f64, f64), ProductPoint, ProductPoint)> {
            let x = ChartCoords { t1: &d1 * s, t2: &d2 * r, z: (0.0, 0.0) };
            let sec = self.apply(acs, &x)?;
            let mut y = other.invert(acs, &sec)?;
            y.z = (0.0, 0.0);
            let sec_other = other.apply(acs, &y)?;
            let h = solve_group_element(&self.psi, &self.lattice, acs, &sec, &sec_other)?;
            Ok((h, sec, sec_other))
        };
        let mut samples = Vec::with_capacity(grid * grid);
        let mut hs = vec![vec![(0.0, 0.0); grid]; grid];
        for (i, &s) in steps.iter().enumerate() {
            for (j, &r) in steps.iter().enumerate() {
                let (h, sec, sec_other) = h_at(s, r)?;
                hs[i][j] = h;
                let roundtrip = self.psi.apply(acs, h, &sec)?.distance(&sec_other);
                let mut g_res = 0.0f64;
                for _ in 0..g_samples {
                    let g = (rng.random::<f64>(), rng.random::<f64>());
                    // H̃(p, g) = Ψ_g(Φ̃(Π̃⁻¹(p), 0)), read back in this chart
                    let y = self.invert(acs, &self.psi.apply(acs, g, &sec_other)?)?;
                    let dt = (&y.t1 - &d1 * s).norm().max((&y.t2 - &d2 * r).norm());
                    let dz = self.lattice.distance_to_lattice((y.z.0 - g.0 - h.0, y.z.1 - g.1 - h.1));
                    g_res = g_res.max(dt).max(dz);
                }
                samples.push(TransitionSample { s, r, h, roundtrip, g_independence: g_res });
            }
        }
        let mut jump = 0.0f64;
        for i in 0..grid {
            for j in 0..grid {
                for (di, dj) in [(1, 0), (0, 1)] {
                    if i + di < grid && j + dj < grid {
                        let (a, b) = (hs[i][j], hs[i + di][j + dj]);
                        jump = jump.max(self.lattice.distance_to_lattice((a.0 - b.0, a.1 - b.1)));
                    }
                }
            }
        }
        // local Lipschitz constant of h at the grid centre
        let eps = extent.max(1e-3) * 1e-2;
        let (hc, _, _) = h_at(0.0, 0.0)?;
        let mut lip = 0.0f64;
        for (s, r) in [(eps, 0.0), (0.0, eps)] {
            let (hp, _, _) = h_at(s, r)?;
            lip = lip.max(self.lattice.distance_to_lattice((hp.0 - hc.0, hp.1 - hc.1)) / eps);
        }
        let continuous = jump <= 10.0 * spacing * lip.max(1e-9) + 1e-9;
        Ok(TransitionReport {
            max_roundtrip: samples.iter().map(|s| s.roundtrip).fold(0.0, f64::max),
            max_g_independence: samples.iter().map(|s| s.g_independence).fold(0.0, f64::max),
            samples,
            max_neighbor_jump: jump,
            grid_spacing: spacing,
            lipschitz_estimate: lip,
            continuous,
        })
    }

    /// Count sampled domain pairs with distinct coordinates (mod lattice) but
    /// coinciding images.
    pub fn injectivity_spot_check<R: Rng + ?Sized>(
        &self,
        acs: &ProductACS,
        pairs: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let mut collisions = 0;
        for _ in 0..pairs {
            let x = self.random_coords(rng, 0.5);
            let y = self.random_coords(rng, 0.5);
            let dt = (&x.t1 - &y.t1).norm().max((&x.t2 - &y.t2).norm());
            let dz = self.lattice.distance_to_lattice((x.z.0 - y.z.0, x.z.1 - y.z.1));
            let image = self.apply(acs, &x)?.distance(&self.apply(acs, &y)?);
            if dt.max(dz) > 1e-3 && image < 1e-6 {
                collisions += 1;
            }
        }
        Ok(collisions)
    }
}

/// `(a, b) = (Aᵀ)⁻¹(φ₁, φ₂)`.
fn phases_to_z(psi: &PsiAction, phi: (f64, f64)) -> (f64, f64) {
    let [[a11, a12], [a21, a22]] = psi.mixing.map(|r| r.map(|v| v as f64));
    // φ₁ = a11 a + a21 b, φ₂ = a12 a + a22 b
    let det = a11 * a22 - a21 * a12;
    ((a22 * phi.0 - a21 * phi.1) / det, (a11 * phi.1 - a12 * phi.0) / det)
}

/// Phase `φ` with `flow(circle, φ, from) ≈ to`, from the largest coordinate
/// of the smallest nonzero weight class (candidates tried when `|w| > 1`).
fn initial_phase(
    spec: &crate::group::GroupSpec,
    ambient: &crate::ambient::AmbientSpace,
    circle: &crate::group::AlgebraElement,
    from: &CMat,
    to: &CMat,
) -> Result<f64> {
    let weights = spec
        .coordinate_weights(circle, ambient)
        .ok_or_else(|| GeometryError::InvalidInstance("circle is not diagonal".into()))?;
    let w_min = weights
        .iter()
        .filter(|w| **w != 0)
        .map(|w| w.abs())
        .min()
        .ok_or(GeometryError::PhaseUnobservable)?;
    let scale = from.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let best = weights
        .iter()
        .zip(from.iter().zip(to.iter()))
        .filter(|(w, _)| w.abs() == w_min)
        .max_by(|a, b| {
            let ma = a.1 .0.norm().min(a.1 .1.norm());
            let mb = b.1 .0.norm().min(b.1 .1.norm());
            ma.partial_cmp(&mb).expect("finite coordinates")
        });
    let Some((&w, (f, t))) = best else {
        return Err(GeometryError::PhaseUnobservable);
    };
    if f.norm().min(t.norm()) <= 1e-12 * scale {
        return Err(GeometryError::PhaseUnobservable);
    }
    let theta = (t / f).arg() / (2.0 * std::f64::consts::PI);
    let mut best_phi = theta / w as f64;
    let mut best_res = f64::INFINITY;
    for k in 0..w.abs() {
        let phi = (theta + k as f64) / w as f64;
        let res = crate::linalg::cnorm(&(spec.flow(circle, phi, from)? - to));
        if res < best_res {
            best_res = res;
            best_phi = phi;
        }
    }
    Ok(best_phi)
}

/// `z` (reduced into the fundamental cell) with `Ψ_z(from) = to`.
pub fn solve_group_element(
    psi: &PsiAction,
    lattice: &Lattice2D,
    acs: &ProductACS,
    from: &ProductPoint,
    to: &ProductPoint,
) -> Result<(f64, f64)> {
    let mut phi = [0.0; 2];
    for f in [Factor::First, Factor::Second] {
        let level = acs.factor(f);
        phi[f.index()] = initial_phase(level.spec(), level.ambient(), &psi.circle, from.get(f), to.get(f))?;
    }
    let z = lattice.reduce(phases_to_z(psi, (phi[0], phi[1])));
    let res = psi.apply(acs, z, from)?.distance(to);
    if res > 1e-6 {
        return Err(GeometryError::NotOnOrbit(res));
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{stiefel, unit_sphere};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ProductACS, ChartMap) {
        let acs = ProductACS::new(unit_sphere(2).unwrap(), unit_sphere(3).unwrap()).unwrap();
        let psi = PsiAction::default_for(&acs).unwrap();
        let base = acs.sample(&mut ChaCha8Rng::seed_from_u64(11));
        let chart = ChartMap::new(&acs, psi, &base, 0.5).unwrap();
        (acs, chart)
    }

    #[test]
    fn slice_invariants() {
        let (acs, chart) = setup();
        let s = &chart.slices[1];
        assert_eq!(s.dim(), 4);
        assert_eq!(s.map(&acs, &RVec::zeros(4)).unwrap(), s.base);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = RVec::from_fn(4, |_, _| rng.random::<f64>() * 0.2);
        assert!(acs.factor(Factor::Second).residual(&s.map(&acs, &t).unwrap()).unwrap() <= 1e-10);
        for a in 0..4 {
            let mut e = RVec::zeros(4);
            e[a] = 1e-6;
            let d = (s.map(&acs, &e).unwrap() - s.map(&acs, &-&e).unwrap()) * Complex64::new(0.5e6, 0.0);
            let col = realify(&d);
            assert!((col - s.frame.column(a)).norm() <= 1e-6);
        }
        assert!(matches!(
            s.map(&acs, &RVec::from_element(4, 1.0)),
            Err(GeometryError::OutOfRadius { .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let (acs, chart) = setup();
        let o = ChartCoords::origin(&chart);
        assert_eq!(chart.apply(&acs, &o).unwrap(), chart.base());
        for g in chart.lattice.generators_f64() {
            let x = ChartCoords { z: g, ..o.clone() };
            assert!(chart.apply(&acs, &x).unwrap().distance(&chart.base()) <= 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = chart.random_coords(&mut rng, 0.9);
        let q = chart.apply(&acs, &x).unwrap();
        for f in [Factor::First, Factor::Second] {
            assert!(acs.factor(f).residual(q.get(f)).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn local_diffeo_and_complex_linearity() {
        let (acs, chart) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = chart.check_local_diffeo(&acs, 5, &mut rng).unwrap();
        assert_eq!(rep.rank_at_base, 8);
        assert_eq!(rep.expected_rank, 8);
        assert!(rep.min_singular_at_base > 1e-3);
        let cl = chart.check_complex_linear(&acs, 10, &mut rng).unwrap();
        assert!(cl.max_residual <= 1e-5, "{cl:?}");
        // pure horizontal direction at the base point
        let o = ChartCoords::origin(&chart);
        let mut d = RVec::zeros(chart.domain_dim());
        d[0] = 1.0;
        assert!(chart.complex_linear_residual(&acs, &o, &d).unwrap() <= 1e-9);
    }

    #[test]
    fn inversion_recovers_coordinates() {
        let (acs, chart) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let x = chart.random_coords(&mut rng, 0.3);
            let y = chart.invert(&acs, &chart.apply(&acs, &x).unwrap()).unwrap();
            assert!((&x.t1 - &y.t1).norm() <= 1e-7 && (&x.t2 - &y.t2).norm() <= 1e-7);
            assert!(chart.lattice.distance_to_lattice((x.z.0 - y.z.0, x.z.1 - y.z.1)) <= 1e-7);
        }
    }

    #[test]
    fn solve_group_element_examples() {
        let (acs, chart) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = acs.sample(&mut rng);
        let z = solve_group_element(&chart.psi, &chart.lattice, &acs, &q, &q).unwrap();
        assert!(chart.lattice.distance_to_lattice(z) <= 1e-12);
        let to = chart.psi.apply(&acs, (0.3, 0.1), &q).unwrap();
        let z = solve_group_element(&chart.psi, &chart.lattice, &acs, &q, &to).unwrap();
        assert!(chart.lattice.distance_to_lattice((z.0 - 0.3, z.1 - 0.1)) <= 1e-10);
        let other = acs.sample(&mut rng);
        assert!(matches!(
            solve_group_element(&chart.psi, &chart.lattice, &acs, &q, &other),
            Err(GeometryError::NotOnOrbit(_))
        ));
        let mut zero = q.clone();
        zero.p1.fill(Complex64::new(0.0, 0.0));
        assert!(matches!(
            solve_group_element(&chart.psi, &chart.lattice, &acs, &zero, &q),
            Err(GeometryError::PhaseUnobservable)
        ));
    }

    #[test]
    fn transition_between_two_slices() {
        let (acs, chart) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let same = chart.transition(
            &chart,
            &acs,
            (&RVec::from_element(2, 1.0), &RVec::from_element(4, 1.0)),
            0.1,
            3,
            2,
            &mut rng,
        )
        .unwrap();
        assert!(same.samples.iter().all(|s| chart.lattice.distance_to_lattice(s.h) <= 1e-9));

        let base = chart.base();
        let shift = |f: Factor, p: &CMat| {
            let s = &chart.slices[f.index()];
            let dir = s.direction(&RVec::from_fn(s.dim(), |i, _| if i == 0 { 0.1 } else { 0.0 })).unwrap();
            let moved = acs.factor(f).retract(p, &dir).unwrap();
            acs.factor(f).spec().flow(&chart.psi.circle, 0.3, &moved).unwrap()
        };
        let bases2 = ProductPoint::new(shift(Factor::First, &base.p1), shift(Factor::Second, &base.p2));
        let other = ChartMap::new(&acs, chart.psi.clone(), &bases2, 0.5).unwrap();
        let rep = chart
            .transition(
                &other,
                &acs,
                (&RVec::from_element(2, 1.0), &RVec::from_element(4, 1.0)),
                0.1,
                5,
                3,
                &mut rng,
            )
            .unwrap();
        assert_eq!(rep.samples.len(), 25);
        assert!(rep.max_roundtrip <= 1e-8, "{}", rep.max_roundtrip);
        assert!(rep.max_g_independence <= 1e-8, "{}", rep.max_g_independence);
        assert!(rep.continuous);
    }

    #[test]
    fn charts_reject_nonabelian_groups() {
        let acs = ProductACS::new(stiefel(2, 3).unwrap(), stiefel(2, 3).unwrap()).unwrap();
        let psi = PsiAction::default_for(&acs).unwrap();
        let base = acs.sample(&mut ChaCha8Rng::seed_from_u64(7));
        assert!(ChartMap::new(&acs, psi, &base, 0.5).is_err());
    }

    #[test]
    fn no_collisions_near_base() {
        let (acs, chart) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(chart.injectivity_spot_check(&acs, 20, &mut rng).unwrap(), 0);
    }
}
