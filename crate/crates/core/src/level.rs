//! Momentum maps, their level sets, and the vertical/horizontal splitting of
//! tangent spaces.
//!
//! At a point `q` of `N = μ⁻¹(c)` the tangent space is `ker dμ_q`; the
//! vertical space `V_q` is spanned by the generators `ξ^a_N(q)` of a fixed
//! algebra basis, and the horizontal space `H_q` is the `g`-orthogonal
//! complement of `V_q` in `T_qN`. For Kähler reductions `H_q` is invariant
//! under multiplication by `i`, and the restricted triple `(g, i, ω)` is the
//! pointwise model of the reduced Kähler structure.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambient::{mul_i, realify, AmbientSpace, ManifoldKind, Tolerances, I};
use crate::error::{GeometryError, Result};
use crate::group::{AlgebraElement, DualElement, GroupElement, GroupSpec, LieGroup};
use crate::linalg::{
    cnorm, columns_to_matrix, orthogonalize_against, row_space_basis, CMat, RMat,
    RVec,
};

/// Relative singular-value threshold used to decide the rank of `dμ`.
const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMap {
    spec: GroupSpec,
    ambient: AmbientSpace,
    offset: DualElement,
}

impl MomentMap {
    pub fn new(spec: GroupSpec, ambient: AmbientSpace, offset: DualElement) -> Result<Self> {
        spec.check_ambient(&ambient)?;
        let group = spec.group();
        check_dual(&group, &offset)?;
        Ok(MomentMap {
            spec,
            ambient,
            offset,
        })
    }

    /// Momentum map without offset.
    pub fn centered(spec: GroupSpec, ambient: AmbientSpace) -> Result<Self> {
        let offset = zero_dual(&spec.group());
        Self::new(spec, ambient, offset)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn ambient(&self) -> &AmbientSpace {
        &self.ambient
    }

    pub fn group(&self) -> LieGroup {
        self.spec.group()
    }

    pub fn offset(&self) -> &DualElement {
        &self.offset
    }

    /// `μ(q)`: `i A†A + c₀` for `U(k)`; `(π Σ_j W_ja |z_j|²)_a + c₀` for tori.
    pub fn eval(&self, q: &CMat) -> Result<DualElement> {
        self.ambient.check(q)?;
        Ok(match (&self.spec, &self.offset) {
            (GroupSpec::Unitary { .. }, DualElement::Unitary(c0)) => {
                DualElement::Unitary(q.adjoint() * q * I + c0)
            }
            (GroupSpec::Torus { weights }, DualElement::Torus(c0)) => {
                let mut m = c0.clone();
                for (w, z) in weights.iter().zip(q.iter()) {
                    for (a, &wa) in w.iter().enumerate() {
                        m[a] += PI * wa as f64 * z.norm_sqr();
                    }
                }
                DualElement::Torus(m)
            }
            _ => unreachable!("offset kind checked at construction"),
        })
    }

    /// Realified differential `dμ_q`: one row per dual coordinate (basis
    /// coordinates of the skew-Hermitian value for `U(k)`), one column per
    /// real ambient coordinate.
    pub fn differential(&self, q: &CMat) -> Result<RMat> {
        self.ambient.check(q)?;
        let group = self.group();
        let real_dim = self.ambient.real_dim();
        let mut d = RMat::zeros(group.dim(), real_dim);
        match &self.spec {
            GroupSpec::Torus { weights } => {
                for (j, (w, z)) in weights.iter().zip(q.iter()).enumerate() {
                    for (a, &wa) in w.iter().enumerate() {
                        d[(a, 2 * j)] = 2.0 * PI * wa as f64 * z.re;
                        d[(a, 2 * j + 1)] = 2.0 * PI * wa as f64 * z.im;
                    }
                }
            }
            GroupSpec::Unitary { .. } => {
                let qa = q.adjoint();
                for j in 0..real_dim {
                    let v = self.ambient.real_basis(j);
                    let dm = (v.adjoint() * q + &qa * &v) * I;
                    let c = group.coords(&AlgebraElement::Unitary(dm))?;
                    d.set_column(j, &c);
                }
            }
        }
        Ok(d)
    }

    /// Pairing of a dual element with an algebra element, normalized so that
    /// `ι_{ξ_N} ω = d⟨μ, ξ⟩`: `Σ m_a θ_a` on tori, `−½ Re Tr(m ξ)` on `𝔲(k)`.
    pub fn pairing(&self, m: &DualElement, xi: &AlgebraElement) -> Result<f64> {
        match (m, xi) {
            (DualElement::Torus(a), AlgebraElement::Torus(t)) if a.len() == t.len() => Ok(a.dot(t)),
            (DualElement::Unitary(a), AlgebraElement::Unitary(x)) if a.shape() == x.shape() => {
                Ok(-0.5 * (a * x).trace().re)
            }
            _ => Err(GeometryError::MixedGroupKinds("pairing".into())),
        }
    }

    /// `‖μ(act(g, q)) − Ad*_g μ(q)‖`.
    pub fn check_equivariance(&self, q: &CMat, g: &GroupElement) -> Result<f64> {
        let group = self.group();
        let lhs = self.eval(&self.spec.act(g, q)?)?;
        let rhs = group.adjoint_orbit_map(g, &self.eval(q)?)?;
        Ok(lhs.distance(&rhs))
    }

    /// `|⟨μ(q) − c₀, ξ⟩ + ½ θ_q(ξ_N(q))|`, the Liouville consistency of the
    /// momentum map (exact for linear actions preserving `θ = Im h(q, ·)`).
    pub fn liouville_residual(&self, q: &CMat, xi: &AlgebraElement) -> Result<f64> {
        let mu = self.eval(q)?;
        let centered = match (&mu, &self.offset) {
            (DualElement::Torus(a), DualElement::Torus(b)) => DualElement::Torus(a - b),
            (DualElement::Unitary(a), DualElement::Unitary(b)) => DualElement::Unitary(a - b),
            _ => unreachable!(),
        };
        let theta = self.ambient.liouville(q, &self.spec.generator(xi, q)?)?;
        Ok((self.pairing(&centered, xi)? + 0.5 * theta).abs())
    }
}

fn zero_dual(group: &LieGroup) -> DualElement {
    match *group {
        LieGroup::Torus { rank } => DualElement::Torus(RVec::zeros(rank)),
        LieGroup::Unitary { k } => DualElement::Unitary(CMat::zeros(k, k)),
    }
}

fn check_dual(group: &LieGroup, m: &DualElement) -> Result<()> {
    match (group, m) {
        (LieGroup::Torus { rank }, DualElement::Torus(v)) if v.len() == *rank => Ok(()),
        (LieGroup::Unitary { k }, DualElement::Unitary(a)) if a.nrows() == *k && a.ncols() == *k => {
            Ok(())
        }
        _ => Err(GeometryError::MixedGroupKinds(
            "dual element does not match the group".into(),
        )),
    }
}

/// A regular level set `N = μ⁻¹(c)` with a retraction and a point sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    moment: MomentMap,
    level: DualElement,
    kind: ManifoldKind,
    sampler: ManifoldKind,
    tol: Tolerances,
}

impl LevelSet {
    /// Level set of a coadjoint-fixed value. The retraction is derived from
    /// the momentum map: block normalization for tori whose weights partition
    /// the coordinates, polar retraction for `U(k)` at a central level.
    pub fn new(moment: MomentMap, level: DualElement) -> Result<Self> {
        let group = moment.group();
        check_dual(&group, &level)?;
        let kind = match (moment.spec(), &level, moment.offset()) {
            (GroupSpec::Unitary { k }, DualElement::Unitary(c), DualElement::Unitary(c0)) => {
                let shifted = c - c0;
                let lambda = shifted[(0, 0)].im;
                let central = CMat::identity(*k, *k) * (I * lambda);
                if cnorm(&(&shifted - central)) > 1e-12 * cnorm(&shifted).max(1.0) {
                    return Err(GeometryError::LevelNotFixed);
                }
                if !(lambda > 0.0) {
                    return Err(GeometryError::InvalidInstance(
                        "unitary level must be iλ𝕀 with λ > 0".into(),
                    ));
                }
                ManifoldKind::Stiefel {
                    scale: lambda.sqrt(),
                }
            }
            (GroupSpec::Torus { weights }, DualElement::Torus(c), DualElement::Torus(c0)) => {
                let rank = group.dim();
                let mut blocks = vec![Vec::new(); rank];
                for (j, w) in weights.iter().enumerate() {
                    let ones: Vec<usize> = (0..rank).filter(|&a| w[a] != 0).collect();
                    match ones.as_slice() {
                        [] => {}
                        [a] if w[*a] == 1 => blocks[*a].push(j),
                        _ => {
                            return Err(GeometryError::UnknownManifoldKind(
                                "torus level set without a block-sphere retraction".into(),
                            ))
                        }
                    }
                }
                let mut radii = Vec::with_capacity(rank);
                for a in 0..rank {
                    let r2 = (c[a] - c0[a]) / PI;
                    if !(r2 > 0.0) || blocks[a].is_empty() {
                        return Err(GeometryError::InvalidInstance(format!(
                            "torus factor {a} has an empty level set"
                        )));
                    }
                    radii.push(r2.sqrt());
                }
                ManifoldKind::Spheres { blocks, radii }
            }
            _ => unreachable!("checked by check_dual"),
        };
        Ok(LevelSet {
            moment,
            level,
            sampler: kind.clone(),
            kind,
            tol: Tolerances::default(),
        })
    }

    /// Replace the point sampler. Sampled points must lie on this level set.
    pub fn with_sampler(mut self, sampler: ManifoldKind) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = sampler.sample(self.moment.ambient(), &mut rng);
        let r = self.residual(&q)?;
        if r > self.tol.on_manifold {
            return Err(GeometryError::OffManifold(r));
        }
        self.sampler = sampler;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn moment(&self) -> &MomentMap {
        &self.moment
    }

    pub fn level(&self) -> &DualElement {
        &self.level
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn ambient(&self) -> &AmbientSpace {
        self.moment.ambient()
    }

    pub fn spec(&self) -> &GroupSpec {
        self.moment.spec()
    }

    pub fn group(&self) -> LieGroup {
        self.moment.group()
    }

    /// Real dimension of `N` (regular level set).
    pub fn dim(&self) -> usize {
        self.ambient().real_dim() - self.group().dim()
    }

    /// `‖μ(q) − c‖`.
    pub fn residual(&self, q: &CMat) -> Result<f64> {
        Ok(self.moment.eval(q)?.distance(&self.level))
    }

    pub fn check_on(&self, q: &CMat) -> Result<()> {
        let r = self.residual(q)?;
        if r > self.tol.on_manifold * (1.0 + cnorm(q).powi(2)) {
            Err(GeometryError::OffManifold(r))
        } else {
            Ok(())
        }
    }

    pub fn retract(&self, q: &CMat, v: &CMat) -> Result<CMat> {
        self.ambient().check(q)?;
        self.kind.retract(q, v)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        self.sampler.sample(self.ambient(), rng)
    }

    /// `g`-orthogonal projector onto `T_qN = ker dμ_q` (realified).
    pub fn tangent_projector(&self, q: &CMat) -> Result<RMat> {
        Ok(self.regular_frame(q)?.0)
    }

    fn regular_frame(&self, q: &CMat) -> Result<(RMat, RMat, Vec<f64>)> {
        let d = self.moment.differential(q)?;
        let (rows, sv) = row_space_basis(&d, RANK_TOL);
        let expected = self.group().dim();
        if rows.ncols() < expected {
            return Err(GeometryError::SingularLevelPoint {
                rank: rows.ncols(),
                expected,
            });
        }
        let n = d.ncols();
        let proj = RMat::identity(n, n) - &rows * rows.transpose();
        Ok((proj, d, sv))
    }

    /// Projectors and generator data at `q` for the given algebra basis.
    pub fn geometry(&self, q: &CMat, basis: &[AlgebraElement]) -> Result<PointGeometry> {
        let (tangent_projector, differential, dmu_singular_values) = self.regular_frame(q)?;
        let cols: Vec<RVec> = basis
            .iter()
            .map(|xi| Ok(realify(&self.spec().generator(xi, q)?)))
            .collect::<Result<_>>()?;
        let generators = columns_to_matrix(self.ambient().real_dim(), &cols);
        let gram = generators.transpose() * &generators;
        let eig = gram.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-13 * max) {
            return Err(GeometryError::NonFreePoint(min));
        }
        let gram_condition = max / min;
        if gram_condition > 1e12 {
            return Err(GeometryError::IllConditionedGram(gram_condition));
        }
        let gram_inv = gram
            .cholesky()
            .ok_or(GeometryError::NonFreePoint(min))?
            .inverse();
        Ok(PointGeometry {
            point: q.clone(),
            rows: q.nrows(),
            cols: q.ncols(),
            tangent_projector,
            differential,
            generators,
            gram_inv,
            gram_condition,
            dmu_singular_values,
        })
    }

    /// Vertical/horizontal splitting at `q` in the fixed algebra basis.
    pub fn split(&self, q: &CMat) -> Result<Splitting> {
        self.split_with_basis(q, &self.group().basis())
    }

    pub fn split_with_basis(&self, q: &CMat, basis: &[AlgebraElement]) -> Result<Splitting> {
        let geometry = self.geometry(q, basis)?;
        let real_dim = self.ambient().real_dim();
        let dim_v = basis.len();
        let dim_h = self.dim() - dim_v;

        let gens: Vec<RVec> = (0..dim_v).map(|k| geometry.generators.column(k).into_owned()).collect();
        let vertical = crate::linalg::orthonormalize(&gens, 1e-10);
        if vertical.len() != dim_v {
            return Err(GeometryError::NonFreePoint(0.0));
        }

        // Horizontal frame built in pairs (e, i·e), which certifies i-invariance.
        let mut horizontal: Vec<RVec> = Vec::with_capacity(dim_h);
        for j in 0..real_dim {
            if horizontal.len() >= dim_h {
                break;
            }
            let mut e = RVec::zeros(real_dim);
            e[j] = 1.0;
            let cand = geometry.horizontal_part(&e);
            let Some(v) = orthogonalize_against(&horizontal, &cand, 1e-6) else {
                continue;
            };
            let iv = mul_i(&v);
            let leak = geometry.vertical_part(&iv).norm().max((&geometry.differential * &iv).norm());
            if leak > 1e-9 * (1.0 + geometry.differential.norm()) {
                return Err(GeometryError::NotComplexInvariant(leak));
            }
            horizontal.push(v);
            let Some(w) = orthogonalize_against(&horizontal, &iv, 1e-6) else {
                return Err(GeometryError::NotComplexInvariant(1.0));
            };
            horizontal.push(w);
        }
        if horizontal.len() != dim_h {
            return Err(GeometryError::SingularLevelPoint {
                rank: real_dim - horizontal.len() - dim_v,
                expected: self.group().dim(),
            });
        }
        Ok(Splitting {
            base: q.clone(),
            vertical_frame: columns_to_matrix(real_dim, &vertical),
            horizontal_frame: columns_to_matrix(real_dim, &horizontal),
            geometry,
        })
    }
}

/// Pointwise projector data on a level set.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: CMat,
    rows: usize,
    cols: usize,
    pub tangent_projector: RMat,
    pub differential: RMat,
    /// Realified generators `ξ^a_N(q)` as columns.
    pub generators: RMat,
    gram_inv: RMat,
    pub gram_condition: f64,
    pub dmu_singular_values: Vec<f64>,
}

impl PointGeometry {
    pub fn project_tangent(&self, v: &RVec) -> RVec {
        &self.tangent_projector * v
    }

    /// Coefficients `a` with `Proj_V(w) = Σ a_k ξ^k_N(q)` (Gram system of the
    /// generator vectors).
    pub fn vertical_coords(&self, w: &RVec) -> RVec {
        &self.gram_inv * (self.generators.transpose() * w)
    }

    pub fn vertical_part(&self, w: &RVec) -> RVec {
        &self.generators * self.vertical_coords(w)
    }

    pub fn horizontal_part(&self, w: &RVec) -> RVec {
        let t = self.project_tangent(w);
        let v = self.vertical_part(&t);
        t - v
    }

    pub fn vertical_projector(&self) -> RMat {
        &self.generators * &self.gram_inv * self.generators.transpose()
    }

    pub fn horizontal_projector(&self) -> RMat {
        &self.tangent_projector - self.vertical_projector()
    }

    /// Smallest singular value of `dμ_q` (regularity margin).
    pub fn regularity(&self) -> f64 {
        self.dmu_singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// `T_qN = V_q ⊕ H_q` with `g`-orthonormal frames.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub base: CMat,
    pub vertical_frame: RMat,
    pub horizontal_frame: RMat,
    pub geometry: PointGeometry,
}

/// Kähler data of the ambient restricted to `H_q`, in the horizontal frame.
#[derive(Debug, Clone)]
pub struct ReducedKahler {
    pub metric: RMat,
    pub complex_structure: RMat,
    pub symplectic: RMat,
}

impl ReducedKahler {
    /// `‖J̃² + 𝕀‖`.
    pub fn complex_structure_residual(&self) -> f64 {
        let n = self.complex_structure.nrows();
        (&self.complex_structure * &self.complex_structure + RMat::identity(n, n)).amax()
    }

    /// `g̃(u, v) − ω̃(J̃u, v)`, as a max-abs matrix residual.
    pub fn compatibility_residual(&self) -> f64 {
        (self.complex_structure.transpose() * &self.symplectic - &self.metric).amax()
    }
}

impl Splitting {
    pub fn dim_vertical(&self) -> usize {
        self.vertical_frame.ncols()
    }

    pub fn dim_horizontal(&self) -> usize {
        self.horizontal_frame.ncols()
    }

    pub fn projector_tangent(&self) -> &RMat {
        &self.geometry.tangent_projector
    }

    pub fn projector_vertical(&self) -> RMat {
        &self.vertical_frame * self.vertical_frame.transpose()
    }

    pub fn projector_horizontal(&self) -> RMat {
        &self.horizontal_frame * self.horizontal_frame.transpose()
    }

    /// Algebra coefficients of the vertical part of the tangent vector `w`.
    pub fn vertical_coordinates(&self, w: &RVec) -> Result<RVec> {
        if w.len() != self.geometry.tangent_projector.nrows() {
            return Err(GeometryError::shape(self.geometry.tangent_projector.nrows(), w.len()));
        }
        let a = self.geometry.vertical_coords(w);
        let recon = &self.geometry.generators * &a;
        let pv = self.projector_vertical() * w;
        let res = (pv - recon).norm();
        if res > 1e-9 * (1.0 + w.norm()) {
            return Err(GeometryError::IllConditionedGram(self.geometry.gram_condition));
        }
        Ok(a)
    }

    pub fn reduced_kahler_data(&self) -> ReducedKahler {
        let e = &self.horizontal_frame;
        let mut ie = e.clone();
        for j in 0..e.ncols() {
            ie.set_column(j, &mul_i(&e.column(j).into_owned()));
        }
        let metric = e.transpose() * e;
        // J̃_ab = g(e_a, i e_b): coordinates of i e_b in the orthonormal frame.
        let complex_structure = e.transpose() * &ie;
        // ω̃_ab = ω(e_a, e_b) = g(e_a, i e_b).
        let symplectic = e.transpose() * &ie;
        ReducedKahler {
            metric,
            complex_structure,
            symplectic,
        }
    }

    /// Minimum eigenvalue of the reduced metric.
    pub fn min_metric_eigenvalue(&self) -> f64 {
        self.reduced_kahler_data()
            .metric
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// The unit sphere `S^{2n−1} ⊂ ℂⁿ` as the zero level of `π(|z|² − 1)`.
pub fn unit_sphere(dim: usize) -> Result<LevelSet> {
    let ambient = AmbientSpace::Vector { dim };
    let moment = MomentMap::new(
        GroupSpec::hopf_circle(dim),
        ambient,
        DualElement::Torus(RVec::from_element(1, -PI)),
    )?;
    LevelSet::new(moment, DualElement::Torus(RVec::zeros(1)))
}

/// The Stiefel manifold `V_k(ℂⁿ) = μ⁻¹(i𝕀)` for `μ(A) = i A†A`.
pub fn stiefel(k: usize, n: usize) -> Result<LevelSet> {
    let ambient = AmbientSpace::Matrix { k, n };
    let moment = MomentMap::centered(GroupSpec::Unitary { k }, ambient)?;
    LevelSet::new(
        moment,
        DualElement::Unitary(CMat::identity(k, k) * Complex64::new(0.0, 1.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;

    fn e(dim: usize, j: usize) -> CMat {
        let mut a = CMat::zeros(dim, 1);
        a[(j, 0)] = Complex64::new(1.0, 0.0);
        a
    }

    #[test]
    fn moment_examples() {
        let st = stiefel(2, 4).unwrap();
        let mut a = CMat::zeros(4, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(1, 1)] = Complex64::new(1.0, 0.0);
        let mu = st.moment().eval(&a).unwrap();
        assert_eq!(mu, DualElement::Unitary(CMat::identity(2, 2) * I));
        assert_eq!(
            st.moment().eval(&CMat::zeros(4, 2)).unwrap(),
            DualElement::Unitary(CMat::zeros(2, 2))
        );

        let sphere = unit_sphere(3).unwrap();
        assert_eq!(
            sphere.moment().eval(&CMat::zeros(3, 1)).unwrap(),
            DualElement::Torus(RVec::from_element(1, -PI))
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = sphere.sample(&mut rng);
        assert!(sphere.residual(&q).unwrap() <= 1e-14);
        assert!(sphere.moment().eval(&CMat::zeros(2, 1)).is_err());
    }

    #[test]
    fn equivariance_examples() {
        let st = stiefel(2, 4).unwrap();
        let grp = st.group();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = st.ambient().random_element(&mut rng);
        assert_eq!(st.moment().check_equivariance(&a, &grp.identity()).unwrap(), 0.0);
        for _ in 0..20 {
            let a = st.ambient().random_element(&mut rng);
            let u = grp.random_element(&mut rng);
            assert!(st.moment().check_equivariance(&a, &u).unwrap() <= 1e-12);
        }
        let u = grp.random_element(&mut rng);
        assert_eq!(st.moment().check_equivariance(&CMat::zeros(4, 2), &u).unwrap(), 0.0);
    }

    #[test]
    fn liouville_consistency_both_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = stiefel(2, 3).unwrap();
        let sp = unit_sphere(4).unwrap();
        for _ in 0..10 {
            let a = st.ambient().random_element(&mut rng);
            let xi = st.group().random_algebra(&mut rng);
            assert!(st.moment().liouville_residual(&a, &xi).unwrap() <= 1e-12);
            let z = sp.ambient().random_element(&mut rng);
            let th = sp.group().random_algebra(&mut rng);
            assert!(sp.moment().liouville_residual(&z, &th).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn hamiltonian_identity_by_finite_differences() {
        // ω(ξ_N(q), v) = d⟨μ, ξ⟩_q(v) for both kinds
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for level in [stiefel(2, 3).unwrap(), unit_sphere(3).unwrap()] {
            let mm = level.moment();
            let q = level.ambient().random_element(&mut rng);
            let v = level.ambient().random_element(&mut rng);
            let xi = level.group().random_algebra(&mut rng);
            let t = 1e-5;
            let plus = mm.pairing(&mm.eval(&(&q + &v * Complex64::new(t, 0.0))).unwrap(), &xi).unwrap();
            let minus = mm.pairing(&mm.eval(&(&q - &v * Complex64::new(t, 0.0))).unwrap(), &xi).unwrap();
            let fd = (plus - minus) / (2.0 * t);
            let omega = level.ambient().symplectic(&mm.spec().generator(&xi, &q).unwrap(), &v).unwrap();
            assert!((fd - omega).abs() <= 1e-7 * (1.0 + omega.abs()), "{fd} vs {omega}");
        }
    }

    #[test]
    fn sphere_tangent_projector_at_e1() {
        let sphere = unit_sphere(2).unwrap();
        let q = e(2, 0);
        let p = sphere.tangent_projector(&q).unwrap();
        let radial = realify(&q);
        let ie1 = realify(&(&q * I));
        assert!((&p * &radial).norm() <= 1e-15);
        assert!((&p * &ie1 - &ie1).norm() <= 1e-15);
        assert!((&p * &p - &p).amax() <= 1e-12);
        assert!((&p - p.transpose()).amax() <= 1e-15);
        let rank = singular_values(&p).iter().filter(|s| **s > 0.5).count();
        assert_eq!(rank, 3);
    }

    #[test]
    fn singular_level_point_is_reported() {
        let sphere = unit_sphere(2).unwrap();
        assert!(matches!(
            sphere.tangent_projector(&CMat::zeros(2, 1)),
            Err(GeometryError::SingularLevelPoint { .. })
        ));
        let st = stiefel(2, 3).unwrap();
        let mut a = CMat::zeros(3, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        // second column zero: rank of dμ drops
        assert!(st.tangent_projector(&a).is_err());
        assert!(matches!(st.split(&a), Err(GeometryError::SingularLevelPoint { .. }) | Err(GeometryError::NonFreePoint(_))));
    }

    #[test]
    fn hopf_splitting_at_e1() {
        let sphere = unit_sphere(2).unwrap();
        let q = e(2, 0);
        let s = sphere.split(&q).unwrap();
        assert_eq!(s.dim_vertical(), 1);
        assert_eq!(s.dim_horizontal(), 2);
        let pv = s.projector_vertical();
        let ie1 = realify(&(&q * I));
        assert!((&pv * &ie1 - &ie1).norm() <= 1e-14);
        let ph = s.projector_horizontal();
        for v in [realify(&e(2, 1)), realify(&(e(2, 1) * I))] {
            assert!((&ph * &v - &v).norm() <= 1e-14);
        }
    }

    #[test]
    fn stiefel_splitting_dimensions_and_invariants() {
        let st = stiefel(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = st.sample(&mut rng);
            assert!(st.residual(&a).unwrap() <= 1e-12);
            let s = st.split(&a).unwrap();
            assert_eq!(st.dim(), 12);
            assert_eq!(s.dim_vertical(), 4);
            assert_eq!(s.dim_horizontal(), 8);
            let frames = nalgebra::DMatrix::from_columns(
                &s.vertical_frame
                    .column_iter()
                    .chain(s.horizontal_frame.column_iter())
                    .map(|c| c.into_owned())
                    .collect::<Vec<_>>(),
            );
            let gram = frames.transpose() * &frames;
            assert!((gram - RMat::identity(12, 12)).amax() <= 1e-12);
            // V ⊕ H = T
            let sum = s.projector_vertical() + s.projector_horizontal();
            assert!((sum - s.projector_tangent()).amax() <= 1e-12);
            // i·H ⊂ H
            for v in s.horizontal_frame.column_iter() {
                let iv = mul_i(&v.into_owned());
                assert!((s.projector_vertical() * &iv).norm() <= 1e-9);
                assert!((&s.geometry.differential * &iv).norm() <= 1e-9);
            }
            assert!(s.geometry.regularity() > 0.1);
        }
    }

    #[test]
    fn vertical_coordinates_examples() {
        let st = stiefel(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = st.sample(&mut rng);
        let s = st.split(&a).unwrap();
        let basis = st.group().basis();
        let w1 = realify(&st.spec().generator(&basis[0], &a).unwrap());
        let c = s.vertical_coordinates(&w1).unwrap();
        assert!((c[0] - 1.0).abs() <= 1e-12 && c.rows(1, 3).amax() <= 1e-12);
        let h = s.horizontal_frame.column(0).into_owned();
        assert!(s.vertical_coordinates(&h).unwrap().amax() <= 1e-12);
        let combo = st.group().from_coords(&RVec::from_vec(vec![1.0, 2.0, 0.0, 0.0]));
        let w = realify(&st.spec().generator(&combo, &a).unwrap());
        let c = s.vertical_coordinates(&w).unwrap();
        assert!((c - RVec::from_vec(vec![1.0, 2.0, 0.0, 0.0])).amax() <= 1e-12);
    }

    #[test]
    fn splitting_is_group_invariant() {
        let st = stiefel(2, 4).unwrap();
        let grp = st.group();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = st.sample(&mut rng);
        let s = st.split(&a).unwrap();
        let u = grp.random_element(&mut rng);
        let moved = st.spec().act(&u, &a).unwrap();
        let s2 = st.split(&moved).unwrap();
        let amb = st.ambient();
        for v in s.horizontal_frame.column_iter() {
            let vc = amb.complexify(&v.into_owned()).unwrap();
            let pushed = realify(&st.spec().act(&u, &vc).unwrap());
            let res = (s2.projector_horizontal() * &pushed - &pushed).norm();
            assert!(res <= 1e-10);
        }
    }

    #[test]
    fn reduced_kahler_data_is_compatible() {
        let sphere = unit_sphere(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let q = sphere.sample(&mut rng);
            let s = sphere.split(&q).unwrap();
            let red = s.reduced_kahler_data();
            assert_eq!(red.metric.nrows(), 2);
            assert!(red.complex_structure_residual() <= 1e-12);
            assert!(red.compatibility_residual() <= 1e-10);
            assert!(s.min_metric_eigenvalue() > 0.0);
        }
        let st = stiefel(2, 4).unwrap();
        let s = st.split(&st.sample(&mut rng)).unwrap();
        let red = s.reduced_kahler_data();
        assert!(red.complex_structure_residual() <= 1e-12);
        assert!(red.compatibility_residual() <= 1e-10);
    }

    #[test]
    fn non_central_level_is_rejected() {
        let ambient = AmbientSpace::Matrix { k: 2, n: 3 };
        let mm = MomentMap::centered(GroupSpec::Unitary { k: 2 }, ambient).unwrap();
        let mut c = CMat::identity(2, 2) * I;
        c[(1, 1)] = I * 2.0;
        assert!(matches!(
            LevelSet::new(mm, DualElement::Unitary(c)),
            Err(GeometryError::LevelNotFixed)
        ));
    }

    #[test]
    fn non_free_point_is_reported() {
        // U(2) on Hom(C²,C³) at a rank-one point: generators dependent
        let ambient = AmbientSpace::Matrix { k: 2, n: 3 };
        let st = stiefel(2, 3).unwrap();
        let mut a = ambient.zeros();
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(st.geometry(&a, &st.group().basis()).is_err());
    }
}
