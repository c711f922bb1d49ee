//! The product `N₁ × N₂` of two level sets and its almost complex structure.
//!
//! A tangent vector decomposes as `w = (h₁ + Σ a_k ξ^k_{N₁}, h₂ + Σ b_k ξ^k_{N₂})`
//! with `h_i` horizontal. `J` multiplies the horizontal parts by `i` and
//! exchanges the vertical coefficients with a quarter turn:
//!
//! ```text
//! J w = (i h₁ + Σ b_k ξ^k_{N₁},  i h₂ − Σ a_k ξ^k_{N₂})
//! ```
//!
//! so `J(ξ_{N₁}, 0) = (0, −ξ_{N₂})` and `J(0, ξ_{N₂}) = (ξ_{N₁}, 0)`. The
//! map is independent of the algebra basis because it is linear in `ξ`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::realify;
use crate::error::{GeometryError, Result};
use crate::group::{AlgebraElement, LieGroup};
use crate::level::{LevelSet, PointGeometry};
use crate::linalg::{cnorm, CMat, RMat, RVec};

/// Geometries kept per factor before the memo is flushed.
const CACHE_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    First,
    Second,
}

impl Factor {
    pub fn index(self) -> usize {
        match self {
            Factor::First => 0,
            Factor::Second => 1,
        }
    }

    pub fn other(self) -> Factor {
        match self {
            Factor::First => Factor::Second,
            Factor::Second => Factor::First,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub p1: CMat,
    pub p2: CMat,
}

impl ProductPoint {
    pub fn new(p1: CMat, p2: CMat) -> Self {
        ProductPoint { p1, p2 }
    }

    pub fn get(&self, f: Factor) -> &CMat {
        match f {
            Factor::First => &self.p1,
            Factor::Second => &self.p2,
        }
    }

    /// Euclidean distance in the product ambient space.
    pub fn distance(&self, other: &ProductPoint) -> f64 {
        (cnorm(&(&self.p1 - &other.p1)).powi(2) + cnorm(&(&self.p2 - &other.p2)).powi(2)).sqrt()
    }

    pub fn norm(&self) -> f64 {
        (cnorm(&self.p1).powi(2) + cnorm(&self.p2).powi(2)).sqrt()
    }

    /// Realified coordinates of both factors, concatenated.
    pub fn to_flat(&self) -> Vec<f64> {
        realify(&self.p1).iter().chain(realify(&self.p2).iter()).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductTangent {
    pub v1: CMat,
    pub v2: CMat,
}

impl ProductTangent {
    pub fn new(v1: CMat, v2: CMat) -> Self {
        ProductTangent { v1, v2 }
    }

    pub fn zeros_at(q: &ProductPoint) -> Self {
        ProductTangent {
            v1: CMat::zeros(q.p1.nrows(), q.p1.ncols()),
            v2: CMat::zeros(q.p2.nrows(), q.p2.ncols()),
        }
    }

    /// `(v, 0)` or `(0, v)` at `q`.
    pub fn on_factor(q: &ProductPoint, f: Factor, v: CMat) -> Self {
        let mut t = Self::zeros_at(q);
        *t.get_mut(f) = v;
        t
    }

    pub fn get(&self, f: Factor) -> &CMat {
        match f {
            Factor::First => &self.v1,
            Factor::Second => &self.v2,
        }
    }

    pub fn get_mut(&mut self, f: Factor) -> &mut CMat {
        match f {
            Factor::First => &mut self.v1,
            Factor::Second => &mut self.v2,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let c = Complex64::new(s, 0.0);
        ProductTangent {
            v1: &self.v1 * c,
            v2: &self.v2 * c,
        }
    }

    pub fn add(&self, other: &ProductTangent) -> Self {
        ProductTangent {
            v1: &self.v1 + &other.v1,
            v2: &self.v2 + &other.v2,
        }
    }

    pub fn sub(&self, other: &ProductTangent) -> Self {
        ProductTangent {
            v1: &self.v1 - &other.v1,
            v2: &self.v2 - &other.v2,
        }
    }

    /// Norm for the product metric `g₁ ⊕ g₂`.
    pub fn norm(&self) -> f64 {
        (cnorm(&self.v1).powi(2) + cnorm(&self.v2).powi(2)).sqrt()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        realify(&self.v1).iter().chain(realify(&self.v2).iter()).copied().collect()
    }
}

/// `w = (h₁ + Σ a_k ξ^k_{N₁}, h₂ + Σ b_k ξ^k_{N₂})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub h1: CMat,
    pub a: RVec,
    pub h2: CMat,
    pub b: RVec,
}

type CacheKey = Vec<u64>;

/// The almost complex structure `J` on `N₁ × N₂`.
#[derive(Debug)]
pub struct ProductACS {
    factors: [LevelSet; 2],
    basis: Vec<AlgebraElement>,
    cache: [RwLock<HashMap<CacheKey, Arc<PointGeometry>>>; 2],
}

impl Clone for ProductACS {
    fn clone(&self) -> Self {
        ProductACS {
            factors: self.factors.clone(),
            basis: self.basis.clone(),
            cache: Default::default(),
        }
    }
}

impl ProductACS {
    /// Both level sets must carry actions of the same group.
    pub fn new(n1: LevelSet, n2: LevelSet) -> Result<Self> {
        let basis = n1.group().basis();
        Self::with_basis(n1, n2, basis)
    }

    /// Use a custom algebra basis for the vertical coefficients.
    pub fn with_basis(n1: LevelSet, n2: LevelSet, basis: Vec<AlgebraElement>) -> Result<Self> {
        let group = n1.group();
        if group != n2.group() {
            return Err(GeometryError::MixedGroupKinds(format!(
                "{:?} vs {:?}",
                group,
                n2.group()
            )));
        }
        let dim = group.dim();
        if basis.len() != dim {
            return Err(GeometryError::shape(dim, basis.len()));
        }
        let mut m = RMat::zeros(dim, dim);
        for (j, xi) in basis.iter().enumerate() {
            m.set_column(j, &group.coords(xi)?);
        }
        let sv = crate::linalg::singular_values(&m);
        if sv.last().copied().unwrap_or(1.0) <= 1e-10 * sv.first().copied().unwrap_or(1.0) {
            return Err(GeometryError::InvalidInstance(
                "algebra basis is linearly dependent".into(),
            ));
        }
        Ok(ProductACS {
            factors: [n1, n2],
            basis,
            cache: Default::default(),
        })
    }

    pub fn factor(&self, f: Factor) -> &LevelSet {
        &self.factors[f.index()]
    }

    pub fn group(&self) -> LieGroup {
        self.factors[0].group()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    /// Real dimension of `N₁ × N₂`.
    pub fn dim(&self) -> usize {
        self.factors[0].dim() + self.factors[1].dim()
    }

    /// Memoized projector data of one factor at a point.
    pub fn geometry(&self, f: Factor, p: &CMat) -> Result<Arc<PointGeometry>> {
        let key: CacheKey = p.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect();
        let cache = &self.cache[f.index()];
        if let Some(g) = cache.read().expect("geometry cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let level = self.factor(f);
        level.check_on(p)?;
        let geom = Arc::new(level.geometry(p, &self.basis)?);
        let mut w = cache.write().expect("geometry cache poisoned");
        if w.len() >= CACHE_LIMIT {
            w.clear();
        }
        w.insert(key, Arc::clone(&geom));
        Ok(geom)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ProductPoint {
        ProductPoint {
            p1: self.factors[0].sample(rng),
            p2: self.factors[1].sample(rng),
        }
    }

    /// Tangent projection of an arbitrary ambient pair.
    pub fn project(&self, q: &ProductPoint, w: &ProductTangent) -> Result<ProductTangent> {
        let mut out = w.clone();
        for f in [Factor::First, Factor::Second] {
            let g = self.geometry(f, q.get(f))?;
            let v = g.project_tangent(&realify(w.get(f)));
            *out.get_mut(f) = complexify_like(&v, q.get(f));
        }
        Ok(out)
    }

    /// Gaussian ambient pair projected to `T_q(N₁ × N₂)`.
    pub fn random_tangent<R: Rng + ?Sized>(
        &self,
        q: &ProductPoint,
        rng: &mut R,
    ) -> Result<ProductTangent> {
        let w = ProductTangent {
            v1: self.factors[0].ambient().random_element(rng),
            v2: self.factors[1].ambient().random_element(rng),
        };
        self.project(q, &w)
    }

    /// Random horizontal vector on one factor (zero on the other).
    pub fn random_horizontal<R: Rng + ?Sized>(
        &self,
        q: &ProductPoint,
        f: Factor,
        rng: &mut R,
    ) -> Result<ProductTangent> {
        let g = self.geometry(f, q.get(f))?;
        let v = self.factor(f).ambient().random_element(rng);
        let h = g.horizontal_part(&realify(&v));
        Ok(ProductTangent::on_factor(q, f, complexify_like(&h, q.get(f))))
    }

    /// `(ξ_{N₁}(p₁), 0)` or `(0, ξ_{N₂}(p₂))`.
    pub fn generator(&self, q: &ProductPoint, f: Factor, xi: &AlgebraElement) -> Result<ProductTangent> {
        let v = self.factor(f).spec().generator(xi, q.get(f))?;
        Ok(ProductTangent::on_factor(q, f, v))
    }

    /// Retraction of both factors.
    pub fn retract(&self, q: &ProductPoint, w: &ProductTangent) -> Result<ProductPoint> {
        Ok(ProductPoint {
            p1: self.factors[0].retract(&q.p1, &w.v1)?,
            p2: self.factors[1].retract(&q.p2, &w.v2)?,
        })
    }

    fn check_tangent(&self, g: &PointGeometry, v: &RVec) -> Result<()> {
        let normal = (v - g.project_tangent(v)).norm();
        let tol = self.factors[0].tolerances().tangent;
        if normal > tol * (1.0 + v.norm()) {
            Err(GeometryError::NotTangent(normal))
        } else {
            Ok(())
        }
    }

    /// Horizontal parts and vertical algebra coefficients of `w`.
    pub fn decompose(&self, q: &ProductPoint, w: &ProductTangent) -> Result<Decomposition> {
        let mut parts = Vec::with_capacity(2);
        for f in [Factor::First, Factor::Second] {
            let g = self.geometry(f, q.get(f))?;
            let v = realify(w.get(f));
            self.check_tangent(&g, &v)?;
            let coeffs = g.vertical_coords(&v);
            let h = &v - &g.generators * &coeffs;
            parts.push((complexify_like(&h, q.get(f)), coeffs));
        }
        let (h2, b) = parts.pop().expect("two factors");
        let (h1, a) = parts.pop().expect("two factors");
        Ok(Decomposition { h1, a, h2, b })
    }

    /// Reassemble a tangent vector from its decomposition.
    pub fn compose(&self, q: &ProductPoint, d: &Decomposition) -> Result<ProductTangent> {
        let g1 = self.geometry(Factor::First, &q.p1)?;
        let g2 = self.geometry(Factor::Second, &q.p2)?;
        let v1 = realify(&d.h1) + &g1.generators * &d.a;
        let v2 = realify(&d.h2) + &g2.generators * &d.b;
        Ok(ProductTangent {
            v1: complexify_like(&v1, &q.p1),
            v2: complexify_like(&v2, &q.p2),
        })
    }

    /// `J w`.
    pub fn apply_j(&self, q: &ProductPoint, w: &ProductTangent) -> Result<ProductTangent> {
        let d = self.decompose(q, w)?;
        let j = Decomposition {
            h1: &d.h1 * crate::ambient::I,
            a: d.b,
            h2: &d.h2 * crate::ambient::I,
            b: -d.a,
        };
        self.compose(q, &j)
    }

    /// Max over `samples` random tangents of `‖J J w + w‖ / ‖w‖`.
    pub fn check_j_squared<R: Rng + ?Sized>(
        &self,
        q: &ProductPoint,
        samples: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let w = self.random_tangent(q, rng)?;
            worst = worst.max(self.j_squared_residual(q, &w)?);
        }
        Ok(worst)
    }

    /// `‖J J w + w‖ / ‖w‖` for one tangent.
    pub fn j_squared_residual(&self, q: &ProductPoint, w: &ProductTangent) -> Result<f64> {
        let jjw = self.apply_j(q, &self.apply_j(q, w)?)?;
        let n = w.norm();
        Ok(if n == 0.0 { jjw.norm() } else { jjw.add(w).norm() / n })
    }
}

fn complexify_like(v: &RVec, like: &CMat) -> CMat {
    crate::ambient::complexify(v, like.nrows(), like.ncols())
}
