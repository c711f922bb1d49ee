//! Vector fields on `N₁ × N₂`, finite-difference Lie brackets and the
//! Nijenhuis tensor of `J`.
//!
//! Brackets use `[X, Y] = D_X Y − D_Y X`, where `D_X Y` is the central
//! difference of `Y` along the retraction curve `t ↦ R(q, t X(q))`. The
//! quadratic term of the retraction cancels in the central difference, so the
//! scheme is second order. With generators `ξ_N(A) = A ξ` this convention
//! gives `[ξ_N, η_N] = [ξ, η]_N`.

use rayon::prelude::*;

use crate::error::{GeometryError, Result};
use crate::group::AlgebraElement;
use crate::linalg::CMat;
use crate::product::{Factor, ProductACS, ProductPoint, ProductTangent};
use crate::ambient::realify;

#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    /// `ξ_N` on one factor, zero on the other.
    Generator { xi: AlgebraElement, factor: Factor },
    /// Tangent projection of a fixed ambient direction on one factor.
    ProjectedConstant { u: CMat, factor: Factor },
    /// Horizontal projection of a fixed ambient direction on one factor.
    Horizontal { u: CMat, factor: Factor },
    /// `J X`.
    JImage(Box<VectorField>),
    Sum(Box<VectorField>, Box<VectorField>),
}

impl VectorField {
    pub fn generator(xi: AlgebraElement, factor: Factor) -> Self {
        VectorField::Generator { xi, factor }
    }

    pub fn j(self) -> Self {
        VectorField::JImage(Box::new(self))
    }

    pub fn plus(self, other: VectorField) -> Self {
        VectorField::Sum(Box::new(self), Box::new(other))
    }

    /// Short description used in reports.
    pub fn label(&self) -> String {
        let f = |f: &Factor| match f {
            Factor::First => 1,
            Factor::Second => 2,
        };
        match self {
            VectorField::Generator { factor, .. } => format!("V{}", f(factor)),
            VectorField::ProjectedConstant { factor, .. } => format!("P{}", f(factor)),
            VectorField::Horizontal { factor, .. } => format!("H{}", f(factor)),
            VectorField::JImage(x) => format!("J({})", x.label()),
            VectorField::Sum(a, b) => format!("{}+{}", a.label(), b.label()),
        }
    }
}

/// Finite-difference settings for brackets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BracketConfig {
    /// Fixed step; `None` uses `eps^{1/3} (1 + ‖q‖)`.
    pub step: Option<f64>,
}

impl BracketConfig {
    pub fn with_step(h: f64) -> Self {
        BracketConfig { step: Some(h) }
    }

    pub fn step_at(&self, q: &ProductPoint) -> Result<f64> {
        let h = self
            .step
            .unwrap_or_else(|| f64::EPSILON.cbrt() * (1.0 + q.norm()));
        if h > 0.0 && h.is_finite() {
            Ok(h)
        } else {
            Err(GeometryError::InvalidConfig(format!("bracket step {h} must be positive")))
        }
    }
}

pub fn evaluate(acs: &ProductACS, field: &VectorField, q: &ProductPoint) -> Result<ProductTangent> {
    match field {
        VectorField::Generator { xi, factor } => acs.generator(q, *factor, xi),
        VectorField::ProjectedConstant { u, factor } => {
            let w = ProductTangent::on_factor(q, *factor, u.clone());
            acs.project(q, &w)
        }
        VectorField::Horizontal { u, factor } => {
            let p = q.get(*factor);
            let g = acs.geometry(*factor, p)?;
            let h = g.horizontal_part(&realify(u));
            Ok(ProductTangent::on_factor(
                q,
                *factor,
                crate::ambient::complexify(&h, p.nrows(), p.ncols()),
            ))
        }
        VectorField::JImage(inner) => acs.apply_j(q, &evaluate(acs, inner, q)?),
        VectorField::Sum(a, b) => Ok(evaluate(acs, a, q)?.add(&evaluate(acs, b, q)?)),
    }
}

/// Central difference of `Y` along the retraction curve in direction `x`.
fn directional(
    acs: &ProductACS,
    y: &VectorField,
    q: &ProductPoint,
    x: &ProductTangent,
    h: f64,
) -> Result<ProductTangent> {
    let plus = acs.retract(q, &x.scale(h))?;
    let minus = acs.retract(q, &x.scale(-h))?;
    let yp = evaluate(acs, y, &plus)?;
    let ym = evaluate(acs, y, &minus)?;
    Ok(yp.sub(&ym).scale(0.5 / h))
}

/// `[X, Y](q)`, tangent-projected.
pub fn lie_bracket(
    acs: &ProductACS,
    x: &VectorField,
    y: &VectorField,
    q: &ProductPoint,
    cfg: &BracketConfig,
) -> Result<ProductTangent> {
    let h = cfg.step_at(q)?;
    let xq = evaluate(acs, x, q)?;
    let yq = evaluate(acs, y, q)?;
    let dxy = directional(acs, y, q, &xq, h)?;
    let dyx = directional(acs, x, q, &yq, h)?;
    acs.project(q, &dxy.sub(&dyx))
}

/// `N_J(X, Y) = [JX, JY] − [X, Y] − J[JX, Y] − J[X, JY]` at `q`.
pub fn nijenhuis_tensor(
    acs: &ProductACS,
    x: &VectorField,
    y: &VectorField,
    q: &ProductPoint,
    cfg: &BracketConfig,
) -> Result<ProductTangent> {
    let jx = x.clone().j();
    let jy = y.clone().j();
    let pairs = [(&jx, &jy), (x, y), (&jx, y), (x, &jy)];
    let brackets: Vec<ProductTangent> = pairs
        .par_iter()
        .map(|(a, b)| lie_bracket(acs, a, b, q, cfg))
        .collect::<Result<_>>()?;
    let mixed = acs.apply_j(q, &brackets[2].add(&brackets[3]))?;
    Ok(brackets[0].sub(&brackets[1]).sub(&mixed))
}

/// Closed-form `N_J(ξ_{N₁}, η_{N₂}) = −J([ξ, η]_{N₁}, −[ξ, η]_{N₂})`.
pub fn vertical_oracle(
    acs: &ProductACS,
    xi: &AlgebraElement,
    eta: &AlgebraElement,
    q: &ProductPoint,
) -> Result<ProductTangent> {
    let br = acs.group().bracket(xi, eta)?;
    let v1 = acs.factor(Factor::First).spec().generator(&br, &q.p1)?;
    let v2 = acs.factor(Factor::Second).spec().generator(&br, &q.p2)?;
    let w = ProductTangent::new(v1, -v2);
    Ok(acs.apply_j(q, &w)?.scale(-1.0))
}

/// Bracket errors against an exact value for a sequence of step sizes.
pub fn convergence_profile(
    acs: &ProductACS,
    x: &VectorField,
    y: &VectorField,
    q: &ProductPoint,
    exact: &ProductTangent,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    steps
        .iter()
        .map(|&h| {
            let b = lie_bracket(acs, x, y, q, &BracketConfig::with_step(h))?;
            Ok((h, b.sub(exact).norm()))
        })
        .collect()
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn convergence_slope(profile: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = profile.iter().map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
