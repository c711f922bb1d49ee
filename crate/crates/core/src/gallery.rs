//! Named product instances.
//!
//! | name                     | `N₁ × N₂`                                | group            |
//! |--------------------------|------------------------------------------|------------------|
//! | `sphere:n,m`             | `S^{2n+1} × S^{2m+1}`                    | Hopf circle      |
//! | `stiefel:k,n`            | `V_k(ℂⁿ) × V_k(ℂⁿ)`                      | `U(k)`           |
//! | `stiefel-torus:k,n,p`    | torus level sets through `V_k(ℂⁿ)`       | `T^p ⊂ U(k)`     |
//! | `calabi-eckmann:n[,d]`   | `S^{2n+1} × S^{2d−1}` (truncation of a Hilbert sphere) | Hopf circle |
//!
//! For `stiefel-torus`, column `c` of `A ∈ Hom(ℂᵏ, ℂⁿ)` is rotated by torus
//! factor `min(c, p − 1)`; `N` is the level set where every block of
//! columns has squared norm equal to its column count. It contains the
//! Stiefel manifold, where points are sampled. (The torus acting on
//! `V_k(ℂⁿ)` itself has a horizontal space that is not `i`-invariant.)
//!
//! The Calabi–Eckmann products with an infinite-dimensional factor are not
//! Kähler; only finite truncations are represented here, together with a
//! probe at twice the truncation dimension.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ambient::{AmbientSpace, ManifoldKind};
use crate::error::{GeometryError, Result};
use crate::group::{DualElement, GroupSpec};
use crate::level::{stiefel, unit_sphere, LevelSet, MomentMap};
use crate::linalg::{CMat, RVec};
use crate::product::ProductACS;

/// Default truncation (complex dimension) of the Hilbert-sphere factor.
pub const DEFAULT_TRUNCATION: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sphere { n: usize, m: usize },
    Stiefel { k: usize, n: usize },
    StiefelTorus { k: usize, n: usize, p: usize },
    CalabiEckmann { n: usize, truncation: usize },
}

#[derive(Debug, Clone)]
pub struct GalleryInstance {
    pub name: String,
    pub family: Family,
    pub acs: ProductACS,
}

impl GalleryInstance {
    pub fn is_abelian(&self) -> bool {
        self.acs.group().is_abelian()
    }

    /// Real dimensions `(dim N₁, dim N₂, dim N₁ × N₂)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let d1 = self.acs.factor(crate::product::Factor::First).dim();
        let d2 = self.acs.factor(crate::product::Factor::Second).dim();
        (d1, d2, d1 + d2)
    }

    /// Charts need the group to be a circle.
    pub fn supports_charts(&self) -> bool {
        self.acs.group().dim() == 1
    }

    /// The same construction at twice the truncation dimension.
    pub fn convergence_probe(&self) -> Option<Result<GalleryInstance>> {
        match self.family {
            Family::CalabiEckmann { n, truncation } => Some(make_calabi_eckmann(n, 2 * truncation)),
            _ => None,
        }
    }
}

/// `S^{2n+1} × S^{2m+1}` with the Hopf circle on both factors.
pub fn make_sphere_product(n: usize, m: usize) -> Result<GalleryInstance> {
    let acs = ProductACS::new(unit_sphere(n + 1)?, unit_sphere(m + 1)?)?;
    Ok(GalleryInstance {
        name: format!("sphere:{n},{m}"),
        family: Family::Sphere { n, m },
        acs,
    })
}

/// `V_k(ℂⁿ) × V_k(ℂⁿ)` with `U(k)`.
pub fn make_stiefel_product(k: usize, n: usize) -> Result<GalleryInstance> {
    if k == 0 || n < k {
        return Err(GeometryError::InvalidInstance(format!(
            "stiefel needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let acs = ProductACS::new(stiefel(k, n)?, stiefel(k, n)?)?;
    Ok(GalleryInstance {
        name: format!("stiefel:{k},{n}"),
        family: Family::Stiefel { k, n },
        acs,
    })
}

fn torus_level(k: usize, n: usize, p: usize) -> Result<LevelSet> {
    let ambient = AmbientSpace::Matrix { k, n };
    let weights: Vec<Vec<i64>> = (0..k * n)
        .map(|j| {
            let block = (j / n).min(p - 1);
            (0..p).map(|a| i64::from(a == block)).collect()
        })
        .collect();
    let moment = MomentMap::centered(GroupSpec::Torus { weights }, ambient)?;
    let level = RVec::from_fn(p, |a, _| {
        let columns = if a + 1 < p { 1 } else { k - (p - 1) };
        PI * columns as f64
    });
    LevelSet::new(moment, DualElement::Torus(level))?.with_sampler(ManifoldKind::Stiefel { scale: 1.0 })
}

/// Rank-`p` torus in `U(k)` acting on `Hom(ℂᵏ, ℂⁿ)`, on both factors.
pub fn make_torus_in_stiefel(k: usize, n: usize, p: usize) -> Result<GalleryInstance> {
    if p == 0 || p > k || k > n {
        return Err(GeometryError::InvalidInstance(format!(
            "stiefel-torus needs 1 <= p <= k <= n, got k={k}, n={n}, p={p}"
        )));
    }
    let acs = ProductACS::new(torus_level(k, n, p)?, torus_level(k, n, p)?)?;
    Ok(GalleryInstance {
        name: format!("stiefel-torus:{k},{n},{p}"),
        family: Family::StiefelTorus { k, n, p },
        acs,
    })
}

/// `S^{2n+1}` times the unit sphere of `ℂ^truncation`.
pub fn make_calabi_eckmann(n: usize, truncation: usize) -> Result<GalleryInstance> {
    if truncation == 0 {
        return Err(GeometryError::InvalidInstance("truncation must be positive".into()));
    }
    let acs = ProductACS::new(unit_sphere(n + 1)?, unit_sphere(truncation)?)?;
    Ok(GalleryInstance {
        name: format!("calabi-eckmann:{n},{truncation}"),
        family: Family::CalabiEckmann { n, truncation },
        acs,
    })
}

fn parse_args(s: &str, name: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| {
                GeometryError::InvalidInstance(format!("bad parameter {t:?} in {name:?}"))
            })
        })
        .collect()
}

/// Build an instance from its name, e.g. `"stiefel-torus:2,4,1"`.
pub fn by_name(name: &str) -> Result<GalleryInstance> {
    let (family, args) = name
        .split_once(':')
        .ok_or_else(|| GeometryError::InvalidInstance(format!("unknown instance {name:?}")))?;
    let args = parse_args(args, name)?;
    let wrong = || GeometryError::InvalidInstance(format!("wrong parameter count in {name:?}"));
    let inst = match (family, args.as_slice()) {
        ("sphere", [n, m]) => make_sphere_product(*n, *m),
        ("stiefel", [k, n]) => make_stiefel_product(*k, *n),
        ("stiefel-torus", [k, n, p]) => make_torus_in_stiefel(*k, *n, *p),
        ("calabi-eckmann", [n]) => make_calabi_eckmann(*n, DEFAULT_TRUNCATION),
        ("calabi-eckmann", [n, d]) => make_calabi_eckmann(*n, *d),
        ("sphere" | "stiefel" | "stiefel-torus" | "calabi-eckmann", _) => Err(wrong()),
        _ => Err(GeometryError::InvalidInstance(format!("unknown instance family {family:?}"))),
    };
    inst.map_err(|e| e.in_module("gallery"))
}

/// Name patterns accepted by [`by_name`], with a short description.
pub fn families() -> Vec<(&'static str, &'static str)> {
    vec![
        ("sphere:n,m", "S^(2n+1) x S^(2m+1), Hopf circle on both factors"),
        ("stiefel:k,n", "V_k(C^n) x V_k(C^n), U(k) acting by A -> A u^dagger"),
        ("stiefel-torus:k,n,p", "rank-p torus in U(k) on Hom(C^k,C^n) level sets, 1 <= p <= k <= n"),
        ("calabi-eckmann:n[,d]", "S^(2n+1) x S^(2d-1), truncated Hilbert sphere (d defaults to 25)"),
    ]
}

/// The `U(2)` pair `ξ = [[0, 1], [−1, 0]]`, `η = [[0, i], [i, 0]]`, embedded
/// in the top-left block of `𝔲(k)`.
pub fn designated_pair(k: usize) -> (CMat, CMat) {
    let mut xi = CMat::zeros(k, k);
    let mut eta = CMat::zeros(k, k);
    if k >= 2 {
        xi[(0, 1)] = Complex64::new(1.0, 0.0);
        xi[(1, 0)] = Complex64::new(-1.0, 0.0);
        eta[(0, 1)] = Complex64::new(0.0, 1.0);
        eta[(1, 0)] = Complex64::new(0.0, 1.0);
    }
    (xi, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::Factor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions() {
        assert_eq!(by_name("sphere:1,2").unwrap().dims(), (3, 5, 8));
        assert_eq!(by_name("sphere:0,0").unwrap().dims(), (1, 1, 2));
        assert_eq!(by_name("stiefel:2,4").unwrap().dims(), (12, 12, 24));
        assert_eq!(by_name("stiefel:2,2").unwrap().dims(), (4, 4, 8));
        assert_eq!(by_name("stiefel-torus:2,4,2").unwrap().dims(), (14, 14, 28));
        assert_eq!(by_name("stiefel-torus:2,4,1").unwrap().dims(), (15, 15, 30));
        assert_eq!(by_name("calabi-eckmann:1").unwrap().dims(), (3, 49, 52));
        assert_eq!(by_name("sphere:1,10").unwrap().dims(), (3, 21, 24));
    }

    #[test]
    fn invalid_names() {
        for bad in ["torus:1", "sphere:1", "stiefel:3,2", "stiefel-torus:2,4,3", "sphere:a,b", "sphere"] {
            assert!(by_name(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn every_instance_passes_basic_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for name in [
            "sphere:1,2",
            "sphere:0,0",
            "stiefel:2,4",
            "stiefel:1,3",
            "stiefel:2,2",
            "stiefel-torus:2,4,1",
            "stiefel-torus:2,4,2",
            "stiefel-torus:1,3,1",
            "calabi-eckmann:1,6",
        ] {
            let inst = by_name(name).unwrap();
            let q = inst.acs.sample(&mut rng);
            for f in [Factor::First, Factor::Second] {
                let level = inst.acs.factor(f);
                assert!(level.residual(q.get(f)).unwrap() <= 1e-10, "{name}");
                let s = level.split(q.get(f)).unwrap();
                assert_eq!(s.dim_vertical(), inst.acs.group().dim());
                assert_eq!(s.dim_vertical() + s.dim_horizontal(), level.dim());
            }
            assert!(inst.acs.check_j_squared(&q, 10, &mut rng).unwrap() <= 1e-9, "{name}");
        }
    }

    #[test]
    fn stiefel_torus_points_lie_on_stiefel() {
        let inst = by_name("stiefel-torus:2,4,2").unwrap();
        let q = inst.acs.sample(&mut ChaCha8Rng::seed_from_u64(2));
        let g = q.p1.adjoint() * &q.p1;
        assert!((g - CMat::identity(2, 2)).iter().all(|z| z.norm() <= 1e-12));
        assert!(inst.is_abelian());
        assert!(!by_name("stiefel:2,4").unwrap().is_abelian());
        assert!(by_name("stiefel-torus:2,4,1").unwrap().supports_charts());
    }

    #[test]
    fn calabi_eckmann_probe_doubles_truncation() {
        let inst = by_name("calabi-eckmann:1,4").unwrap();
        let probe = inst.convergence_probe().unwrap().unwrap();
        assert_eq!(probe.family, Family::CalabiEckmann { n: 1, truncation: 8 });
        assert!(by_name("sphere:1,1").unwrap().convergence_probe().is_none());
    }
}
