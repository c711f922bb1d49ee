//! Configuration-driven verification campaigns.
//!
//! A campaign runs a list of checks against one gallery instance and
//! produces a [`Report`] plus one CSV row per (check, sample). Every sample
//! draws from its own ChaCha stream derived from `(seed, check, index)`, so
//! results do not depend on thread scheduling and the CSV is byte-identical
//! across runs.
//!
//! Config (JSON):
//!
//! ```json
//! {
//!   "instance": "sphere:1,2",
//!   "checks": ["j-squared", "nijenhuis"],
//!   "samples": 200,
//!   "seed": 42,
//!   "tolerances": { "nijenhuis": 1e-5 },
//!   "mixing": [[1, 1], [1, -1]],
//!   "output": { "dir": "out", "report": "report.json", "csv": "residuals.csv" }
//! }
//! ```
//!
//! Only `instance` is required. `checks` defaults to `["all"]`, which expands
//! to every check applicable to the instance.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::charts::{ChartCoords, ChartMap};
use crate::error::{GeometryError, Result};
use crate::gallery::{by_name, designated_pair, GalleryInstance};
use crate::group::AlgebraElement;
use crate::holomorphy::{check_lattice_claim, format_rational_complex, PsiAction, Rational};
use crate::linalg::{CMat, RVec};
use crate::nijenhuis::{nijenhuis_tensor, vertical_oracle, BracketConfig, VectorField};
use crate::product::{Factor, ProductPoint, ProductTangent};

/// Contract thresholds; any subset can be overridden in the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub j_squared: f64,
    pub nijenhuis: f64,
    /// Lower bound for the designated nonabelian pair.
    pub nonvanishing_floor: f64,
    pub oracle_match: f64,
    pub holomorphy: f64,
    pub equivariance: f64,
    pub lattice: f64,
    /// Lower bound on `‖Ψ_z(q) − q‖` for `z` away from the lattice.
    pub lattice_freeness: f64,
    pub chart_min_singular: f64,
    pub chart_complex_linear: f64,
    pub chart_inversion: f64,
    pub transition: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            j_squared: 1e-9,
            nijenhuis: 1e-5,
            nonvanishing_floor: 0.1,
            oracle_match: 1e-5,
            holomorphy: 1e-8,
            equivariance: 1e-12,
            lattice: 1e-12,
            lattice_freeness: 1e-3,
            chart_min_singular: 1e-3,
            chart_complex_linear: 1e-5,
            chart_inversion: 1e-7,
            transition: 1e-8,
        }
    }
}

impl Thresholds {
    fn validate(&self) -> Result<()> {
        let all = [
            ("j_squared", self.j_squared),
            ("nijenhuis", self.nijenhuis),
            ("nonvanishing_floor", self.nonvanishing_floor),
            ("oracle_match", self.oracle_match),
            ("holomorphy", self.holomorphy),
            ("equivariance", self.equivariance),
            ("lattice", self.lattice),
            ("lattice_freeness", self.lattice_freeness),
            ("chart_min_singular", self.chart_min_singular),
            ("chart_complex_linear", self.chart_complex_linear),
            ("chart_inversion", self.chart_inversion),
            ("transition", self.transition),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeometryError::InvalidConfig(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Directory for relative or defaulted output files.
    pub dir: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn default_checks() -> Vec<String> {
    vec!["all".into()]
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub instance: String,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Thresholds,
    /// Mixing matrix of the `ℂ`-action (row-major 2×2).
    #[serde(default)]
    pub mixing: Option<[[i64; 2]; 2]>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl CampaignConfig {
    pub fn new(instance: &str, checks: &[Check], samples: usize, seed: u64) -> Self {
        CampaignConfig {
            instance: instance.into(),
            checks: checks.iter().map(|c| c.name().to_string()).collect(),
            samples,
            seed,
            tolerances: Thresholds::default(),
            mixing: None,
            output: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| GeometryError::InvalidConfig(format!("config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn mixing(&self) -> [[i64; 2]; 2] {
        self.mixing.unwrap_or(PsiAction::DEFAULT_MIXING)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Check {
    JSquared,
    Nijenhuis,
    Holomorphy,
    Equivariance,
    Lattice,
    Charts,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::JSquared,
        Check::Nijenhuis,
        Check::Holomorphy,
        Check::Equivariance,
        Check::Lattice,
        Check::Charts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::JSquared => "j-squared",
            Check::Nijenhuis => "nijenhuis",
            Check::Holomorphy => "holomorphy",
            Check::Equivariance => "equivariance",
            Check::Lattice => "lattice",
            Check::Charts => "charts",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Check::JSquared => "J^2 = -id on random tangents",
            Check::Nijenhuis => "Nijenhuis tensor: vanishing (abelian) or matching the vertical oracle (nonabelian)",
            Check::Holomorphy => "holomorphy of the C-action: orbit velocities and translations",
            Check::Equivariance => "equivariance of the momentum maps",
            Check::Lattice => "exact period lattice, stabilizer and freeness, lattice claims",
            Check::Charts => "chart map rank, complex-linearity, inversion and transition functions",
        }
    }

    pub fn parse(name: &str) -> Result<Check> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| GeometryError::InvalidConfig(format!("unknown check {name:?}")))
    }

    fn index(self) -> u64 {
        Check::ALL.iter().position(|c| *c == self).expect("listed") as u64
    }

    pub fn applicable(self, inst: &GalleryInstance) -> bool {
        match self {
            Check::Charts => inst.supports_charts(),
            _ => true,
        }
    }
}

/// Resolve the config's check names (expanding `all`), preserving order and
/// dropping duplicates.
pub fn resolve_checks(names: &[String], inst: &GalleryInstance) -> Result<Vec<Check>> {
    let mut out: Vec<Check> = Vec::new();
    for name in names {
        let expanded: Vec<Check> = if name == "all" {
            Check::ALL.into_iter().filter(|c| c.applicable(inst)).collect()
        } else {
            let c = Check::parse(name)?;
            if !c.applicable(inst) {
                return Err(GeometryError::InvalidConfig(format!(
                    "check {name:?} does not apply to {}",
                    inst.name
                )));
            }
            vec![c]
        };
        for c in expanded {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        return Err(GeometryError::InvalidConfig("no checks selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// The sample that violated a contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub check: String,
    pub instance: String,
    pub sample_index: usize,
    pub residual: f64,
    pub threshold: f64,
    pub note: String,
    pub point: Option<Vec<f64>>,
    pub tangent: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub status: Status,
    /// Max residual over upper-bound contracts.
    pub max_residual: f64,
    pub threshold: f64,
    pub sample_count: usize,
    pub wall_time_s: f64,
    pub witness: Option<Witness>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub instance: String,
    pub seed: u64,
    pub status: Status,
    pub checks: Vec<CheckResult>,
    pub wall_time_s: f64,
    pub config: CampaignConfig,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub check: String,
    pub instance: String,
    pub sample_index: usize,
    pub residual: String,
    pub threshold: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    /// `residual ≤ threshold`.
    Upper,
    /// `residual ≥ threshold`.
    Lower,
}

#[derive(Debug, Clone)]
struct Outcome {
    label: &'static str,
    bound: Bound,
    residual: f64,
    threshold: f64,
    note: String,
    point: Option<Vec<f64>>,
    tangent: Option<Vec<f64>>,
}

impl Outcome {
    fn upper(label: &'static str, residual: f64, threshold: f64) -> Self {
        Outcome {
            label,
            bound: Bound::Upper,
            residual,
            threshold,
            note: String::new(),
            point: None,
            tangent: None,
        }
    }

    fn lower(label: &'static str, residual: f64, threshold: f64) -> Self {
        Outcome {
            bound: Bound::Lower,
            ..Self::upper(label, residual, threshold)
        }
    }

    fn at(mut self, q: &ProductPoint) -> Self {
        self.point = Some(q.to_flat());
        self
    }

    fn with_tangent(mut self, w: &ProductTangent) -> Self {
        self.tangent = Some(w.to_flat());
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = n.into();
        self
    }

    fn pass(&self) -> bool {
        match self.bound {
            Bound::Upper => self.residual <= self.threshold,
            Bound::Lower => self.residual >= self.threshold,
        }
    }
}

/// A finished campaign: the report and its CSV rows.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub report: Report,
    pub rows: Vec<ResidualRow>,
}

fn sample_rng(seed: u64, check: Check, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((check.index() << 48) | index as u64);
    rng
}

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn unit_algebra(inst: &GalleryInstance, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let xi = inst.acs.group().random_algebra(rng);
    let n = xi.norm();
    xi.scale(1.0 / n)
}

fn unit_direction(inst: &GalleryInstance, f: Factor, rng: &mut ChaCha8Rng) -> CMat {
    let u = inst.acs.factor(f).ambient().random_element(rng);
    let n = crate::linalg::cnorm(&u);
    u / num_complex::Complex64::new(n, 0.0)
}

fn random_factor(rng: &mut ChaCha8Rng) -> Factor {
    if rng.random::<bool>() {
        Factor::First
    } else {
        Factor::Second
    }
}

/// Run all samples of `f` in parallel, each with its own stream.
fn per_sample<F>(cfg: &CampaignConfig, check: Check, f: F) -> Result<Vec<Vec<Outcome>>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Vec<Outcome>> + Sync,
{
    (0..cfg.samples)
        .into_par_iter()
        .map(|i| f(i, &mut sample_rng(cfg.seed, check, i)))
        .collect()
}

fn j_squared(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let tol = cfg.tolerances.j_squared;
    let out = per_sample(cfg, Check::JSquared, |_, rng| {
        let q = inst.acs.sample(rng);
        let w = inst.acs.random_tangent(&q, rng)?;
        let r = inst.acs.j_squared_residual(&q, &w)?;
        Ok(vec![Outcome::upper("j-squared", r, tol).at(&q).with_tangent(&w)])
    })
    .map_err(|e| e.in_module("product"))?;
    Ok((out, json!({ "relative": true })))
}

fn equivariance(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let tol = cfg.tolerances.equivariance;
    let out = per_sample(cfg, Check::Equivariance, |i, rng| {
        let f = if i % 2 == 0 { Factor::First } else { Factor::Second };
        let level = inst.acs.factor(f);
        let a = level.ambient().random_element(rng);
        let u = level.group().random_element(rng);
        let r = level.moment().check_equivariance(&a, &u)?;
        let mut o = Outcome::upper("equivariance", r, tol).note(format!("factor {}", f.index() + 1));
        o.point = Some(crate::ambient::realify(&a).iter().copied().collect());
        Ok(vec![o])
    })
    .map_err(|e| e.in_module("level"))?;
    Ok((out, json!({ "points": "Gaussian ambient elements, both factors alternating" })))
}

fn nijenhuis(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let t = cfg.tolerances;
    let acs = &inst.acs;
    let bracket = BracketConfig::default();
    let horizontal = |f: Factor, rng: &mut ChaCha8Rng| VectorField::Horizontal {
        u: unit_direction(inst, f, rng),
        factor: f,
    };
    let vertical = |f: Factor, rng: &mut ChaCha8Rng| VectorField::generator(unit_algebra(inst, rng), f);

    if inst.is_abelian() {
        let out = per_sample(cfg, Check::Nijenhuis, |i, rng| {
            let q = acs.sample(rng);
            use Factor::{First as F1, Second as F2};
            let (x, y, kind) = match i % 7 {
                0 => (horizontal(F1, rng), horizontal(F2, rng), "H1-H2"),
                1 => (horizontal(F1, rng), vertical(F1, rng), "H1-V1"),
                2 => (horizontal(F1, rng), vertical(F2, rng), "H1-V2"),
                3 => (horizontal(F2, rng), vertical(F1, rng), "H2-V1"),
                4 => (vertical(F1, rng), vertical(F2, rng), "V1-V2"),
                5 => (horizontal(F2, rng), horizontal(F2, rng), "H2-H2"),
                _ => (
                    horizontal(F1, rng).plus(vertical(F2, rng)),
                    horizontal(F2, rng).j().plus(vertical(F1, rng)),
                    "mixed",
                ),
            };
            let n = nijenhuis_tensor(acs, &x, &y, &q, &bracket)?;
            Ok(vec![Outcome::upper("nijenhuis", n.norm(), t.nijenhuis).at(&q).note(kind)])
        })
        .map_err(|e| e.in_module("nijenhuis"))?;
        return Ok((out, json!({ "mode": "vanishing" })));
    }

    let k = match acs.group() {
        crate::group::LieGroup::Unitary { k } => k,
        _ => unreachable!("nonabelian groups are unitary"),
    };
    let (xi, eta) = designated_pair(k);
    let (xi, eta) = (AlgebraElement::Unitary(xi), AlgebraElement::Unitary(eta));
    let out = per_sample(cfg, Check::Nijenhuis, |i, rng| {
        let q = acs.sample(rng);
        let mut rows = Vec::new();
        if i == 0 {
            let x = VectorField::generator(xi.clone(), Factor::First);
            let y = VectorField::generator(eta.clone(), Factor::Second);
            let n = nijenhuis_tensor(acs, &x, &y, &q, &bracket)?;
            let oracle = vertical_oracle(acs, &xi, &eta, &q)?;
            let note = "designated pair xi=[[0,1],[-1,0]], eta=[[0,i],[i,0]]";
            rows.push(Outcome::lower("nijenhuis:nonvanishing", n.norm(), t.nonvanishing_floor).at(&q).note(note));
            rows.push(Outcome::upper("nijenhuis:oracle", n.sub(&oracle).norm(), t.oracle_match).at(&q).note(note));
        }
        if i % 2 == 0 {
            let (fh, fv) = (random_factor(rng), random_factor(rng));
            let x = horizontal(fh, rng);
            let y = vertical(fv, rng);
            let n = nijenhuis_tensor(acs, &x, &y, &q, &bracket)?;
            let note = format!("H{}-V{}", fh.index() + 1, fv.index() + 1);
            rows.push(Outcome::upper("nijenhuis", n.norm(), t.nijenhuis).at(&q).note(note));
        } else {
            let (a, b) = (unit_algebra(inst, rng), unit_algebra(inst, rng));
            let x = VectorField::generator(a.clone(), Factor::First);
            let y = VectorField::generator(b.clone(), Factor::Second);
            let n = nijenhuis_tensor(acs, &x, &y, &q, &bracket)?;
            let oracle = vertical_oracle(acs, &a, &b, &q)?;
            rows.push(Outcome::upper("nijenhuis:oracle", n.sub(&oracle).norm(), t.oracle_match).at(&q).note("V1-V2"));
        }
        Ok(rows)
    })
    .map_err(|e| e.in_module("nijenhuis"))?;
    let norm = out[0]
        .iter()
        .find(|o| o.label == "nijenhuis:nonvanishing")
        .map(|o| o.residual);
    Ok((
        out,
        json!({
            "mode": "nonvanishing",
            "designated_pair": { "xi": "[[0,1],[-1,0]]", "eta": "[[0,i],[i,0]]" },
            "designated_norm": norm,
        }),
    ))
}

fn holomorphy(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let tol = cfg.tolerances.holomorphy;
    let psi = PsiAction::new(&inst.acs, cfg.mixing()).map_err(|e| e.in_module("holomorphy"))?;
    let out = per_sample(cfg, Check::Holomorphy, |_, rng| {
        let q = inst.acs.sample(rng);
        let z = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let r1 = psi.check_orbit_holomorphy(&inst.acs, &q, z)?;
        let w = inst.acs.random_tangent(&q, rng)?;
        let r2 = psi.translation_residual(&inst.acs, z, &q, &w)?;
        let note = format!("z={:e}{:+e}i", z.0, z.1);
        Ok(vec![
            Outcome::upper("holomorphy:orbit", r1, tol).at(&q).note(note.clone()),
            Outcome::upper("holomorphy:translation", r2, tol).at(&q).with_tangent(&w).note(note),
        ])
    })
    .map_err(|e| e.in_module("holomorphy"))?;
    Ok((
        out,
        json!({
            "mixing": psi.mixing,
            "holomorphic_mixing": psi.is_holomorphic_mixing(),
        }),
    ))
}

fn rational_str(r: Rational) -> String {
    r.to_string()
}

fn lattice(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let t = cfg.tolerances;
    let psi = PsiAction::new(&inst.acs, cfg.mixing()).map_err(|e| e.in_module("holomorphy"))?;
    let lat = psi.period_lattice().map_err(|e| e.in_module("holomorphy"))?;
    let det = psi.det();
    let identity = lat.covolume * Rational::from_integer(det.abs()) == Rational::from_integer(1);
    let half = check_lattice_claim(psi.mixing, 2)?;
    let scaled = check_lattice_claim(psi.mixing, 0)?;
    let gens = lat.generators_f64();
    let out = per_sample(cfg, Check::Lattice, |i, rng| {
        let q = inst.acs.sample(rng);
        let mut stab = 0.0f64;
        for g in gens {
            stab = stab.max(psi.apply(&inst.acs, g, &q)?.distance(&q));
        }
        let mut z = (rng.random::<f64>(), rng.random::<f64>());
        while lat.distance_to_lattice(z) < 0.05 {
            z = (rng.random::<f64>(), rng.random::<f64>());
        }
        let moved = psi.apply(&inst.acs, z, &q)?.distance(&q);
        let mut rows = vec![
            Outcome::upper("lattice:stabilizer", stab, t.lattice).at(&q),
            Outcome::lower("lattice:free", moved, t.lattice_freeness).at(&q).note(format!("z={:e}{:+e}i", z.0, z.1)),
        ];
        if i == 0 {
            let r = if identity { 0.0 } else { 1.0 };
            rows.push(Outcome::upper("lattice:covolume", r, t.lattice).note("covolume * |det A| == 1 (exact)"));
        }
        Ok(rows)
    })
    .map_err(|e| e.in_module("holomorphy"))?;
    let verdict = |c: &crate::holomorphy::LatticeClaim, label: &str| {
        let w = c.witness.map(format_rational_complex);
        let text = if c.equal {
            format!("{label} equals the period lattice")
        } else if c.contained {
            format!("{label} contained in the period lattice")
        } else {
            format!("{label} NOT contained, witness {}", w.clone().unwrap_or_default())
        };
        json!({
            "denominator": c.denominator,
            "contained": c.contained,
            "equal": c.equal,
            "witness": w,
            "verdict": text,
        })
    };
    Ok((
        out,
        json!({
            "mixing": psi.mixing,
            "det": det,
            "generators": lat.generators.map(format_rational_complex),
            "covolume": rational_str(lat.covolume),
            "covolume_times_det_is_one": identity,
            "claim_half_lattice": verdict(&half, "(Z/2)+i(Z/2)"),
            "claim_det_lattice": verdict(&scaled, &format!("(Z/{0})+i(Z/{0})", scaled.denominator)),
        }),
    ))
}

/// Second chart base: shifted along a horizontal direction and rotated by
/// the circle, so that the two slices differ.
fn shifted_bases(inst: &GalleryInstance, chart: &ChartMap) -> Result<ProductPoint> {
    let base = chart.base();
    let mut pts = Vec::with_capacity(2);
    for f in [Factor::First, Factor::Second] {
        let s = &chart.slices[f.index()];
        let level = inst.acs.factor(f);
        let p = base.get(f);
        let dir = if s.dim() == 0 {
            CMat::zeros(p.nrows(), p.ncols())
        } else {
            s.direction(&RVec::from_fn(s.dim(), |i, _| if i == 0 { 0.1 } else { 0.0 }))?
        };
        let moved = level.retract(p, &dir)?;
        pts.push(level.spec().flow(&chart.psi.circle, 0.3, &moved)?);
    }
    let p2 = pts.pop().expect("two factors");
    let p1 = pts.pop().expect("two factors");
    Ok(ProductPoint::new(p1, p2))
}

fn charts(inst: &GalleryInstance, cfg: &CampaignConfig) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    let t = cfg.tolerances;
    let acs = &inst.acs;
    let setup = || -> Result<_> {
        let mut rng = sample_rng(cfg.seed, Check::Charts, usize::MAX >> 20);
        let psi = PsiAction::new(acs, cfg.mixing())?;
        let base = acs.sample(&mut rng);
        let chart = ChartMap::new(acs, psi.clone(), &base, 0.5)?;
        let other = ChartMap::new(acs, psi, &shifted_bases(inst, &chart)?, 0.5)?;
        let diffeo = chart.check_local_diffeo(acs, 3, &mut rng)?;
        let dir = |d: usize| RVec::from_fn(d, |i, _| if i % 2 == 0 { 1.0 } else { 0.5 });
        let (d1, d2) = (chart.slices[0].dim(), chart.slices[1].dim());
        let transition = if d1 > 0 && d2 > 0 {
            Some(chart.transition(&other, acs, (&dir(d1), &dir(d2)), 0.1, 5, 10, &mut rng)?)
        } else {
            None
        };
        Ok((chart, diffeo, transition))
    };
    let (chart, diffeo, transition) = setup().map_err(|e| e.in_module("charts"))?;
    let n = chart.domain_dim();
    let mut out = per_sample(cfg, Check::Charts, |i, rng| {
        let mut x = chart.random_coords(rng, 0.5);
        let off = x.clone();
        x.t1.fill(0.0);
        x.t2.fill(0.0);
        let d = RVec::from_fn(n, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)).normalize();
        let r = chart.complex_linear_residual(acs, &x, &d)?;
        let q = chart.apply(acs, &off)?;
        let back: ChartCoords = chart.invert(acs, &q)?;
        let inv = (&back.t1 - &off.t1)
            .norm()
            .max((&back.t2 - &off.t2).norm())
            .max(chart.lattice.distance_to_lattice((back.z.0 - off.z.0, back.z.1 - off.z.1)));
        let mut rows = vec![
            Outcome::upper("charts:complex-linear", r, t.chart_complex_linear).note(format!("z={:e}{:+e}i", x.z.0, x.z.1)),
            Outcome::upper("charts:inversion", inv, t.chart_inversion).at(&q),
        ];
        if i == 0 {
            rows.insert(
                0,
                Outcome::lower("charts:local-diffeo", diffeo.min_singular_at_base, t.chart_min_singular)
                    .at(&chart.base())
                    .note(format!("rank {} of {}", diffeo.rank_at_base, diffeo.expected_rank)),
            );
        }
        Ok(rows)
    })
    .map_err(|e| e.in_module("charts"))?;
    if let Some(tr) = &transition {
        for (k, s) in tr.samples.iter().enumerate() {
            let r = s.roundtrip.max(s.g_independence);
            let o = Outcome::upper("charts:transition", r, t.transition)
                .note(format!("grid s={:e} r={:e} h={:e}{:+e}i", s.s, s.r, s.h.0, s.h.1));
            if k < out.len() {
                out[k].push(o);
            } else {
                out.push(vec![o]);
            }
        }
    }
    let details = json!({
        "local_diffeo": diffeo,
        "transition": transition.as_ref().map(|tr| json!({
            "grid": "5x5",
            "max_roundtrip": tr.max_roundtrip,
            "max_g_independence": tr.max_g_independence,
            "max_neighbor_jump": tr.max_neighbor_jump,
            "grid_spacing": tr.grid_spacing,
            "lipschitz_estimate": tr.lipschitz_estimate,
            "continuous": tr.continuous,
        })),
        "complex_linear_domain": "zero section t=0, random z",
    });
    Ok((out, details))
}

fn run_check(inst: &GalleryInstance, cfg: &CampaignConfig, check: Check) -> Result<(Vec<Vec<Outcome>>, serde_json::Value)> {
    match check {
        Check::JSquared => j_squared(inst, cfg),
        Check::Nijenhuis => nijenhuis(inst, cfg),
        Check::Holomorphy => holomorphy(inst, cfg),
        Check::Equivariance => equivariance(inst, cfg),
        Check::Lattice => lattice(inst, cfg),
        Check::Charts => charts(inst, cfg),
    }
}

fn primary_threshold(check: Check, t: &Thresholds) -> f64 {
    match check {
        Check::JSquared => t.j_squared,
        Check::Nijenhuis => t.nijenhuis,
        Check::Holomorphy => t.holomorphy,
        Check::Equivariance => t.equivariance,
        Check::Lattice => t.lattice,
        Check::Charts => t.chart_complex_linear,
    }
}

fn assemble(
    inst_name: &str,
    check: Check,
    cfg: &CampaignConfig,
    outcomes: &[Vec<Outcome>],
    details: serde_json::Value,
    elapsed: f64,
    rows: &mut Vec<ResidualRow>,
) -> CheckResult {
    let mut max_residual = 0.0f64;
    let mut witness = None;
    for (i, sample) in outcomes.iter().enumerate() {
        for o in sample {
            let pass = o.pass();
            rows.push(ResidualRow {
                check: o.label.to_string(),
                instance: inst_name.to_string(),
                sample_index: i,
                residual: fmt_num(o.residual),
                threshold: fmt_num(o.threshold),
                pass,
            });
            if o.bound == Bound::Upper {
                max_residual = max_residual.max(o.residual);
            }
            if !pass && witness.is_none() {
                witness = Some(Witness {
                    check: o.label.to_string(),
                    instance: inst_name.to_string(),
                    sample_index: i,
                    residual: o.residual,
                    threshold: o.threshold,
                    note: o.note.clone(),
                    point: o.point.clone(),
                    tangent: o.tangent.clone(),
                });
            }
        }
    }
    CheckResult {
        check: check.name().to_string(),
        status: if witness.is_none() { Status::Pass } else { Status::Fail },
        max_residual,
        threshold: primary_threshold(check, &cfg.tolerances),
        sample_count: outcomes.len(),
        wall_time_s: elapsed,
        witness,
        details,
    }
}

/// Run every selected check. Numeric failures are reported, not raised;
/// errors are reserved for invalid configs and constructor failures.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.tolerances.validate()?;
    if cfg.samples == 0 {
        return Err(GeometryError::InvalidConfig("samples must be positive".into()));
    }
    let start = Instant::now();
    let inst = by_name(&cfg.instance)?;
    let checks = resolve_checks(&cfg.checks, &inst)?;
    let probe = match inst.convergence_probe() {
        Some(p) => Some(p?),
        None => None,
    };
    let mut rows = Vec::new();
    let mut results = Vec::with_capacity(checks.len());
    for check in checks {
        let t0 = Instant::now();
        let (outcomes, mut details) = run_check(&inst, cfg, check)?;
        let mut result = assemble(&inst.name, check, cfg, &outcomes, serde_json::Value::Null, 0.0, &mut rows);
        if let Some(p) = &probe {
            let (po, _) = run_check(p, cfg, check)?;
            let pr = assemble(&p.name, check, cfg, &po, serde_json::Value::Null, 0.0, &mut rows);
            details["convergence_probe"] = json!({
                "instance": p.name,
                "max_residual": pr.max_residual,
                "status": pr.status,
            });
            if result.witness.is_none() {
                result.witness = pr.witness;
            }
        }
        result.status = if result.witness.is_none() { Status::Pass } else { Status::Fail };
        result.details = details;
        result.wall_time_s = t0.elapsed().as_secs_f64();
        results.push(result);
    }
    let status = if results.iter().all(|r| r.status == Status::Pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(Campaign {
        report: Report {
            instance: inst.name.clone(),
            seed: cfg.seed,
            status,
            checks: results,
            wall_time_s: start.elapsed().as_secs_f64(),
            config: cfg.clone(),
        },
        rows,
    })
}

impl Campaign {
    pub fn passed(&self) -> bool {
        self.report.status == Status::Pass
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| GeometryError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report)?)
    }

    /// Output paths: explicit config paths (relative ones resolved against
    /// `output.dir`, else `default_dir`), or `<instance>-report.json` /
    /// `<instance>-residuals.csv`.
    pub fn output_paths(&self, default_dir: &Path) -> (PathBuf, PathBuf) {
        let out = &self.report.config.output;
        let dir = out.dir.clone().unwrap_or_else(|| default_dir.to_path_buf());
        let stem: String = self
            .report
            .instance
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        let resolve = |p: &Option<PathBuf>, default: String| match p {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => dir.join(p),
            None => dir.join(default),
        };
        (
            resolve(&out.report, format!("{stem}-report.json")),
            resolve(&out.csv, format!("{stem}-residuals.csv")),
        )
    }

    /// Write the report and CSV; returns their paths.
    pub fn write(&self, default_dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let (report, csv_path) = self.output_paths(default_dir);
        for p in [&report, &csv_path] {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
        }
        std::fs::write(&report, self.report_json()?)?;
        std::fs::write(&csv_path, self.csv_string()?)?;
        Ok((report, csv_path))
    }
}
