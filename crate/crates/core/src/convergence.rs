//! Norm of the resolvent difference `D = (H_ε - ζ)⁻¹ - (H - ζ)⁻¹` and
//! convergence rate fits.
//!
//! `D` is compressed to an orthonormal piecewise-Legendre basis of sources
//! supported in `t <= 4`; power iteration on the Gram matrix `⟨Dφ_j, Dφ_i⟩`
//! then gives lower bounds for `‖D‖` from random starts.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{GraphFunction, SampleGrid};
use crate::potential::{PotentialProfile, ProfileSpec};
use crate::resolvent::{resolvent_eps_on, resolvent_limit_on};
use crate::resonance::{classify, DEFAULT_RANK_TOL};
use crate::source::Source;
use crate::vertex::VertexCondition;

/// Support radius of the probe class.
pub const PROBE_RADIUS: f64 = 4.0;
/// Panels per edge and polynomial degree of the probe basis.
pub const PROBE_PANELS: usize = 16;
pub const PROBE_DEGREE: usize = 3;
/// Allowed decrease of a Rayleigh quotient, relative to the largest one.
pub const MONOTONE_SLACK: f64 = 1e-12;

pub fn probe_basis(edge_count: usize) -> Vec<Source> {
    Source::legendre_basis(edge_count, PROBE_RADIUS, PROBE_PANELS, PROBE_DEGREE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub eps: f64,
    pub target: VertexCondition,
    pub gap: f64,
    /// relative increment of the best probe's Rayleigh quotient in the last
    /// iteration
    pub last_increment: f64,
    /// Rayleigh quotients `‖Dx_k‖²` per probe
    pub rayleigh: Vec<Vec<f64>>,
}

/// Hermitian Gram matrix `G_ij = ⟨Dφ_j, Dφ_i⟩`.
fn gram(images: &[GraphFunction]) -> Result<DMatrix<C64>> {
    let m = images.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| images[j].inner(&images[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut g = DMatrix::zeros(m, m);
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    Ok(g)
}

/// Power iteration on a positive semidefinite `g`; returns the Rayleigh
/// quotients of the normalized iterates.
fn power_iteration(g: &DMatrix<C64>, start: DVector<C64>, iters: usize) -> Result<Vec<f64>> {
    let mut x = start;
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let norm = x.norm();
        if norm == 0.0 {
            history.push(0.0);
            break;
        }
        x /= C64::from(norm);
        let gx = g * &x;
        history.push(x.dotc(&gx).re.max(0.0));
        x = gx;
    }
    let top = history.iter().copied().fold(0.0, f64::max);
    for w in history.windows(2) {
        if w[1] < w[0] - MONOTONE_SLACK * top {
            return Err(Error::Numerical(format!(
                "Rayleigh quotients decreased from {:.6e} to {:.6e}",
                w[0], w[1]
            )));
        }
    }
    Ok(history)
}

fn estimate(
    g: &DMatrix<C64>,
    eps: f64,
    target: VertexCondition,
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<GapEstimate> {
    let m = g.nrows();
    let rayleigh = (0..probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(p as u64));
            let start = DVector::from_fn(m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            power_iteration(g, start, iters)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0.0f64;
    let mut last_increment = 0.0;
    for h in &rayleigh {
        let r = h.last().copied().unwrap_or(0.0);
        if r > best || (r == best && best == 0.0) {
            best = r;
            last_increment = match h.len() {
                n if n >= 2 && r > 0.0 => (r - h[n - 2]) / r,
                _ => 0.0,
            };
        }
    }
    Ok(GapEstimate {
        eps,
        target,
        gap: best.sqrt(),
        last_increment,
        rayleigh,
    })
}

fn check_budget(probes: usize, iters: usize) -> Result<()> {
    if probes < 4 || iters < 8 {
        return invalid(format!("need probes >= 4 and iters >= 8, got {probes} and {iters}"));
    }
    Ok(())
}

/// Gap estimates of `H_ε(α, Q)` against each limit operator in `targets`.
/// All targets share the regularized solves and the random starts.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_gaps(
    q: &PotentialProfile,
    alpha: f64,
    eps: f64,
    zeta: C64,
    targets: &[VertexCondition],
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<Vec<GapEstimate>> {
    check_budget(probes, iters)?;
    let basis = probe_basis(q.edge_count());
    let refs: Vec<&Source> = basis.iter().collect();
    let grid = SampleGrid::regularized(q, eps, &refs)?;
    let regular = basis
        .par_iter()
        .map(|f| resolvent_eps_on(q, alpha, eps, zeta, f, &grid))
        .collect::<Result<Vec<_>>>()?;
    targets
        .iter()
        .map(|cond| {
            let images = basis
                .par_iter()
                .zip(&regular)
                .map(|(f, r)| r.sub(&resolvent_limit_on(cond, zeta, f, &grid)?))
                .collect::<Result<Vec<_>>>()?;
            estimate(&gram(&images)?, eps, cond.clone(), probes, iters, seed)
        })
        .collect()
}

/// Gap estimate against the limit operator predicted by [`classify`].
pub fn resolvent_gap(
    q: &PotentialProfile,
    alpha: f64,
    eps: f64,
    zeta: C64,
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<GapEstimate> {
    let cond = classify(alpha, q, DEFAULT_RANK_TOL)?.condition;
    let mut out = resolvent_gaps(q, alpha, eps, zeta, &[cond], probes, iters, seed)?;
    Ok(out.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// root mean square of the log residuals
    pub residual: f64,
    pub points: usize,
    /// `ε` values dropped because their gap was not positive
    pub excluded: Vec<f64>,
}

/// Least-squares line through `(log ε, log gap)`.
pub fn fit_rate(eps: &[f64], gaps: &[f64]) -> Result<RateFit> {
    if eps.len() != gaps.len() {
        return invalid("eps and gap lists differ in length");
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (&e, &g) in eps.iter().zip(gaps) {
        if g > 0.0 && e > 0.0 && g.is_finite() {
            pts.push((e.ln(), g.ln()));
        } else {
            excluded.push(e);
        }
    }
    if pts.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs 4 positive gaps, have {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("rate fit needs distinct eps values");
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
        excluded,
    })
}

fn default_probes() -> usize {
    8
}

fn default_iters() -> usize {
    64
}

fn default_eps() -> Vec<f64> {
    (3..=8).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(rename = "Q", with = "profile_spec")]
    pub q: PotentialProfile,
    pub alpha: f64,
    pub zeta: [f64; 2],
    #[serde(default = "default_eps")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// limits compared against in addition to the classified one
    #[serde(default)]
    pub compare_regimes: Vec<VertexCondition>,
}

mod profile_spec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &PotentialProfile, s: S) -> std::result::Result<S::Ok, S::Error> {
        q.to_spec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<PotentialProfile, D::Error> {
        let spec = ProfileSpec::deserialize(d)?;
        PotentialProfile::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub eps: f64,
    pub regime: String,
    pub gap: Option<f64>,
    pub probe_diag: Option<f64>,
    pub rayleigh: Vec<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSeries {
    pub target: VertexCondition,
    pub rows: Vec<GapRow>,
    /// `None` when fewer than four gaps are positive
    pub fit: Option<RateFit>,
    pub fit_note: Option<String>,
    pub monotone_decay: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub limit: VertexCondition,
    pub multiplicity: usize,
    pub classification_warning: Option<String>,
    /// first entry is the classified limit
    pub series: Vec<RegimeSeries>,
    /// largest `ε` below which the classified limit is closer than the
    /// Dirichlet one at every listed `ε`
    pub discrimination_threshold: Option<f64>,
}

impl ConvergenceStudy {
    pub fn main_series(&self) -> &RegimeSeries {
        &self.series[0]
    }

    pub fn series_for(&self, cond: &VertexCondition) -> Option<&RegimeSeries> {
        self.series.iter().find(|s| &s.target == cond)
    }

    pub fn csv_body(&self) -> String {
        let mut out = String::from("eps,gap,regime,probe_diag\n");
        for s in &self.series {
            for r in &s.rows {
                let gap = r.gap.map_or_else(|| "nan".to_string(), |g| format!("{g:.12e}"));
                let diag = r.probe_diag.map_or_else(|| "failed".to_string(), |d| format!("{d:.3e}"));
                let _ = writeln!(out, "{:.12e},{gap},{},{diag}", r.eps, r.regime);
            }
        }
        out
    }

    /// Writes `study.json` and `gaps.csv` (after `header`) into `dir`.
    pub fn write(&self, dir: &Path, header: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("study.json"), json)?;
        std::fs::write(dir.join("gaps.csv"), format!("{header}{}", self.csv_body()))?;
        Ok(())
    }
}

fn strictly_decreasing(values: &[Option<f64>]) -> bool {
    values.windows(2).all(|w| matches!(w, [Some(a), Some(b)] if b < a))
}

pub fn run_study(config: &StudyConfig) -> Result<ConvergenceStudy> {
    check_budget(config.probes, config.iters)?;
    if config.eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return invalid("eps values must lie in (0, 1)");
    }
    let zeta = C64::new(config.zeta[0], config.zeta[1]);
    if zeta.im == 0.0 {
        return invalid("zeta must be non-real");
    }
    let class = classify(config.alpha, &config.q, DEFAULT_RANK_TOL)?;
    let mut targets = vec![class.condition.clone()];
    for c in &config.compare_regimes {
        c.validate(config.q.edge_count())?;
        if !targets.contains(c) {
            targets.push(c.clone());
        }
    }
    let per_eps: Vec<std::result::Result<Vec<GapEstimate>, String>> = config
        .eps_list
        .par_iter()
        .map(|&eps| {
            resolvent_gaps(&config.q, config.alpha, eps, zeta, &targets, config.probes, config.iters, config.seed)
                .map_err(|e| e.to_string())
        })
        .collect();
    let series: Vec<RegimeSeries> = targets
        .iter()
        .enumerate()
        .map(|(k, target)| {
            let rows: Vec<GapRow> = config
                .eps_list
                .iter()
                .zip(&per_eps)
                .map(|(&eps, r)| match r {
                    Ok(est) => GapRow {
                        eps,
                        regime: target.name().to_string(),
                        gap: Some(est[k].gap),
                        probe_diag: Some(est[k].last_increment),
                        rayleigh: est[k].rayleigh.clone(),
                        error: None,
                    },
                    Err(e) => GapRow {
                        eps,
                        regime: target.name().to_string(),
                        gap: None,
                        probe_diag: None,
                        rayleigh: Vec::new(),
                        error: Some(e.clone()),
                    },
                })
                .collect();
            let gaps: Vec<Option<f64>> = rows.iter().map(|r| r.gap).collect();
            let (eps, vals): (Vec<f64>, Vec<f64>) =
                rows.iter().filter_map(|r| r.gap.map(|g| (r.eps, g))).unzip();
            let (fit, fit_note) = match fit_rate(&eps, &vals) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(format!("slope undefined: {e}"))),
            };
            RegimeSeries {
                target: target.clone(),
                rows,
                fit,
                fit_note,
                monotone_decay: strictly_decreasing(&gaps),
            }
        })
        .collect();
    let discrimination_threshold = series
        .iter()
        .find(|s| s.target == VertexCondition::Dirichlet)
        .filter(|_| class.condition != VertexCondition::Dirichlet)
        .and_then(|dir| discrimination(&config.eps_list, &series[0].rows, &dir.rows));
    Ok(ConvergenceStudy {
        config: config.clone(),
        limit: class.condition,
        multiplicity: class.multiplicity,
        classification_warning: class.warning,
        series,
        discrimination_threshold,
    })
}

/// Largest listed `ε` such that the correct gap is below the wrong one at
/// that `ε` and every smaller listed one.
fn discrimination(eps: &[f64], correct: &[GapRow], wrong: &[GapRow]) -> Option<f64> {
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let mut threshold = None;
    for i in order {
        match (correct[i].gap, wrong[i].gap) {
            (Some(c), Some(w)) if c < w => threshold = Some(eps[i]),
            _ => break,
        }
    }
    threshold
}
