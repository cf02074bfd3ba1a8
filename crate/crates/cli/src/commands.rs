use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stargraph::approximation::verify_bounds;
use stargraph::convergence::{run_study, StudyConfig};
use stargraph::resonance::{classify, find_resonances};
use stargraph::scattering::{scattering_eps, scattering_limit};
use stargraph::{Source, VertexCondition};

use crate::config::{ExperimentConfig, PanelConfig, Subcommand};
use crate::Failure;

/// Two comment lines: the reproducible part, then the timestamp.
fn header(cfg: &ExperimentConfig, cmd: &str) -> String {
    format!(
        "# stargraph {} {cmd} config_sha256={} seed={}\n# generated {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        cfg.seed,
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    )
}

#[derive(Serialize)]
struct Provenance<'a> {
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    config: &'a ExperimentConfig,
}

fn provenance<'a>(cfg: &'a ExperimentConfig, command: &'a str) -> Provenance<'a> {
    Provenance {
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: cfg.hash(),
        config: cfg,
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, Failure> {
    std::fs::write(&path, text).map_err(|e| Failure::Numerical(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

fn write_json(path: PathBuf, value: &impl Serialize) -> Result<PathBuf, Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    write(path, &text)
}

/// The configured regime, or the one predicted by the resonance test.
fn limit(cfg: &ExperimentConfig) -> Result<VertexCondition, Failure> {
    if let Some(c) = &cfg.regime {
        return Ok(c.clone());
    }
    let q = cfg.profile()?;
    let c = classify(cfg.alpha.unwrap_or_default(), &q, cfg.rank_tol)?;
    if let Some(w) = &c.warning {
        eprintln!("stargraph: warning: {w}");
    }
    Ok(c.condition)
}

pub fn resonances(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let q = cfg.profile()?;
    let [lo, hi] = cfg.alpha_range.expect("validated");
    let found = find_resonances(&q, lo, hi, cfg.scan_step, cfg.rank_tol)?;
    let n = q.edge_count();
    let mut csv = header(cfg, "resonances");
    csv += "alpha,multiplicity";
    for i in 1..=n {
        let _ = write!(csv, ",theta_{i}");
    }
    csv += ",det_residual,flag\n";
    for r in &found {
        let _ = write!(csv, "{:.12e},{}", r.alpha, r.multiplicity);
        for i in 0..n {
            match &r.theta {
                Some(t) => {
                    let _ = write!(csv, ",{:.12e}", t[i]);
                }
                None => csv.push(','),
            }
        }
        let flag = serde_json::to_value(r.flag).map_err(|e| Failure::Numerical(e.to_string()))?;
        let _ = writeln!(csv, ",{:.3e},{}", r.det_residual, flag.as_str().unwrap_or_default());
    }
    #[derive(Serialize)]
    struct Artifact<'a> {
        provenance: Provenance<'a>,
        resonances: &'a [stargraph::resonance::ResonanceReport],
    }
    Ok(vec![
        write(out.join("resonances.csv"), &csv)?,
        write_json(
            out.join("resonances.json"),
            &Artifact {
                provenance: provenance(cfg, "resonances"),
                resonances: &found,
            },
        )?,
    ])
}

pub fn scatter(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let q = cfg.profile()?;
    let alpha = cfg.alpha.expect("validated");
    let cond = limit(cfg)?;
    let n = q.edge_count();
    let mut csv = header(cfg, "scatter");
    csv += "eps,k,regime,gap,unitarity_defect";
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(csv, ",s{i}{j}_re,s{i}{j}_im");
        }
    }
    csv.push('\n');
    for eps in cfg.eps(Subcommand::Scatter) {
        for k in cfg.ks() {
            let s = scattering_eps(&q, alpha, eps, k)?;
            let gap = s.distance(&scattering_limit(&cond, n, k)?);
            let _ = write!(csv, "{eps:.12e},{k:.12e},{},{gap:.12e},{:.3e}", cond.name(), s.unitarity_defect);
            for i in 0..n {
                for j in 0..n {
                    let z = s.s[(i, j)];
                    let _ = write!(csv, ",{:.12e},{:.12e}", z.re, z.im);
                }
            }
            csv.push('\n');
        }
    }
    Ok(vec![write(out.join("scatter.csv"), &csv)?])
}

pub fn converge(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let zeta = cfg.zeta_c();
    let study = run_study(&StudyConfig {
        q: cfg.profile()?,
        alpha: cfg.alpha.expect("validated"),
        zeta: [zeta.re, zeta.im],
        eps_list: cfg.eps(Subcommand::Converge),
        probes: cfg.probes.unwrap_or(8),
        iters: cfg.iters.unwrap_or(64),
        seed: cfg.seed,
        compare_regimes: cfg.compare_regimes.clone(),
    })?;
    let failed: Vec<&str> = study
        .series
        .iter()
        .flat_map(|s| &s.rows)
        .filter_map(|r| r.error.as_deref())
        .collect();
    #[derive(Serialize)]
    struct Artifact<'a> {
        provenance: Provenance<'a>,
        study: &'a stargraph::convergence::ConvergenceStudy,
    }
    let written = vec![
        write(out.join("gaps.csv"), &(header(cfg, "converge") + &study.csv_body()))?,
        write_json(
            out.join("study.json"),
            &Artifact {
                provenance: provenance(cfg, "converge"),
                study: &study,
            },
        )?,
    ];
    if !failed.is_empty() {
        return Err(Failure::Numerical(format!("{} gap estimates failed: {}", failed.len(), failed[0])));
    }
    Ok(written)
}

fn panel(p: &PanelConfig, edges: usize, seed: u64, eps: f64) -> Vec<Source> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p.size)
        .map(|_| {
            if p.layered && 2.0 * eps < p.radius {
                Source::random_layered(&mut rng, edges, p.radius, p.panels, p.degree, eps)
            } else {
                Source::random(&mut rng, edges, p.radius, p.panels, p.degree)
            }
            .expect("panel parameters validated")
        })
        .collect()
}

pub fn approx(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let q = cfg.profile()?;
    let cond = limit(cfg)?;
    let p = cfg.panel.clone().unwrap_or_default();
    let rows = verify_bounds(
        &q,
        cfg.alpha.expect("validated"),
        &cond,
        &cfg.eps(Subcommand::Approx),
        |eps| panel(&p, q.edge_count(), cfg.seed, eps),
        cfg.zeta_c(),
        cfg.rank_tol,
    )?;
    let mut csv = header(cfg, "approx");
    csv += "eps,regime,ratio_yeps,ratio_y,max_jump,residual_ratio\n";
    for r in &rows {
        let _ = writeln!(
            csv,
            "{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.eps,
            cond.name(),
            r.ratio_yeps,
            r.ratio_y,
            r.max_jump,
            r.residual_ratio
        );
    }
    Ok(vec![write(out.join("approx.csv"), &csv)?])
}
