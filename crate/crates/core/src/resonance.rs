//! Resonant coupling constants of the core problem
//! `-f'' + α Q f = 0` on the unit core, Kirchhoff at the vertex and
//! Neumann at the outer ends.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::core_pieces;
use crate::ode::CoreSolver;
use crate::potential::PotentialProfile;
use crate::vertex::VertexCondition;

/// Default relative rank threshold `σ_k <= rank_tol σ_1`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Default α grid step of [`find_resonances`].
pub const DEFAULT_SCAN_STEP: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct ResonanceMatrix {
    pub alpha: f64,
    pub matrix: DMatrix<f64>,
    /// `σ_1 >= ... >= σ_N`
    pub singular_values: Vec<f64>,
    right_vectors: DMatrix<f64>,
}

impl ResonanceMatrix {
    pub fn edge_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn det(&self) -> f64 {
        self.matrix.clone().lu().determinant()
    }

    /// Determinant as the product of singular values with the signs of the
    /// orthogonal factors.
    pub fn det_svd(&self) -> f64 {
        let svd = self.matrix.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v requested");
        u.determinant() * vt.determinant() * svd.singular_values.iter().product::<f64>()
    }

    /// `σ_N / σ_1`, zero for the zero matrix.
    pub fn sigma_ratio(&self) -> f64 {
        let s1 = self.singular_values[0];
        if s1 == 0.0 {
            0.0
        } else {
            self.singular_values[self.singular_values.len() - 1] / s1
        }
    }

    pub fn multiplicity(&self, rank_tol: f64) -> usize {
        let s1 = self.singular_values[0];
        self.singular_values.iter().filter(|&&s| s <= rank_tol * s1).count()
    }

    /// Right singular vectors of the `m` smallest singular values.
    pub fn kernel(&self, m: usize) -> Vec<DVector<f64>> {
        let n = self.edge_count();
        (n - m..n).map(|i| self.right_vectors.row(i).transpose()).collect()
    }
}

/// Resonance matrix from the backward Neumann solutions on each edge.
pub fn resonance_matrix(alpha: f64, q: &PotentialProfile) -> ResonanceMatrix {
    let pieces = (0..q.edge_count()).map(|n| core_pieces(q, n, 1.0, &[])).collect();
    matrix_from_solver(&CoreSolver::new(q, alpha, pieces))
}

pub(crate) fn matrix_from_solver(solver: &CoreSolver<'_>) -> ResonanceMatrix {
    let matrix = solver.matrix();
    let n = matrix.nrows();
    let svd = matrix.clone().svd(true, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let vt = svd.v_t.expect("v requested");
    let right_vectors = DMatrix::from_fn(n, n, |i, j| vt[(order[i], j)]);
    ResonanceMatrix {
        alpha: solver.alpha(),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        matrix,
        right_vectors,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceFlag {
    Regular,
    /// every α in the scanned range is resonant (e.g. `Q = 0`)
    IdenticallyResonant,
    /// kernel dimension without a coupling construction (`1 < m`, `N != 3`)
    NoCoupling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub alpha: f64,
    pub multiplicity: usize,
    pub theta: Option<Vec<f64>>,
    pub det_residual: f64,
    pub sigma_ratio: f64,
    pub flag: ResonanceFlag,
}

/// Unit vector with first nonzero component positive.
fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return Err(Error::Numerical("coupling vector vanishes: rank misclassified".into()));
    }
    let lead = v.iter().copied().find(|x| x.abs() > 1e-12 * norm).unwrap_or(1.0);
    let s = lead.signum() / norm;
    for x in &mut v {
        *x *= s;
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    Ok(v)
}

/// Coupling vector from a kernel basis of the resonance matrix: the kernel
/// vector itself when it is one-dimensional, the cross product of the two
/// basis vectors when it is two-dimensional (three edges only).
pub fn coupling_vector(kernel: &[DVector<f64>]) -> Result<Vec<f64>> {
    match kernel {
        [v] => normalize(v.iter().copied().collect()),
        [a, b] if a.len() == 3 => normalize(vec![
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]),
        [_, _] => Err(Error::Unsupported(
            "double resonance coupling is defined for three edges only".into(),
        )),
        _ => Err(Error::Unsupported(format!(
            "no coupling construction for kernel dimension {}",
            kernel.len()
        ))),
    }
}

fn report(m: &ResonanceMatrix, rank_tol: f64, flag: ResonanceFlag) -> ResonanceReport {
    let multiplicity = m.multiplicity(rank_tol).max(1);
    let theta = coupling_vector(&m.kernel(multiplicity)).ok();
    let flag = if theta.is_none() && flag == ResonanceFlag::Regular {
        ResonanceFlag::NoCoupling
    } else {
        flag
    };
    ResonanceReport {
        alpha: m.alpha,
        multiplicity,
        theta,
        det_residual: m.det().abs(),
        sigma_ratio: m.sigma_ratio(),
        flag,
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// All resonances in `[lo, hi]`: sign changes of `det M(α)` refined by
/// bisection, plus local minima of `σ_N / σ_1` (roots without a sign change,
/// such as two-dimensional kernels) refined by golden section.
pub fn find_resonances(
    q: &PotentialProfile,
    lo: f64,
    hi: f64,
    scan_step: f64,
    rank_tol: f64,
) -> Result<Vec<ResonanceReport>> {
    if !(scan_step > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput("scan step must be positive and the range finite".into()));
    }
    if lo >= hi {
        return Ok(Vec::new());
    }
    let pieces: Vec<_> = (0..q.edge_count()).map(|n| core_pieces(q, n, 1.0, &[])).collect();
    let eval = |alpha: f64| matrix_from_solver(&CoreSolver::new(q, alpha, pieces.clone()));
    let count = ((hi - lo) / scan_step).ceil() as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|i| if i == count { hi } else { lo + i as f64 * scan_step })
        .collect();
    let samples: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&a| {
            let m = eval(a);
            (m.det(), m.sigma_ratio())
        })
        .collect();

    if samples.iter().all(|&(_, r)| r <= rank_tol) {
        let m = eval(0.5 * (lo + hi));
        return Ok(vec![report(&m, rank_tol, ResonanceFlag::IdenticallyResonant)]);
    }

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..grid.len() - 1 {
        let (d0, d1) = (samples[i].0, samples[i + 1].0);
        if d0 == 0.0 {
            roots.push(grid[i]);
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            let (mut a, mut b, mut fa) = (grid[i], grid[i + 1], d0);
            while b - a > 1e-11 {
                let m = 0.5 * (a + b);
                let fm = eval(m).det();
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if samples.last().is_some_and(|s| s.0 == 0.0) {
        roots.push(hi);
    }
    let ratio = |a: f64| eval(a).sigma_ratio();
    for i in 1..grid.len() - 1 {
        let r = samples[i].1;
        if r <= samples[i - 1].1 && r <= samples[i + 1].1 {
            let a = golden_min(ratio, grid[i - 1], grid[i + 1], 1e-11);
            let near = roots.iter().any(|&x| (x - a).abs() < 1e-6);
            if !near && ratio(a) <= rank_tol {
                roots.push(a);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots
        .into_iter()
        .map(|a| report(&eval(a), rank_tol, ResonanceFlag::Regular))
        .collect())
}

/// Limit vertex regime at `α` with an optional warning when the smallest
/// singular value sits within a factor 10 of the rank threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub condition: VertexCondition,
    pub multiplicity: usize,
    pub sigma_ratio: f64,
    pub warning: Option<String>,
}

pub fn classify(alpha: f64, q: &PotentialProfile, rank_tol: f64) -> Result<Classification> {
    let m = resonance_matrix(alpha, q);
    let ratio = m.sigma_ratio();
    let multiplicity = m.multiplicity(rank_tol);
    let warning = (ratio > rank_tol / 10.0 && ratio < rank_tol * 10.0)
        .then(|| format!("ill-conditioned classification: σ_N/σ_1 = {ratio:.3e} near rank_tol = {rank_tol:.1e}"));
    let condition = match multiplicity {
        0 => VertexCondition::Dirichlet,
        1 => VertexCondition::WeightedContinuity(coupling_vector(&m.kernel(1))?),
        2 if m.edge_count() == 3 => VertexCondition::WeightedDerivative(coupling_vector(&m.kernel(2))?),
        k => {
            return Err(Error::Unsupported(format!(
                "kernel dimension {k} on {} edges has no limit vertex condition",
                m.edge_count()
            )))
        }
    };
    Ok(Classification {
        condition,
        multiplicity,
        sigma_ratio: ratio,
        warning,
    })
}
