//! Explicit approximation `ỹ_ε` of `(H_ε - ζ)⁻¹ f` built from the limit
//! resolvent `y`, a core corrector `u_ε` and cutoff-localized jump terms.
//!
//! On the shrunken core `Ω_ε` the approximation is
//! `v_ε = A φ(t/ε) + ε u_ε(t/ε)` with `φ` a combination of resonant modes
//! (absent in the non-resonant case); outside it equals `y`. The jumps of
//! `v_ε` at `t = ε` are removed by `w_ε = Σ [v] η₀ + [v'] η₁`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{norms, vertex_residual, ExpTail, GraphFunction, SampleGrid, SegmentSamples};
use crate::ode::{CoreSolver, Forcing};
use crate::poly::{self, Side};
use crate::potential::PotentialProfile;
use crate::resolvent::{resolvent_eps_on, resolvent_limit_on};
use crate::resonance::{classify, coupling_vector, matrix_from_solver};
use crate::source::Source;
use crate::vertex::VertexCondition;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonResonant,
    Simple,
    Double,
}

impl Regime {
    pub fn of(cond: &VertexCondition) -> Result<Regime> {
        match cond {
            VertexCondition::Dirichlet => Ok(Regime::NonResonant),
            VertexCondition::Kirchhoff | VertexCondition::WeightedContinuity(_) => Ok(Regime::Simple),
            VertexCondition::WeightedDerivative(_) => Ok(Regime::Double),
            VertexCondition::Rows { .. } => Err(Error::Unsupported("no corrector for raw vertex rows".into())),
        }
    }
}

/// `θ` of a weighted or Kirchhoff condition.
fn weights(cond: &VertexCondition, n: usize) -> Vec<f64> {
    match cond {
        VertexCondition::Kirchhoff => VertexCondition::kirchhoff_theta(n),
        other => other.theta().map(<[f64]>::to_vec).unwrap_or_default(),
    }
}

fn argmax_abs(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best })
}

/// Core corrector and compatibility constants.
#[derive(Clone, Debug)]
pub struct CorrectorData {
    pub regime: Regime,
    pub eps: f64,
    /// `u_ε` on the unit core (scaled variable)
    pub u: GraphFunction,
    /// outer data `u_n'(1)` actually imposed
    pub neumann: Vec<C64>,
    /// edges with `u_n(1) = 0`
    pub pinned: Vec<usize>,
    /// `κ_ε` (simple regime)
    pub kappa: Option<C64>,
    /// `(μ_ε, ν_ε)` (double regime)
    pub mu_nu: Option<(C64, C64)>,
    /// resonant modes on the unit core with their amplitudes `y(a_p^ε)`
    pub modes: Vec<(C64, GraphFunction)>,
    pub compatibility_residual: f64,
}

/// `ε ∫_Ω φ f(ε ·)` with Hermite-corrected trapezoid on the core grid.
fn forcing_integral(mode: &GraphFunction, f: &Source, eps: f64) -> C64 {
    let mut sum = ZERO;
    for (n, e) in mode.edges.iter().enumerate() {
        let g = Forcing::rescaled(f, n, eps, eps);
        for s in &e.segments {
            let p = s.piece;
            let hint = p.mid();
            let h = p.h();
            let val = |j: usize| s.u[j] * g.value(p.node(j), hint);
            let der = |j: usize| {
                let t = p.node(j);
                s.du[j] * g.value(t, hint) + s.u[j] * g.derivative(t, hint)
            };
            for j in 0..p.steps {
                sum += (val(j) + val(j + 1)) * (0.5 * h) + (der(j) - der(j + 1)) * (h * h / 12.0);
            }
        }
    }
    sum
}

/// One-sided `(y_n(ε), y_n'(ε))` from the exterior.
fn outer_data(y: &GraphFunction, eps: f64) -> Result<Vec<(C64, C64)>> {
    (0..y.edge_count())
        .map(|n| y.at_node(n, eps, Side::Right).map(|v| (v[0], v[1])))
        .collect()
}

/// Corrector for the regime of `cond`, which must agree with the
/// classification of `α`.
pub fn corrector(
    q: &PotentialProfile,
    alpha: f64,
    eps: f64,
    f: &Source,
    y: &GraphFunction,
    cond: &VertexCondition,
    rank_tol: f64,
) -> Result<CorrectorData> {
    let n = q.edge_count();
    let regime = Regime::of(cond)?;
    let found = Regime::of(&classify(alpha, q, rank_tol)?.condition)?;
    if found != regime {
        return Err(Error::RegimeMismatch {
            expected: format!("{regime:?}"),
            found: format!("{found:?}"),
        });
    }
    let solver = CoreSolver::for_eps(q, alpha, eps, &[f]);
    let outer = outer_data(y, eps)?;
    let dy: Vec<C64> = outer.iter().map(|d| d.1).collect();
    let forcing: Vec<Option<Forcing>> = (0..n).map(|e| Some(Forcing::rescaled(f, e, eps, eps))).collect();

    let mut neumann = dy.clone();
    let mut pinned = Vec::new();
    let mut kappa = None;
    let mut mu_nu = None;
    let mut modes = Vec::new();
    match regime {
        Regime::NonResonant => {}
        Regime::Simple => {
            let theta = weights(cond, n);
            let p = argmax_abs(&theta);
            let coeffs: Vec<f64> = theta.iter().map(|t| t / theta[p]).collect();
            let phi = solver.kernel_function(&coeffs);
            let integral = forcing_integral(&phi, f, eps);
            let k = -((0..n).filter(|&e| e != p).map(|e| dy[e] * coeffs[e]).sum::<C64>() + integral);
            neumann[p] = k;
            pinned.push(p);
            kappa = Some(k);
            modes.push((outer[p].0, phi));
        }
        Regime::Double => {
            if n != 3 {
                return Err(Error::Unsupported("double regime needs three edges".into()));
            }
            let m = matrix_from_solver(&solver);
            let basis = m.kernel(2);
            let theta = coupling_vector(&basis)?;
            let r = argmax_abs(&theta);
            let (p, s) = match r {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            // kernel combinations with prescribed values at a_p, a_s
            let det = basis[0][p] * basis[1][s] - basis[1][p] * basis[0][s];
            let combo = |vp: f64, vs: f64| -> Vec<f64> {
                let a = (vp * basis[1][s] - vs * basis[1][p]) / det;
                let b = (basis[0][p] * vs - basis[0][s] * vp) / det;
                (0..3).map(|i| a * basis[0][i] + b * basis[1][i]).collect()
            };
            let phi_c = combo(1.0, 0.0);
            let psi_c = combo(0.0, 1.0);
            let phi = solver.kernel_function(&phi_c);
            let psi = solver.kernel_function(&psi_c);
            let mu = -(dy[r] * phi_c[r] + forcing_integral(&phi, f, eps));
            let nu = -(dy[r] * psi_c[r] + forcing_integral(&psi, f, eps));
            neumann[p] = mu;
            neumann[s] = nu;
            pinned.extend([p, s]);
            mu_nu = Some((mu, nu));
            modes.push((outer[p].0, phi));
            modes.push((outer[s].0, psi));
        }
    }
    let sol = solver.solve(&forcing, &neumann, &pinned)?;
    Ok(CorrectorData {
        regime,
        eps,
        u: sol.u,
        neumann,
        pinned,
        kappa,
        mu_nu,
        modes,
        compatibility_residual: sol.compatibility_residual,
    })
}

/// `[η, η', η'', η''', η'''']` of the cutoffs at `s = t - ε`, choosing the
/// branch by `hint`.
pub fn cutoff(which: usize, s: f64, hint: f64) -> [f64; 5] {
    const ETA0: [f64; 6] = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];
    const ETA1: [f64; 6] = [0.5, 0.5, 0.0, -8.0, 11.5, -4.5];
    if hint < 0.0 || hint > 1.0 {
        return [0.0; 5];
    }
    if hint <= 0.5 {
        return if which == 0 {
            [1.0, 0.0, 0.0, 0.0, 0.0]
        } else {
            [s, 1.0, 0.0, 0.0, 0.0]
        };
    }
    let coeffs = if which == 0 { &ETA0 } else { &ETA1 };
    let x = 2.0 * s - 1.0;
    let mut out = [0.0; 5];
    let mut c = coeffs.to_vec();
    let mut scale = 1.0;
    for slot in out.iter_mut() {
        *slot = scale * poly::horner(&c, x);
        c = poly::derivative(&c);
        scale *= 2.0;
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub value: C64,
    pub derivative: C64,
}

#[derive(Clone, Debug)]
pub struct ApproximationBundle {
    pub regime: Regime,
    pub eps: f64,
    pub v: GraphFunction,
    pub w: GraphFunction,
    pub y_tilde: GraphFunction,
    /// `[v]`, `[v']` at `t = ε` on each edge
    pub jumps: Vec<Jump>,
    pub c1_defect: f64,
    pub vertex_defect: f64,
}

/// Matching tolerance for the C¹ property of `ỹ_ε` at `t = ε`.
pub const MATCH_TOL: f64 = 1e-9;

pub fn assemble(y: &GraphFunction, corr: &CorrectorData) -> Result<ApproximationBundle> {
    let eps = corr.eps;
    let tol = 1e-12 * (1.0 + eps);
    let mut v = y.clone();
    for (n, edge) in v.edges.iter_mut().enumerate() {
        let core: Vec<&SegmentSamples> = corr.u.edges[n].segments.iter().collect();
        let count = edge.segments.iter().take_while(|s| s.piece.t1 <= eps + tol).count();
        if count != core.len() {
            return invalid("limit resolvent grid does not match the corrector grid");
        }
        for (k, seg) in edge.segments.iter_mut().take(count).enumerate() {
            let u = core[k];
            if u.piece.steps != seg.piece.steps {
                return invalid("limit resolvent grid does not match the corrector grid");
            }
            for j in 0..=seg.piece.steps {
                let mut val = u.u[j] * eps;
                let mut der = u.du[j];
                let mut sec = u.d2u[j] / eps;
                for (amp, mode) in &corr.modes {
                    let m = &mode.edges[n].segments[k];
                    val += amp * m.u[j];
                    der += amp * m.du[j] / eps;
                    sec += amp * m.d2u[j] / (eps * eps);
                }
                seg.u[j] = val;
                seg.du[j] = der;
                seg.d2u[j] = sec;
            }
        }
    }
    let mut jumps = Vec::with_capacity(v.edge_count());
    for n in 0..v.edge_count() {
        let l = v.at_node(n, eps, Side::Left)?;
        let r = v.at_node(n, eps, Side::Right)?;
        jumps.push(Jump {
            value: r[0] - l[0],
            derivative: r[1] - l[1],
        });
    }
    let mut w = v.clone();
    for (n, edge) in w.edges.iter_mut().enumerate() {
        let jmp = jumps[n];
        for seg in &mut edge.segments {
            let hint = seg.piece.mid() - eps;
            for j in 0..=seg.piece.steps {
                let s = seg.piece.node(j) - eps;
                let e0 = cutoff(0, s, hint);
                let e1 = cutoff(1, s, hint);
                seg.u[j] = jmp.value * e0[0] + jmp.derivative * e1[0];
                seg.du[j] = jmp.value * e0[1] + jmp.derivative * e1[1];
                seg.d2u[j] = jmp.value * e0[2] + jmp.derivative * e1[2];
            }
        }
        edge.tail = ExpTail::zero(edge.tail.start);
    }
    let y_tilde = v.sub(&w)?;
    let mut c1_defect = 0.0f64;
    let mut scale = 0.0f64;
    for n in 0..y_tilde.edge_count() {
        let l = y_tilde.at_node(n, eps, Side::Left)?;
        let r = y_tilde.at_node(n, eps, Side::Right)?;
        c1_defect = c1_defect.max((r[0] - l[0]).norm()).max((r[1] - l[1]).norm());
        scale = scale.max(l[0].norm()).max(l[1].norm());
    }
    if c1_defect > MATCH_TOL * (1.0 + scale) {
        return Err(Error::Numerical(format!(
            "approximation is not C1 at eps: defect {c1_defect:.3e}, jumps {jumps:?}"
        )));
    }
    let vertex_defect = vertex_residual(&y_tilde, &VertexCondition::Kirchhoff);
    Ok(ApproximationBundle {
        regime: corr.regime,
        eps,
        v,
        w,
        y_tilde,
        jumps,
        c1_defect,
        vertex_defect,
    })
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// `r_ε` from the piecewise formula
    pub r: GraphFunction,
    pub norm: f64,
    /// largest difference between `(H_ε - ζ) ỹ_ε - f` evaluated directly and
    /// the formula, relative to the size of the terms
    pub mismatch: f64,
    /// `sup |r|` beyond `t = ε + 1`
    pub outside_support: f64,
}

/// Tolerance for the direct against the formula residual.
pub const RESIDUAL_TOL: f64 = 1e-8;

pub fn residual(
    bundle: &ApproximationBundle,
    q: &PotentialProfile,
    alpha: f64,
    zeta: C64,
    f: &Source,
) -> Result<ResidualReport> {
    let eps = bundle.eps;
    let tol = 1e-12 * (1.0 + eps);
    let mut r = bundle.y_tilde.clone();
    let mut mismatch = 0.0f64;
    let mut outside = 0.0f64;
    for (n, edge) in r.edges.iter_mut().enumerate() {
        let yt = &bundle.y_tilde.edges[n];
        for (k, seg) in edge.segments.iter_mut().enumerate() {
            let p = seg.piece;
            let hint = p.mid();
            let inside = p.t1 <= eps + tol;
            let a = &yt.segments[k];
            for j in 0..=p.steps {
                let t = p.node(j);
                let pot = if inside {
                    alpha / (eps * eps) * q.edge(n).eval_in(t / eps, hint / eps)
                } else {
                    0.0
                };
                let direct = -a.d2u[j] + (pot - zeta) * a.u[j] - f.eval_in(n, t, hint);
                let terms = a.d2u[j].norm() + (pot * a.u[j]).norm() + f.eval_in(n, t, hint).norm();
                let (r0, r1, r2) = if inside {
                    (-zeta * a.u[j], -zeta * a.du[j], -zeta * a.d2u[j])
                } else {
                    let s = t - eps;
                    let sh = hint - eps;
                    let jm = bundle.jumps[n];
                    let e0 = cutoff(0, s, sh);
                    let e1 = cutoff(1, s, sh);
                    let d = |i: usize| jm.value * e0[i] + jm.derivative * e1[i];
                    (d(2) + zeta * d(0), d(3) + zeta * d(1), d(4) + zeta * d(2))
                };
                mismatch = mismatch.max((direct - r0).norm() / (1.0 + terms));
                if t > eps + 1.0 + tol {
                    outside = outside.max(r0.norm());
                }
                seg.u[j] = r0;
                seg.du[j] = r1;
                seg.d2u[j] = r2;
            }
        }
        edge.tail = ExpTail::zero(edge.tail.start);
    }
    if mismatch > RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "direct and formula residuals disagree by {mismatch:.3e}"
        )));
    }
    let norm = r.l2_norm()?;
    Ok(ResidualReport {
        r,
        norm,
        mismatch,
        outside_support: outside,
    })
}

/// Per-source quantities of the construction, each divided by `ε^½ ‖f‖`
/// unless stated otherwise.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceAnalysis {
    pub eps: f64,
    pub f_norm: f64,
    /// `‖ỹ_ε - y_ε‖`
    pub ratio_yeps: f64,
    /// `‖ỹ_ε - y‖`
    pub ratio_y: f64,
    /// `‖r_ε‖`
    pub residual_ratio: f64,
    /// `max_n (|[v]|, |[v']|)`
    pub max_jump: f64,
    /// `‖u_ε‖_{W²₂(Ω)} / ‖f‖`
    pub corrector_norm: f64,
    /// `|κ_ε - y_p'(0)|`, or `max(|μ_ε - y_p'(0)|, |ν_ε - y_q'(0)|)`
    pub compat_constant: Option<f64>,
    /// `max_n |y_n'(ε) - y_n'(0)|`
    pub jump_derivative: f64,
    /// `max_n |y_n(ε) - y_n(0)|`
    pub jump_value: f64,
    /// `‖ỹ_ε - y_ε‖ |Im ζ| / ‖r_ε‖`, at most one
    pub spectral_check: f64,
    pub c1_defect: f64,
    pub vertex_defect: f64,
    pub residual_mismatch: f64,
    pub compatibility_residual: f64,
}

/// Full construction for one source: `y`, `y_ε`, corrector, bundle and
/// residual.
#[allow(clippy::too_many_arguments)]
pub fn analyze(
    q: &PotentialProfile,
    alpha: f64,
    cond: &VertexCondition,
    eps: f64,
    zeta: C64,
    f: &Source,
    rank_tol: f64,
) -> Result<SourceAnalysis> {
    let grid = SampleGrid::regularized(q, eps, &[f])?;
    let y = resolvent_limit_on(cond, zeta, f, &grid)?;
    let y_eps = resolvent_eps_on(q, alpha, eps, zeta, f, &grid)?;
    let corr = corrector(q, alpha, eps, f, &y, cond, rank_tol)?;
    let bundle = assemble(&y, &corr)?;
    let res = residual(&bundle, q, alpha, zeta, f)?;
    let f_norm = f.l2_norm();
    let scale = eps.sqrt() * f_norm;
    if scale == 0.0 {
        return Ok(SourceAnalysis {
            eps,
            ..Default::default()
        });
    }
    let d_eps = norms(&bundle.y_tilde.sub(&y_eps)?)?.l2;
    let d_lim = norms(&bundle.y_tilde.sub(&y)?)?.l2;
    let outer = outer_data(&y, eps)?;
    let vertex: Vec<(C64, C64)> = (0..y.edge_count()).map(|n| y.vertex_data(n)).collect();
    let compat = match (corr.kappa, corr.mu_nu) {
        (Some(k), _) => Some((k - vertex[corr.pinned[0]].1).norm()),
        (_, Some((mu, nu))) => Some(
            (mu - vertex[corr.pinned[0]].1)
                .norm()
                .max((nu - vertex[corr.pinned[1]].1).norm()),
        ),
        _ => None,
    };
    Ok(SourceAnalysis {
        eps,
        f_norm,
        ratio_yeps: d_eps / scale,
        ratio_y: d_lim / scale,
        residual_ratio: res.norm / scale,
        max_jump: bundle
            .jumps
            .iter()
            .map(|j| j.value.norm().max(j.derivative.norm()))
            .fold(0.0, f64::max)
            / scale,
        corrector_norm: norms(&corr.u)?.sobolev_w22 / f_norm,
        compat_constant: compat.map(|c| c / scale),
        jump_derivative: outer
            .iter()
            .zip(&vertex)
            .map(|(o, v)| (o.1 - v.1).norm())
            .fold(0.0, f64::max)
            / scale,
        jump_value: outer
            .iter()
            .zip(&vertex)
            .map(|(o, v)| (o.0 - v.0).norm())
            .fold(0.0, f64::max)
            / scale,
        spectral_check: if res.norm > 0.0 { d_eps * zeta.im.abs() / res.norm } else { 0.0 },
        c1_defect: bundle.c1_defect,
        vertex_defect: bundle.vertex_defect,
        residual_mismatch: res.mismatch,
        compatibility_residual: corr.compatibility_residual,
    })
}

/// Panel maxima of [`SourceAnalysis`] at one `ε`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub eps: f64,
    pub regime: Option<Regime>,
    pub ratio_yeps: f64,
    pub ratio_y: f64,
    pub residual_ratio: f64,
    pub max_jump: f64,
    pub corrector_norm: f64,
    pub compat_constant: f64,
    pub jump_derivative: f64,
    pub jump_value: f64,
    pub spectral_check: f64,
    pub c1_defect: f64,
    pub residual_mismatch: f64,
}

impl BoundsRow {
    fn absorb(&mut self, a: &SourceAnalysis) {
        self.ratio_yeps = self.ratio_yeps.max(a.ratio_yeps);
        self.ratio_y = self.ratio_y.max(a.ratio_y);
        self.residual_ratio = self.residual_ratio.max(a.residual_ratio);
        self.max_jump = self.max_jump.max(a.max_jump);
        self.corrector_norm = self.corrector_norm.max(a.corrector_norm);
        self.compat_constant = self.compat_constant.max(a.compat_constant.unwrap_or(0.0));
        self.jump_derivative = self.jump_derivative.max(a.jump_derivative);
        self.jump_value = self.jump_value.max(a.jump_value);
        self.spectral_check = self.spectral_check.max(a.spectral_check);
        self.c1_defect = self.c1_defect.max(a.c1_defect);
        self.residual_mismatch = self.residual_mismatch.max(a.residual_mismatch);
    }
}

/// Panel maxima per `ε`; `panel(eps)` supplies the sources used at that `ε`.
pub fn verify_bounds(
    q: &PotentialProfile,
    alpha: f64,
    cond: &VertexCondition,
    eps_list: &[f64],
    panel: impl Fn(f64) -> Vec<Source> + Sync,
    zeta: C64,
    rank_tol: f64,
) -> Result<Vec<BoundsRow>> {
    use rayon::prelude::*;
    let regime = Regime::of(cond)?;
    eps_list
        .iter()
        .map(|&eps| {
            let sources = panel(eps);
            let rows = sources
                .par_iter()
                .map(|f| analyze(q, alpha, cond, eps, zeta, f, rank_tol))
                .collect::<Result<Vec<_>>>()?;
            let mut row = BoundsRow {
                eps,
                regime: Some(regime),
                ..Default::default()
            };
            for a in &rows {
                row.absorb(a);
            }
            Ok(row)
        })
        .collect()
}

/// `max / min` of a positive sequence; `1` when empty.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        1.0
    } else if min > 0.0 {
        max / min
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}
