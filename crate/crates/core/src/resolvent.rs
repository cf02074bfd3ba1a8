//! Resolvents of the limit operators and of the regularized operators,
//! applied to compactly supported piecewise-polynomial sources.
//!
//! On the potential-free exterior every solution is the half-line
//! particular solution `y_p = (i / 2κ) ∫_0^∞ e^{iκ|t-s|} f(s) ds` plus
//! `c e^{iκt}`, `Im κ > 0`; only the constants `c_n` depend on the vertex.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::graph::{ExpTail, GraphFunction, SampleGrid, SegmentSamples};
use crate::ode::{EdgeOde, Forcing};
use crate::poly;
use crate::potential::PotentialProfile;
use crate::source::{Source, SourcePiece};
use crate::vertex::{solve_affine, VertexCondition};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `κ = √ζ` with `Im κ > 0`.
pub fn wavenumber(zeta: C64) -> Result<C64> {
    if zeta.im == 0.0 || !zeta.is_finite() {
        return invalid(format!("ζ = {zeta} must be finite and non-real"));
    }
    let k = zeta.sqrt();
    Ok(if k.im > 0.0 { k } else { -k })
}

fn piece_at(f: &Source, edge: usize, t: f64) -> Option<&SourcePiece> {
    f.pieces(edge).iter().find(|p| t >= p.t0 && t <= p.t1)
}

/// Values of `F(t) = ∫_0^t e^{iκ(t-s)} f` and `G(t) = ∫_t^∞ e^{iκ(s-t)} f` at
/// every node of one edge, segment by segment.
fn green_integrals(f: &Source, edge: usize, kappa: C64, segments: &[crate::graph::Piece]) -> Vec<Vec<(C64, C64)>> {
    let ik = C64::i() * kappa;
    let nodes: Vec<(usize, usize, f64)> = segments
        .iter()
        .enumerate()
        .flat_map(|(k, p)| (0..=p.steps).map(move |j| (k, j, p.node(j))))
        .collect();
    let m = nodes.len();
    let mut big_f = vec![ZERO; m];
    let mut big_g = vec![ZERO; m];
    for i in 1..m {
        let (ta, tb) = (nodes[i - 1].2, nodes[i].2);
        let h = tb - ta;
        if h <= 0.0 {
            big_f[i] = big_f[i - 1];
            continue;
        }
        let mut inc = ZERO;
        if let Some(p) = piece_at(f, edge, 0.5 * (ta + tb)) {
            inc = poly::exp_poly_integral(ik, h, &poly::reflect(&p.coeffs, ta - p.t0 + h));
        }
        big_f[i] = (ik * h).exp() * big_f[i - 1] + inc;
    }
    for i in (0..m - 1).rev() {
        let (ta, tb) = (nodes[i].2, nodes[i + 1].2);
        let h = tb - ta;
        if h <= 0.0 {
            big_g[i] = big_g[i + 1];
            continue;
        }
        let mut inc = ZERO;
        if let Some(p) = piece_at(f, edge, 0.5 * (ta + tb)) {
            inc = poly::exp_poly_integral(ik, h, &poly::taylor_shift(&p.coeffs, ta - p.t0));
        }
        big_g[i] = (ik * h).exp() * big_g[i + 1] + inc;
    }
    let mut out: Vec<Vec<(C64, C64)>> = segments.iter().map(|p| Vec::with_capacity(p.steps + 1)).collect();
    for (i, &(k, _, _)) in nodes.iter().enumerate() {
        out[k].push((big_f[i], big_g[i]));
    }
    out
}

/// Half-line particular solution on one edge of a grid.
struct Particular {
    kappa: C64,
    /// per segment, per node `(F, G)`
    fg: Vec<Vec<(C64, C64)>>,
}

impl Particular {
    fn new(f: &Source, edge: usize, kappa: C64, grid: &SampleGrid) -> Self {
        Self {
            kappa,
            fg: green_integrals(f, edge, kappa, grid.pieces(edge)),
        }
    }

    /// `(y_p, y_p')` at node `j` of segment `k`.
    fn at(&self, k: usize, j: usize) -> (C64, C64) {
        let (ff, gg) = self.fg[k][j];
        (C64::i() / (2.0 * self.kappa) * (ff + gg), 0.5 * (gg - ff))
    }

    fn vertex(&self) -> (C64, C64) {
        self.at(0, 0)
    }

    /// tail coefficient of `y_p` at the last node, where `G = 0`
    fn tail_coefficient(&self) -> C64 {
        let last = self.fg.last().and_then(|s| s.last()).map_or(ZERO, |v| v.0);
        C64::i() / (2.0 * self.kappa) * last
    }
}

/// `(H - ζ)⁻¹ f` for the limit operator `H` with vertex condition `cond`,
/// sampled on `grid`.
pub fn resolvent_limit_on(cond: &VertexCondition, zeta: C64, f: &Source, grid: &SampleGrid) -> Result<GraphFunction> {
    let n = grid.edge_count();
    if f.edge_count() != n {
        return invalid("source and grid disagree on the number of edges");
    }
    grid.check_aligned(f)?;
    let kappa = wavenumber(zeta)?;
    let ik = C64::i() * kappa;
    let parts: Vec<Particular> = (0..n).map(|e| Particular::new(f, e, kappa, grid)).collect();
    let (g0, g1): (Vec<C64>, Vec<C64>) = parts.iter().map(Particular::vertex).unzip();
    let c = solve_affine(&cond.rows(n)?, &g0, &vec![ONE; n], &g1, &vec![ik; n], "limit resolvent")?;
    let mut out = GraphFunction::zero(grid);
    for (e, edge) in out.edges.iter_mut().enumerate() {
        let end = grid.end(e);
        for (k, seg) in edge.segments.iter_mut().enumerate() {
            let hint = seg.piece.mid();
            for j in 0..=seg.piece.steps {
                let t = seg.piece.node(j);
                let (yp, dyp) = parts[e].at(k, j);
                let ex = c[e] * (ik * t).exp();
                seg.u[j] = yp + ex;
                seg.du[j] = dyp + ik * ex;
                seg.d2u[j] = -zeta * seg.u[j] - f.eval_in(e, t, hint);
            }
        }
        edge.tail = ExpTail::single(end, parts[e].tail_coefficient() + c[e] * (ik * end).exp(), kappa);
    }
    Ok(out)
}

pub fn resolvent_limit(cond: &VertexCondition, zeta: C64, f: &Source) -> Result<GraphFunction> {
    resolvent_limit_on(cond, zeta, f, &SampleGrid::limit(f.edge_count(), &[f]))
}

/// `(H_ε - ζ)⁻¹ f` for `H_ε = -d²/dt² + α ε⁻² Q(t/ε)` with Kirchhoff
/// conditions, sampled on a grid from [`SampleGrid::regularized`].
pub fn resolvent_eps_on(
    q: &PotentialProfile,
    alpha: f64,
    eps: f64,
    zeta: C64,
    f: &Source,
    grid: &SampleGrid,
) -> Result<GraphFunction> {
    let n = grid.edge_count();
    if f.edge_count() != n || q.edge_count() != n {
        return invalid("source, potential and grid disagree on the number of edges");
    }
    if (grid.core_end() - eps).abs() > 1e-14 {
        return invalid("grid was not built for this eps");
    }
    grid.check_aligned(f)?;
    let kappa = wavenumber(zeta)?;
    let ik = C64::i() * kappa;
    let lambda = zeta * eps * eps;
    let tol = 1e-12 * (1.0 + eps);

    struct EdgeParts {
        core: usize,
        part: Particular,
        hom: Vec<SegmentSamples>,
        inh: Vec<SegmentSamples>,
    }
    let mut edges = Vec::with_capacity(n);
    for e in 0..n {
        let pieces = grid.pieces(e);
        let core = pieces.iter().take_while(|p| p.t1 <= eps + tol).count();
        if core == 0 || (pieces[core - 1].t1 - eps).abs() > tol {
            return invalid("grid has no node at eps");
        }
        let s_pieces: Vec<_> = pieces[..core].iter().map(|p| p.scaled(1.0 / eps)).collect();
        let part = Particular::new(f, e, kappa, grid);
        let (yp, dyp) = part.at(core, 0);
        let e_eps = (ik * eps).exp();
        let ode = EdgeOde::homogeneous(q.edge(e), alpha, lambda);
        let hom = ode.propagate(&s_pieces, true, [e_eps, ik * eps * e_eps]);
        let forced = EdgeOde {
            forcing: Some(Forcing::rescaled(f, e, eps, eps * eps)),
            ..ode
        };
        let inh = forced.propagate(&s_pieces, true, [yp, dyp * eps]);
        edges.push(EdgeParts { core, part, hom, inh });
    }
    let g0: Vec<C64> = edges.iter().map(|p| p.inh[0].u[0]).collect();
    let h0: Vec<C64> = edges.iter().map(|p| p.hom[0].u[0]).collect();
    let g1: Vec<C64> = edges.iter().map(|p| p.inh[0].du[0] / eps).collect();
    let h1: Vec<C64> = edges.iter().map(|p| p.hom[0].du[0] / eps).collect();
    let c = solve_affine(
        &VertexCondition::Kirchhoff.rows(n)?,
        &g0,
        &h0,
        &g1,
        &h1,
        "regularized resolvent",
    )?;

    let mut out = GraphFunction::zero(grid);
    for (e, (edge, parts)) in out.edges.iter_mut().zip(&edges).enumerate() {
        for (k, seg) in edge.segments.iter_mut().enumerate() {
            if k < parts.core {
                let (h, p) = (&parts.hom[k], &parts.inh[k]);
                for j in 0..=seg.piece.steps {
                    seg.u[j] = p.u[j] + c[e] * h.u[j];
                    seg.du[j] = (p.du[j] + c[e] * h.du[j]) / eps;
                    seg.d2u[j] = (p.d2u[j] + c[e] * h.d2u[j]) / (eps * eps);
                }
            } else {
                let hint = seg.piece.mid();
                for j in 0..=seg.piece.steps {
                    let t = seg.piece.node(j);
                    let (yp, dyp) = parts.part.at(k, j);
                    let ex = c[e] * (ik * t).exp();
                    seg.u[j] = yp + ex;
                    seg.du[j] = dyp + ik * ex;
                    seg.d2u[j] = -zeta * seg.u[j] - f.eval_in(e, t, hint);
                }
            }
        }
        let end = grid.end(e);
        edge.tail = ExpTail::single(end, parts.part.tail_coefficient() + c[e] * (ik * end).exp(), kappa);
    }
    Ok(out)
}

pub fn resolvent_eps(q: &PotentialProfile, alpha: f64, eps: f64, zeta: C64, f: &Source) -> Result<GraphFunction> {
    let grid = SampleGrid::regularized(q, eps, &[f])?;
    resolvent_eps_on(q, alpha, eps, zeta, f, &grid)
}

/// Operator whose resolvent is probed.
#[derive(Clone, Debug)]
pub enum Operator<'a> {
    Limit(VertexCondition),
    Regularized {
        q: &'a PotentialProfile,
        alpha: f64,
        eps: f64,
    },
}

impl Operator<'_> {
    pub fn grid(&self, edge_count: usize, sources: &[&Source]) -> Result<SampleGrid> {
        match self {
            Operator::Limit(_) => Ok(SampleGrid::limit(edge_count, sources)),
            Operator::Regularized { q, eps, .. } => SampleGrid::regularized(q, *eps, sources),
        }
    }

    pub fn resolvent_on(&self, zeta: C64, f: &Source, grid: &SampleGrid) -> Result<GraphFunction> {
        match self {
            Operator::Limit(cond) => resolvent_limit_on(cond, zeta, f, grid),
            Operator::Regularized { q, alpha, eps } => resolvent_eps_on(q, *alpha, *eps, zeta, f, grid),
        }
    }
}

/// `(⟨R(ζ) f, g⟩, ⟨f, R(ζ̄) g⟩)`; equal for self-adjoint operators.
pub fn adjoint_probe(op: &Operator<'_>, zeta: C64, f: &Source, g: &Source) -> Result<(C64, C64)> {
    let grid = op.grid(f.edge_count(), &[f, g])?;
    let rf = op.resolvent_on(zeta, f, &grid)?;
    let rg = op.resolvent_on(zeta.conj(), g, &grid)?;
    Ok((rf.inner_source(g), rg.inner_source(f).conj()))
}
