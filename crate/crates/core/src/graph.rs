//! Star graph geometry, sample grids and functions on the graph.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::Side;
use crate::potential::PotentialProfile;
use crate::source::Source;
use crate::vertex::VertexCondition;

/// Default step of the unit-core grid in the scaled variable `s = t / ε`.
pub const CORE_STEP: f64 = 1e-3;
/// Default step on the potential-free exterior.
pub const EXTERIOR_STEP: f64 = 1.0 / 128.0;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    pub edge_count: usize,
    pub core_radius: f64,
}

/// Star with `n` half-line edges, each parametrized by the distance `t`
/// from the central vertex.
pub fn build_star(n: usize, core_radius: f64) -> Result<StarGraph> {
    if n < 2 {
        return invalid(format!("a star graph needs at least 2 edges, got {n}"));
    }
    if !(core_radius > 0.0 && core_radius.is_finite()) {
        return invalid("core radius must be positive");
    }
    Ok(StarGraph {
        edge_count: n,
        core_radius,
    })
}

impl StarGraph {
    /// Outer endpoint `a_n^ε` of the shrunken core on every edge.
    pub fn scaled_core_end(&self, eps: f64) -> f64 {
        eps * self.core_radius
    }
}

/// Uniform piece `[t0, t1]` with `steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl Piece {
    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.steps {
            self.t1
        } else {
            self.t0 + j as f64 * self.h()
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Piece {
        Piece {
            t0: self.t0 * factor,
            t1: self.t1 * factor,
            steps: self.steps,
        }
    }
}

/// Split `[a, b]` at the breakpoints strictly inside it into uniform pieces
/// with step at most `step`.
pub fn split(a: f64, b: f64, breaks: &[f64], step: f64) -> Vec<Piece> {
    let tol = 1e-12 * (1.0 + b.abs());
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a + tol && x < b - tol)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= tol);
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        let steps = (((hi - lo) / step) - 1e-9).ceil().max(1.0) as usize;
        out.push(Piece { t0: lo, t1: hi, steps });
        lo = hi;
    }
    out
}

fn source_breaks(sources: &[&Source], edge: usize) -> Vec<f64> {
    sources.iter().flat_map(|s| s.breakpoints(edge)).collect()
}

/// Core pieces in the scaled variable `s ∈ [0, 1]` for the ε-problem on one
/// edge: breakpoints of `Q` and of the rescaled sources.
pub fn core_pieces(q: &PotentialProfile, edge: usize, eps: f64, sources: &[&Source]) -> Vec<Piece> {
    let mut breaks = q.edge(edge).breakpoints();
    breaks.extend(source_breaks(sources, edge).into_iter().map(|b| b / eps));
    split(0.0, 1.0, &breaks, CORE_STEP)
}

/// Per-edge layout of the sampled region; beyond `end(edge)` functions are
/// stored as closed-form tails.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    edges: Vec<Vec<Piece>>,
    core_end: f64,
}

impl SampleGrid {
    /// Grid for the regularized problem: a fine copy of the scaled core on
    /// `[0, ε]`, then `[ε, max(ε + 1, R)]` with nodes at `ε + 1/2` and `ε + 1`.
    pub fn regularized(q: &PotentialProfile, eps: f64, sources: &[&Source]) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return invalid(format!("eps must lie in (0, 1], got {eps}"));
        }
        let radius = sources.iter().map(|s| s.support_radius()).fold(0.0, f64::max);
        let end = (eps + 1.0).max(radius);
        let edges = (0..q.edge_count())
            .map(|n| {
                let mut pieces: Vec<Piece> = core_pieces(q, n, eps, sources)
                    .iter()
                    .map(|p| p.scaled(eps))
                    .collect();
                let mut breaks = source_breaks(sources, n);
                breaks.extend([eps + 0.5, eps + 1.0]);
                pieces.extend(split(eps, end, &breaks, EXTERIOR_STEP));
                pieces
            })
            .collect();
        Ok(Self {
            edges,
            core_end: eps,
        })
    }

    /// Grid for functions of the limit operator alone: uniform exterior step
    /// on `[0, max(1, R)]`.
    pub fn limit(edge_count: usize, sources: &[&Source]) -> Self {
        let radius = sources.iter().map(|s| s.support_radius()).fold(0.0, f64::max);
        let end = radius.max(1.0);
        let edges = (0..edge_count)
            .map(|n| {
                let mut breaks = source_breaks(sources, n);
                breaks.push(1.0);
                split(0.0, end, &breaks, EXTERIOR_STEP)
            })
            .collect();
        Self { edges, core_end: 1.0 }
    }

    pub fn from_pieces(edges: Vec<Vec<Piece>>, core_end: f64) -> Result<Self> {
        for (n, pieces) in edges.iter().enumerate() {
            let mut t = 0.0;
            for p in pieces {
                if (p.t0 - t).abs() > 1e-12 || p.t1 <= p.t0 || p.steps == 0 {
                    return invalid(format!("edge {n}: pieces must tile [0, end] from the vertex"));
                }
                t = p.t1;
            }
        }
        Ok(Self { edges, core_end })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn pieces(&self, edge: usize) -> &[Piece] {
        &self.edges[edge]
    }

    pub fn core_end(&self) -> f64 {
        self.core_end
    }

    pub fn end(&self, edge: usize) -> f64 {
        self.edges[edge].last().map_or(0.0, |p| p.t1)
    }

    /// Every positive source breakpoint below the sampled end must be a
    /// piece boundary, otherwise the sampled quadrature loses its order.
    pub fn check_aligned(&self, source: &Source) -> Result<()> {
        for n in 0..self.edges.len() {
            let end = self.end(n);
            for b in source.breakpoints(n) {
                if b >= end - 1e-12 {
                    continue;
                }
                let hit = self.edges[n]
                    .iter()
                    .any(|p| (p.t0 - b).abs() <= 1e-12 * (1.0 + b) || (p.t1 - b).abs() <= 1e-12 * (1.0 + b));
                if !hit {
                    return invalid(format!("edge {n}: source breakpoint {b} is not a grid node"));
                }
            }
            if source.support_radius() > end + 1e-12 {
                return invalid("source support extends beyond the sampled region");
            }
        }
        Ok(())
    }
}

/// Samples of `u`, `u'`, `u''` on the nodes of one uniform piece.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSamples {
    pub piece: Piece,
    pub u: Vec<C64>,
    pub du: Vec<C64>,
    pub d2u: Vec<C64>,
}

impl SegmentSamples {
    pub fn zeros(piece: Piece) -> Self {
        let n = piece.steps + 1;
        Self {
            piece,
            u: vec![ZERO; n],
            du: vec![ZERO; n],
            d2u: vec![ZERO; n],
        }
    }

    pub fn sample(piece: Piece, mut f: impl FnMut(f64, f64) -> [C64; 3]) -> Self {
        let mut s = Self::zeros(piece);
        let hint = piece.mid();
        for j in 0..=piece.steps {
            let [u, du, d2u] = f(piece.node(j), hint);
            s.u[j] = u;
            s.du[j] = du;
            s.d2u[j] = d2u;
        }
        s
    }
}

/// `Σ c_j exp(i κ_j (t - start))` for `t >= start`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpTail {
    pub start: f64,
    pub terms: Vec<(C64, C64)>,
}

impl ExpTail {
    pub fn zero(start: f64) -> Self {
        Self {
            start,
            terms: Vec::new(),
        }
    }

    pub fn single(start: f64, coef: C64, kappa: C64) -> Self {
        Self {
            start,
            terms: vec![(coef, kappa)],
        }
    }

    pub fn eval(&self, t: f64) -> [C64; 3] {
        let x = t - self.start;
        let i = C64::i();
        let mut out = [ZERO; 3];
        for &(c, k) in &self.terms {
            let e = c * (i * k * x).exp();
            out[0] += e;
            out[1] += i * k * e;
            out[2] -= k * k * e;
        }
        out
    }

    fn is_integrable(&self) -> bool {
        self.terms.iter().all(|(c, k)| *c == ZERO || k.im > 0.0)
    }

    /// `∫_start^∞ a conj(b)`.
    fn inner(&self, other: &ExpTail) -> Result<C64> {
        if !self.is_integrable() || !other.is_integrable() {
            return Err(Error::NotIntegrable("exponential tail with Im κ <= 0".into()));
        }
        let mut s = ZERO;
        for &(c, k) in &self.terms {
            for &(d, l) in &other.terms {
                s += c * d.conj() * C64::i() / (k - l.conj());
            }
        }
        Ok(s)
    }

    fn scaled(&self, a: C64) -> ExpTail {
        ExpTail {
            start: self.start,
            terms: self.terms.iter().map(|&(c, k)| (a * c, k)).collect(),
        }
    }

    fn add(&mut self, other: &ExpTail) {
        for &(c, k) in &other.terms {
            match self.terms.iter_mut().find(|(_, l)| (*l - k).norm() <= 1e-15 * (1.0 + k.norm())) {
                Some(slot) => slot.0 += c,
                None => self.terms.push((c, k)),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction {
    pub segments: Vec<SegmentSamples>,
    pub tail: ExpTail,
}

impl EdgeFunction {
    fn end(&self) -> f64 {
        self.segments.last().map_or(self.tail.start, |s| s.piece.t1)
    }
}

/// Function on the star graph: sampled values on each edge up to a finite
/// radius, closed-form exponential tail beyond it.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction {
    pub edges: Vec<EdgeFunction>,
    /// end of the region treated as the core by [`norms`]
    pub core_end: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    /// `(‖u‖² + ‖u'‖² + ‖u''‖²)^½` over the core
    pub sobolev_w22: f64,
    /// `sup (|u| + |u'|)` over the core nodes
    pub c1_sup: f64,
}

impl GraphFunction {
    pub fn zero(grid: &SampleGrid) -> Self {
        Self {
            edges: (0..grid.edge_count())
                .map(|n| EdgeFunction {
                    segments: grid.pieces(n).iter().map(|&p| SegmentSamples::zeros(p)).collect(),
                    tail: ExpTail::zero(grid.end(n)),
                })
                .collect(),
            core_end: grid.core_end(),
        }
    }

    /// Samples `f(edge, t, hint) -> [u, u', u'']` on the grid; `hint` is the
    /// midpoint of the current piece, for one-sided evaluation at breakpoints.
    pub fn sample(
        grid: &SampleGrid,
        tails: Vec<ExpTail>,
        mut f: impl FnMut(usize, f64, f64) -> [C64; 3],
    ) -> Self {
        let edges = tails
            .into_iter()
            .enumerate()
            .map(|(n, tail)| EdgeFunction {
                segments: grid
                    .pieces(n)
                    .iter()
                    .map(|&p| SegmentSamples::sample(p, |t, hint| f(n, t, hint)))
                    .collect(),
                tail,
            })
            .collect();
        Self {
            edges,
            core_end: grid.core_end(),
        }
    }

    /// Pure tails: `Σ c e^{iκ t}` on each edge with nothing sampled.
    pub fn from_tails(tails: Vec<ExpTail>) -> Self {
        Self {
            edges: tails
                .into_iter()
                .map(|tail| EdgeFunction {
                    segments: Vec::new(),
                    tail,
                })
                .collect(),
            core_end: 0.0,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `(u(0+), u'(0+))` on one edge.
    pub fn vertex_data(&self, edge: usize) -> (C64, C64) {
        let e = &self.edges[edge];
        match e.segments.first() {
            Some(s) => (s.u[0], s.du[0]),
            None => {
                let [u, du, _] = e.tail.eval(0.0);
                (u, du)
            }
        }
    }

    /// One-sided `[u, u', u'']` at a node `t` of the grid.
    pub fn at_node(&self, edge: usize, t: f64, side: Side) -> Result<[C64; 3]> {
        let e = &self.edges[edge];
        let tol = 1e-12 * (1.0 + t.abs());
        let segs: Box<dyn Iterator<Item = &SegmentSamples>> = match side {
            Side::Left => Box::new(e.segments.iter().rev()),
            Side::Right => Box::new(e.segments.iter()),
        };
        for s in segs {
            let p = s.piece;
            let inside = match side {
                Side::Right => t >= p.t0 - tol && t < p.t1 - tol,
                Side::Left => t > p.t0 + tol && t <= p.t1 + tol,
            };
            if inside {
                let j = ((t - p.t0) / p.h()).round() as usize;
                if (p.node(j) - t).abs() > tol.max(1e-9 * p.h()) {
                    return invalid(format!("t = {t} is not a grid node"));
                }
                return Ok([s.u[j], s.du[j], s.d2u[j]]);
            }
        }
        if t >= e.end() - tol {
            return Ok(e.tail.eval(t));
        }
        invalid(format!("t = {t} outside the sampled region"))
    }

    /// Value and derivative at any `t` (cubic Hermite between nodes).
    pub fn eval(&self, edge: usize, t: f64) -> (C64, C64) {
        let e = &self.edges[edge];
        if t >= e.end() {
            let [u, du, _] = e.tail.eval(t);
            return (u, du);
        }
        for s in &e.segments {
            let p = s.piece;
            if t >= p.t0 && t <= p.t1 {
                let h = p.h();
                let j = (((t - p.t0) / h).floor() as usize).min(p.steps - 1);
                let x = (t - p.node(j)) / h;
                let (u0, u1, d0, d1) = (s.u[j], s.u[j + 1], s.du[j] * h, s.du[j + 1] * h);
                let h00 = 2.0 * x * x * x - 3.0 * x * x + 1.0;
                let h10 = x * x * x - 2.0 * x * x + x;
                let h01 = -2.0 * x * x * x + 3.0 * x * x;
                let h11 = x * x * x - x * x;
                let g00 = 6.0 * x * x - 6.0 * x;
                let g10 = 3.0 * x * x - 4.0 * x + 1.0;
                let g01 = -6.0 * x * x + 6.0 * x;
                let g11 = 3.0 * x * x - 2.0 * x;
                let u = u0 * h00 + d0 * h10 + u1 * h01 + d1 * h11;
                let du = (u0 * g00 + d0 * g10 + u1 * g01 + d1 * g11) / h;
                return (u, du);
            }
        }
        (ZERO, ZERO)
    }

    fn same_layout(&self, other: &GraphFunction) -> bool {
        self.edges.len() == other.edges.len()
            && self.edges.iter().zip(&other.edges).all(|(a, b)| {
                a.segments.len() == b.segments.len()
                    && a.segments.iter().zip(&b.segments).all(|(s, r)| s.piece == r.piece)
                    && (a.tail.start - b.tail.start).abs() < 1e-12
            })
    }

    /// `Σ a_j g_j` over functions sharing one grid.
    pub fn combine(terms: &[(C64, &GraphFunction)]) -> Result<GraphFunction> {
        let Some(&(_, first)) = terms.first() else {
            return invalid("empty combination");
        };
        let mut out = first.clone();
        for e in &mut out.edges {
            e.tail = ExpTail::zero(e.tail.start);
            for s in &mut e.segments {
                *s = SegmentSamples::zeros(s.piece);
            }
        }
        for &(a, g) in terms {
            if !out.same_layout(g) {
                return invalid("functions live on different grids");
            }
            for (oe, ge) in out.edges.iter_mut().zip(&g.edges) {
                oe.tail.add(&ge.tail.scaled(a));
                for (os, gs) in oe.segments.iter_mut().zip(&ge.segments) {
                    for j in 0..os.u.len() {
                        os.u[j] += a * gs.u[j];
                        os.du[j] += a * gs.du[j];
                        os.d2u[j] += a * gs.d2u[j];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &GraphFunction) -> Result<GraphFunction> {
        let one = C64::new(1.0, 0.0);
        Self::combine(&[(one, self), (-one, other)])
    }

    /// `⟨self, other⟩ = ∫ u conj(v)` with Hermite-corrected trapezoid on
    /// the samples and closed-form tails.
    pub fn inner(&self, other: &GraphFunction) -> Result<C64> {
        if !self.same_layout(other) {
            return invalid("functions live on different grids");
        }
        let mut sum = ZERO;
        for (a, b) in self.edges.iter().zip(&other.edges) {
            for (s, r) in a.segments.iter().zip(&b.segments) {
                let h = s.piece.h();
                let g = |j: usize| s.u[j] * r.u[j].conj();
                let dg = |j: usize| s.du[j] * r.u[j].conj() + s.u[j] * r.du[j].conj();
                for j in 0..s.piece.steps {
                    sum += (g(j) + g(j + 1)) * (0.5 * h) + (dg(j) - dg(j + 1)) * (h * h / 12.0);
                }
            }
            sum += a.tail.inner(&b.tail)?;
        }
        Ok(sum)
    }

    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.inner(self)?.re.max(0.0).sqrt())
    }

    /// `∫ u conj(f)` against a source whose breakpoints are grid nodes.
    pub fn inner_source(&self, f: &Source) -> C64 {
        let mut sum = ZERO;
        for (n, e) in self.edges.iter().enumerate() {
            for s in &e.segments {
                let p = s.piece;
                let hint = p.mid();
                let h = p.h();
                let g = |j: usize| s.u[j] * f.eval_in(n, p.node(j), hint).conj();
                let dg = |j: usize| {
                    let t = p.node(j);
                    s.du[j] * f.eval_in(n, t, hint).conj() + s.u[j] * f.eval_derivative_in(n, t, hint).conj()
                };
                for j in 0..p.steps {
                    sum += (g(j) + g(j + 1)) * (0.5 * h) + (dg(j) - dg(j + 1)) * (h * h / 12.0);
                }
            }
        }
        sum
    }

    pub fn core_segments(&self) -> impl Iterator<Item = &SegmentSamples> {
        let end = self.core_end + 1e-12 * (1.0 + self.core_end);
        self.edges
            .iter()
            .flat_map(move |e| e.segments.iter().filter(move |s| s.piece.t1 <= end))
    }

    pub fn max_abs(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.segments.iter())
            .flat_map(|s| s.u.iter())
            .map(|v| v.norm())
            .chain(self.edges.iter().map(|e| {
                let [u, _, _] = e.tail.eval(e.tail.start);
                u.norm()
            }))
            .fold(0.0, f64::max)
    }
}

pub fn norms(f: &GraphFunction) -> Result<NormReport> {
    let l2 = f.l2_norm()?;
    let mut w22 = 0.0;
    let mut c1 = 0.0f64;
    for s in f.core_segments() {
        let h = s.piece.h();
        for j in 0..s.piece.steps {
            let a = |v: &[C64], dv: &[C64], k: usize| (v[k].norm_sqr(), 2.0 * (dv[k] * v[k].conj()).re);
            let (g0, dg0) = a(&s.u, &s.du, j);
            let (g1, dg1) = a(&s.u, &s.du, j + 1);
            let (p0, dp0) = a(&s.du, &s.d2u, j);
            let (p1, dp1) = a(&s.du, &s.d2u, j + 1);
            w22 += 0.5 * h * (g0 + g1 + p0 + p1) + h * h / 12.0 * (dg0 - dg1 + dp0 - dp1);
            w22 += 0.5 * h * (s.d2u[j].norm_sqr() + s.d2u[j + 1].norm_sqr());
        }
        for j in 0..=s.piece.steps {
            c1 = c1.max(s.u[j].norm() + s.du[j].norm());
        }
    }
    Ok(NormReport {
        l2,
        sobolev_w22: w22.max(0.0).sqrt(),
        c1_sup: c1,
    })
}

/// Residual of the vertex condition for vertex data `(y_n(0), y_n'(0))`.
pub fn vertex_residual_data(values: &[C64], derivs: &[C64], cond: &VertexCondition) -> f64 {
    let weighted = |x: &[C64], y: &[C64], theta: &[f64]| -> f64 {
        let proj: C64 = x.iter().zip(theta).map(|(v, t)| v * t).sum();
        let flux: C64 = y.iter().zip(theta).map(|(v, t)| v * t).sum();
        x.iter()
            .zip(theta)
            .map(|(v, t)| (v - proj * t).norm())
            .fold(flux.norm(), f64::max)
    };
    match cond {
        VertexCondition::Dirichlet => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        VertexCondition::Kirchhoff => {
            let flux: C64 = derivs.iter().sum();
            values
                .windows(2)
                .map(|w| (w[0] - w[1]).norm())
                .fold(flux.norm(), f64::max)
        }
        VertexCondition::WeightedContinuity(theta) => weighted(values, derivs, theta),
        VertexCondition::WeightedDerivative(theta) => weighted(derivs, values, theta),
        VertexCondition::Rows { a, b } => a
            .iter()
            .zip(b)
            .map(|(ra, rb)| {
                let r: C64 = ra.iter().zip(values).map(|(c, v)| v * c).sum::<C64>()
                    + rb.iter().zip(derivs).map(|(c, v)| v * c).sum::<C64>();
                r.norm()
            })
            .fold(0.0, f64::max),
    }
}

pub fn vertex_residual(f: &GraphFunction, cond: &VertexCondition) -> f64 {
    let (values, derivs): (Vec<C64>, Vec<C64>) = (0..f.edge_count()).map(|n| f.vertex_data(n)).unzip();
    vertex_residual_data(&values, &derivs, cond)
}
