//! Transfer matrices, Cauchy problems and core boundary value problems for
//! `-u'' + p u - λ u = g` on compact segments.
//!
//! The integrator is the fourth-order Magnus scheme with two Gauss nodes,
//! applied to the affine first-order system for `(u, u')`. Each step map is
//! the exact exponential of a traceless 2x2 matrix, so the computed transfer
//! matrices keep `det = 1` to rounding and constant coefficients are
//! propagated exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::graph::{core_pieces, split, ExpTail, GraphFunction, Piece, SampleGrid, SegmentSamples, CORE_STEP};
use crate::potential::{EdgePotential, PotentialProfile};
use crate::source::Source;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Maps `(u(t0), u'(t0))` to `(u(t1), u'(t1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix(pub [[C64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Transfer across this interval followed by `next`.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&next.0, &self.0);
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix(out)
    }

    pub fn inverse(&self) -> TransferMatrix {
        let m = &self.0;
        let d = self.det();
        TransferMatrix([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

/// Right-hand side `g(s) = factor * f_edge(dilation * s)`.
#[derive(Clone, Copy, Debug)]
pub struct Forcing<'a> {
    source: &'a Source,
    edge: usize,
    dilation: f64,
    factor: f64,
}

impl<'a> Forcing<'a> {
    pub fn new(source: &'a Source, edge: usize) -> Self {
        Self::rescaled(source, edge, 1.0, 1.0)
    }

    pub fn rescaled(source: &'a Source, edge: usize, dilation: f64, factor: f64) -> Self {
        Self {
            source,
            edge,
            dilation,
            factor,
        }
    }

    pub fn value(&self, s: f64, hint: f64) -> C64 {
        self.source.eval_in(self.edge, self.dilation * s, self.dilation * hint) * self.factor
    }

    pub fn derivative(&self, s: f64, hint: f64) -> C64 {
        self.source
            .eval_derivative_in(self.edge, self.dilation * s, self.dilation * hint)
            * (self.factor * self.dilation)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.source
            .breakpoints(self.edge)
            .into_iter()
            .map(|b| b / self.dilation)
            .collect()
    }
}

/// One Magnus step of length `h` (either sign) from Gauss-node samples
/// `q = p - λ` and `g`: returns the step matrix and affine increment.
fn magnus_step(q1: C64, q2: C64, g1: C64, g2: C64, h: f64) -> ([[C64; 2]; 2], [C64; 2]) {
    const W: f64 = 0.144_337_567_297_406_43; // √3 / 12
    let a = (q1 - q2) * (W * h * h);
    let b = C64::from(h);
    let c = (q1 + q2) * (0.5 * h);
    let delta = a * a + b * c;
    let (ch, sh, dd) = if delta.norm() < 0.5 {
        // cosh √δ, sinh √δ / √δ, (cosh √δ - 1) / δ
        let mut ch = ONE;
        let mut sh = ONE;
        let mut dd = C64::from(0.5);
        let mut term = ONE;
        for j in 1..12 {
            term *= delta / ((2 * j - 1) * (2 * j)) as f64;
            ch += term;
            sh += term / (2 * j + 1) as f64;
            dd += term / ((2 * j + 1) * (2 * j + 2)) as f64;
        }
        (ch, sh, dd)
    } else {
        let r = delta.sqrt();
        let ch = r.cosh();
        (ch, r.sinh() / r, (ch - 1.0) / delta)
    };
    let e = [[ch + sh * a, sh * b], [sh * c, ch - sh * a]];
    let cm = [(g2 - g1) * (W * h * h), -(g1 + g2) * (0.5 * h)];
    let bc = [a * cm[0] + b * cm[1], c * cm[0] - a * cm[1]];
    let d = [sh * cm[0] + dd * bc[0], sh * cm[1] + dd * bc[1]];
    (e, d)
}

/// `-u'' + coupling * p u - λ u = g` on one edge.
#[derive(Clone, Copy, Debug)]
pub struct EdgeOde<'a> {
    pub potential: &'a EdgePotential,
    pub coupling: f64,
    pub lambda: C64,
    pub forcing: Option<Forcing<'a>>,
}

impl<'a> EdgeOde<'a> {
    pub fn homogeneous(potential: &'a EdgePotential, coupling: f64, lambda: C64) -> Self {
        Self {
            potential,
            coupling,
            lambda,
            forcing: None,
        }
    }

    fn q(&self, t: f64, hint: f64) -> C64 {
        C64::from(self.coupling * self.potential.eval_in(t, hint)) - self.lambda
    }

    fn g(&self, t: f64, hint: f64) -> C64 {
        self.forcing.map_or(ZERO, |f| f.value(t, hint))
    }

    fn second(&self, t: f64, hint: f64, u: C64) -> C64 {
        self.q(t, hint) * u - self.g(t, hint)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.potential.breakpoints();
        if let Some(f) = self.forcing {
            b.extend(f.breakpoints());
        }
        b
    }

    fn step(&self, t: f64, h: f64, hint: f64) -> ([[C64; 2]; 2], [C64; 2]) {
        const C1: f64 = 0.211_324_865_405_187_1; // 1/2 - √3/6
        const C2: f64 = 0.788_675_134_594_812_9;
        let (t1, t2) = (t + C1 * h, t + C2 * h);
        magnus_step(
            self.q(t1, hint),
            self.q(t2, hint),
            self.g(t1, hint),
            self.g(t2, hint),
            h,
        )
    }

    /// Homogeneous transfer across consecutive ascending pieces.
    pub fn transfer_over(&self, pieces: &[Piece]) -> TransferMatrix {
        let mut m = TransferMatrix::identity();
        for p in pieces {
            let h = p.h();
            let hint = p.mid();
            for j in 0..p.steps {
                let (e, _) = self.step(p.node(j), h, hint);
                m = m.then(&TransferMatrix(e));
            }
        }
        m
    }

    /// Integrate across ascending pieces, starting at the left end
    /// (`backward = false`) or at the right end (`backward = true`) with
    /// Cauchy data `init`; samples are returned in ascending order.
    pub fn propagate(&self, pieces: &[Piece], backward: bool, init: [C64; 2]) -> Vec<SegmentSamples> {
        let mut out: Vec<SegmentSamples> = pieces.iter().map(|&p| SegmentSamples::zeros(p)).collect();
        let mut y = init;
        let order: Vec<usize> = if backward {
            (0..pieces.len()).rev().collect()
        } else {
            (0..pieces.len()).collect()
        };
        for k in order {
            let p = pieces[k];
            let hint = p.mid();
            let seg = &mut out[k];
            let h = if backward { -p.h() } else { p.h() };
            let nodes: Vec<usize> = if backward {
                (0..=p.steps).rev().collect()
            } else {
                (0..=p.steps).collect()
            };
            for (idx, &j) in nodes.iter().enumerate() {
                let t = p.node(j);
                seg.u[j] = y[0];
                seg.du[j] = y[1];
                seg.d2u[j] = self.second(t, hint, y[0]);
                if idx + 1 < nodes.len() {
                    let (e, d) = self.step(t, h, hint);
                    y = [
                        e[0][0] * y[0] + e[0][1] * y[1] + d[0],
                        e[1][0] * y[0] + e[1][1] * y[1] + d[1],
                    ];
                }
            }
        }
        out
    }
}

fn check_step(len: f64, step: f64) -> Result<()> {
    if !(step > 0.0) || step > len {
        return invalid(format!("step {step} must be positive and at most the interval length {len}"));
    }
    Ok(())
}

/// Transfer matrix of `-u'' + coupling * p u = λ u` from `t0` to `t1`.
pub fn transfer(
    p: &EdgePotential,
    coupling: f64,
    lambda: C64,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<TransferMatrix> {
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    check_step(hi - lo, step)?;
    let ode = EdgeOde::homogeneous(p, coupling, lambda);
    let m = ode.transfer_over(&split(lo, hi, &ode.breakpoints(), step));
    Ok(if t0 <= t1 { m } else { m.inverse() })
}

/// Transfer across `[0, ε]` for `-u'' + α ε⁻² Q(t/ε) u = k² u`, via the
/// unit-interval problem with spectral parameter `ε² k²`.
pub fn scaled_transfer(q: &EdgePotential, alpha: f64, eps: f64, k2: C64) -> Result<TransferMatrix> {
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    let m = transfer(q, alpha, k2 * eps * eps, 0.0, 1.0, CORE_STEP)?.0;
    Ok(TransferMatrix([
        [m[0][0], m[0][1] * eps],
        [m[1][0] / eps, m[1][1]],
    ]))
}

/// Solution of `-u'' + coupling * p u - λ u = g` with `(u, u')(t0) = init`,
/// sampled from `t0` towards `t1` (either direction).
#[allow(clippy::too_many_arguments)]
pub fn solve_cauchy(
    p: &EdgePotential,
    coupling: f64,
    lambda: C64,
    forcing: Option<Forcing<'_>>,
    t0: f64,
    t1: f64,
    init: [C64; 2],
    step: f64,
) -> Result<Vec<SegmentSamples>> {
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    check_step(hi - lo, step)?;
    let ode = EdgeOde {
        potential: p,
        coupling,
        lambda,
        forcing,
    };
    Ok(ode.propagate(&split(lo, hi, &ode.breakpoints(), step), t1 < t0, init))
}

/// Core problems `-u'' + α Q u = g` on the unit core with Kirchhoff
/// conditions at the vertex and prescribed outer derivatives `u_n'(1)`.
///
/// Each edge carries the backward Neumann solution `U_n` with
/// `U_n(1) = 1`, `U_n'(1) = 0`; these are also the resonance data.
#[derive(Clone, Debug)]
pub struct CoreSolver<'a> {
    q: &'a PotentialProfile,
    alpha: f64,
    pieces: Vec<Vec<Piece>>,
    neumann: Vec<Vec<SegmentSamples>>,
}

/// Solution of a core problem together with its diagnostics.
#[derive(Clone, Debug)]
pub struct CoreSolution {
    /// `u` on the unit core in the scaled variable, `core_end = 1`
    pub u: GraphFunction,
    /// `u_n(1)`
    pub outer_values: Vec<C64>,
    /// least-squares residual of the center system (Fredholm compatibility)
    pub compatibility_residual: f64,
}

/// Relative tolerance for the Fredholm compatibility residual.
pub const COMPATIBILITY_TOL: f64 = 1e-7;
/// Relative singular value below which the center system counts as singular.
pub const RANK_TOL: f64 = 1e-8;

impl<'a> CoreSolver<'a> {
    pub fn new(q: &'a PotentialProfile, alpha: f64, pieces: Vec<Vec<Piece>>) -> Self {
        let neumann = pieces
            .iter()
            .enumerate()
            .map(|(n, p)| EdgeOde::homogeneous(q.edge(n), alpha, ZERO).propagate(p, true, [ONE, ZERO]))
            .collect();
        Self {
            q,
            alpha,
            pieces,
            neumann,
        }
    }

    /// Solver on the grid used for the ε-problem with the given sources.
    pub fn for_eps(q: &'a PotentialProfile, alpha: f64, eps: f64, sources: &[&Source]) -> Self {
        let pieces = (0..q.edge_count()).map(|n| core_pieces(q, n, eps, sources)).collect();
        Self::new(q, alpha, pieces)
    }

    pub fn edge_count(&self) -> usize {
        self.q.edge_count()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pieces(&self, edge: usize) -> &[Piece] {
        &self.pieces[edge]
    }

    /// `(U_n(0), U_n'(0))`.
    pub fn center_data(&self, edge: usize) -> (f64, f64) {
        let s = &self.neumann[edge][0];
        (s.u[0].re, s.du[0].re)
    }

    /// Continuity rows `U_n(0) c_n - U_{n+1}(0) c_{n+1}` and the Kirchhoff row
    /// `Σ U_n'(0) c_n`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.edge_count();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (u0, du0) = self.center_data(i);
            if i + 1 < n {
                m[(i, i)] = u0;
                m[(i, i + 1)] = -self.center_data(i + 1).0;
            }
            m[(n - 1, i)] = du0;
        }
        m
    }

    fn grid(&self) -> SampleGrid {
        SampleGrid::from_pieces(self.pieces.clone(), 1.0).expect("core pieces tile [0, 1]")
    }

    fn assemble(&self, per_edge: Vec<Vec<SegmentSamples>>) -> GraphFunction {
        let grid = self.grid();
        let mut g = GraphFunction::zero(&grid);
        for (e, segs) in g.edges.iter_mut().zip(per_edge) {
            e.segments = segs;
            e.tail = ExpTail::zero(1.0);
        }
        g
    }

    /// `Σ_n c_n U_n`, a solution of the homogeneous core problem whenever
    /// `c` lies in the kernel of [`Self::matrix`].
    pub fn kernel_function(&self, coeffs: &[f64]) -> GraphFunction {
        let per_edge = self
            .neumann
            .iter()
            .zip(coeffs)
            .map(|(segs, &c)| {
                segs.iter()
                    .map(|s| SegmentSamples {
                        piece: s.piece,
                        u: s.u.iter().map(|v| v * c).collect(),
                        du: s.du.iter().map(|v| v * c).collect(),
                        d2u: s.d2u.iter().map(|v| v * c).collect(),
                    })
                    .collect()
            })
            .collect();
        self.assemble(per_edge)
    }

    /// Solve with right-hand side `forcing[n]` on edge `n`, outer data
    /// `u_n'(1) = neumann[n]` and `u_p(1) = 0` for every pinned edge `p`.
    pub fn solve(&self, forcing: &[Option<Forcing<'_>>], neumann: &[C64], pins: &[usize]) -> Result<CoreSolution> {
        let n = self.edge_count();
        if forcing.len() != n || neumann.len() != n {
            return invalid("core problem data must have one entry per edge");
        }
        let particular: Vec<Vec<SegmentSamples>> = (0..n)
            .map(|e| {
                let ode = EdgeOde {
                    potential: self.q.edge(e),
                    coupling: self.alpha,
                    lambda: ZERO,
                    forcing: forcing[e],
                };
                ode.propagate(&self.pieces[e], true, [ZERO, neumann[e]])
            })
            .collect();
        let p0: Vec<(C64, C64)> = particular.iter().map(|s| (s[0].u[0], s[0].du[0])).collect();
        let mut rhs = DVector::zeros(n);
        for i in 0..n - 1 {
            rhs[i] = p0[i + 1].0 - p0[i].0;
        }
        rhs[n - 1] = -p0.iter().map(|p| p.1).sum::<C64>();

        let free: Vec<usize> = (0..n).filter(|e| !pins.contains(e)).collect();
        let full = self.matrix().map(C64::from);
        let reduced = DMatrix::from_fn(n, free.len(), |i, j| full[(i, free[j])]);
        let svd = reduced.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let deficient = svd
            .singular_values
            .iter()
            .filter(|&&s| s <= RANK_TOL * smax.max(f64::MIN_POSITIVE))
            .count();
        if deficient > 0 || free.len() > n {
            return Err(Error::NonUnique { dimension: deficient });
        }
        let b = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Numerical(format!("core least squares: {e}")))?;
        let residual = (&reduced * &b - &rhs).norm();
        let scale = rhs.norm() + neumann.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if residual > COMPATIBILITY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Incompatible {
                residual: residual / scale,
                tolerance: COMPATIBILITY_TOL,
            });
        }
        let mut coeff = vec![ZERO; n];
        for (j, &e) in free.iter().enumerate() {
            coeff[e] = b[j];
        }
        let per_edge: Vec<Vec<SegmentSamples>> = particular
            .into_iter()
            .zip(&self.neumann)
            .zip(&coeff)
            .map(|((mut ps, us), &c)| {
                for (p, u) in ps.iter_mut().zip(us) {
                    for j in 0..p.u.len() {
                        p.u[j] += c * u.u[j];
                        p.du[j] += c * u.du[j];
                        p.d2u[j] += c * u.d2u[j];
                    }
                }
                ps
            })
            .collect();
        Ok(CoreSolution {
            u: self.assemble(per_edge),
            outer_values: coeff,
            compatibility_residual: if scale > 0.0 { residual / scale } else { 0.0 },
        })
    }
}

/// `-u'' + α Q u = ε f(ε ·)` on the unit core with Kirchhoff conditions at
/// the vertex, `u_n'(1) = neumann[n]` and `u_p(1) = 0` on pinned edges.
pub fn solve_core_bvp(
    alpha: f64,
    q: &PotentialProfile,
    eps: f64,
    f: &Source,
    neumann: &[C64],
    pins: &[usize],
) -> Result<CoreSolution> {
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    let solver = CoreSolver::for_eps(q, alpha, eps, &[f]);
    let forcing: Vec<Option<Forcing>> = (0..q.edge_count())
        .map(|n| Some(Forcing::rescaled(f, n, eps, eps)))
        .collect();
    solver.solve(&forcing, neumann, pins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Side;

    fn close(m: &TransferMatrix, want: [[f64; 2]; 2], tol: f64) {
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.0[i][j] - want[i][j]).norm() < tol, "{:?} vs {:?}", m.0, want);
            }
        }
    }

    #[test]
    fn transfer_closed_forms() {
        let zero = EdgePotential::zero();
        let m = transfer(&zero, 0.0, ZERO, 0.0, 1.0, 1e-3).unwrap();
        close(&m, [[1.0, 1.0], [0.0, 1.0]], 1e-13);
        let k = 2.3f64;
        let m = transfer(&zero, 0.0, C64::from(k * k), 0.0, 1.0, 1e-3).unwrap();
        close(&m, [[k.cos(), k.sin() / k], [-k * k.sin(), k.cos()]], 1e-12);
        let one = EdgePotential::constant(1.0, 0.0, 1.0);
        let m = transfer(&one, 1.0, ZERO, 0.0, 1.0, 1e-3).unwrap();
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        close(&m, [[c, s], [s, c]], 1e-12);
        assert!(transfer(&one, 1.0, ZERO, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn scaled_transfer_identities() {
        let one = EdgePotential::constant(1.0, 0.0, 1.0);
        let eps = 0.125;
        let m = scaled_transfer(&EdgePotential::zero(), 3.0, eps, ZERO).unwrap();
        close(&m, [[1.0, eps], [0.0, 1.0]], 1e-14);
        let k2 = C64::from(4.0);
        let a = scaled_transfer(&one, 0.0, eps, k2).unwrap();
        let b = transfer(&EdgePotential::zero(), 0.0, k2, 0.0, eps, 1e-4).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        let a = scaled_transfer(&one, 1.0, 1.0, ZERO).unwrap();
        let b = transfer(&one, 1.0, ZERO, 0.0, 1.0, 1e-3).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
        assert!(scaled_transfer(&one, 1.0, 0.0, ZERO).is_err());
    }

    #[test]
    fn composition_and_fourth_order() {
        let q = PotentialProfile::from_json(
            r#"{"edges": [[{"interval": [0.0, 0.4], "coeffs": [3.0, -5.0, 2.0]},
                           {"interval": [0.4, 1.0], "coeffs": [0.0, 1.0, 0.0, -4.0]}]]}"#,
        )
        .unwrap();
        let p = q.edge(0);
        let lam = C64::new(2.0, 0.5);
        let whole = transfer(p, 1.5, lam, 0.0, 1.0, 1e-3).unwrap();
        let left = transfer(p, 1.5, lam, 0.0, 0.63, 1e-3).unwrap();
        let right = transfer(p, 1.5, lam, 0.63, 1.0, 1e-3).unwrap();
        assert!(whole.max_abs_diff(&left.then(&right)) < 1e-9);
        let coarse = transfer(p, 1.5, lam, 0.0, 1.0, 0.02).unwrap();
        let mid = transfer(p, 1.5, lam, 0.0, 1.0, 0.01).unwrap();
        let fine = transfer(p, 1.5, lam, 0.0, 1.0, 0.005).unwrap();
        let ratio = coarse.max_abs_diff(&mid) / mid.max_abs_diff(&fine);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
        assert!((whole.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn cauchy_examples() {
        let zero = EdgePotential::zero();
        let f = Source::single(1, 0, 0.0, 1.0, vec![ONE]).unwrap();
        let sol = solve_cauchy(&zero, 0.0, ZERO, Some(Forcing::new(&f, 0)), 0.0, 1.0, [ZERO, ZERO], 1e-2).unwrap();
        for s in &sol {
            for j in 0..=s.piece.steps {
                let t = s.piece.node(j);
                assert!((s.u[j] + 0.5 * t * t).norm() < 1e-13);
                assert!((s.d2u[j] + 1.0).norm() < 1e-13);
            }
        }
        let one = EdgePotential::constant(1.0, 0.0, 1.0);
        let sol = solve_cauchy(&one, 1.0, ZERO, None, 1.0, 0.0, [ONE, ZERO], 1e-3).unwrap();
        for s in &sol {
            for j in (0..=s.piece.steps).step_by(50) {
                let t = s.piece.node(j);
                assert!((s.u[j] - (1.0 - t).cosh()).norm() < 1e-12);
            }
        }
        let zero_sol = solve_cauchy(&one, 1.0, ZERO, None, 0.0, 1.0, [ZERO, ZERO], 1e-3).unwrap();
        assert!(zero_sol.iter().all(|s| s.u.iter().all(|v| *v == ZERO)));
    }

    #[test]
    fn core_bvp_zero_data_gives_zero() {
        let q = PotentialProfile::constant(3, 1.0);
        let f = Source::zero(3);
        let sol = solve_core_bvp(1.0, &q, 0.25, &f, &[ZERO; 3], &[]).unwrap();
        assert!(sol.u.max_abs() < 1e-15);
    }

    #[test]
    fn core_bvp_satisfies_conditions() {
        let q = PotentialProfile::constant(3, 1.0);
        let f = Source::single(3, 1, 0.0, 0.1, vec![ONE, C64::new(0.0, 2.0)]).unwrap();
        let data = [C64::new(0.5, 0.0), C64::new(-1.0, 0.2), C64::new(0.0, 1.0)];
        let sol = solve_core_bvp(1.0, &q, 0.2, &f, &data, &[]).unwrap();
        let u = &sol.u;
        let v: Vec<(C64, C64)> = (0..3).map(|n| u.vertex_data(n)).collect();
        assert!((v[0].0 - v[1].0).norm() < 1e-12 && (v[1].0 - v[2].0).norm() < 1e-12);
        assert!((v[0].1 + v[1].1 + v[2].1).norm() < 1e-12);
        for n in 0..3 {
            let [_, du, _] = u.at_node(n, 1.0, Side::Left).unwrap();
            assert!((du - data[n]).norm() < 1e-13);
        }
    }

    #[test]
    fn resonant_core_problem_needs_compatible_data() {
        let q = PotentialProfile::constant(3, 1.0);
        let alpha = -std::f64::consts::PI.powi(2);
        let f = Source::zero(3);
        // kernel θ ∝ (1, 1, 1): compatible iff Σ d_n = 0
        let good = [C64::from(1.0), C64::from(-2.0), C64::from(1.0)];
        let sol = solve_core_bvp(alpha, &q, 0.5, &f, &good, &[0]).unwrap();
        assert!(sol.outer_values[0].norm() < 1e-14);
        let bad = [C64::from(1.0), C64::from(0.0), C64::from(0.0)];
        assert!(matches!(
            solve_core_bvp(alpha, &q, 0.5, &f, &bad, &[0]),
            Err(Error::Incompatible { .. })
        ));
        assert!(matches!(
            solve_core_bvp(alpha, &q, 0.5, &f, &good, &[]),
            Err(Error::NonUnique { .. })
        ));
    }
}
