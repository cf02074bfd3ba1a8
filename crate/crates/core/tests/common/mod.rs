//! Independent oracles shared by the integration tests.
//!
//! The finite-difference solver uses the plain three-point stencil on a
//! piecewise uniform grid whose nodes include every break of the potential
//! and of the source, half-cell flux balances at the vertex and at the far
//! end, and one Richardson step (grids `h` and `h/2`).

#![allow(dead_code)]

pub mod cases;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug)]
pub enum FdVertex {
    Dirichlet,
    Kirchhoff,
    Continuity(Vec<f64>),
    Derivative(Vec<f64>),
}

#[derive(Clone, Copy, Debug)]
pub enum FdEnd {
    /// `u(L) = 0`
    Dirichlet,
    /// `u'(L) - ik u(L) = g_n`, free potential near `L`
    Radiating { k: f64 },
}

pub struct FdProblem<'a> {
    pub edges: usize,
    pub length: f64,
    /// grid breaks in `(0, L)`, shared by all edges
    pub breaks: Vec<f64>,
    /// target step per segment, as `(segment end, step)`
    pub steps: Vec<(f64, f64)>,
    pub potential: &'a dyn Fn(usize, f64) -> f64,
    pub source: &'a dyn Fn(usize, f64) -> C64,
    pub zeta: C64,
    pub vertex: FdVertex,
    pub end: FdEnd,
    /// right-hand side of the end condition per edge
    pub end_data: Vec<C64>,
}

pub struct FdSolution {
    pub nodes: Vec<f64>,
    /// `values[n][j]` on edge `n` at `nodes[j]`
    pub values: Vec<Vec<C64>>,
    /// largest difference between the `h` and `h/2` solutions
    pub richardson_gap: f64,
}

fn grid(p: &FdProblem, refine: usize) -> Vec<f64> {
    let mut cuts = vec![0.0];
    cuts.extend(p.breaks.iter().copied().filter(|&b| b > 0.0 && b < p.length));
    cuts.push(p.length);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut nodes = vec![0.0];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = p
            .steps
            .iter()
            .find(|&&(end, _)| b <= end + 1e-12)
            .map_or(p.steps.last().unwrap().1, |s| s.1);
        let m = ((b - a) / step).ceil().max(1.0) as usize * refine;
        for j in 1..=m {
            nodes.push(if j == m { b } else { a + (b - a) * j as f64 / m as f64 });
        }
    }
    nodes
}

/// One-sided values at `t` weighted by the adjacent steps, which is what the
/// nonuniform three-point stencil sees across a jump.
fn avg<T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>>(
    f: impl Fn(f64) -> T,
    t: f64,
    hm: f64,
    hp: f64,
) -> T {
    let d = 1e-12 * t.abs().max(1.0);
    f(t - d) * (hm / (hm + hp)) + f(t + d) * (hp / (hm + hp))
}

/// Tridiagonal solve (Thomas), rows `lo[j] x[j-1] + di[j] x[j] + up[j] x[j+1] = r[j]`.
fn thomas(lo: &[C64], di: &[C64], up: &[C64], r: &[C64]) -> Vec<C64> {
    let n = di.len();
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    c[0] = up[0] / di[0];
    d[0] = r[0] / di[0];
    for j in 1..n {
        let m = di[j] - lo[j] * c[j - 1];
        c[j] = up[j] / m;
        d[j] = (r[j] - lo[j] * d[j - 1]) / m;
    }
    let mut x = vec![ZERO; n];
    x[n - 1] = d[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    x
}

fn solve_once(p: &FdProblem, refine: usize) -> (Vec<f64>, Vec<Vec<C64>>) {
    let t = grid(p, refine);
    let m = t.len() - 1;
    let n_edges = p.edges;
    // per edge: u = a + u(0) b on nodes 1..=m
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut p_coef = Vec::new();
    let mut q_coef = Vec::new();
    for n in 0..n_edges {
        let v = |s: f64| (p.potential)(n, s);
        let f = |s: f64| (p.source)(n, s);
        let mut lo = vec![ZERO; m];
        let mut di = vec![ZERO; m];
        let mut up = vec![ZERO; m];
        let mut ra = vec![ZERO; m];
        let mut rb = vec![ZERO; m];
        for j in 1..m {
            let hm = t[j] - t[j - 1];
            let hp = t[j + 1] - t[j];
            let w = 2.0 / (hm + hp);
            let row = j - 1;
            lo[row] = C64::from(-w / hm);
            up[row] = C64::from(-w / hp);
            di[row] = C64::from(w / hm + w / hp + avg(v, t[j], hm, hp)) - p.zeta;
            ra[row] = avg(f, t[j], hm, hp);
            if j == 1 {
                rb[row] = C64::from(w / hm);
                lo[row] = ZERO;
            }
        }
        let h = t[m] - t[m - 1];
        let last = m - 1;
        match p.end {
            FdEnd::Dirichlet => {
                lo[last] = ZERO;
                di[last] = ONE;
                ra[last] = p.end_data[n];
            }
            FdEnd::Radiating { k } => {
                // (u_m - u_{m-1})/h + h/2 ((V - ζ) u_m - f_m) - ik u_m = g
                let vm = v(t[m] - 1e-12);
                lo[last] = C64::from(-1.0 / h);
                di[last] = C64::from(1.0 / h) + (C64::from(vm) - p.zeta) * (h / 2.0) - C64::new(0.0, k);
                ra[last] = p.end_data[n] + f(t[m] - 1e-12) * (h / 2.0);
            }
        }
        if m == 1 {
            panic!("grid too coarse");
        }
        let xa = thomas(&lo, &di, &up, &ra);
        let xb = thomas(&lo, &di, &up, &rb);
        let h1 = t[1];
        let v0 = v(0.5 * 1e-12);
        let f0 = f(0.5 * 1e-12);
        // u'(0) ≈ (u_1 - u_0)/h - h/2 ((V - ζ) u_0 - f_0) = p + q u_0
        p_coef.push(xa[0] / h1 + f0 * (h1 / 2.0));
        q_coef.push((xb[0] - ONE) / h1 - (C64::from(v0) - p.zeta) * (h1 / 2.0));
        a.push(xa);
        b.push(xb);
    }
    let mut mat = DMatrix::<C64>::zeros(n_edges, n_edges);
    let mut rhs = DVector::<C64>::zeros(n_edges);
    let argmax = |th: &[f64]| (0..th.len()).fold(0, |best, i| if th[i].abs() > th[best].abs() { i } else { best });
    match &p.vertex {
        FdVertex::Dirichlet => {
            for n in 0..n_edges {
                mat[(n, n)] = ONE;
            }
        }
        FdVertex::Kirchhoff => {
            for n in 0..n_edges - 1 {
                mat[(n, n)] = ONE;
                mat[(n, n + 1)] = -ONE;
            }
            for n in 0..n_edges {
                mat[(n_edges - 1, n)] = q_coef[n];
                rhs[n_edges - 1] -= p_coef[n];
            }
        }
        FdVertex::Continuity(th) => {
            let pin = argmax(th);
            let mut row = 0;
            for n in (0..n_edges).filter(|&n| n != pin) {
                mat[(row, n)] += C64::from(th[pin]);
                mat[(row, pin)] -= C64::from(th[n]);
                row += 1;
            }
            for n in 0..n_edges {
                mat[(row, n)] = q_coef[n] * th[n];
                rhs[row] -= p_coef[n] * th[n];
            }
        }
        FdVertex::Derivative(th) => {
            let pin = argmax(th);
            let mut row = 0;
            for n in (0..n_edges).filter(|&n| n != pin) {
                // θ_p d_n - θ_n d_p = 0
                mat[(row, n)] += q_coef[n] * th[pin];
                mat[(row, pin)] -= q_coef[pin] * th[n];
                rhs[row] -= p_coef[n] * th[pin] - p_coef[pin] * th[n];
                row += 1;
            }
            for n in 0..n_edges {
                mat[(row, n)] = C64::from(th[n]);
            }
        }
    }
    let c = mat.lu().solve(&rhs).expect("oracle vertex system is singular");
    let values = (0..n_edges)
        .map(|n| {
            let mut u = vec![c[n]];
            u.extend(a[n].iter().zip(&b[n]).map(|(x, y)| x + c[n] * y));
            u
        })
        .collect();
    (t, values)
}

pub fn fd_solve(p: &FdProblem) -> FdSolution {
    let (t, coarse) = solve_once(p, 1);
    let (_, fine) = solve_once(p, 2);
    let mut gap = 0.0f64;
    let values = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| {
            c.iter()
                .enumerate()
                .map(|(j, &u)| {
                    gap = gap.max((f[2 * j] - u).norm());
                    (f[2 * j] * 4.0 - u) / 3.0
                })
                .collect()
        })
        .collect();
    FdSolution {
        nodes: t,
        values,
        richardson_gap: gap,
    }
}

impl FdSolution {
    /// L² distance to `g` on the truncated graph (trapezoid on the nodes).
    pub fn l2_distance(&self, g: impl Fn(usize, f64) -> C64) -> f64 {
        let mut sum = 0.0;
        for (n, u) in self.values.iter().enumerate() {
            let d: Vec<f64> = self.nodes.iter().zip(u).map(|(&t, &v)| (g(n, t) - v).norm_sqr()).collect();
            for j in 0..d.len() - 1 {
                sum += 0.5 * (d[j] + d[j + 1]) * (self.nodes[j + 1] - self.nodes[j]);
            }
        }
        sum.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_distance(|_, _| ZERO)
    }
}

/// `(u, u')` after `x` for `u'' = c u` from `(u0, u1)`.
fn const_transfer(c: f64, x: f64, u0: f64, u1: f64) -> (f64, f64) {
    if c > 0.0 {
        let s = c.sqrt();
        (u0 * (s * x).cosh() + u1 * (s * x).sinh() / s, u0 * s * (s * x).sinh() + u1 * (s * x).cosh())
    } else if c < 0.0 {
        let s = (-c).sqrt();
        (u0 * (s * x).cos() + u1 * (s * x).sin() / s, -u0 * s * (s * x).sin() + u1 * (s * x).cos())
    } else {
        (u0 + u1 * x, u1)
    }
}

/// `f'(1)` for `-f'' + αQf = 0` on `[-1, 1]` with `f(-1) = 1`, `f'(-1) = 0`
/// and `Q` piecewise constant: `(x_start, x_end, value)` covering `[-1, 1]`.
pub fn line_shooting(alpha: f64, q: &[(f64, f64, f64)]) -> f64 {
    let (mut u, mut du) = (1.0, 0.0);
    for &(a, b, v) in q {
        (u, du) = const_transfer(alpha * v, b - a, u, du);
    }
    du / (u.abs() + du.abs()).max(1.0)
}

/// Roots of [`line_shooting`] in `[lo, hi]` from a dense scan with step
/// `step`, refined by bisection.
pub fn line_roots(q: &[(f64, f64, f64)], lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let f = |a: f64| line_shooting(a, q);
    let n = ((hi - lo) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev = (lo, f(lo));
    for i in 1..=n {
        let x = (lo + i as f64 * step).min(hi);
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if prev.1 * fx < 0.0 {
            let (mut a, mut b, mut fa) = (prev.0, x, prev.1);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm * fa <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
                if b - a < 1e-14 {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (x, fx);
    }
    roots
}

/// `max / min`; infinite when the minimum is not positive.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Largest growth `v_j / v_i` over `i < j` (values ordered by decreasing `ε`).
pub fn growth(values: &[f64]) -> f64 {
    let mut g = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            g = g.max(values[j] / values[i]);
        }
    }
    g
}

pub fn eps_list(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 0.5f64.powi(k)).collect()
}

pub fn poly_mul(p: &[C64], q: &[C64]) -> Vec<C64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn poly_add(p: &[C64], q: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; p.len().max(q.len())];
    for (i, a) in p.iter().enumerate() {
        out[i] += a;
    }
    for (i, b) in q.iter().enumerate() {
        out[i] += b;
    }
    out
}

pub fn poly_derivative(p: &[C64]) -> Vec<C64> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// Coefficients of `p(x + a)`.
pub fn poly_shift(p: &[C64], a: f64) -> Vec<C64> {
    let mut out = vec![ZERO; p.len()];
    let mut power = vec![ONE];
    for c in p {
        for (k, v) in power.iter().enumerate() {
            out[k] += c * v;
        }
        power = poly_mul(&power, &[C64::from(a), ONE]);
    }
    out
}

pub fn poly_eval(p: &[C64], x: f64) -> C64 {
    p.iter().rev().fold(ZERO, |acc, c| acc * x + c)
}
