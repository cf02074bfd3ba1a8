//! Compactly supported piecewise-polynomial sources `f` on the star graph.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::{self, Side};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePiece {
    pub t0: f64,
    pub t1: f64,
    /// coefficients in `x = t - t0`
    pub coeffs: Vec<C64>,
}

impl SourcePiece {
    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn is_empty(&self) -> bool {
        self.t1 <= self.t0
    }

    fn eval(&self, t: f64) -> C64 {
        poly::horner(&self.coeffs, t - self.t0)
    }

    fn eval_derivative(&self, t: f64) -> C64 {
        poly::horner(&poly::derivative(&self.coeffs), t - self.t0)
    }
}

/// A source is a list of non-overlapping polynomial pieces on each edge;
/// it vanishes outside the pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    edges: Vec<Vec<SourcePiece>>,
}

impl Source {
    pub fn zero(edge_count: usize) -> Self {
        Self {
            edges: vec![Vec::new(); edge_count],
        }
    }

    pub fn new(mut edges: Vec<Vec<SourcePiece>>) -> Result<Self> {
        for (n, pieces) in edges.iter_mut().enumerate() {
            pieces.retain(|p| !p.is_empty());
            pieces.sort_by(|a, b| a.t0.total_cmp(&b.t0));
            for p in pieces.iter() {
                if p.t0 < 0.0 || !p.t1.is_finite() {
                    return invalid(format!("edge {n}: piece [{}, {}] out of range", p.t0, p.t1));
                }
            }
            for w in pieces.windows(2) {
                if w[1].t0 < w[0].t1 - 1e-14 {
                    return invalid(format!("edge {n}: overlapping source pieces"));
                }
            }
        }
        Ok(Self { edges })
    }

    /// `f = coeffs(t - t0)` on `[t0, t1]` of a single edge.
    pub fn single(edge_count: usize, edge: usize, t0: f64, t1: f64, coeffs: Vec<C64>) -> Result<Self> {
        let mut edges = vec![Vec::new(); edge_count];
        edges[edge].push(SourcePiece { t0, t1, coeffs });
        Self::new(edges)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn pieces(&self, edge: usize) -> &[SourcePiece] {
        &self.edges[edge]
    }

    pub fn eval(&self, edge: usize, t: f64) -> C64 {
        self.eval_side(edge, t, Side::Right)
    }

    pub fn eval_side(&self, edge: usize, t: f64, side: Side) -> C64 {
        for p in &self.edges[edge] {
            let inside = match side {
                Side::Right => t >= p.t0 && t < p.t1,
                Side::Left => t > p.t0 && t <= p.t1,
            };
            if inside {
                return p.eval(t);
            }
        }
        C64::new(0.0, 0.0)
    }

    pub(crate) fn eval_in(&self, edge: usize, t: f64, hint: f64) -> C64 {
        for p in &self.edges[edge] {
            if hint >= p.t0 && hint <= p.t1 {
                return p.eval(t);
            }
        }
        C64::new(0.0, 0.0)
    }

    pub(crate) fn eval_derivative_in(&self, edge: usize, t: f64, hint: f64) -> C64 {
        for p in &self.edges[edge] {
            if hint >= p.t0 && hint <= p.t1 {
                return p.eval_derivative(t);
            }
        }
        C64::new(0.0, 0.0)
    }

    pub fn breakpoints(&self, edge: usize) -> Vec<f64> {
        let mut b: Vec<f64> = self.edges[edge]
            .iter()
            .flat_map(|p| [p.t0, p.t1])
            .filter(|&t| t > 0.0)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        b
    }

    /// Smallest `R` with `supp f ⊂ {t <= R}` on every edge.
    pub fn support_radius(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.iter().map(|p| p.t1))
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.edges
            .iter()
            .flatten()
            .map(|p| poly::inner_product_integral(&p.coeffs, &p.coeffs, p.len()).re)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    pub fn inner(&self, other: &Source) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for (a_edge, b_edge) in self.edges.iter().zip(&other.edges) {
            for a in a_edge {
                for b in b_edge {
                    let lo = a.t0.max(b.t0);
                    let hi = a.t1.min(b.t1);
                    if hi > lo {
                        let pa = poly::taylor_shift(&a.coeffs, lo - a.t0);
                        let pb = poly::taylor_shift(&b.coeffs, lo - b.t0);
                        sum += poly::inner_product_integral(&pa, &pb, hi - lo);
                    }
                }
            }
        }
        sum
    }

    pub fn scaled(&self, factor: C64) -> Source {
        Source {
            edges: self
                .edges
                .iter()
                .map(|e| {
                    e.iter()
                        .map(|p| SourcePiece {
                            t0: p.t0,
                            t1: p.t1,
                            coeffs: p.coeffs.iter().map(|c| c * factor).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// `Σ_j weights[j] * sources[j]`; the sources must share their piece layout.
    pub fn combine(sources: &[Source], weights: &[C64]) -> Result<Source> {
        let Some(first) = sources.first() else {
            return invalid("empty combination");
        };
        let mut out = first.scaled(C64::new(0.0, 0.0));
        for (s, w) in sources.iter().zip(weights) {
            if s.edges.len() != out.edges.len() {
                return invalid("edge count mismatch in combination");
            }
            for (oe, se) in out.edges.iter_mut().zip(&s.edges) {
                if oe.len() != se.len() {
                    return invalid("piece layout mismatch in combination");
                }
                for (op, sp) in oe.iter_mut().zip(se) {
                    if (op.t0 - sp.t0).abs() > 1e-14 || (op.t1 - sp.t1).abs() > 1e-14 {
                        return invalid("piece layout mismatch in combination");
                    }
                    if op.coeffs.len() < sp.coeffs.len() {
                        op.coeffs.resize(sp.coeffs.len(), C64::new(0.0, 0.0));
                    }
                    for (oc, sc) in op.coeffs.iter_mut().zip(&sp.coeffs) {
                        *oc += sc * w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `‖f(ε ·)‖` over the unit core `Ω` (all edges, `t ∈ [0, 1]`).
    pub fn rescaled_core_norm(&self, eps: f64) -> f64 {
        let mut sum = 0.0;
        for p in self.edges.iter().flatten() {
            // ∫_0^1 |f(εs)|² ds = ε⁻¹ ∫_0^ε |f(t)|² dt
            let hi = p.t1.min(eps);
            if hi > p.t0 {
                sum += poly::inner_product_integral(&p.coeffs, &p.coeffs, hi - p.t0).re;
            }
        }
        (sum / eps).max(0.0).sqrt()
    }

    /// A single edge-wise piece layout with uniform panels of width
    /// `panel` on `[0, radius]` and random complex coefficients of the
    /// given degree, normalized to unit L² norm.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        edge_count: usize,
        radius: f64,
        panels: usize,
        degree: usize,
    ) -> Result<Source> {
        if panels == 0 || radius <= 0.0 {
            return invalid("random source needs a positive radius and at least one panel");
        }
        let width = radius / panels as f64;
        let edges = (0..edge_count)
            .map(|_| {
                (0..panels)
                    .map(|k| SourcePiece {
                        t0: k as f64 * width,
                        t1: (k + 1) as f64 * width,
                        coeffs: (0..=degree)
                            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        let s = Source::new(edges)?;
        let norm = s.l2_norm();
        Ok(s.scaled(C64::new(1.0 / norm, 0.0)))
    }

    /// [`Source::random`] with an extra vertex layer: two panels of width
    /// `layer` at the vertex carrying amplitude `layer^{-1/2}`, so the layer
    /// keeps a fixed share of the norm as `layer → 0`.
    pub fn random_layered<R: Rng + ?Sized>(
        rng: &mut R,
        edge_count: usize,
        radius: f64,
        panels: usize,
        degree: usize,
        layer: f64,
    ) -> Result<Source> {
        if !(layer > 0.0) || 2.0 * layer >= radius {
            return invalid("vertex layer must be positive and inside the support");
        }
        let base = Source::random(rng, edge_count, radius, panels, degree)?;
        let amp = 1.0 / layer.sqrt();
        let edges = base
            .edges
            .iter()
            .map(|pieces| {
                let mut out: Vec<SourcePiece> = (0..2)
                    .map(|k| SourcePiece {
                        t0: k as f64 * layer,
                        t1: (k + 1) as f64 * layer,
                        coeffs: (0..=degree)
                            .map(|_| C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)))
                            .collect(),
                    })
                    .collect();
                for p in pieces {
                    let t0 = p.t0.max(2.0 * layer);
                    if p.t1 > t0 {
                        out.push(SourcePiece {
                            t0,
                            t1: p.t1,
                            coeffs: poly::taylor_shift(&p.coeffs, t0 - p.t0),
                        });
                    }
                }
                out
            })
            .collect();
        let s = Source::new(edges)?;
        let norm = s.l2_norm();
        Ok(s.scaled(C64::new(1.0 / norm, 0.0)))
    }

    /// Orthonormal basis of the piecewise polynomials of degree `<= degree`
    /// on uniform panels of `[0, radius]`, one family per edge.
    pub fn legendre_basis(edge_count: usize, radius: f64, panels: usize, degree: usize) -> Vec<Source> {
        let width = radius / panels as f64;
        let local = poly::legendre_basis(degree, width);
        let mut out = Vec::with_capacity(edge_count * panels * (degree + 1));
        for n in 0..edge_count {
            for k in 0..panels {
                for c in &local {
                    let mut edges = vec![Vec::new(); edge_count];
                    edges[n].push(SourcePiece {
                        t0: k as f64 * width,
                        t1: (k + 1) as f64 * width,
                        coeffs: c.iter().map(|&v| C64::new(v, 0.0)).collect(),
                    });
                    out.push(Source { edges });
                }
            }
        }
        out
    }
}
