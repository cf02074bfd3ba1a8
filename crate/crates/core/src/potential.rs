//! Per-edge potential shapes `Q` on the unit core.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::{self, Side};

/// One polynomial piece as it appears in the JSON description.
///
/// `coeffs` are the monomial coefficients in the edge parameter `t`
/// itself (not in `t - t0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub interval: [f64; 2],
    pub coeffs: Vec<f64>,
}

/// JSON form of a [`PotentialProfile`]: one list of pieces per edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub edges: Vec<Vec<PieceSpec>>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LocalPiece {
    pub t0: f64,
    pub t1: f64,
    /// coefficients in `x = t - t0`
    pub coeffs: Vec<f64>,
}

impl LocalPiece {
    fn eval(&self, t: f64) -> f64 {
        poly::horner(&self.coeffs, t - self.t0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgePotential {
    pieces: Vec<LocalPiece>,
}

impl EdgePotential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64, t0: f64, t1: f64) -> Self {
        if value == 0.0 {
            return Self::zero();
        }
        Self {
            pieces: vec![LocalPiece {
                t0,
                t1,
                coeffs: vec![value],
            }],
        }
    }

    fn from_specs(specs: &[PieceSpec], edge: usize) -> Result<Self> {
        let mut pieces: Vec<LocalPiece> = Vec::with_capacity(specs.len());
        for spec in specs {
            let [t0, t1] = spec.interval;
            if !(t0.is_finite() && t1.is_finite()) || t0 < 0.0 || t1 > 1.0 || t0 >= t1 {
                return invalid(format!(
                    "edge {edge}: piece interval [{t0}, {t1}] must satisfy 0 <= t0 < t1 <= 1"
                ));
            }
            if spec.coeffs.iter().any(|c| !c.is_finite()) {
                return invalid(format!("edge {edge}: non-finite coefficient"));
            }
            pieces.push(LocalPiece {
                t0,
                t1,
                coeffs: poly::taylor_shift(&spec.coeffs, t0),
            });
        }
        pieces.sort_by(|a, b| a.t0.total_cmp(&b.t0));
        for w in pieces.windows(2) {
            if w[1].t0 < w[0].t1 - 1e-15 {
                return invalid(format!("edge {edge}: overlapping pieces"));
            }
        }
        Ok(Self { pieces })
    }

    /// Value of the potential at `t`; zero outside the pieces.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_side(t, Side::Right)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        for p in &self.pieces {
            let inside = match side {
                Side::Right => t >= p.t0 && t < p.t1,
                Side::Left => t > p.t0 && t <= p.t1,
            };
            if inside {
                return p.eval(t);
            }
        }
        0.0
    }

    /// Value at `t` taking the piece that contains `hint`
    /// (used to pick one-sided limits on a segment).
    pub(crate) fn eval_in(&self, t: f64, hint: f64) -> f64 {
        for p in &self.pieces {
            if hint >= p.t0 && hint <= p.t1 {
                return p.eval(t);
            }
        }
        0.0
    }

    /// Piece endpoints strictly inside `(0, 1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.t0, p.t1])
            .filter(|&t| t > 0.0 && t < 1.0)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        b
    }

    pub fn is_zero(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.coeffs.iter().all(|&c| c == 0.0))
    }

    /// `(∫ Q dt, ∫ t Q dt)` over the edge core.
    pub fn moments(&self) -> (f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for p in &self.pieces {
            let len = p.t1 - p.t0;
            m0 += poly::integral_real(&p.coeffs, len);
            // t Q = (x + t0) Q
            let mut tq = vec![0.0; p.coeffs.len() + 1];
            for (j, c) in p.coeffs.iter().enumerate() {
                tq[j + 1] += c;
                tq[j] += p.t0 * c;
            }
            m1 += poly::integral_real(&tq, len);
        }
        (m0, m1)
    }

    fn to_specs(&self) -> Vec<PieceSpec> {
        self.pieces
            .iter()
            .map(|p| PieceSpec {
                interval: [p.t0, p.t1],
                coeffs: poly::taylor_shift(&p.coeffs, -p.t0),
            })
            .collect()
    }

    /// Largest `k <= 2` such that `Q` is `C^k` on `[0, 1]` including the
    /// junction with the zero exterior at `t = 1`; `-1` when `Q` jumps.
    fn smoothness(&self) -> i32 {
        let mut joints: Vec<f64> = self.pieces.iter().flat_map(|p| [p.t0, p.t1]).collect();
        joints.retain(|&t| t > 0.0);
        joints.sort_by(f64::total_cmp);
        joints.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let derivs = |t: f64, side: Side| -> [f64; 3] {
            for p in &self.pieces {
                let inside = match side {
                    Side::Right => t >= p.t0 && t < p.t1,
                    Side::Left => t > p.t0 && t <= p.t1,
                };
                if inside {
                    let x = t - p.t0;
                    let d1 = poly::derivative(&p.coeffs);
                    let d2 = poly::derivative(&d1);
                    return [
                        poly::horner(&p.coeffs, x),
                        poly::horner(&d1, x),
                        poly::horner(&d2, x),
                    ];
                }
            }
            [0.0; 3]
        };
        let mut k = 2;
        for t in joints {
            let l = derivs(t, Side::Left);
            let r = derivs(t, Side::Right);
            for order in 0..3 {
                let scale = 1.0 + l[order].abs().max(r[order].abs());
                if (l[order] - r[order]).abs() > 1e-10 * scale {
                    k = k.min(order as i32 - 1);
                    break;
                }
            }
        }
        k
    }
}

/// Moment and smoothness diagnostics of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    pub edge_mean: Vec<f64>,
    pub edge_first_moment: Vec<f64>,
    pub total_mean: f64,
    pub total_first_moment: f64,
    pub zero_mean: bool,
    pub smoothness: i32,
}

/// Piecewise-polynomial potential shape `Q`, supported in the unit core
/// `t ∈ [0, 1]` of every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialProfile {
    edges: Vec<EdgePotential>,
}

impl PotentialProfile {
    pub fn new(edges: Vec<EdgePotential>) -> Result<Self> {
        if edges.is_empty() {
            return invalid("a profile needs at least one edge");
        }
        Ok(Self { edges })
    }

    pub fn zero(edge_count: usize) -> Self {
        Self {
            edges: vec![EdgePotential::zero(); edge_count],
        }
    }

    /// `Q = value` on the whole unit core of every edge.
    pub fn constant(edge_count: usize, value: f64) -> Self {
        Self {
            edges: vec![EdgePotential::constant(value, 0.0, 1.0); edge_count],
        }
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        let edges = spec
            .edges
            .iter()
            .enumerate()
            .map(|(n, pieces)| EdgePotential::from_specs(pieces, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(edges)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProfileSpec = serde_json::from_str(text).map_err(Error::Json)?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> ProfileSpec {
        ProfileSpec {
            edges: self.edges.iter().map(EdgePotential::to_specs).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("profile serializes")
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, n: usize) -> &EdgePotential {
        &self.edges[n]
    }

    pub fn edges(&self) -> &[EdgePotential] {
        &self.edges
    }

    pub fn is_zero(&self) -> bool {
        self.edges.iter().all(EdgePotential::is_zero)
    }

    pub fn diagnostics(&self) -> ProfileDiagnostics {
        let (m0, m1): (Vec<f64>, Vec<f64>) = self.edges.iter().map(|e| e.moments()).unzip();
        let total_mean: f64 = m0.iter().sum();
        let total_first_moment: f64 = m1.iter().sum();
        ProfileDiagnostics {
            zero_mean: total_mean.abs() < 1e-12,
            smoothness: self.edges.iter().map(|e| e.smoothness()).min().unwrap_or(2),
            edge_mean: m0,
            edge_first_moment: m1,
            total_mean,
            total_first_moment,
        }
    }
}
