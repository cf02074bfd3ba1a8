//! Interface conditions at the central vertex and the small linear systems
//! they produce.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Vertex regime of a limit operator, or raw rows `A y(0) + B y'(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", content = "theta", rename_all = "snake_case")]
pub enum VertexCondition {
    Dirichlet,
    /// `y_n(0) ∝ θ_n` and `Σ θ_n y_n'(0) = 0`
    WeightedContinuity(Vec<f64>),
    /// `y_n'(0) ∝ θ_n` and `Σ θ_n y_n(0) = 0`
    WeightedDerivative(Vec<f64>),
    Kirchhoff,
    #[serde(skip)]
    Rows { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

/// Rows of `A y(0) + B y'(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceRows {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Orthonormal rows spanning the complement of the unit vector `theta`.
fn complement_rows(theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_column_slice(theta)];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| theta[i].abs().total_cmp(&theta[j].abs()));
    for k in order {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-3 {
            basis.push(v / norm);
        }
        if basis.len() == n {
            break;
        }
    }
    DMatrix::from_fn(n - 1, n, |i, j| basis[i + 1][j])
}

impl VertexCondition {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::WeightedContinuity(_) => "weighted_continuity",
            Self::WeightedDerivative(_) => "weighted_derivative",
            Self::Kirchhoff => "kirchhoff",
            Self::Rows { .. } => "rows",
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match self {
            Self::WeightedContinuity(t) | Self::WeightedDerivative(t) => Some(t),
            _ => None,
        }
    }

    /// Kirchhoff written as weighted continuity with `θ = 1/√N`.
    pub fn kirchhoff_theta(n: usize) -> Vec<f64> {
        vec![1.0 / (n as f64).sqrt(); n]
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::WeightedContinuity(t) | Self::WeightedDerivative(t) => {
                if t.len() != n {
                    return invalid(format!("θ has {} entries for {n} edges", t.len()));
                }
                let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return invalid(format!("θ must have unit norm, got {norm}"));
                }
            }
            Self::Rows { a, b } => {
                if a.len() != n || b.len() != n || a.iter().chain(b).any(|r| r.len() != n) {
                    return invalid("row conditions must be N x N");
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn rows(&self, n: usize) -> Result<InterfaceRows> {
        self.validate(n)?;
        let weighted = |theta: &[f64]| {
            let mut a = DMatrix::zeros(n, n);
            let mut b = DMatrix::zeros(n, n);
            a.view_mut((0, 0), (n - 1, n)).copy_from(&complement_rows(theta));
            for j in 0..n {
                b[(n - 1, j)] = theta[j];
            }
            (a, b)
        };
        let (a, b) = match self {
            Self::Dirichlet => (DMatrix::identity(n, n), DMatrix::zeros(n, n)),
            Self::Kirchhoff => weighted(&Self::kirchhoff_theta(n)),
            Self::WeightedContinuity(t) => weighted(t),
            Self::WeightedDerivative(t) => {
                let (a, b) = weighted(t);
                (b, a)
            }
            Self::Rows { a, b } => (
                DMatrix::from_fn(n, n, |i, j| a[i][j]),
                DMatrix::from_fn(n, n, |i, j| b[i][j]),
            ),
        };
        Ok(InterfaceRows { a, b })
    }
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve for `c` when the per-edge vertex data are affine in it:
/// `y_n(0) = g0_n + c_n h0_n`, `y_n'(0) = g1_n + c_n h1_n`.
pub fn solve_affine(
    rows: &InterfaceRows,
    g0: &[C64],
    h0: &[C64],
    g1: &[C64],
    h1: &[C64],
    context: &str,
) -> Result<Vec<C64>> {
    let n = g0.len();
    let a = rows.a.map(C64::from);
    let b = rows.b.map(C64::from);
    let k = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * h0[j] + b[(i, j)] * h1[j]);
    let rhs = -(&a * DVector::from_column_slice(g0) + &b * DVector::from_column_slice(g1));
    let cond = condition_number(&k);
    if !(cond < 1e12) {
        return Err(Error::Singular {
            context: context.into(),
            condition: cond,
        });
    }
    let sol = k.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        context: context.into(),
        condition: cond,
    })?;
    Ok(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::vertex_residual_data;

    #[test]
    fn rows_reproduce_regimes() {
        let theta = vec![0.0, 0.6, 0.8];
        let rows = VertexCondition::WeightedContinuity(theta.clone()).rows(3).unwrap();
        // y(0) = θ satisfies the continuity rows
        let y = DVector::from_column_slice(&theta);
        assert!((&rows.a * &y).norm() < 1e-14);
        assert!((rows.b.row(2).transpose() - &y).norm() < 1e-14);
        let k = VertexCondition::Kirchhoff.rows(3).unwrap();
        let ones = DVector::from_element(3, 1.0);
        assert!((&k.a * &ones).norm() < 1e-14);
    }

    #[test]
    fn affine_solve_satisfies_condition() {
        let i = C64::i();
        let g0 = [C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.2, 2.0)];
        let g1 = [C64::new(1.0, 0.0), C64::new(0.5, -0.5), C64::new(0.0, 0.4)];
        let kappa = C64::new(0.7, 0.7);
        let h0 = [C64::new(1.0, 0.0); 3];
        let h1 = [i * kappa; 3];
        for cond in [
            VertexCondition::Dirichlet,
            VertexCondition::Kirchhoff,
            VertexCondition::WeightedContinuity(vec![0.0, 0.6, 0.8]),
            VertexCondition::WeightedDerivative(vec![0.48, 0.6, 0.64]),
        ] {
            let rows = cond.rows(3).unwrap();
            let c = solve_affine(&rows, &g0, &h0, &g1, &h1, "test").unwrap();
            let y0: Vec<C64> = (0..3).map(|n| g0[n] + c[n] * h0[n]).collect();
            let y1: Vec<C64> = (0..3).map(|n| g1[n] + c[n] * h1[n]).collect();
            assert!(vertex_residual_data(&y0, &y1, &cond) < 1e-13, "{}", cond.name());
        }
    }

    #[test]
    fn rejects_non_unit_theta() {
        assert!(VertexCondition::WeightedContinuity(vec![1.0, 1.0, 1.0]).rows(3).is_err());
        assert!(VertexCondition::WeightedContinuity(vec![1.0, 0.0]).rows(3).is_err());
    }
}
