//! Stationary scattering matrices: on edge `n`, for incidence on edge `m`,
//! `u_n = δ_nm e^{-ik(t-r)} + S_nm e^{ik(t-r)}` outside the core, with
//! reference point `r` (the vertex by default).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::ode::scaled_transfer;
use crate::potential::PotentialProfile;
use crate::vertex::{solve_affine, VertexCondition};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMatrix {
    pub k: f64,
    pub s: DMatrix<C64>,
    /// `‖S S* - I‖₂`
    pub unitarity_defect: f64,
    /// `‖S - Sᵀ‖₂`
    pub symmetry_defect: f64,
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().max()
}

impl ScatteringMatrix {
    pub fn new(k: f64, s: DMatrix<C64>) -> Self {
        let n = s.nrows();
        let unitarity_defect = spectral_norm(&(&s * s.adjoint() - DMatrix::identity(n, n)));
        let symmetry_defect = spectral_norm(&(&s - s.transpose()));
        Self {
            k,
            s,
            unitarity_defect,
            symmetry_defect,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.s.nrows()
    }

    pub fn distance(&self, other: &ScatteringMatrix) -> f64 {
        spectral_norm(&(&self.s - &other.s))
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("wavenumber must be positive, got {k}"));
    }
    Ok(())
}

pub fn scattering_eps(q: &PotentialProfile, alpha: f64, eps: f64, k: f64) -> Result<ScatteringMatrix> {
    scattering_eps_at(q, alpha, eps, k, 0.0)
}

/// Scattering matrix of `H_ε` with plane-wave phases referenced to `t = r`.
pub fn scattering_eps_at(q: &PotentialProfile, alpha: f64, eps: f64, k: f64, r: f64) -> Result<ScatteringMatrix> {
    check_k(k)?;
    let n = q.edge_count();
    let ik = C64::new(0.0, k);
    let mut incoming = Vec::with_capacity(n);
    let mut outgoing = Vec::with_capacity(n);
    for e in 0..n {
        let back = scaled_transfer(q.edge(e), alpha, eps, C64::from(k * k))?.inverse();
        let ein = (-ik * (eps - r)).exp();
        let eout = (ik * (eps - r)).exp();
        incoming.push(back.apply([ein, -ik * ein]));
        outgoing.push(back.apply([eout, ik * eout]));
    }
    let rows = VertexCondition::Kirchhoff.rows(n)?;
    let h0: Vec<C64> = outgoing.iter().map(|v| v[0]).collect();
    let h1: Vec<C64> = outgoing.iter().map(|v| v[1]).collect();
    let mut s = DMatrix::zeros(n, n);
    for m in 0..n {
        let g0: Vec<C64> = (0..n).map(|e| if e == m { incoming[e][0] } else { ZERO }).collect();
        let g1: Vec<C64> = (0..n).map(|e| if e == m { incoming[e][1] } else { ZERO }).collect();
        let col = solve_affine(&rows, &g0, &h0, &g1, &h1, "scattering matching")?;
        for e in 0..n {
            s[(e, m)] = col[e];
        }
    }
    Ok(ScatteringMatrix::new(k, s))
}

/// `S = -(A + ikB)⁻¹ (A - ikB)` for the vertex rows `A y(0) + B y'(0) = 0`.
pub fn scattering_from_rows(cond: &VertexCondition, n: usize, k: f64) -> Result<ScatteringMatrix> {
    check_k(k)?;
    let rows = cond.rows(n)?;
    let a = rows.a.map(C64::from);
    let b = rows.b.map(C64::from) * C64::new(0.0, k);
    let lhs = &a + &b;
    let rhs = -(&a - &b);
    let s = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| crate::Error::Singular {
            context: "vertex scattering".into(),
            condition: f64::INFINITY,
        })?;
    Ok(ScatteringMatrix::new(k, s))
}

/// Closed forms of the limit scattering matrices; `k`-independent.
pub fn scattering_limit(cond: &VertexCondition, n: usize, k: f64) -> Result<ScatteringMatrix> {
    check_k(k)?;
    cond.validate(n)?;
    let id = DMatrix::<C64>::identity(n, n);
    let proj = |theta: &[f64]| DMatrix::from_fn(n, n, |i, j| C64::from(2.0 * theta[i] * theta[j]));
    let s = match cond {
        VertexCondition::Dirichlet => -id,
        VertexCondition::Kirchhoff => DMatrix::from_element(n, n, C64::from(2.0 / n as f64)) - id,
        VertexCondition::WeightedContinuity(t) => proj(t) - id,
        VertexCondition::WeightedDerivative(t) => id - proj(t),
        VertexCondition::Rows { .. } => return scattering_from_rows(cond, n, k),
    };
    Ok(ScatteringMatrix::new(k, s))
}

/// `‖S_ε(k) - S_lim(k)‖₂` for the limit regime `cond`.
pub fn scattering_gap(q: &PotentialProfile, alpha: f64, eps: f64, k: f64, cond: &VertexCondition) -> Result<f64> {
    let a = scattering_eps(q, alpha, eps, k)?;
    let b = scattering_limit(cond, q.edge_count(), k)?;
    Ok(a.distance(&b))
}

/// Diagonal phase `diag(e^{ikε})` relating references `0` and `ε`.
pub fn gauge(n: usize, k: f64, shift: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal_element(n, n, C64::new(0.0, k * shift).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: C64 = C64::new(1.0, 0.0);

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) {
        assert!(spectral_norm(&(a - b)) < tol, "{a} vs {b}");
    }

    #[test]
    fn free_star_is_kirchhoff() {
        let q = PotentialProfile::zero(3);
        let want = scattering_limit(&VertexCondition::Kirchhoff, 3, 1.0).unwrap();
        for k in [0.5, 1.0, 5.0] {
            let s = scattering_eps(&q, 2.0, 0.01, k).unwrap();
            close(&s.s, &want.s, 1e-10);
        }
        let line = scattering_eps(&PotentialProfile::constant(2, 1.0), 0.0, 0.5, 1.3).unwrap();
        let swap = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        close(&line.s, &swap, 1e-12);
    }

    #[test]
    fn limit_closed_forms_match_row_formula() {
        let theta = vec![0.0, 0.6, 0.8];
        for cond in [
            VertexCondition::Dirichlet,
            VertexCondition::Kirchhoff,
            VertexCondition::WeightedContinuity(theta.clone()),
            VertexCondition::WeightedDerivative(theta.clone()),
        ] {
            for k in [0.3, 1.0, 7.0] {
                let a = scattering_limit(&cond, 3, k).unwrap();
                let b = scattering_from_rows(&cond, 3, k).unwrap();
                close(&a.s, &b.s, 1e-12);
                close(&(&a.s * &a.s), &DMatrix::identity(3, 3), 1e-12);
            }
        }
    }

    #[test]
    fn unitary_symmetric_and_gauge_covariant() {
        let q = PotentialProfile::from_json(
            r#"{"edges": [[{"interval": [0.0, 1.0], "coeffs": [1.0, -2.0]}],
                          [{"interval": [0.0, 0.5], "coeffs": [3.0]}],
                          []]}"#,
        )
        .unwrap();
        let (eps, k) = (0.3, 1.7);
        let s0 = scattering_eps(&q, -4.0, eps, k).unwrap();
        assert!(s0.unitarity_defect < 1e-10 && s0.symmetry_defect < 1e-10);
        let s1 = scattering_eps_at(&q, -4.0, eps, k, eps).unwrap();
        let d = gauge(3, k, eps);
        close(&s1.s, &(&d * &s0.s * &d), 1e-9);
    }
}
