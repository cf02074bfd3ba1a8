//! Polynomial helpers shared by potentials and sources.
//!
//! Every polynomial piece is stored in its *local* variable `x = t - t0`,
//! which keeps the closed-form integrals against `exp(beta x)` well
//! conditioned on short pieces.

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

pub fn horner<T>(coeffs: &[T], x: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    coeffs
        .iter()
        .rev()
        .fold(T::default(), |acc, &c| acc * x + c)
}

pub fn derivative<T>(coeffs: &[T]) -> Vec<T>
where
    T: Copy + Mul<f64, Output = T>,
{
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| c * j as f64)
        .collect()
}

/// Coefficients of `p(x + shift)`.
pub fn taylor_shift<T>(coeffs: &[T], shift: f64) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut out = coeffs.to_vec();
    let n = out.len();
    // repeated synthetic division
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] = out[j] + out[j + 1] * shift;
        }
    }
    out
}

/// Coefficients of `p(a - x)`.
pub fn reflect<T>(coeffs: &[T], a: f64) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut out = taylor_shift(coeffs, a);
    for (j, c) in out.iter_mut().enumerate() {
        if j % 2 == 1 {
            *c = *c * -1.0;
        }
    }
    out
}

/// Coefficients of `p(scale * x)`.
pub fn rescale<T>(coeffs: &[T], scale: f64) -> Vec<T>
where
    T: Copy + Mul<f64, Output = T>,
{
    let mut s = 1.0;
    coeffs
        .iter()
        .map(|&c| {
            let v = c * s;
            s *= scale;
            v
        })
        .collect()
}

/// `∫_0^len exp(beta v) q(v) dv` in closed form.
///
/// Uses the power series when `|beta len|` is small and the integration
/// by parts recursion otherwise; both are stable in their ranges.
pub fn exp_poly_integral(beta: C64, len: f64, coeffs: &[C64]) -> C64 {
    if coeffs.is_empty() || len == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let z = beta * len;
    let degree = coeffs.len() - 1;
    let mut moments = vec![C64::new(0.0, 0.0); coeffs.len()];
    if z.norm() <= 2.0 + degree as f64 {
        // ∫_0^len v^j e^{βv} dv = len^{j+1} Σ_m z^m / (m! (j+m+1))
        for (j, m_j) in moments.iter_mut().enumerate() {
            let mut term = C64::new(1.0, 0.0);
            let mut sum = C64::new(0.0, 0.0);
            for m in 0..200 {
                let contrib = term / (j + m + 1) as f64;
                sum += contrib;
                if contrib.norm() < 1e-18 * sum.norm().max(1e-300) && m > 4 {
                    break;
                }
                term = term * z / (m + 1) as f64;
            }
            *m_j = sum * len.powi(j as i32 + 1);
        }
    } else {
        let e = (z).exp();
        moments[0] = (e - 1.0) / beta;
        let mut lp = 1.0;
        for j in 1..=degree {
            lp *= len;
            moments[j] = (e * lp - moments[j - 1] * j as f64) / beta;
        }
    }
    coeffs.iter().zip(&moments).map(|(c, m)| c * m).sum()
}

/// `∫_0^len p(x) conj(q(x)) dx` for complex polynomials.
pub fn inner_product_integral(p: &[C64], q: &[C64], len: f64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            let k = i + j + 1;
            sum += a * b.conj() * len.powi(k as i32) / k as f64;
        }
    }
    sum
}

/// `∫_0^len p(x) dx` for a real polynomial.
pub fn integral_real(p: &[f64], len: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(j, c)| c * len.powi(j as i32 + 1) / (j + 1) as f64)
        .sum()
}

/// Orthonormal shifted Legendre polynomials on `[0, len]`, degrees `0..=degree`,
/// as local coefficient vectors.
pub fn legendre_basis(degree: usize, len: f64) -> Vec<Vec<f64>> {
    // P_k in u ∈ [-1, 1]
    let mut p: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 1..degree {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (j, c) in p[k].iter().enumerate() {
            next[j + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (j, c) in p[k - 1].iter().enumerate() {
            next[j] -= kf * c / (kf + 1.0);
        }
        p.push(next);
    }
    p.truncate(degree + 1);
    p.into_iter()
        .enumerate()
        .map(|(k, c)| {
            // substitute u = 2x/len - 1
            let shifted = taylor_shift(&c, -1.0);
            let scaled = rescale(&shifted, 2.0 / len);
            let norm = ((2 * k + 1) as f64 / len).sqrt();
            scaled.into_iter().map(|v| v * norm).collect()
        })
        .collect()
}
