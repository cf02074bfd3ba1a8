//! Fixed cases shared by the oracle tests and the acceptance run.
//!
//! Oracle grid: graph truncated at `L = 40` with `u(L) = 0` for resolvents
//! (the solutions decay like `e^{-Im κ t}`), at `L = 1.5` with the radiation
//! condition for scattering; exterior step `1/256`, step `ε/512` on
//! `[0, 2ε]`, then one Richardson step.

use super::*;
use num_complex::Complex64 as C64;
use stargraph::resolvent::{resolvent_eps, resolvent_limit};
use stargraph::scattering::scattering_eps;
use stargraph::source::SourcePiece;
use stargraph::{GraphFunction, PotentialProfile, Source, VertexCondition};

pub const FD_TOL: f64 = 1e-5;

pub fn fd_source() -> Source {
    let c = |re: f64, im: f64| C64::new(re, im);
    Source::new(vec![
        vec![SourcePiece {
            t0: 0.0,
            t1: 1.0,
            coeffs: vec![c(1.0, 0.0), c(0.0, 1.0)],
        }],
        vec![SourcePiece {
            t0: 0.25,
            t1: 0.75,
            coeffs: vec![c(0.3, -0.2), c(0.0, 0.0), c(2.0, 0.0)],
        }],
        vec![SourcePiece {
            t0: 0.5,
            t1: 2.0,
            coeffs: vec![c(-0.5, 0.2)],
        }],
    ])
    .unwrap()
}

/// The same source written out by hand.
fn source_fd(n: usize, t: f64) -> C64 {
    match n {
        0 if (0.0..1.0).contains(&t) => C64::new(1.0, t),
        1 if (0.25..0.75).contains(&t) => {
            let x = t - 0.25;
            C64::new(0.3 + 2.0 * x * x, -0.2)
        }
        2 if (0.5..2.0).contains(&t) => C64::new(-0.5, 0.2),
        _ => ZERO,
    }
}

const SOURCE_BREAKS: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 2.0];

fn resolvent_problem<'a>(
    vertex: FdVertex,
    zeta: C64,
    potential: &'a dyn Fn(usize, f64) -> f64,
    core: Option<f64>,
) -> FdProblem<'a> {
    let mut breaks = SOURCE_BREAKS.to_vec();
    let mut steps = Vec::new();
    if let Some(eps) = core {
        breaks.extend([0.5 * eps, eps, 2.0 * eps]);
        steps.push((2.0 * eps, eps / 512.0));
    }
    steps.push((40.0, 1.0 / 256.0));
    FdProblem {
        edges: 3,
        length: 40.0,
        breaks,
        steps,
        potential,
        source: &source_fd,
        zeta,
        vertex,
        end: FdEnd::Dirichlet,
        end_data: vec![ZERO; 3],
    }
}

fn free(_: usize, _: f64) -> f64 {
    0.0
}

/// Outcome of one oracle comparison.
pub struct FdCheck {
    pub name: &'static str,
    pub distance: f64,
    pub oracle_gap: f64,
    /// `(‖R f‖, ‖f‖ / |Im ζ|)` for resolvent cases
    pub bound: Option<(f64, f64)>,
    /// scattering defects `(unitarity, symmetry)`
    pub defects: Option<(f64, f64)>,
}

fn limit_case(name: &'static str, cond: VertexCondition, vertex: FdVertex, zeta: C64) -> FdCheck {
    let f = fd_source();
    let y = resolvent_limit(&cond, zeta, &f).unwrap();
    let fd = fd_solve(&resolvent_problem(vertex, zeta, &free, None));
    assert!(fd.l2_norm() > 0.1);
    resolvent_check(name, &y, &fd, &f, zeta)
}

fn resolvent_check(name: &'static str, y: &GraphFunction, fd: &FdSolution, f: &Source, zeta: C64) -> FdCheck {
    FdCheck {
        name,
        distance: fd.l2_distance(|n, t| y.eval(n, t).0),
        oracle_gap: fd.richardson_gap,
        bound: Some((y.l2_norm().unwrap(), f.l2_norm() / zeta.im.abs())),
        defects: None,
    }
}

pub fn limit_dirichlet() -> FdCheck {
    limit_case("limit Dirichlet", VertexCondition::Dirichlet, FdVertex::Dirichlet, C64::i())
}

pub fn limit_weighted_continuity() -> FdCheck {
    let theta = vec![0.6, 0.0, 0.8];
    limit_case(
        "limit weighted continuity",
        VertexCondition::WeightedContinuity(theta.clone()),
        FdVertex::Continuity(theta),
        C64::new(-1.0, 0.5),
    )
}

pub fn limit_weighted_derivative() -> FdCheck {
    let theta = vec![2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
    limit_case(
        "limit weighted derivative",
        VertexCondition::WeightedDerivative(theta.clone()),
        FdVertex::Derivative(theta),
        C64::new(0.5, 2.0),
    )
}

pub fn fd_profile() -> PotentialProfile {
    PotentialProfile::from_json(
        r#"{"edges": [[{"interval": [0.0, 0.5], "coeffs": [2.0]}, {"interval": [0.5, 1.0], "coeffs": [-1.0]}],
                      [{"interval": [0.0, 1.0], "coeffs": [1.0, 1.0]}],
                      []]}"#,
    )
    .unwrap()
}

fn q_fd(n: usize, s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    match n {
        0 if s < 0.5 => 2.0,
        0 => -1.0,
        1 => 1.0 + s,
        _ => 0.0,
    }
}

pub fn regularized_kirchhoff() -> FdCheck {
    let (alpha, eps, zeta) = (-3.0, 0.1, C64::i());
    let v = move |n: usize, t: f64| if t < eps { alpha / (eps * eps) * q_fd(n, t / eps) } else { 0.0 };
    let f = fd_source();
    let y = resolvent_eps(&fd_profile(), alpha, eps, zeta, &f).unwrap();
    let fd = fd_solve(&resolvent_problem(FdVertex::Kirchhoff, zeta, &v, Some(eps)));
    resolvent_check("regularized", &y, &fd, &f, zeta)
}

/// Largest entry difference of `S_ε(k)` from the radiating oracle.
pub fn scattering() -> FdCheck {
    let (alpha, eps, k) = (-3.0, 0.2, 1.3);
    let length = 1.5;
    let v = move |n: usize, t: f64| if t < eps { alpha / (eps * eps) * q_fd(n, t / eps) } else { 0.0 };
    let nothing = |_: usize, _: f64| ZERO;
    let s = scattering_eps(&fd_profile(), alpha, eps, k).unwrap();
    let ik = C64::new(0.0, k);
    let mut worst = 0.0f64;
    let mut gap = 0.0f64;
    for m in 0..3 {
        let end_data = (0..3)
            .map(|n| if n == m { -2.0 * ik * (-ik * length).exp() } else { ZERO })
            .collect();
        let fd = fd_solve(&FdProblem {
            edges: 3,
            length,
            breaks: vec![0.5 * eps, eps, 2.0 * eps],
            steps: vec![(2.0 * eps, eps / 512.0), (length, 1.0 / 256.0)],
            potential: &v,
            source: &nothing,
            zeta: C64::from(k * k),
            vertex: FdVertex::Kirchhoff,
            end: FdEnd::Radiating { k },
            end_data,
        });
        gap = gap.max(fd.richardson_gap);
        for n in 0..3 {
            let ul = *fd.values[n].last().unwrap();
            let incoming = if n == m { (-ik * length).exp() } else { ZERO };
            let snm = (ul - incoming) * (-ik * length).exp();
            worst = worst.max((snm - s.s[(n, m)]).norm());
        }
    }
    FdCheck {
        name: "scattering",
        distance: worst,
        oracle_gap: gap,
        bound: None,
        defects: Some((s.unitarity_defect, s.symmetry_defect)),
    }
}

/// `y_n(t) = (a_n + b_n t)(t - 2)⁴` on `[0, 2]`, zero beyond.
pub struct Bump {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Bump {
    /// A bump satisfying `cond` at the vertex, from free parameters.
    pub fn satisfying(cond: &VertexCondition, a0: &[f64], b0: &[f64]) -> Bump {
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        // y(0) = 16 a and y'(0) = 16 b - 32 a
        let (a, b) = match cond {
            VertexCondition::Dirichlet => (vec![0.0; 3], b0.to_vec()),
            VertexCondition::Kirchhoff => {
                let a = vec![a0[0]; 3];
                let s = (6.0 * a0[0] - b0.iter().sum::<f64>()) / 3.0;
                (a, b0.iter().map(|x| x + s).collect())
            }
            VertexCondition::WeightedContinuity(th) => {
                // y(0) ∥ θ and θ·y'(0) = 0
                let a: Vec<f64> = th.iter().map(|t| a0[0] * t).collect();
                let s = dot(th, b0) - 2.0 * dot(th, &a);
                (a, b0.iter().zip(th).map(|(x, t)| x - s * t).collect())
            }
            VertexCondition::WeightedDerivative(th) => {
                let s = dot(th, a0);
                let a: Vec<f64> = a0.iter().zip(th).map(|(x, t)| x - s * t).collect();
                let b = a.iter().zip(th).map(|(x, t)| (b0[0] * t + 32.0 * x) / 16.0).collect();
                (a, b)
            }
            VertexCondition::Rows { .. } => unreachable!(),
        };
        Bump { a, b }
    }

    fn poly(&self, n: usize) -> Vec<C64> {
        let quartic = [16.0, -32.0, 24.0, -8.0, 1.0].map(C64::from);
        poly_mul(&[C64::from(self.a[n]), C64::from(self.b[n])], &quartic)
    }

    pub fn eval(&self, n: usize, t: f64) -> C64 {
        if t < 2.0 {
            poly_eval(&self.poly(n), t)
        } else {
            ZERO
        }
    }

    /// `f = -y'' + (V - ζ) y` with `V_n(t) = pot(n)(t)` on `[t0, t1]` pieces.
    pub fn source(&self, zeta: C64, pot: impl Fn(usize) -> Vec<(f64, f64, Vec<C64>)>) -> Source {
        let edges = (0..self.a.len())
            .map(|n| {
                let y = self.poly(n);
                let base = poly_add(&poly_derivative(&poly_derivative(&y)).iter().map(|c| -c).collect::<Vec<_>>(), &poly_mul(&y, &[-zeta]));
                let mut cuts = vec![0.0, 2.0];
                let v = pot(n);
                for (t0, t1, _) in &v {
                    cuts.extend([*t0, *t1]);
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| {
                        let mid = 0.5 * (w[0] + w[1]);
                        let mut p = base.clone();
                        if let Some((_, _, c)) = v.iter().find(|(t0, t1, _)| *t0 <= mid && mid <= *t1) {
                            p = poly_add(&p, &poly_mul(c, &y));
                        }
                        SourcePiece { t0: w[0], t1: w[1], coeffs: poly_shift(&p, w[0]) }
                    })
                    .collect()
            })
            .collect();
        Source::new(edges).unwrap()
    }

    /// The source for `H_ε(α, Q)` with `Q` given in coefficients of `s = t/ε`.
    pub fn regularized_source(&self, q: &PotentialProfile, alpha: f64, eps: f64, zeta: C64) -> Source {
        let spec = q.to_spec();
        self.source(zeta, |n| {
            spec.edges[n]
                .iter()
                .map(|p| {
                    let c = p.coeffs.iter().enumerate().map(|(k, v)| C64::from(alpha * v / eps.powi(k as i32 + 2))).collect();
                    (p.interval[0] * eps, p.interval[1] * eps, c)
                })
                .collect()
        })
    }

    /// Largest pointwise error of `y` on `[0, 3]`, relative to the bump amplitude when that exceeds 1.
    pub fn error(&self, y: &GraphFunction) -> f64 {
        let (mut worst, mut scale) = (0.0f64, 1.0f64);
        for n in 0..self.a.len() {
            for j in 0..=300 {
                let t = 3.0 * j as f64 / 300.0;
                let exact = self.eval(n, t);
                worst = worst.max((y.eval(n, t).0 - exact).norm());
                scale = scale.max(exact.norm());
            }
        }
        worst / scale
    }
}
