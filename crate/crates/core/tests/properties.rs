mod common;

use common::cases::Bump;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stargraph::potential::{PieceSpec, ProfileSpec};
use stargraph::resolvent::{adjoint_probe, resolvent_eps, resolvent_limit, Operator};
use stargraph::scattering::scattering_eps;
use stargraph::{transfer, PotentialProfile, Source, VertexCondition};

fn profile_strategy(edges: usize) -> impl Strategy<Value = PotentialProfile> {
    let edge = (
        prop::collection::vec(0.05f64..0.95, 0..3),
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 1..4), 3),
    )
        .prop_map(|(mut cuts, coeffs)| {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut bounds = vec![0.0];
            bounds.extend(cuts);
            bounds.push(1.0);
            bounds
                .windows(2)
                .zip(coeffs.into_iter().cycle())
                .map(|(w, c)| PieceSpec {
                    interval: [w[0], w[1]],
                    coeffs: c,
                })
                .collect::<Vec<_>>()
        });
    prop::collection::vec(edge, edges).prop_map(|edges| PotentialProfile::from_spec(&ProfileSpec { edges }).unwrap())
}

fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        })
}

fn condition_strategy() -> impl Strategy<Value = VertexCondition> {
    prop_oneof![
        Just(VertexCondition::Dirichlet),
        Just(VertexCondition::Kirchhoff),
        theta_strategy().prop_map(VertexCondition::WeightedContinuity),
        theta_strategy().prop_map(VertexCondition::WeightedDerivative),
    ]
}

fn zeta_strategy() -> impl Strategy<Value = C64> {
    (-4.0f64..4.0, 0.2f64..3.0, any::<bool>()).prop_map(|(re, im, lower)| C64::new(re, if lower { -im } else { im }))
}

fn random_source(seed: u64) -> Source {
    Source::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, 3.0, 6, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn transfer_matrices_are_unimodular(
        q in profile_strategy(1),
        alpha in -50.0f64..50.0,
        re in -20.0f64..20.0,
        im in -5.0f64..5.0,
        len in 0.05f64..1.0,
    ) {
        let m = transfer(q.edge(0), alpha, C64::new(re, im), 0.0, len, 1e-3).unwrap();
        let size = m.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        // evaluating ad - bc loses about size² ulps, whatever the integrator
        let tol = if size <= 100.0 { 1e-10 } else { 1e-14 * size * size };
        prop_assert!((m.det() - 1.0).norm() <= tol, "det {} at size {size:.3e}", m.det());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scattering_matrices_are_unitary_and_symmetric(
        q in profile_strategy(3),
        alpha in -30.0f64..30.0,
        eps in 0.01f64..1.0,
        k in 0.1f64..6.0,
    ) {
        let s = scattering_eps(&q, alpha, eps, k).unwrap();
        prop_assert!(s.unitarity_defect <= 1e-8 && s.symmetry_defect <= 1e-8, "{s:?}");
    }

    #[test]
    fn limit_resolvent_bounds_and_adjoint(cond in condition_strategy(), zeta in zeta_strategy(), seed in 0u64..1000) {
        let f = random_source(seed);
        let g = random_source(seed + 7919);
        let y = resolvent_limit(&cond, zeta, &f).unwrap();
        prop_assert!(y.l2_norm().unwrap() <= f.l2_norm() / zeta.im.abs() * (1.0 + 1e-10));
        let (a, b) = adjoint_probe(&Operator::Limit(cond), zeta, &f, &g).unwrap();
        prop_assert!((a - b).norm() <= 1e-8, "{a} vs {b}");
    }

    #[test]
    fn regularized_resolvent_bounds_and_adjoint(
        q in profile_strategy(3),
        alpha in -30.0f64..30.0,
        eps in 0.01f64..0.5,
        zeta in zeta_strategy(),
        seed in 0u64..1000,
    ) {
        let f = random_source(seed);
        let g = random_source(seed + 7919);
        let y = resolvent_eps(&q, alpha, eps, zeta, &f).unwrap();
        prop_assert!(y.l2_norm().unwrap() <= f.l2_norm() / zeta.im.abs() * (1.0 + 1e-10));
        let (a, b) = adjoint_probe(&Operator::Regularized { q: &q, alpha, eps }, zeta, &f, &g).unwrap();
        prop_assert!((a - b).norm() <= 1e-8, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn limit_resolvent_inverts_the_operator(
        cond in condition_strategy(),
        zeta in zeta_strategy(),
        a0 in prop::collection::vec(-1.0f64..1.0, 3),
        b0 in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let bump = Bump::satisfying(&cond, &a0, &b0);
        let f = bump.source(zeta, |_| Vec::new());
        let y = resolvent_limit(&cond, zeta, &f).unwrap();
        let err = bump.error(&y);
        prop_assert!(err <= 1e-8, "{}: {err:.3e}", cond.name());
    }

    #[test]
    fn regularized_resolvent_inverts_the_operator(
        q in profile_strategy(3),
        alpha in -20.0f64..20.0,
        eps in 0.05f64..0.5,
        zeta in zeta_strategy(),
        a0 in -1.0f64..1.0,
        b0 in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let bump = Bump::satisfying(&VertexCondition::Kirchhoff, &[a0], &b0);
        let f = bump.regularized_source(&q, alpha, eps, zeta);
        let y = resolvent_eps(&q, alpha, eps, zeta, &f).unwrap();
        let err = bump.error(&y);
        prop_assert!(err <= 1e-8, "{err:.3e}");
    }
}
