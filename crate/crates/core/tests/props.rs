//! Property tests for the structural invariants: monotonicity of γ_q, the
//! exchange identity, serialization round trips, marginal laws of coupled
//! pairs, and Hamiltonian ranges.

use proptest::prelude::*;

use spinlab_core::diluted::{
    couple, hamiltonian, sample_instance, ClauseModel, CoupleScheme, DilutedInstance,
};
use spinlab_core::energy::Energy;
use spinlab_core::groundstate::{exact_max, joint_constrained_max, OverlapMode, Space};
use spinlab_core::mixing::{check_eq7, CorrKind, GammaQ, MixingPair, StepGamma};
use spinlab_core::spin::SpinConfig;

fn arb_mixing() -> impl Strategy<Value = MixingPair> {
    (
        prop::bool::ANY,
        1..=3u32,
        0.05..0.95f64,
        prop::bool::ANY,
    )
        .prop_map(|(pure, half_k, t, scaled)| {
            let corr = if scaled {
                CorrKind::Scaled
            } else {
                CorrKind::Argument
            };
            if pure {
                MixingPair::pure(2 * half_k, t, corr).unwrap()
            } else {
                MixingPair::ksat(half_k + 1, t, corr).unwrap()
            }
        })
}

fn arb_gamma() -> impl Strategy<Value = StepGamma> {
    (
        prop::collection::vec(0.02..0.98f64, 1..4),
        prop::collection::vec(0.0..1.5f64, 4),
    )
        .prop_map(|(mut qs, incs)| {
            qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            qs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            qs.push(1.0);
            let mut ms = Vec::with_capacity(qs.len());
            let mut acc = 0.0;
            for i in 0..qs.len() {
                acc += incs[i % incs.len()];
                ms.push(acc);
            }
            StepGamma::new(qs, ms).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_q_is_nondecreasing(
        m in arb_mixing(),
        gamma in arb_gamma(),
        q in prop_oneof![-1.0..-0.01f64, 0.01..1.0f64],
    ) {
        let gq = GammaQ::new(&m, &gamma, q).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let s = i as f64 / 400.0;
            let v = gq.eval(s);
            prop_assert!(v >= prev - 1e-12, "γ_q({s}) = {v} after {prev}");
            prop_assert!(v >= 0.0);
            prev = v;
        }
        // Step form stays a valid element of the class.
        let step = gq.to_step(16).unwrap();
        prop_assert!(step.values().windows(2).all(|w| w[1] >= w[0]));
        // Left limit at |q| never exceeds γ_P(|q|).
        let qa = q.abs();
        if qa < 1.0 {
            prop_assert!(gq.eval(qa - 1e-9) <= gamma.value(qa) + 1e-9);
        }
    }

    #[test]
    fn eq7_residual_is_tiny(
        m in arb_mixing(),
        gamma in arb_gamma(),
        q in prop_oneof![-1.0..-0.01f64, 0.01..1.0f64],
    ) {
        let residual = check_eq7(&m, &gamma, q, 1e-12).unwrap();
        prop_assert!(residual <= 1e-8, "residual {residual:e}");
    }

    #[test]
    fn gamma_serialization_round_trips(gamma in arb_gamma()) {
        let text = gamma.to_text();
        let parsed = StepGamma::from_text(&text).unwrap();
        prop_assert_eq!(text, parsed.to_text());
    }

    #[test]
    fn instance_serialization_round_trips(
        seed in 0..5000u64,
        k in 2..4u32,
        n in 1..40usize,
    ) {
        let inst = sample_instance(ClauseModel::Ksat, k, n, 1.5, seed).unwrap();
        let text = inst.to_text();
        let parsed = DilutedInstance::from_text(&text).unwrap();
        prop_assert_eq!(&inst, &parsed);
        prop_assert_eq!(text, parsed.to_text());
    }

    #[test]
    fn hamiltonian_ranges(seed in 0..2000u64, mask in 0..1024u64) {
        let sigma = SpinConfig::from_neg_mask(10, mask).unwrap();
        for model in [ClauseModel::Antiferro, ClauseModel::KSpin, ClauseModel::Ksat] {
            let inst = sample_instance(model, 2, 10, 1.0, seed).unwrap();
            let h = hamiltonian(&inst, &sigma).unwrap();
            let c = inst.clauses.len() as f64;
            match model {
                ClauseModel::Ksat => prop_assert!(h <= 0.0 && h >= -c),
                _ => prop_assert!(h.abs() <= c),
            }
        }
    }

    #[test]
    fn balanced_projection_magnetization(mask in 0..(1u64 << 11), n in 4..11usize) {
        let sigma = SpinConfig::from_neg_mask(n, mask & ((1 << n) - 1)).unwrap();
        let proj = spinlab_core::diluted::balanced_project(&sigma);
        let target = if n % 2 == 0 { 0 } else { 1 };
        prop_assert_eq!(proj.magnetization_sum(), target);
        // Flip count equals |Σσ - target|/2.
        let flips = (0..n).filter(|&i| sigma.spin(i) != proj.spin(i)).count() as i64;
        prop_assert_eq!(flips, (sigma.magnetization_sum() - target).abs() / 2);
    }

    #[test]
    fn joint_max_below_unconstrained_sum(seed in 0..200u64) {
        let a = sample_instance(ClauseModel::KSpin, 2, 8, 1.5, seed).unwrap();
        let b = sample_instance(ClauseModel::KSpin, 2, 8, 1.5, seed + 10_000).unwrap();
        let e1 = a.to_multilinear().unwrap();
        let e2 = b.to_multilinear().unwrap();
        let m1 = exact_max(&e1, Space::Cube, 1).unwrap().max_value;
        let m2 = exact_max(&e2, Space::Cube, 1).unwrap().max_value;
        let joint = joint_constrained_max(&e1, &e2, 0.25, OverlapMode::Greater).unwrap();
        prop_assert!(joint <= m1 + m2 + 1e-9);
    }

    #[test]
    fn multilinear_eval_matches_clause_sum(seed in 0..500u64, mask in 0..(1u64 << 12)) {
        let inst = sample_instance(ClauseModel::Ksat, 3, 12, 2.0, seed).unwrap();
        let e = inst.to_multilinear().unwrap();
        let sigma = SpinConfig::from_neg_mask(12, mask).unwrap();
        let direct = hamiltonian(&inst, &sigma).unwrap();
        prop_assert!((e.eval(&sigma).unwrap() - direct).abs() <= 1e-9);
    }
}

/// Marginal law: each member of a coupled pair looks like a fresh instance
/// (clause-count mean and variance, sign symmetry) at 4 standard errors over
/// 10^4 replicas.
#[test]
fn coupled_marginals_match_single_instance_law() {
    let n = 20usize;
    let lambda = 1.0;
    let k = 2u32;
    let reps = 10_000u64;
    let mean_expect = lambda * n as f64;
    for scheme in [
        CoupleScheme::ResampleClauses,
        CoupleScheme::SignsA,
        CoupleScheme::SignsB,
    ] {
        let model = if scheme == CoupleScheme::ResampleClauses {
            ClauseModel::Antiferro
        } else {
            ClauseModel::Ksat
        };
        let mut count_sum = [0.0f64; 2];
        let mut count_sq = [0.0f64; 2];
        let mut sign_sum = [0.0f64; 2];
        let mut sign_n = [0.0f64; 2];
        for seed in 0..reps {
            let pair = couple(scheme, 0.5, model, k, n, lambda, 31_000 + seed).unwrap();
            for (i, inst) in [&pair.first, &pair.second].into_iter().enumerate() {
                let c = inst.clauses.len() as f64;
                count_sum[i] += c;
                count_sq[i] += c * c;
                for clause in &inst.clauses {
                    for &s in &clause.signs {
                        sign_sum[i] += s as f64;
                        sign_n[i] += 1.0;
                    }
                }
            }
        }
        for i in 0..2 {
            let mean = count_sum[i] / reps as f64;
            let var = count_sq[i] / reps as f64 - mean * mean;
            // Poisson: mean = variance = λN.
            let mean_se = (mean_expect / reps as f64).sqrt();
            assert!(
                (mean - mean_expect).abs() <= 4.0 * mean_se,
                "{scheme:?} member {i}: mean {mean} vs {mean_expect}"
            );
            // SE of the variance estimator for Poisson(μ): ≈ √((2μ² + μ)/R).
            let var_se =
                ((2.0 * mean_expect * mean_expect + mean_expect) / reps as f64).sqrt();
            assert!(
                (var - mean_expect).abs() <= 4.0 * var_se,
                "{scheme:?} member {i}: var {var} vs {mean_expect}"
            );
            if model != ClauseModel::Antiferro {
                let sign_mean = sign_sum[i] / sign_n[i];
                assert!(
                    sign_mean.abs() <= 4.0 / sign_n[i].sqrt(),
                    "{scheme:?} member {i}: sign mean {sign_mean}"
                );
            }
        }
    }
}
