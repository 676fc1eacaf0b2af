//! Randomized invariants of the public API.

use cfota_core::ap_local::{
    chunk, chunk_count, dechunk, devectorize_upper, local_stats, upper_len, vectorize_upper, zf_precoder, Phase,
};
use cfota_core::detect::{detect_lmmse, Constellation};
use cfota_core::linalg::{cn_matrix, cn_vector, frob2, hermitian_eigen, CMat};
use cfota_core::moments::{phase1_moments, MomentModel};
use cfota_core::ods::{allocate_resources, channel_uses_ota, waterfill, FloatFormat};
use cfota_core::power::PowerPlan;
use cfota_core::rng::{domain, stream};
use cfota_core::scenario::{generate_scenario_drop, CovarianceSet, ScenarioConfig};
use proptest::prelude::*;

fn small_scenario(l: usize, k: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig { l, k, tau_p: k, seed, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariances_are_hermitian_with_matching_traces(l in 1usize..8, k in 1usize..6, seed in 0u64..1000) {
        let cfg = small_scenario(l, k, seed);
        let cov = generate_scenario_drop::<f64>(&cfg, 0).unwrap();
        for kk in 0..k {
            for ll in 0..l {
                let r = cov.r(kk, ll);
                prop_assert!(frob2(&(r - r.adjoint())).sqrt() <= 1e-12 * frob2(r).sqrt().max(1e-300));
                let tr = cov.trace(kk, ll);
                prop_assert!((tr - cfg.n as f64 * cov.beta(kk, ll)).abs() <= 1e-9 * tr);
            }
        }
    }

    #[test]
    fn zero_forcing_inverts_the_fronthaul(m in 1usize..6, extra in 0usize..6, seed: u64) {
        let mut rng = stream(seed, domain::ORACLE, 0);
        let g = cn_matrix::<f64, _>(&mut rng, m + extra, m, 1.0);
        let w = zf_precoder(&g).unwrap().w;
        prop_assert!(frob2(&(g.adjoint() * w - CMat::identity(m, m))).sqrt() < 1e-10);
    }

    #[test]
    fn gramian_is_hermitian_psd_and_round_trips(k in 1usize..10, n in 1usize..10, seed: u64) {
        let mut rng = stream(seed, domain::ORACLE, 1);
        let h = cn_matrix::<f64, _>(&mut rng, n, k, 1.0);
        let s = local_stats(&h, &[]).unwrap();
        prop_assert!(frob2(&(&s.a - s.a.adjoint())).sqrt() <= 1e-12 * frob2(&s.a).sqrt());
        let (ev, _) = hermitian_eigen(&s.a);
        let tr: f64 = ev.iter().sum();
        prop_assert!(ev.iter().all(|&e| e >= -1e-10 * tr));
        let x = vectorize_upper(&s.a).unwrap();
        prop_assert_eq!(x.len(), upper_len(k));
        prop_assert_eq!(devectorize_upper(&x, k).unwrap(), s.a);
    }

    #[test]
    fn chunking_round_trips_with_expected_column_count(len in 1usize..200, m in 1usize..9, seed: u64) {
        let mut rng = stream(seed, domain::ORACLE, 2);
        let x = cn_vector::<f64, _>(&mut rng, len, 1.0);
        let xbar = chunk(&x, m);
        prop_assert_eq!(xbar.ncols(), len.div_ceil(m));
        prop_assert_eq!(xbar.ncols(), chunk_count(len, m));
        prop_assert_eq!(dechunk(&xbar, len).unwrap(), x);
        prop_assert!(xbar.iter().skip(len).all(|z| *z == num_complex::Complex::new(0.0, 0.0)));
    }

    #[test]
    fn scaled_reports_respect_the_budget(l in 1usize..6, k in 1usize..4, seed in 0u64..500, pmax in 0.01f64..20.0) {
        let cfg = small_scenario(l, k, seed);
        let cov: CovarianceSet<f64> = generate_scenario_drop(&cfg, 0).unwrap();
        let model = MomentModel::with_ewhw_analytic(&cov, cfg.m, cfg.tau_u, cfg.p_ul, cfg.sigma2).unwrap();
        let plan = PowerPlan::from_model(&model, pmax).unwrap();
        for phase in Phase::BOTH {
            let eta = plan.eta(phase);
            prop_assert!(eta > 0.0);
            let top = plan.reports[phase.index()].iter().fold(0.0f64, |a, &b| a.max(b));
            prop_assert!(eta * top <= pmax + 1e-12);
        }
        let mom = phase1_moments(&cov);
        prop_assert!(mom.c1.iter().all(|&c| c > 0.0));
        prop_assert!(model.a.iter().chain(&model.b).all(|&v| v >= 0.0));
    }

    #[test]
    fn quantizer_is_idempotent_monotone_and_odd(x in -1e5f64..1e5, y in -1e5f64..1e5, e in 2u32..10, m in 1u32..20) {
        let fmt = FloatFormat::new(e, m).unwrap();
        let (qx, qy) = (fmt.quantize(x), fmt.quantize(y));
        prop_assert_eq!(fmt.quantize(qx), qx);
        prop_assert_eq!(fmt.quantize(-x), -qx);
        let ordered = if x <= y { qx <= qy } else { qx >= qy };
        prop_assert!(ordered);
        prop_assert!(qx.abs() <= fmt.max_finite());
    }

    #[test]
    fn waterfilling_meets_kkt(gains in prop::collection::vec(1e-3f64..1e3, 1..12), pmax in 1e-3f64..1e2) {
        let p = waterfill(&gains, pmax);
        prop_assert!((p.iter().sum::<f64>() - pmax).abs() <= 1e-9 * pmax);
        let active: Vec<f64> = p.iter().zip(&gains).filter(|(p, _)| **p > 0.0).map(|(p, g)| p + 1.0 / g).collect();
        prop_assert!(!active.is_empty());
        let mu = active[0];
        prop_assert!(active.iter().all(|v| (v - mu).abs() <= 1e-9 * mu));
        for (pi, g) in p.iter().zip(&gains) {
            prop_assert!(*pi >= 0.0);
            if *pi == 0.0 {
                prop_assert!(1.0 / g >= mu * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn resource_plan_invariants(rbar in prop::collection::vec(0.05f64..50.0, 1..16), n_s in 1usize..200, nb in 4u32..33, m in 1usize..8) {
        let bits = 2 * n_s as u64 * nb as u64;
        let plan = allocate_resources(&rbar, bits, n_s, m).unwrap();
        prop_assert!((plan.alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let shared = plan.alpha[0] * rbar[0];
        prop_assert!(plan.alpha.iter().zip(&rbar).all(|(a, r)| (a * r - shared).abs() <= 1e-9 * shared));
        prop_assert_eq!(plan.upsilon_ota, channel_uses_ota(n_s, m));
        // sum_l ceil(B / Rbar_l) never undercuts the shared-band ceil(B / R)
        prop_assert_eq!(plan.upsilon_ods, plan.per_ap_uses.iter().sum::<u64>());
        prop_assert!(plan.upsilon_ods as f64 >= (bits as f64 / plan.rate).ceil() - 1e-9);
    }

    #[test]
    fn detection_returns_in_range_indices(k in 1usize..6, order_log in 1u32..4, seed: u64) {
        let c = Constellation::<f64>::qam(1 << (2 * order_log)).unwrap();
        let energy = c.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / c.len() as f64;
        prop_assert!((energy - 1.0).abs() <= 1e-12);
        let mut rng = stream(seed, domain::ORACLE, 3);
        let h = cn_matrix::<f64, _>(&mut rng, k + 2, k, 1.0);
        let a = h.adjoint() * &h;
        let t = cn_vector::<f64, _>(&mut rng, k, 1.0);
        let s = detect_lmmse(&a, &t, 1.0, 0.1).unwrap();
        prop_assert!(c.hard_decisions(&s).iter().all(|&i| i < c.len()));
    }
}
