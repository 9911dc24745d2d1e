use proptest::prelude::*;

use sop_core::analytic::exact_sop;
use sop_core::asymptotic::secrecy_diversity_order;
use sop_core::channel::{SweepAxis, SystemScenario};
use sop_core::experiments::fig_base;
use sop_core::montecarlo::{classify, simulate_tallies, McConfig, McTallies};
use sop_core::special::{gamma, lower_gamma, upper_gamma};

fn scenario(r: u32, omega_sr_db: f64, rs: f64) -> SystemScenario {
    let mut s = fig_base();
    s.fso.r = r;
    s.fso.omega_sr_db = omega_sr_db;
    s.rs_nats = rs;
    s
}

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sop_grows_with_target_rate(r in 1u32..=2, omega in 0.0f64..40.0, rs1 in 0.0f64..0.6, gap in 0.001f64..0.3) {
        let a = exact_sop(&scenario(r, omega, rs1)).unwrap().sop;
        let b = exact_sop(&scenario(r, omega, rs1 + gap)).unwrap().sop;
        prop_assert!(a <= b + TOL, "{a} > {b}");
    }

    #[test]
    fn sop_falls_with_fso_snr(r in 1u32..=2, omega in 0.0f64..40.0, step in 0.5f64..10.0, rs in 0.0f64..0.5) {
        let a = exact_sop(&scenario(r, omega, rs)).unwrap().sop;
        let b = exact_sop(&scenario(r, omega + step, rs)).unwrap().sop;
        prop_assert!(b <= a + TOL, "{b} > {a}");
    }

    #[test]
    fn heterodyne_beats_direct_detection(omega in 0.0f64..40.0, rs in 0.0f64..0.5, xi in 0.8f64..3.0) {
        let mut s1 = scenario(1, omega, rs);
        s1.fso.xi = xi;
        let mut s2 = s1;
        s2.fso.r = 2;
        let a = exact_sop(&s1).unwrap().sop;
        let b = exact_sop(&s2).unwrap().sop;
        prop_assert!(a <= b + TOL, "{a} > {b}");
    }

    #[test]
    fn breakdown_is_a_probability_assembly(r in 1u32..=2, omega in 0.0f64..40.0, rs in 0.0f64..0.6) {
        let b = exact_sop(&scenario(r, omega, rs)).unwrap();
        for v in [b.h11, b.h12, b.h13, b.h21, b.h22, b.h23, b.varrho, b.sop] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((b.sop - (b.h1 + b.h2 + 1.0 - b.varrho)).abs() <= 1e-15);
        prop_assert_eq!(b.p0, b.varrho);
    }

    #[test]
    fn diversity_order_ignores_eavesdropper_and_harvesting(
        alpha in 0.05f64..1.0,
        eta in 2.0f64..4.0,
        m_e in 1u32..5,
        n_e in 1u32..5,
        r in 1u32..=2,
    ) {
        let mut base = fig_base();
        base.fso.r = r;
        let mut s = base;
        s.rf_d.alpha = alpha;
        s.rf_d.eta = eta;
        s.rf_e.alpha = alpha;
        s.rf_e.eta = eta;
        s.rf_e.m = m_e;
        s.rf_e.n_antennas = n_e;
        prop_assert_eq!(secrecy_diversity_order(&s).to_bits(), secrecy_diversity_order(&base).to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn events_partition_every_sample(x in 0.0f64..1e3, y in 0.0f64..1e3, z in 0.0f64..1e3, rs in 0.0f64..1.0) {
        let mut t = McTallies::default();
        classify(x, y, z, rs.exp_m1(), &mut t);
        prop_assert!(t.partition_holds());
        // the eavesdropper's equivalent SNR never exceeds the relay's
        prop_assert!(x.min(z) <= x);
        let cs = ((1.0 + x.min(y)).ln() - (1.0 + x.min(z)).ln()).max(0.0);
        if (cs - rs).abs() > 1e-9 {
            prop_assert_eq!(t.outage == 1, cs <= rs);
        }
        prop_assert_eq!(t.positive == 1, cs > 0.0);
    }

    #[test]
    fn incomplete_gamma_pair_sums_to_gamma(a in 0.5f64..20.0, x in 0.01f64..50.0) {
        let g = gamma(a);
        let s = lower_gamma(a, x).unwrap() + upper_gamma(a, x).unwrap();
        prop_assert!((s - g).abs() <= 1e-12 * g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn monte_carlo_ignores_worker_count_and_batching(
        seed in any::<u64>(),
        workers in 2usize..6,
        batch in 100u64..5000,
    ) {
        let s = fig_base();
        let base = McConfig { n_samples: 6000, master_seed: seed, n_workers: 1, batch_size: 1000 };
        let other = McConfig { n_workers: workers, batch_size: batch, ..base };
        prop_assert_eq!(simulate_tallies(&s, &base).unwrap(), simulate_tallies(&s, &other).unwrap());
    }

    #[test]
    fn sweep_axes_round_trip_by_name(i in 0usize..10) {
        let axis = SweepAxis::ALL[i];
        prop_assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
    }
}
