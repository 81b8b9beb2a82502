mod common;

use common::unit_scenario;
use proptest::prelude::*;
use relaypower_core::analytics::{effective_gain, expected_relay_power, threshold_report};
use relaypower_core::model::{
    build_statistics, mrc_snr, received_snr, reliable_set, ChannelRealization, ChannelStatistics,
    NetworkScenario, Physics, Point,
};
use relaypower_core::montecarlo::{ocpa_exhaustive_oracle, theorem1_bruteforce_oracle};
use relaypower_core::numerics::{bisect, exp_integral_e1, integrate_tail, Tolerance};
use relaypower_core::strategies::{
    ocpa_allocate, odpa_allocate, odpa_candidates, psm_outage, psm_outage_floor,
    psm_wrong_forwarding_prob, reliability_probability, solve_threshold, threshold_bounds,
};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn realization(n: usize) -> impl Strategy<Value = ChannelRealization> {
    (
        prop::collection::vec(log_uniform(1e-3, 10.0), n),
        prop::collection::vec(log_uniform(1e-3, 10.0), n),
        log_uniform(1e-3, 10.0),
    )
        .prop_map(|(f_sq, g_sq, h_sq)| ChannelRealization { f_sq, g_sq, h_sq })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reliable_set_is_monotone(real in realization(6), p in log_uniform(0.1, 1e3), k in 1.0f64..10.0) {
        let s = unit_scenario(6);
        let small = reliable_set(p, &real, &s);
        let large = reliable_set(p * k, &real, &s);
        prop_assert!(small.is_subset(&large));
        for i in 0..6 {
            let snr = received_snr(p, real.f_sq[i], s.noise_power).unwrap();
            prop_assert_eq!(small.contains(i), snr >= s.snr_target * (1.0 - 1e-12));
        }
    }

    #[test]
    fn mrc_is_sum_of_received_snrs(
        ps in 0.0f64..100.0,
        h in 0.0f64..10.0,
        links in prop::collection::vec((0.0f64..100.0, 0.0f64..10.0), 0..8),
        n0 in log_uniform(1e-12, 10.0),
    ) {
        let combined = mrc_snr(ps, h, &links, n0);
        let separate = received_snr(ps, h, n0).unwrap()
            + links.iter().map(|&(p, g)| received_snr(p, g, n0).unwrap()).sum::<f64>();
        prop_assert!((combined - separate).abs() <= 4.0 * f64::EPSILON * (links.len() as f64 + 1.0) * combined.max(1e-300));
        let mut reversed = links.clone();
        reversed.reverse();
        let back = mrc_snr(ps, h, &reversed, n0);
        prop_assert!((combined - back).abs() <= 4.0 * f64::EPSILON * (links.len() as f64 + 1.0) * combined.max(1e-300));
    }

    #[test]
    fn closer_relays_have_stronger_source_links(
        a in (1.0f64..99.0, -40.0f64..40.0),
        b in (1.0f64..99.0, -40.0f64..40.0),
    ) {
        let s = NetworkScenario::new(
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            vec![Point::new(a.0, a.1), Point::new(b.0, b.1)],
            Physics::default(),
            1e-10,
            10.0,
        ).unwrap();
        let stats = build_statistics(&s).unwrap();
        let da = s.source.distance(&s.relays[0]);
        let db = s.source.distance(&s.relays[1]);
        if da < db {
            prop_assert!(stats.var_f[0] > stats.var_f[1]);
        } else if db < da {
            prop_assert!(stats.var_f[1] > stats.var_f[0]);
        }
    }

    #[test]
    fn bisect_finds_polynomial_roots(root in -5.0f64..5.0, c in 0.1f64..3.0) {
        let g = |x: f64| c * (x - root) * (1.0 + (x - root).powi(2));
        let tol = Tolerance::new(1e-12, 1e-13, 300).unwrap();
        let x = bisect(g, -10.0, 10.0, tol).unwrap();
        prop_assert!((x - root).abs() <= 1e-9 * root.abs().max(1.0));
    }

    #[test]
    fn e1_agrees_with_quadrature(x in log_uniform(1e-8, 50.0)) {
        let tol = Tolerance::new(1e-13, 0.0, 2000).unwrap();
        let quad = integrate_tail(|t| (-t).exp() / t, x, tol).unwrap();
        let e1 = exp_integral_e1(x).unwrap();
        prop_assert!(((e1 - quad) / quad).abs() < 1e-10);
    }

    #[test]
    fn e1_recurrence(x in log_uniform(1e-3, 40.0)) {
        let tol = Tolerance::new(1e-13, 0.0, 2000).unwrap();
        let rest = integrate_tail(|t| (-t).exp() / (t * t), x, tol).unwrap();
        let e1 = exp_integral_e1(x).unwrap();
        let lhs = (-x).exp() / x - rest;
        prop_assert!((e1 - lhs).abs() <= 1e-9 * (-x).exp() / x);
    }

    #[test]
    fn threshold_solution_meets_target(
        vars in prop::collection::vec(log_uniform(1e-3, 1e3), 1..9),
        rho in log_uniform(1e-4, 0.95),
    ) {
        let gamma = solve_threshold(&vars, rho).unwrap();
        let (lo, hi) = threshold_bounds(&vars, rho).unwrap();
        prop_assert!(lo <= gamma && gamma <= hi);
        let product: f64 = vars.iter().map(|&v| -(-gamma / (2.0 * v)).exp_m1()).product();
        prop_assert!((product - rho).abs() <= 1e-9);
    }

    #[test]
    fn odpa_returns_a_candidate(real in realization(4), rho in 0.01f64..0.5) {
        let s = unit_scenario(4);
        let var_g = [0.5, 1.0, 2.0, 4.0];
        let d = odpa_allocate(&real.f_sq, real.h_sq, &var_g, rho, &s).unwrap();
        let cands = odpa_candidates(&real.f_sq, real.h_sq, &var_g, rho, &s).unwrap();
        prop_assert!(cands.iter().any(|c| c.source_power == d.source_power));
        let best = cands.iter().map(|c| c.expected_total).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(d.expected_total_power.unwrap(), best);
        for c in cands.iter().filter(|c| !c.is_direct()) {
            prop_assert!(c.effective_gain_sq > 0.0);
        }
    }

    #[test]
    fn source_power_grid_never_wins(
        real in realization(3),
        var_g in prop::collection::vec(log_uniform(0.05, 5.0), 3),
        rho in 0.01f64..0.3,
    ) {
        let s = unit_scenario(3);
        let d = odpa_allocate(&real.f_sq, real.h_sq, &var_g, rho, &s).unwrap();
        let g = theorem1_bruteforce_oracle(&real.f_sq, real.h_sq, &var_g, rho, 400, &s).unwrap();
        let best = d.expected_total_power.unwrap();
        prop_assert!(g.expected_total >= best * (1.0 - 1e-9), "{} < {}", g.expected_total, best);
    }

    #[test]
    fn ocpa_matches_exhaustive_search(real in realization(2)) {
        let s = unit_scenario(2);
        let ocpa = ocpa_allocate(&real, &s).unwrap();
        let total = ocpa.source_power + ocpa.relay_power.unwrap_or(0.0);
        let step = total * 1e-4;
        let oracle = ocpa_exhaustive_oracle(&real, &s, step).unwrap();
        prop_assert!(oracle >= total * (1.0 - 1e-12) && oracle <= total + step, "{} vs {}", oracle, total);
    }

    #[test]
    fn tradeoff_is_monotone(
        vars in prop::collection::vec(log_uniform(0.05, 5.0), 1..5),
        gamma in log_uniform(1e-3, 2.0),
        k in 1.01f64..4.0,
        ps in log_uniform(5.0, 50.0),
    ) {
        let s = unit_scenario(vars.len());
        let power = |g: f64| vars.iter().map(|&v| expected_relay_power(g, v, 5.0, 1.0).unwrap()).sum::<f64>();
        prop_assert!(power(gamma * k) < power(gamma));
        let stats = ChannelStatistics::new(vec![1.0; vars.len()], vars.clone(), 0.2).unwrap();
        prop_assert!(psm_outage(ps, gamma * k, &stats, &s) > psm_outage(ps, gamma, &stats, &s));
    }

    #[test]
    fn wrong_forwarding_is_bounded(
        var_f in prop::collection::vec(log_uniform(0.05, 5.0), 1..5),
        var_g in prop::collection::vec(log_uniform(0.05, 5.0), 5),
        x in log_uniform(1e-3, 20.0),
        ps in log_uniform(0.5, 50.0),
    ) {
        let n = var_f.len();
        let s = unit_scenario(n);
        let stats = ChannelStatistics::new(var_f.clone(), var_g[..n].to_vec(), 0.2).unwrap();
        for (i, &vf) in var_f.iter().enumerate() {
            let w = psm_wrong_forwarding_prob(i, x, ps, &stats, &s);
            let a = reliability_probability(ps, vf, &s);
            prop_assert!((0.0..=a * (1.0 + 1e-15)).contains(&w));
            prop_assert!(psm_wrong_forwarding_prob(i, x * 1.5, ps, &stats, &s) <= w);
        }
    }

    #[test]
    fn psm_outage_bounds(
        var_f in prop::collection::vec(log_uniform(0.05, 5.0), 1..5),
        var_g in prop::collection::vec(log_uniform(0.05, 5.0), 5),
        gamma in log_uniform(1e-3, 20.0),
        ps in log_uniform(0.1, 100.0),
    ) {
        let n = var_f.len();
        let s = unit_scenario(n);
        let stats = ChannelStatistics::new(var_f, var_g[..n].to_vec(), 0.2).unwrap();
        let out = psm_outage(ps, gamma, &stats, &s);
        let d_out = -(-s.snr_target / (2.0 * 0.2 * ps)).exp_m1();
        let b_bound: f64 = stats.var_g.iter().map(|&v| 1.0 - (-gamma / (2.0 * v)).exp()).product::<f64>() * d_out;
        prop_assert!(out >= psm_outage_floor(ps, &stats, &s) * (1.0 - 1e-14));
        prop_assert!(out >= b_bound * (1.0 - 1e-14));
    }

    #[test]
    fn effective_gain_reproduces_sum(
        vars in prop::collection::vec(log_uniform(0.05, 5.0), 1..8),
        gamma in log_uniform(1e-3, 10.0),
        rem in 0.1f64..10.0,
        ps in 0.1f64..10.0,
    ) {
        let geff = effective_gain(gamma, &vars).unwrap();
        let summed = threshold_report(ps, gamma, &vars, rem, 1.0, 0.1).unwrap().expected_total;
        let via_geff = ps + rem / geff;
        prop_assert!((summed - via_geff).abs() <= 16.0 * f64::EPSILON * summed);
    }
}
