use proptest::prelude::*;

use renyi_accounting::conversion::{curve_to_dp, dp_target_to_rdp_budget, rdp_to_dp, TargetStatus};
use renyi_accounting::curve::RdpCurve;
use renyi_accounting::filter::FilterState;
use renyi_accounting::mechanisms::DiscreteMechanism;
use renyi_accounting::odometer::{FilterSchedule, OdometerState};
use renyi_accounting::orders::OrderSet;

fn orders() -> OrderSet {
    OrderSet::new(vec![1.25, 2.0, 3.0, 8.0, 32.0]).unwrap()
}

fn curve() -> impl Strategy<Value = RdpCurve> {
    prop::collection::vec(0.0..10.0f64, 5).prop_map(|eps| RdpCurve::new(orders(), eps).unwrap())
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    })
}

fn mechanism() -> impl Strategy<Value = DiscreteMechanism> {
    (2usize..5).prop_flat_map(|n| (distribution(n), distribution(n))).prop_map(|(p0, p1)| {
        let labels = (0..p0.len()).map(|i| format!("o{i}")).collect();
        DiscreteMechanism::new(labels, p0, p1).unwrap()
    })
}

proptest! {
    #[test]
    fn curve_addition_commutes_with_identity(a in curve(), b in curve()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.add(&RdpCurve::zeros(&orders())).unwrap(), a);
    }

    #[test]
    fn curve_addition_associates(a in curve(), b in curve(), c in curve()) {
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        for (x, y) in left.values().iter().zip(right.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn curve_json_is_bit_exact(a in curve()) {
        let back: RdpCurve = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(back.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn conversion_is_monotone(eps in 0.0..20.0f64, extra in 0.0..5.0f64, alpha in 1.01..64.0f64, d in -12.0..-1.0f64) {
        let delta = 10f64.powf(d);
        prop_assert!(rdp_to_dp(eps, alpha, delta).unwrap() <= rdp_to_dp(eps + extra, alpha, delta).unwrap());
        prop_assert!(rdp_to_dp(eps, alpha, delta).unwrap() >= rdp_to_dp(eps, alpha, (delta * 2.0).min(0.5)).unwrap());
    }

    #[test]
    fn dp_target_converts_back_within_target(eps_dp in 0.6..20.0f64, d in -10.0..-2.0f64) {
        let delta = 10f64.powf(d);
        let target = dp_target_to_rdp_budget(eps_dp, delta, &orders()).unwrap();
        if target.status == TargetStatus::AllZero {
            // no order can certify the target; the filter grants nothing nonzero
            prop_assert!(target.budget.is_zero());
        } else {
            prop_assert!(curve_to_dp(&target.budget, delta).unwrap().epsilon <= eps_dp);
        }
    }

    #[test]
    fn filter_stays_within_cap_somewhere(cap in curve(), requests in prop::collection::vec(curve(), 0..40)) {
        let mut filter = FilterState::new(cap.clone());
        for request in &requests {
            filter.try_spend(&request.scale(0.2).unwrap()).unwrap();
            let within = filter.spent().values().iter().zip(cap.values()).any(|(s, c)| s <= c);
            prop_assert!(within);
            prop_assert!(filter.witness_order().is_some());
        }
    }

    #[test]
    fn discrete_curve_grows_with_order(m in mechanism()) {
        let set = OrderSet::new((1..=40).map(|k| 1.0 + 0.25 * k as f64).collect::<Vec<_>>()).unwrap();
        let c = m.rdp_curve(&set);
        for w in c.values().windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn merging_outcomes_never_increases_divergence(m in mechanism(), i in 0usize..4, j in 0usize..4) {
        let n = m.len();
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let merge = |p: &[f64]| {
            let mut out: Vec<f64> = p.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x).collect();
            let slot = if i < j { i } else { i - 1 };
            out[slot] += p[j];
            out
        };
        let labels = (0..n - 1).map(|k| format!("m{k}")).collect();
        let merged = DiscreteMechanism::new(labels, merge(m.p0()), merge(m.p1())).unwrap();
        let (before, after) = (m.rdp_curve(&orders()), merged.rdp_curve(&orders()));
        for (b, a) in before.values().iter().zip(after.values()) {
            prop_assert!(*a <= b + 1e-12, "{a} > {b}");
        }
    }

    #[test]
    fn incremental_filter_index_matches_recomputation(requests in prop::collection::vec(curve(), 1..60), d in -9.0..-1.0f64) {
        let schedule = FilterSchedule::new(10f64.powf(d), orders()).unwrap();
        let mut odometer = OdometerState::new(schedule.clone());
        let mut last = f64::NEG_INFINITY;
        for request in &requests {
            odometer.spend(request).unwrap();
            for (alpha, spent) in odometer.spent().iter() {
                prop_assert_eq!(odometer.filter_index(alpha).ok(), schedule.index_for(spent, alpha));
            }
            let bound = odometer.running_bound().eps_dp;
            prop_assert!(bound >= last);
            last = bound;
        }
    }
}
