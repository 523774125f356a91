use cosm_core::dualnet::proximity;
use cosm_core::system::{random_system, RandomParams, Reaction};
use cosm_core::{
    pareto_filter, simplicity_table, CostVector, ExtCost, PatternEngine, Rational, RelativeMode, System,
};
use cosm_core::pattern::Denominator;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn vectors() -> impl Strategy<Value = Vec<CostVector<Rational>>> {
    proptest::collection::vec(
        proptest::collection::vec(prop_oneof![9 => (0i64..20).prop_map(|v| ExtCost::Finite(q(v, 2))), 1 => Just(ExtCost::Infinite)], 3),
        0..12,
    )
    .prop_map(|vs| vs.into_iter().map(CostVector).collect())
}

fn all_tables(sys: &System) -> Vec<Vec<ExtCost<Rational>>> {
    (0..sys.measure_count())
        .map(|m| simplicity_table(sys, m, sys.identity(), RelativeMode::FreeContext).unwrap().values())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pareto_filter_is_idempotent_and_order_free(vs in vectors(), seed in any::<u64>()) {
        let once = pareto_filter(vs.clone()).unwrap();
        prop_assert_eq!(pareto_filter(once.clone()).unwrap(), once.clone());
        let mut shuffled = vs;
        let len = shuffled.len();
        if len > 1 {
            let k = (seed as usize) % len;
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        prop_assert_eq!(pareto_filter(shuffled).unwrap(), once.clone());
        for a in &once {
            for b in &once {
                prop_assert!(!a.dominates(b));
            }
        }
    }

    #[test]
    fn extra_reactions_never_raise_simplicity(seed in 0u64..400, pick in any::<(usize, usize, usize, usize)>()) {
        let sys: System = random_system(seed, &RandomParams::default()).unwrap();
        let n = sys.entity_count();
        let derived: Vec<usize> = (0..n).filter(|&x| !sys.is_atom(x) && x != sys.identity()).collect();
        prop_assume!(!derived.is_empty());
        let (op, left, right) = (pick.0 % sys.operator_count(), pick.1 % n, pick.2 % n);
        prop_assume!(left != sys.identity() && right != sys.identity());
        prop_assume!(sys.explicit_reaction(op, left, right).is_none());
        let product = derived[pick.3 % derived.len()];
        let bigger = sys.with_extra_reaction(Reaction { op, left, right, products: vec![product] }).unwrap();
        for (old, new) in all_tables(&sys).iter().zip(all_tables(&bigger)) {
            for (a, b) in old.iter().zip(&new) {
                prop_assert!(b.le(a));
            }
        }
    }

    #[test]
    fn cheaper_measures_never_raise_simplicity(seed in 0u64..400, num in 1i64..8) {
        let sys: System = random_system(seed, &RandomParams::default()).unwrap();
        let cheaper = sys.scaled_measure(0, &q(num, 8));
        let (old, new) = (&all_tables(&sys)[0], &all_tables(&cheaper)[0]);
        for (a, b) in old.iter().zip(new) {
            prop_assert!(b.le(a));
        }
    }

    #[test]
    fn intensities_are_scale_free(seed in 0u64..400, num in 1i64..20, den in 1i64..20) {
        let params = RandomParams { max_measures: 3, ..RandomParams::default() };
        let sys: System = random_system(seed, &params).unwrap();
        prop_assume!(sys.measure_count() >= 2);
        let lambda = q(num, den);
        let scaled = (0..sys.measure_count()).fold(sys.clone(), |s, m| s.scaled_measure(m, &lambda));
        let a = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
        let b = PatternEngine::new(&scaled, scaled.identity(), RelativeMode::FreeContext, None).unwrap();
        for x in 0..sys.entity_count() {
            for denom in [Denominator::Base, Denominator::PerMeasure] {
                let ra = a.records(x, denom).unwrap();
                let rb = b.records(x, denom).unwrap();
                prop_assert_eq!(ra.len(), rb.len());
                for (p, r) in ra.iter().zip(&rb) {
                    prop_assert_eq!(&p.coords, &r.coords);
                }
            }
        }
    }

    #[test]
    fn proximity_grows_with_k(d in 1i64..40, k1 in 1i64..40, k2 in 1i64..40) {
        prop_assume!(k1 < k2);
        let d = q(d, 8);
        prop_assert!(proximity(&q(k1, 4), &d) < proximity(&q(k2, 4), &d));
        prop_assert_eq!(proximity(&q(k1, 4), &q(0, 1)), q(1, 1));
    }
}
