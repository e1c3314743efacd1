use proptest::prelude::*;

use metastable::detbal;
use metastable::model::{
    time_reverse, total_energy, BathMode, ConditioningContext, FlatWell, HamiltonianModel, PhasePoint, PotentialSpec,
};
use metastable::quantum::{self, EnergyShellProjection, InstanceSpec, Spectrum};
use metastable::replicator;
use metastable::states::{Macrostate, Region, ThermoOptions};

fn bath_model(c: f64, coupling: f64) -> HamiltonianModel {
    HamiltonianModel::new(
        1.0,
        PotentialSpec::AsymmetricDoubleWell { a: 1.0, b: 2.0, c },
        vec![BathMode { frequency: 0.9, coupling }, BathMode { frequency: 1.4, coupling: -coupling }],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn time_reversal_is_an_energy_preserving_involution(
        q in prop::collection::vec(-2.0f64..2.0, 3),
        p in prop::collection::vec(-2.0f64..2.0, 3),
        c in -0.5f64..0.5,
        coupling in -0.4f64..0.4,
    ) {
        let model = bath_model(c, coupling);
        let ctx = ConditioningContext::trivial();
        let s = PhasePoint::new(q, p).unwrap();
        let r = time_reverse(&s);
        prop_assert_eq!(time_reverse(&r), s.clone());
        let h = total_energy(&model, &s, &ctx, ctx.first_label()).unwrap();
        let hr = total_energy(&model, &r, &ctx, ctx.first_label()).unwrap();
        prop_assert_eq!(h, hr);
    }

    #[test]
    fn flat_box_equality_holds(
        w1 in 0.2f64..3.0,
        w2 in 0.2f64..3.0,
        f1 in -1.0f64..1.0,
        f2 in -1.0f64..1.0,
        beta in 0.1f64..4.0,
    ) {
        let wells = vec![
            FlatWell { lo: 0.0, hi: w1, floor: f1 },
            FlatWell { lo: w1 + 1.0, hi: w1 + 1.0 + w2, floor: f2 },
        ];
        let model = HamiltonianModel::bare(PotentialSpec::PiecewiseFlatBox { wells }).unwrap();
        let mi = Macrostate::single(Region::interval("I", 0.0, w1));
        let mii = Macrostate::single(Region::interval("II", w1 + 1.0, w1 + 1.0 + w2));
        let ctx = ConditioningContext::trivial();
        let eq = detbal::verify_entropy_equality(&model, &ctx, beta, &mi, &mii, &ThermoOptions::default()).unwrap();
        prop_assert!((eq.report.lhs - eq.report.rhs).abs() <= 1e-8);
        prop_assert!((eq.ln_z_ratio - ((w1 / w2).ln() - beta * (f1 - f2))).abs() <= 1e-8);
    }

    #[test]
    fn coupled_rates_have_slack_minus_ln_f(
        beta in 0.1f64..3.0,
        dq in -2.0f64..2.0,
        ds in -2.0f64..2.0,
        f in 0.01f64..=1.0,
    ) {
        let params = replicator::couple_rates(beta, dq, ds, f, 10).unwrap();
        let bound = replicator::check_growth_bound(&params).unwrap();
        prop_assert!((bound.slack + f.ln()).abs() <= 1e-12);
        prop_assert!(bound.satisfied);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quantum_probabilities_are_probabilities_and_ratio_holds(
        d in 4usize..24,
        seed in 0u64..1000,
        tau in 0.1f64..6.0,
    ) {
        let ra = 1 + d / 4;
        let rb = 1 + d / 3;
        let inst = InstanceSpec { dimension: d, spectrum: Spectrum::Goe, rank_i: ra, rank_ii: rb, seed, stream: 0 }
            .build()
            .unwrap();
        let shell = EnergyShellProjection::identity(&inst.system);
        let fwd = quantum::transition_probability(&inst.system, &shell, &inst.pair.p_i, &inst.pair.p_ii, tau).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fwd));
        let cmp = quantum::verify_quantum_ratio(&inst.system, &shell, &inst.pair, tau).unwrap();
        prop_assert!(cmp.violation <= 1e-10, "violation {}", cmp.violation);
        prop_assert!((cmp.trace_ratio - ra as f64 / rb as f64).abs() <= 1e-12);
    }
}
