use fbec_core::constructions::{build_layout, Construction, CorrelatedLoss};
use fbec_core::decoder::{peel_decode, spans_nontrivially, trial_failure, ErasurePattern, FailureAggregation};
use fbec_core::lattice::{build_lattice, LatticeDims};
use fbec_core::noise::{full_erase_prob, outcome_probs, FusionChannelParams, LossOrder};
use fbec_core::syndrome::{build_syndrome_graph, SyndromeGraph};
use fbec_core::validation::{check_cluster_commutation, random_typed_graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn six_ring_graph() -> &'static SyndromeGraph {
    static SG: OnceLock<SyndromeGraph> = OnceLock::new();
    SG.get_or_init(|| {
        let lat = build_lattice(LatticeDims::new(4, 4, 3).unwrap()).unwrap();
        let mut sg = build_syndrome_graph(&lat).unwrap();
        build_layout(Construction::SixRing, &lat, &mut sg, CorrelatedLoss::Joint).unwrap();
        sg
    })
}

proptest! {
    #[test]
    fn cluster_stabilizers_commute(seed in any::<u64>(), n in 1usize..=16, p in 0.05f64..0.7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_typed_graph(n, p, &mut rng);
        prop_assert!(check_cluster_commutation(&g).is_ok());
    }

    #[test]
    fn outcome_probabilities_form_a_distribution(
        p_fail in 0.01f64..0.99,
        p_loss in 0.0f64..0.5,
        marginal in any::<bool>(),
    ) {
        let order = if marginal { LossOrder::Marginal } else { LossOrder::LossFirst };
        let params = FusionChannelParams::new(p_fail, p_loss).unwrap().with_loss_order(order);
        let probs = outcome_probs(&params);
        prop_assert!(probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs[0] >= p_loss - 1e-15);
    }

    #[test]
    fn full_erasure_grows_with_loss(p_fail in 0.01f64..0.5, a in 0.0f64..0.2, b in 0.0f64..0.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f = |l| full_erase_prob(&FusionChannelParams::new(p_fail, l).unwrap());
        prop_assert!(f(lo) <= f(hi));
    }

    #[test]
    fn peeling_clears_every_syndrome(seed in any::<u64>(), density in 0.02f64..0.6) {
        let sg = six_ring_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<usize> = (0..sg.n_mechanisms())
            .filter(|_| rand::Rng::random_bool(&mut rng, density))
            .collect();
        let e = ErasurePattern::from_ids(sg.n_mechanisms(), &ids).unwrap();
        let error: Vec<usize> = ids.iter().copied().filter(|_| rand::Rng::random_bool(&mut rng, 0.5)).collect();
        let defects = sg.defects_from_error(&error);
        let corr = peel_decode(sg, &e, &defects).unwrap();
        prop_assert_eq!(sg.defects_from_error(&corr), defects);
        prop_assert!(corr.iter().all(|&m| e.contains(m)));
        let mask = FailureAggregation::AllAxes.mask(&LatticeDims::new(4, 4, 3).unwrap());
        let r = trial_failure(sg, &error, &corr, mask).unwrap();
        let spans = spans_nontrivially(sg, &e);
        prop_assert_eq!(r.residual.0 & !spans.0, 0, "residual winds where no erased cycle does");
    }
}
