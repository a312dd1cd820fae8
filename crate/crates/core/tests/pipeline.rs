use fbec_core::constructions::{Construction, CorrelatedLoss};
use fbec_core::decoder::FailureAggregation;
use fbec_core::experiments::{records_to_curves, Experiment, ExperimentConfig, Simulator};
use fbec_core::lattice::LatticeDims;
use fbec_core::noise::FusionChannelParams;

fn sim(c: Construction, aggregation: FailureAggregation) -> Simulator {
    Simulator::new(c, LatticeDims::new(8, 8, 4).unwrap(), CorrelatedLoss::Joint, aggregation).unwrap()
}

#[test]
fn rates_rise_with_failure_probability() {
    for c in Construction::ALL {
        let s = sim(c, FailureAggregation::PerPlane);
        let rate = |p| {
            s.run_trials(&FusionChannelParams::new(p, 0.0).unwrap(), 400, 5)
                .unwrap()
                .decoder_rate()
                .rate
        };
        let (lo, hi) = match c {
            Construction::FourStar => (0.1, 0.3),
            Construction::SixRing => (0.2, 0.5),
        };
        assert!(rate(lo) < rate(hi), "{c}");
    }
}

#[test]
fn percolation_bounds_decoder_failures() {
    let s = sim(Construction::SixRing, FailureAggregation::LongAxes);
    let params = FusionChannelParams::new(0.3, 0.004).unwrap();
    let n = s.run_trials(&params, 300, 8).unwrap();
    assert!(n.decoder_failures <= n.percolation_failures);
    for index in [0, 17, 299] {
        let t = s.debug_trial(&params, 8, index).unwrap();
        assert!(!t.outcome.decoder_failure || t.outcome.percolation_failure);
    }
}

#[test]
fn sweep_records_are_reproducible() {
    let dims = vec![LatticeDims::new(4, 4, 4).unwrap(), LatticeDims::new(6, 6, 4).unwrap()];
    let cfg = ExperimentConfig::new(Construction::FourStar, dims, 200, 21);
    let e = Experiment::new(cfg).unwrap();
    let grid = [(0.15, 0.0), (0.25, 0.002)];
    let a = e.sweep(&grid, |_| {}).unwrap();
    let b = e.sweep(&grid, |_| {}).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    let curves = records_to_curves(&a, false);
    assert_eq!(curves.keys().copied().collect::<Vec<_>>(), vec![4, 6]);
    let json = serde_json::to_string(&a[0]).unwrap();
    assert!(json.contains("\"four-star\""));
}
