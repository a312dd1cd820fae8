//! Monte-Carlo orchestration: trials, sweeps, thresholds and loss curves.
//!
//! Trial `i` of any point draws from stream `i` of the master seed, so a
//! result depends only on the configuration and the seed, never on the
//! number of workers. Trials are split into fixed chunks that rayon workers
//! process with their own decoder workspace; counts are summed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructions::{
    build_layout, erasure_effects, Construction, CorrelatedLoss, FusionLayout, LayoutError,
};
use crate::decoder::{
    DecodeError, DecoderWorkspace, FailureAggregation, PlaneIndex, TrialDebug, TrialOutcome,
};
use crate::fit::{fit_threshold, Curves, FitError, FitOptions, RateEstimate, ThresholdEstimate};
use crate::lattice::{build_lattice, LatticeDims, LatticeError, XzzxLattice};
use crate::noise::{trial_rng, FusionChannelParams, FusionOutcome, LossOrder, NoiseError, OutcomeSampler};
use crate::syndrome::{build_syndrome_graph, SyndromeError, SyndromeGraph};

const CHUNK: u64 = 128;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Syndrome(#[from] SyndromeError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("trial {index} with seed {seed} on {dims:?}: {source}")]
    Trial {
        seed: u64,
        index: u64,
        dims: [usize; 3],
        source: DecodeError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Failure counts of a batch of trials.
///
/// `samples` equals `trials` except under per-plane counting, where every
/// (sublattice, plane) pair of every trial is one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub trials: u64,
    pub samples: u64,
    pub decoder_failures: u64,
    pub percolation_failures: u64,
}

impl TrialCounts {
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            samples: self.samples + o.samples,
            decoder_failures: self.decoder_failures + o.decoder_failures,
            percolation_failures: self.percolation_failures + o.percolation_failures,
        }
    }

    pub fn decoder_rate(&self) -> RateEstimate {
        RateEstimate::new(self.decoder_failures, self.samples)
    }

    pub fn percolation_rate(&self) -> RateEstimate {
        RateEstimate::new(self.percolation_failures, self.samples)
    }
}

/// A lattice with its syndrome graph and fusion layout.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub lattice: XzzxLattice,
    pub syndrome: SyndromeGraph,
    pub layout: FusionLayout,
    pub mask: u8,
    /// Set under per-plane counting.
    pub planes: Option<PlaneIndex>,
}

impl Simulator {
    pub fn new(
        construction: Construction,
        dims: LatticeDims,
        correlated_loss: CorrelatedLoss,
        aggregation: FailureAggregation,
    ) -> Result<Self, ExperimentError> {
        let lattice = build_lattice(dims)?;
        let mut syndrome = build_syndrome_graph(&lattice)?;
        let layout = build_layout(construction, &lattice, &mut syndrome, correlated_loss)?;
        let mask = aggregation.mask(&dims);
        let planes = (aggregation == FailureAggregation::PerPlane).then(|| PlaneIndex::new(&syndrome));
        Ok(Self {
            lattice,
            syndrome,
            layout,
            mask,
            planes,
        })
    }

    pub fn dims(&self) -> LatticeDims {
        self.lattice.dims()
    }

    fn trial_error(&self, seed: u64, index: u64, source: DecodeError) -> ExperimentError {
        ExperimentError::Trial {
            seed,
            index,
            dims: self.dims().lengths(),
            source,
        }
    }

    /// Fills the workspace erasure for trial `index` and returns the RNG
    /// positioned after the fusion outcomes.
    fn sample_erasure(
        &self,
        w: &mut DecoderWorkspace,
        sampler: &OutcomeSampler,
        seed: u64,
        index: u64,
    ) -> Result<rand_chacha::ChaCha8Rng, DecodeError> {
        let mut rng = trial_rng(seed, index);
        w.erasure.clear();
        for f in &self.layout.fusions {
            let o = sampler.draw(&mut rng);
            if o != FusionOutcome::Success {
                w.erasure.extend(erasure_effects(f, o))?;
            }
        }
        Ok(rng)
    }

    fn trial(
        &self,
        w: &mut DecoderWorkspace,
        sampler: &OutcomeSampler,
        seed: u64,
        index: u64,
    ) -> Result<TrialOutcome, DecodeError> {
        let mut rng = self.sample_erasure(w, sampler, seed, index)?;
        match &self.planes {
            Some(p) => w.run_trial_per_plane(&self.syndrome, self.mask, p, &mut rng),
            None => w.run_trial(&self.syndrome, self.mask, &mut rng),
        }
    }

    /// Samples contributed by one trial.
    pub fn samples_per_trial(&self) -> u64 {
        self.planes.as_ref().map_or(1, |p| p.count() as u64)
    }

    /// Runs trials `0..trials` of stream family `seed`.
    pub fn run_trials(
        &self,
        params: &FusionChannelParams,
        trials: u64,
        seed: u64,
    ) -> Result<TrialCounts, ExperimentError> {
        params.validate()?;
        let sampler = OutcomeSampler::new(params);
        let per = self.samples_per_trial();
        if sampler.is_noiseless() {
            return Ok(TrialCounts {
                trials,
                samples: trials * per,
                ..Default::default()
            });
        }
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map_init(
                || DecoderWorkspace::new(&self.syndrome),
                |w, c| {
                    let mut counts = TrialCounts::default();
                    for index in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                        let out = self
                            .trial(w, &sampler, seed, index)
                            .map_err(|e| self.trial_error(seed, index, e))?;
                        counts.trials += 1;
                        counts.samples += per;
                        if self.planes.is_some() {
                            counts.decoder_failures += out.failed_planes as u64;
                            counts.percolation_failures += out.spanned_planes as u64;
                        } else {
                            counts.decoder_failures += out.decoder_failure as u64;
                            counts.percolation_failures += out.percolation_failure as u64;
                        }
                    }
                    Ok(counts)
                },
            )
            .try_reduce(TrialCounts::default, |a, b| Ok(a.add(b)))
    }

    /// Replays one trial with all intermediate sets recorded.
    pub fn debug_trial(
        &self,
        params: &FusionChannelParams,
        seed: u64,
        index: u64,
    ) -> Result<TrialDebug, ExperimentError> {
        let sampler = OutcomeSampler::new(params);
        let mut w = DecoderWorkspace::new(&self.syndrome);
        let mut rng = self
            .sample_erasure(&mut w, &sampler, seed, index)
            .map_err(|e| self.trial_error(seed, index, e))?;
        let erased: Vec<usize> = w.erasure.ids().collect();
        let (outcome, error, mut correction) = w
            .run_trial_recorded(&self.syndrome, self.mask, &mut rng)
            .map_err(|e| self.trial_error(seed, index, e))?;
        correction.sort_unstable();
        let defects = self.syndrome.defects_from_error(&error);
        if defects != self.syndrome.defects_from_error(&correction) {
            return Err(self.trial_error(seed, index, DecodeError::DefectMismatch(defects.len())));
        }
        Ok(TrialDebug {
            seed,
            index,
            erased,
            error,
            defects,
            correction,
            outcome,
        })
    }
}

/// `1 − 2^(−1/3)` for the 4-star and `2 sin(π/18)` for the 6-ring.
pub fn analytic_threshold(construction: Construction) -> f64 {
    match construction {
        Construction::FourStar => 1.0 - 2f64.powf(-1.0 / 3.0),
        Construction::SixRing => 2.0 * (PI / 18.0).sin(),
    }
}

/// Everything that determines a run, with defaults materialised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub construction: Construction,
    pub dims: Vec<LatticeDims>,
    pub trials: u64,
    pub seed: u64,
    pub aggregation: FailureAggregation,
    pub correlated_loss: CorrelatedLoss,
    pub loss_order: LossOrder,
    pub fit: FitOptions,
    pub loss_search: LossSearch,
}

impl ExperimentConfig {
    pub fn new(construction: Construction, dims: Vec<LatticeDims>, trials: u64, seed: u64) -> Self {
        Self {
            construction,
            dims,
            trials,
            seed,
            aggregation: FailureAggregation::default(),
            correlated_loss: CorrelatedLoss::default(),
            loss_order: LossOrder::default(),
            fit: FitOptions::default(),
            loss_search: LossSearch::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(ExperimentError::Config("no lattice sizes given".into()));
        }
        let mut sizes: Vec<usize> = self.dims.iter().map(|d| d.dx).collect();
        sizes.sort_unstable();
        sizes.dedup();
        if sizes.len() != self.dims.len() {
            return Err(ExperimentError::Config("lattice sizes must have distinct d".into()));
        }
        for d in &self.dims {
            d.validate()?;
        }
        Ok(())
    }

    pub fn params(&self, p_fail: f64, p_loss: f64) -> Result<FusionChannelParams, ExperimentError> {
        Ok(FusionChannelParams::new(p_fail, p_loss)?.with_loss_order(self.loss_order))
    }
}

/// Bisection settings for the loss threshold at fixed failure rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSearch {
    /// First bracket upper end; doubled until the sign flips.
    pub initial_step: f64,
    pub tolerance: f64,
    /// Points in the final sweep around the bracket.
    pub sweep_points: usize,
    /// Half-width of the final sweep, in bracket widths.
    pub sweep_half_width: f64,
}

impl Default for LossSearch {
    fn default() -> Self {
        Self {
            initial_step: 0.002,
            tolerance: 5e-4,
            sweep_points: 6,
            sweep_half_width: 3.0,
        }
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub construction: Construction,
    pub dims: LatticeDims,
    pub params: FusionChannelParams,
    pub seed: u64,
    pub counts: TrialCounts,
    pub estimate: RateEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossThreshold {
    pub p_fail: f64,
    pub p_loss: f64,
    pub uncertainty: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// Fit of the final sweep, when its curves cross.
    pub fit: Option<ThresholdEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p_fail: f64,
    /// `None` when the point is above threshold even without loss.
    pub threshold: Option<LossThreshold>,
}

/// Which failure indicator a threshold is fitted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureProxy {
    Decoder,
    Percolation,
}

/// Simulators for every size of a configuration.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub simulators: Vec<Simulator>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let mut dims = config.dims.clone();
        dims.sort_by_key(|d| d.dx);
        let simulators = dims
            .into_iter()
            .map(|d| Simulator::new(config.construction, d, config.correlated_loss, config.aggregation))
            .collect::<Result<_, _>>()?;
        Ok(Self { config, simulators })
    }

    pub fn record(&self, sim: &Simulator, params: FusionChannelParams) -> Result<SweepRecord, ExperimentError> {
        let counts = sim.run_trials(&params, self.config.trials, self.config.seed)?;
        Ok(SweepRecord {
            construction: self.config.construction,
            dims: sim.dims(),
            params,
            seed: self.config.seed,
            counts,
            estimate: counts.decoder_rate(),
        })
    }

    /// One record per size and grid point, sizes outermost.
    pub fn sweep(
        &self,
        grid: &[(f64, f64)],
        mut progress: impl FnMut(&SweepRecord),
    ) -> Result<Vec<SweepRecord>, ExperimentError> {
        let mut out = Vec::with_capacity(grid.len() * self.simulators.len());
        for sim in &self.simulators {
            for &(pf, pl) in grid {
                let r = self.record(sim, self.config.params(pf, pl)?)?;
                progress(&r);
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Threshold in the varied parameter of `grid` from sweep records.
    pub fn fit_records(
        &self,
        records: &[SweepRecord],
        vary_loss: bool,
        proxy: FailureProxy,
    ) -> Result<ThresholdEstimate, ExperimentError> {
        let mut curves = Curves::new();
        for r in records {
            let x = if vary_loss { r.params.p_loss } else { r.params.p_fail };
            let est = match proxy {
                FailureProxy::Decoder => r.counts.decoder_rate(),
                FailureProxy::Percolation => r.counts.percolation_rate(),
            };
            curves.entry(r.dims.dx).or_default().push((x, est));
        }
        Ok(fit_threshold(&curves, &self.config.fit)?)
    }

    /// Failure-rate threshold at fixed loss from a sweep over `p_fails`.
    pub fn failure_threshold(
        &self,
        p_fails: &[f64],
        p_loss: f64,
        proxy: FailureProxy,
        progress: impl FnMut(&SweepRecord),
    ) -> Result<(ThresholdEstimate, Vec<SweepRecord>), ExperimentError> {
        let grid: Vec<(f64, f64)> = p_fails.iter().map(|&p| (p, p_loss)).collect();
        let records = self.sweep(&grid, progress)?;
        Ok((self.fit_records(&records, false, proxy)?, records))
    }

    /// `rate(largest) − rate(smallest)`: positive above threshold.
    fn size_gap(&self, p_fail: f64, p_loss: f64) -> Result<f64, ExperimentError> {
        let params = self.config.params(p_fail, p_loss)?;
        let (small, big) = (&self.simulators[0], self.simulators.last().unwrap());
        let s = small.run_trials(&params, self.config.trials, self.config.seed)?;
        let b = big.run_trials(&params, self.config.trials, self.config.seed)?;
        Ok(b.decoder_rate().rate - s.decoder_rate().rate)
    }

    /// Largest tolerable loss at `p_fail`, by bisection on the sign of the
    /// finite-size gap followed by a fitted sweep around the bracket.
    pub fn loss_threshold_at(
        &self,
        p_fail: f64,
        mut progress: impl FnMut(&str),
    ) -> Result<Option<LossThreshold>, ExperimentError> {
        if self.simulators.len() < 2 {
            return Err(ExperimentError::Config("loss threshold needs at least 2 sizes".into()));
        }
        if !(p_fail > 0.0 && p_fail < 1.0) {
            return Err(ExperimentError::Config(format!("p_fail = {p_fail} outside (0, 1)")));
        }
        let search = self.config.loss_search;
        let gap0 = self.size_gap(p_fail, 0.0)?;
        progress(&format!("p_fail={p_fail} p_loss=0 gap={gap0:+.4}"));
        if gap0 > 0.0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0, search.initial_step);
        loop {
            let g = self.size_gap(p_fail, hi)?;
            progress(&format!("p_fail={p_fail} p_loss={hi:.5} gap={g:+.4}"));
            if g > 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi >= 0.5 {
                return Err(FitError::NoCrossing.into());
            }
        }
        while hi - lo > search.tolerance {
            let mid = 0.5 * (lo + hi);
            let g = self.size_gap(p_fail, mid)?;
            progress(&format!("p_fail={p_fail} p_loss={mid:.5} gap={g:+.4}"));
            if g > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let centre = 0.5 * (lo + hi);
        let half = (search.sweep_half_width * (hi - lo)).max(search.tolerance);
        let start = (centre - half).max(0.0);
        let n = search.sweep_points.max(4);
        let step = (centre + half - start) / (n - 1) as f64;
        let grid: Vec<(f64, f64)> = (0..n).map(|k| (p_fail, start + step * k as f64)).collect();
        let records = self.sweep(&grid, |r| {
            progress(&format!(
                "p_fail={p_fail} d={} p_loss={:.5} rate={:.4}",
                r.dims.dx, r.params.p_loss, r.estimate.rate
            ))
        })?;
        let fit = match self.fit_records(&records, true, FailureProxy::Decoder) {
            Ok(f) => Some(f),
            Err(ExperimentError::Fit(FitError::NoCrossing)) => None,
            Err(e) => return Err(e),
        };
        let (p_loss, uncertainty) = match &fit {
            Some(f) if (lo - half..=hi + half).contains(&f.p_th) => (f.p_th, f.uncertainty.max(0.5 * (hi - lo))),
            _ => (centre, 0.5 * (hi - lo)),
        };
        Ok(Some(LossThreshold {
            p_fail,
            p_loss,
            uncertainty,
            bracket: (lo, hi),
            fit,
        }))
    }

    /// Loss threshold for each failure rate in turn.
    pub fn threshold_curve(
        &self,
        p_fails: &[f64],
        mut progress: impl FnMut(&str),
    ) -> Result<Vec<CurvePoint>, ExperimentError> {
        p_fails
            .iter()
            .map(|&p_fail| {
                Ok(CurvePoint {
                    p_fail,
                    threshold: self.loss_threshold_at(p_fail, &mut progress)?,
                })
            })
            .collect()
    }
}

/// Curves keyed by size from records of a single varied parameter.
pub fn records_to_curves(records: &[SweepRecord], vary_loss: bool) -> Curves {
    let mut curves: Curves = BTreeMap::new();
    for r in records {
        let x = if vary_loss { r.params.p_loss } else { r.params.p_fail };
        curves.entry(r.dims.dx).or_default().push((x, r.estimate));
    }
    curves
}
