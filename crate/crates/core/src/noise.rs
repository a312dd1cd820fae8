//! Linear-optical fusion noise: biased failure plus photon loss.
//!
//! A failed fusion loses its `XX` outcome but keeps `ZZ`. Losing any photon
//! of a fusion loses both outcomes. With `1/p_fail` photons per fusion the
//! full-erasure probability is `1 − (1 − p_loss)^(1/p_fail)`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionOutcome {
    Success,
    Fail,
    FullErase,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossOrder {
    /// Loss is checked first; failure is drawn only for fusions with no loss.
    #[default]
    LossFirst,
    /// Full erasure with probability `p_fe` and failure with probability
    /// `p_fail`, as disjoint events with full erasure taking precedence.
    Marginal,
}

impl fmt::Display for LossOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossOrder::LossFirst => "loss-first",
            LossOrder::Marginal => "marginal",
        })
    }
}

impl FromStr for LossOrder {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loss-first" => Ok(LossOrder::LossFirst),
            "marginal" => Ok(LossOrder::Marginal),
            _ => Err(NoiseError::UnknownLossOrder(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("p_fail = {0} outside [0, 1]")]
    BadFailure(f64),
    #[error("p_loss = {0} outside [0, 1)")]
    BadLoss(f64),
    #[error("unknown loss order {0:?} (expected loss-first or marginal)")]
    UnknownLossOrder(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionChannelParams {
    pub p_fail: f64,
    pub p_loss: f64,
    pub loss_order: LossOrder,
}

/// Boost presets: failure probability and the number of ancilla photons
/// that reach it.
pub const BOOST_PRESETS: [(f64, u32); 5] = [
    (0.5, 0),
    (0.25, 2),
    (0.125, 6),
    (0.0625, 14),
    (0.03125, 30),
];

impl FusionChannelParams {
    pub fn new(p_fail: f64, p_loss: f64) -> Result<Self, NoiseError> {
        let p = Self {
            p_fail,
            p_loss,
            loss_order: LossOrder::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_loss_order(mut self, order: LossOrder) -> Self {
        self.loss_order = order;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.p_fail) {
            return Err(NoiseError::BadFailure(self.p_fail));
        }
        if !(0.0..1.0).contains(&self.p_loss) {
            return Err(NoiseError::BadLoss(self.p_loss));
        }
        Ok(())
    }

    /// Photons entering one fusion: `1/p_fail`, never fewer than two.
    pub fn photons_per_fusion(&self) -> f64 {
        if self.p_fail <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 / self.p_fail).max(2.0)
        }
    }
}

/// `1 − (1 − p_loss)^(1/p_fail)`, with the exponent clamped below at 2.
pub fn full_erase_prob(p: &FusionChannelParams) -> f64 {
    if p.p_loss == 0.0 {
        return 0.0;
    }
    -(p.photons_per_fusion() * (-p.p_loss).ln_1p()).exp_m1()
}

/// Probabilities of `(FullErase, Fail, Success)`.
pub fn outcome_probs(p: &FusionChannelParams) -> [f64; 3] {
    let fe = full_erase_prob(p);
    let fail = match p.loss_order {
        LossOrder::LossFirst => (1.0 - fe) * p.p_fail,
        LossOrder::Marginal => p.p_fail.min(1.0 - fe),
    };
    [fe, fail, (1.0 - fe - fail).max(0.0)]
}

/// Integer thresholds for drawing outcomes from one `u32`: values below
/// `full_erase` are full erasures, values below `fail` failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutcomeSampler {
    full_erase: u64,
    fail: u64,
}

const SCALE: f64 = 4_294_967_296.0;

impl OutcomeSampler {
    pub fn new(p: &FusionChannelParams) -> Self {
        let [fe, fail, _] = outcome_probs(p);
        let t_fe = (fe * SCALE).round() as u64;
        let t_fail = (((fe + fail) * SCALE).round() as u64).max(t_fe);
        Self {
            full_erase: t_fe.min(1 << 32),
            fail: t_fail.min(1 << 32),
        }
    }

    #[inline]
    pub fn outcome(&self, u: u32) -> FusionOutcome {
        let u = u as u64;
        if u < self.full_erase {
            FusionOutcome::FullErase
        } else if u < self.fail {
            FusionOutcome::Fail
        } else {
            FusionOutcome::Success
        }
    }

    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> FusionOutcome {
        self.outcome(rng.next_u32())
    }

    /// True when no outcome other than success is possible.
    pub fn is_noiseless(&self) -> bool {
        self.fail == 0
    }
}

/// Independent RNG stream for one trial: same seed and index, same stream.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// One i.i.d. outcome per fusion.
pub fn sample_fusion_outcomes<R: RngCore + ?Sized>(
    n_fusions: usize,
    p: &FusionChannelParams,
    rng: &mut R,
) -> Vec<FusionOutcome> {
    let s = OutcomeSampler::new(p);
    (0..n_fusions).map(|_| s.draw(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pf: f64, pl: f64) -> FusionChannelParams {
        FusionChannelParams::new(pf, pl).unwrap()
    }

    #[test]
    fn full_erase_examples() {
        assert_eq!(full_erase_prob(&params(0.5, 0.0)), 0.0);
        let v = full_erase_prob(&params(0.25, 0.0037));
        assert!((v - (1.0 - 0.9963f64.powi(4))).abs() < 1e-15);
        assert!((v - 0.01472).abs() < 5e-6);
        assert!((full_erase_prob(&params(0.5, 0.01)) - 0.0199).abs() < 1e-15);
        // p_fail above 1/2 still uses two photons.
        assert!((full_erase_prob(&params(0.8, 0.01)) - 0.0199).abs() < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(FusionChannelParams::new(1.5, 0.0).is_err());
        assert!(FusionChannelParams::new(0.5, 1.0).is_err());
        assert!(FusionChannelParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn extremes() {
        let mut rng = trial_rng(1, 0);
        assert!(sample_fusion_outcomes(1000, &params(0.0, 0.0), &mut rng)
            .iter()
            .all(|&o| o == FusionOutcome::Success));
        assert!(sample_fusion_outcomes(1000, &params(1.0, 0.0), &mut rng)
            .iter()
            .all(|&o| o == FusionOutcome::Fail));
        assert!(OutcomeSampler::new(&params(0.0, 0.0)).is_noiseless());
    }

    #[test]
    fn thresholds_at_boundaries() {
        let s = OutcomeSampler::new(&params(1.0, 0.0));
        assert_eq!(s.outcome(u32::MAX), FusionOutcome::Fail);
        let s = OutcomeSampler::new(&params(0.25, 0.0));
        assert_eq!(s.outcome((1 << 30) - 1), FusionOutcome::Fail);
        assert_eq!(s.outcome(1 << 30), FusionOutcome::Success);
    }

    #[test]
    fn marginal_order_keeps_failure_marginal() {
        let p = params(0.25, 0.01).with_loss_order(LossOrder::Marginal);
        let [fe, fail, ok] = outcome_probs(&p);
        assert_eq!(fail, 0.25);
        assert!((fe + fail + ok - 1.0).abs() < 1e-15);
        let q = params(0.25, 0.01);
        assert!(outcome_probs(&q)[1] < 0.25);
    }

    #[test]
    fn streams_are_reproducible() {
        let p = params(0.3, 0.01);
        let a = sample_fusion_outcomes(500, &p, &mut trial_rng(9, 4));
        let b = sample_fusion_outcomes(500, &p, &mut trial_rng(9, 4));
        let c = sample_fusion_outcomes(500, &p, &mut trial_rng(9, 5));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
