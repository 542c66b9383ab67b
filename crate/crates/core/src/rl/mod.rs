//! Free-energy reinforcement learning: the negative free energy of a clamped
//! Boltzmann machine approximates `Q(s, a)` and is trained by TD(0).

mod rate;
mod samples;
mod train;

pub use rate::{LearningRate, RateRule};
pub use samples::{admissible_pairs, generate_samples, SampleStrategy, TrainingSample};
pub use train::{build_machine, greedy_action, q_value, td_update, train, PolicyTrace, QEstimate, Trainer};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{SaSchedule, SqaSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Closed-form RBM free energy.
    Rbm,
    /// Layered machine, classical free energy from SA samples.
    DbmSa,
    /// Layered machine, classical free energy from SQA slices at small Γ_f.
    DbmSqa,
    /// Layered machine, free energy of the extended model from SQA at large Γ_f.
    Qbm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rbm, Algorithm::DbmSa, Algorithm::DbmSqa, Algorithm::Qbm];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Rbm => "rbm",
            Algorithm::DbmSa => "dbm-sa",
            Algorithm::DbmSqa => "dbm-sqa",
            Algorithm::Qbm => "qbm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::Usage(format!("unknown algorithm {s:?}; expected rbm, dbm-sa, dbm-sqa or qbm")))
    }
}

/// Which policy entries are refreshed after each update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyRefresh {
    /// Only `π(s₁)` is recomputed as the argmax of the updated Q.
    VisitedState,
    /// The whole greedy policy is recomputed.
    AllStates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub algorithm: Algorithm,
    /// One entry for an RBM, two or more layer sizes otherwise.
    pub hidden: Vec<usize>,
    pub n_samples: usize,
    pub strategy: SampleStrategy,
    pub eps0: f64,
    pub rate: RateRule,
    pub weight_std: f64,
    /// β of the sampled free energies.
    pub beta: f64,
    pub sa: SaSchedule,
    pub sqa: SqaSchedule,
    pub refresh: PolicyRefresh,
}

impl TrainingConfig {
    /// Full-scale settings: 16 hidden units (8 + 8 when layered), 500
    /// samples, full sampler schedules.
    pub fn full(algorithm: Algorithm) -> Self {
        let hidden = match algorithm {
            Algorithm::Rbm => vec![16],
            _ => vec![8, 8],
        };
        let sqa = match algorithm {
            Algorithm::Qbm => SqaSchedule::quantum(),
            _ => SqaSchedule::default(),
        };
        Self {
            algorithm,
            hidden,
            n_samples: 500,
            strategy: SampleStrategy::Sweep,
            eps0: 0.01,
            rate: RateRule::Constant,
            weight_std: 1.0,
            beta: 2.0,
            sa: SaSchedule::default(),
            sqa,
            refresh: PolicyRefresh::VisitedState,
        }
    }

    /// Full-scale settings with shortened sampler schedules that fit a
    /// single workstation.
    pub fn desk(algorithm: Algorithm) -> Self {
        let mut c = Self::full(algorithm);
        c.sa = SaSchedule {
            n_sweeps: DESK_SA_SWEEPS,
            n_reads: DESK_READS,
            ..c.sa
        };
        c.sqa = SqaSchedule {
            n_sweeps: DESK_SQA_SWEEPS,
            n_reads: DESK_READS,
            ..c.sqa
        };
        c
    }

    /// Same settings with `n` hidden units, split evenly over two layers for
    /// layered machines.
    pub fn with_hidden_total(mut self, n: usize) -> Self {
        self.hidden = match self.algorithm {
            Algorithm::Rbm => vec![n],
            _ => vec![n / 2, n - n / 2],
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Parameter(format!("hidden layers must be non-empty, got {:?}", self.hidden)));
        }
        match (self.algorithm, self.hidden.len()) {
            (Algorithm::Rbm, 1) => {}
            (Algorithm::Rbm, _) => return Err(Error::Layout("an RBM has a single hidden layer".into())),
            (_, 1) => return Err(Error::Layout("sampled algorithms need at least two hidden layers".into())),
            _ => {}
        }
        if !(self.eps0 >= 0.0 && self.eps0.is_finite()) {
            return Err(Error::Parameter(format!("learning rate must be non-negative, got {}", self.eps0)));
        }
        if !(self.beta > 0.0 && self.weight_std >= 0.0) {
            return Err(Error::Parameter("beta must be positive and weight std non-negative".into()));
        }
        match self.algorithm {
            Algorithm::Rbm => Ok(()),
            Algorithm::DbmSa => self.sa.validate(),
            Algorithm::DbmSqa | Algorithm::Qbm => self.sqa.validate(),
        }
    }
}

/// Sweeps per SA read in the desk configuration.
pub const DESK_SA_SWEEPS: usize = 200;
/// Sweeps per SQA read in the desk configuration.
pub const DESK_SQA_SWEEPS: usize = 50;
/// Reads per sampler call in the desk configuration.
pub const DESK_READS: usize = 20;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_tags_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
        }
        assert!("dbm".parse::<Algorithm>().is_err());
    }

    #[test]
    fn full_configuration() {
        let c = TrainingConfig::full(Algorithm::Qbm);
        assert_eq!(c.sqa.gamma_final, 2.0);
        assert_eq!(c.hidden, vec![8, 8]);
        assert_eq!((c.eps0, c.n_samples, c.weight_std), (0.01, 500, 1.0));
        assert_eq!(TrainingConfig::full(Algorithm::DbmSqa).sqa.gamma_final, 0.01);
        assert_eq!(TrainingConfig::full(Algorithm::Rbm).hidden, vec![16]);
        for a in Algorithm::ALL {
            TrainingConfig::full(a).validate().unwrap();
            TrainingConfig::desk(a).validate().unwrap();
        }
    }

    #[test]
    fn hidden_totals() {
        assert_eq!(TrainingConfig::full(Algorithm::Rbm).with_hidden_total(20).hidden, vec![20]);
        assert_eq!(TrainingConfig::full(Algorithm::DbmSa).with_hidden_total(20).hidden, vec![10, 10]);
        let mut bad = TrainingConfig::full(Algorithm::Rbm);
        bad.hidden = vec![4, 4];
        assert!(bad.validate().is_err());
    }
}
