//! Single-spin-flip Metropolis samplers: thermal simulated annealing (SA) and
//! path-integral simulated quantum annealing (SQA).
//!
//! Every read owns its spins and a private RNG seeded with `seed ^ read`, so the
//! reads can run on any number of threads and still merge into the same
//! [`SampleSet`].

mod anneal;
mod kernel;
mod quantum;
mod stats;

pub use anneal::sa_sample;
pub use quantum::sqa_sample;
pub use stats::{slice_expectations, SliceExpectations, SpinHistogram};

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::SpinConfiguration;

/// RNG used by every sampler and by training.
pub type SamplerRng = Xoshiro256PlusPlus;

/// SplitMix64 finaliser; spreads nearby integers over the whole `u64` range
/// so derived seeds never share reads.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn read_rng(seed: u64, read: usize) -> SamplerRng {
    SamplerRng::seed_from_u64(seed ^ read as u64)
}

/// Linear inverse-temperature schedule for simulated annealing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaSchedule {
    pub beta_initial: f64,
    pub beta_final: f64,
    pub n_sweeps: usize,
    pub n_reads: usize,
}

impl Default for SaSchedule {
    fn default() -> Self {
        Self {
            beta_initial: 0.01,
            beta_final: 2.0,
            n_sweeps: 50_000,
            n_reads: 150,
        }
    }
}

impl SaSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_initial > 0.0 && self.beta_initial <= self.beta_final && self.beta_final.is_finite()) {
            return Err(Error::Parameter(format!(
                "SA schedule needs 0 < beta_initial <= beta_final, got {} and {}",
                self.beta_initial, self.beta_final
            )));
        }
        if self.n_sweeps == 0 || self.n_reads == 0 {
            return Err(Error::Parameter("SA schedule needs at least one sweep and one read".into()));
        }
        Ok(())
    }

    /// β used during sweep `t` (0-based).
    pub fn beta_at(&self, t: usize) -> f64 {
        linear(self.beta_initial, self.beta_final, t, self.n_sweeps)
    }
}

/// Linear transverse-field schedule for SQA at fixed β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqaSchedule {
    pub gamma_initial: f64,
    pub gamma_final: f64,
    pub beta: f64,
    pub n_replicas: usize,
    pub n_sweeps: usize,
    pub n_reads: usize,
}

impl Default for SqaSchedule {
    fn default() -> Self {
        Self {
            gamma_initial: 20.0,
            gamma_final: 0.01,
            beta: 2.0,
            n_replicas: 25,
            n_sweeps: 300,
            n_reads: 150,
        }
    }
}

impl SqaSchedule {
    /// The default schedule ending at a significant transverse field (Γ_f = 2).
    pub fn quantum() -> Self {
        Self {
            gamma_final: 2.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_final > 0.0 && self.gamma_initial >= self.gamma_final && self.gamma_initial.is_finite()) {
            return Err(Error::Parameter(format!(
                "SQA schedule needs gamma_initial >= gamma_final > 0, got {} and {}",
                self.gamma_initial, self.gamma_final
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameter(format!("SQA beta must be positive, got {}", self.beta)));
        }
        if self.n_replicas < 2 {
            return Err(Error::Parameter(format!("SQA needs at least 2 replicas, got {}", self.n_replicas)));
        }
        if self.n_sweeps == 0 || self.n_reads == 0 {
            return Err(Error::Parameter("SQA schedule needs at least one sweep and one read".into()));
        }
        Ok(())
    }

    /// Γ used during sweep `t` (0-based).
    pub fn gamma_at(&self, t: usize) -> f64 {
        linear(self.gamma_initial, self.gamma_final, t, self.n_sweeps)
    }
}

fn linear(start: f64, end: f64, t: usize, n: usize) -> f64 {
    if n <= 1 {
        return end;
    }
    let f = t as f64 / (n - 1) as f64;
    start * (1.0 - f) + end * f
}

/// Which sampler produced a [`SampleSet`], with its schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "lowercase")]
pub enum ScheduleRecord {
    Sa(SaSchedule),
    Sqa(SqaSchedule),
}

/// Output of one sampler invocation.
///
/// For SQA each read is the full slice-major extended configuration and its
/// energy is `H^eff` under the final transverse field; for SA each read is a
/// single classical configuration with its classical energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub reads: Vec<SpinConfiguration>,
    pub effective_energies: Vec<f64>,
    pub n_spins: usize,
    pub n_slices: usize,
    pub schedule: ScheduleRecord,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }

    /// Iterates every (read, slice) configuration of the logical spins.
    pub fn slices(&self) -> impl Iterator<Item = &[i8]> + '_ {
        self.reads
            .iter()
            .flat_map(move |read| (0..self.n_slices).map(move |k| read.slice(self.n_spins, k)))
    }

    pub fn mean_energy(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Usage("mean energy of an empty sample set".into()));
        }
        Ok(self.effective_energies.iter().sum::<f64>() / self.len() as f64)
    }
}
