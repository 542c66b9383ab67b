//! Free-energy estimators of a clamped machine: closed form for RBMs, and
//! sample-based classical and quantum estimates for general layouts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{BoltzmannMachine, VisibleAssignment};
use crate::sampler::{SampleSet, SpinHistogram};

const CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    RbmClosed,
    ClassicalSampled,
    QuantumSampled,
    ExactEnumeration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub value: f64,
    pub estimator: Estimator,
    /// Configurations the estimate rests on (0 for closed forms).
    pub n_samples: usize,
}

/// Hidden-unit expectations in {0,1} units.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStatistics {
    /// `⟨h⟩` per hidden node.
    pub means: Vec<f64>,
    /// `⟨hh'⟩` aligned with [`BoltzmannMachine::hidden_edges`].
    pub pair_means: Vec<f64>,
}

impl HiddenStatistics {
    /// Converts spin statistics of a histogram: `⟨h⟩ = (1+⟨σ⟩)/2`,
    /// `⟨hh'⟩ = (1+⟨σ⟩+⟨σ'⟩+⟨σσ'⟩)/4`.
    pub fn from_histogram(bm: &BoltzmannMachine, hist: &SpinHistogram) -> Result<Self> {
        if hist.n_spins() != bm.n_hidden() {
            return Err(Error::Dimension {
                expected: bm.n_hidden(),
                actual: hist.n_spins(),
            });
        }
        let spin = hist.spin_means()?;
        let pair_means = bm
            .hidden_edges()
            .iter()
            .map(|&(a, b, _)| Ok((1.0 + spin[a] + spin[b] + hist.pair_mean(a, b)?) / 4.0))
            .collect::<Result<_>>()?;
        Ok(Self {
            means: spin.iter().map(|m| (1.0 + m) / 2.0).collect(),
            pair_means,
        })
    }

    /// Mean clamped energy `⟨𝓔_v⟩ = −Σ w^{vh} v⟨h⟩ − Σ w^{hh'}⟨hh'⟩`.
    pub fn mean_energy(&self, bm: &BoltzmannMachine, v: VisibleAssignment) -> f64 {
        let w = bm.weights();
        let visible: f64 = bm.active_edges(v).map(|(h, id)| w[id] * self.means[h]).sum();
        let hidden: f64 = bm
            .hidden_edges()
            .iter()
            .zip(&self.pair_means)
            .map(|(&(_, _, id), m)| w[id] * m)
            .sum();
        -visible - hidden
    }
}

fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(CLIP, 1.0 - CLIP);
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// Closed-form RBM free energy at β = 1:
/// `−F = Σ w^{vh} v⟨h⟩ + Σ_h H_b(⟨h⟩)` with sigmoid activations.
pub fn rbm_free_energy(bm: &BoltzmannMachine, v: VisibleAssignment) -> Result<FreeEnergyEstimate> {
    let act = bm.rbm_hidden_activations(v)?;
    Ok(FreeEnergyEstimate {
        value: rbm_free_energy_from_activations(bm, v, &act),
        estimator: Estimator::RbmClosed,
        n_samples: 0,
    })
}

pub(crate) fn rbm_free_energy_from_activations(bm: &BoltzmannMachine, v: VisibleAssignment, act: &[f64]) -> f64 {
    let w = bm.weights();
    let energy: f64 = bm.active_edges(v).map(|(h, id)| w[id] * act[h]).sum();
    let entropy: f64 = act.iter().map(|&p| binary_entropy(p)).sum();
    -(energy + entropy)
}

/// `F = ⟨𝓔_v⟩ + (1/β) Σ P̂ ln P̂` with expectations and plug-in entropy taken
/// from a weighted histogram of hidden configurations.
pub fn classical_free_energy_from_histogram(
    bm: &BoltzmannMachine,
    v: VisibleAssignment,
    hist: &SpinHistogram,
    beta: f64,
) -> Result<(f64, HiddenStatistics)> {
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    let stats = HiddenStatistics::from_histogram(bm, hist)?;
    let f = stats.mean_energy(bm, v) - hist.entropy()? / beta;
    Ok((f, stats))
}

/// Classical free energy from SA reads or the slices of SQA reads.
pub fn classical_free_energy(
    bm: &BoltzmannMachine,
    v: VisibleAssignment,
    samples: &SampleSet,
    beta: f64,
) -> Result<FreeEnergyEstimate> {
    Ok(classical_free_energy_with_statistics(bm, v, samples, beta)?.0)
}

/// As [`classical_free_energy`], also returning the hidden expectations used.
pub fn classical_free_energy_with_statistics(
    bm: &BoltzmannMachine,
    v: VisibleAssignment,
    samples: &SampleSet,
    beta: f64,
) -> Result<(FreeEnergyEstimate, HiddenStatistics)> {
    let hist = SpinHistogram::from_samples(samples)?;
    let (value, stats) = classical_free_energy_from_histogram(bm, v, &hist, beta)?;
    let estimate = FreeEnergyEstimate {
        value,
        estimator: Estimator::ClassicalSampled,
        n_samples: samples.len() * samples.n_slices,
    };
    Ok((estimate, stats))
}

/// `F = ⟨𝓗^eff⟩ + (1/β) Σ_c P̂(c) ln P̂(c)` over whole extended configurations.
///
/// Energies are those stored in the sample set, so the clamping constant of a
/// machine is not included.
pub fn quantum_free_energy(samples: &SampleSet, beta: f64) -> Result<FreeEnergyEstimate> {
    if samples.is_empty() {
        return Err(Error::Usage("quantum free energy of an empty sample set".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    let mut counts: HashMap<&[i8], usize> = HashMap::new();
    for read in &samples.reads {
        *counts.entry(read.as_slice()).or_default() += 1;
    }
    let n = samples.len() as f64;
    // sum over counts in sorted order keeps the result independent of hashing
    let mut freq: Vec<usize> = counts.into_values().collect();
    freq.sort_unstable();
    let neg_entropy: f64 = freq
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum();
    Ok(FreeEnergyEstimate {
        value: samples.mean_energy()? + neg_entropy / beta,
        estimator: Estimator::QuantumSampled,
        n_samples: samples.len(),
    })
}
