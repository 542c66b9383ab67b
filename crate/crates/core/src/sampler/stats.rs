use std::collections::BTreeMap;

use super::SampleSet;
use crate::error::{Error, Result};

/// Weighted histogram of distinct configurations of up to 64 logical spins.
///
/// Keys are bitmasks with bit `i` set when spin `i` is +1. Weights are usually
/// sample counts but may be arbitrary non-negative reals (e.g. exact
/// Boltzmann probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHistogram {
    n_spins: usize,
    weights: BTreeMap<u64, f64>,
    total: f64,
}

pub(crate) fn spins_to_bits(spins: &[i8]) -> u64 {
    spins
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &s)| if s > 0 { acc | 1 << i } else { acc })
}

impl SpinHistogram {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 || n_spins > 64 {
            return Err(Error::Capacity {
                what: "histogram spin count",
                actual: n_spins,
                limit: 64,
            });
        }
        Ok(Self {
            n_spins,
            weights: BTreeMap::new(),
            total: 0.0,
        })
    }

    /// Histogram over every (read, slice) configuration of a sample set.
    pub fn from_samples(samples: &SampleSet) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Usage("empty sample set".into()));
        }
        let mut hist = Self::new(samples.n_spins)?;
        for slice in samples.slices() {
            hist.add_bits(spins_to_bits(slice), 1.0);
        }
        Ok(hist)
    }

    pub fn add(&mut self, spins: &[i8], weight: f64) -> Result<()> {
        if spins.len() != self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                actual: spins.len(),
            });
        }
        self.add_bits(spins_to_bits(spins), weight);
        Ok(())
    }

    pub fn add_bits(&mut self, bits: u64, weight: f64) {
        if weight > 0.0 {
            *self.weights.entry(bits).or_insert(0.0) += weight;
            self.total += weight;
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn n_distinct(&self) -> usize {
        self.weights.len()
    }

    /// `(bits, probability)` for each distinct configuration.
    pub fn probabilities(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().map(move |(&b, &w)| (b, w / self.total))
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.total <= 0.0 {
            return Err(Error::Usage("statistics of an empty histogram".into()));
        }
        Ok(())
    }

    /// `⟨σ_i⟩` for every spin.
    pub fn spin_means(&self) -> Result<Vec<f64>> {
        self.check_nonempty()?;
        let mut means = vec![0.0; self.n_spins];
        for (bits, p) in self.probabilities() {
            for (i, m) in means.iter_mut().enumerate() {
                *m += if bits >> i & 1 == 1 { p } else { -p };
            }
        }
        Ok(means)
    }

    /// `⟨σ_i σ_j⟩`.
    pub fn pair_mean(&self, i: usize, j: usize) -> Result<f64> {
        self.check_nonempty()?;
        Ok(self
            .probabilities()
            .map(|(bits, p)| if (bits >> i ^ bits >> j) & 1 == 0 { p } else { -p })
            .sum())
    }

    /// Plug-in Shannon entropy `-Σ p ln p` in nats.
    pub fn entropy(&self) -> Result<f64> {
        self.check_nonempty()?;
        Ok(-self
            .probabilities()
            .map(|(_, p)| if p > 0.0 { p * p.ln() } else { 0.0 })
            .sum::<f64>())
    }
}

/// Spin averages over all reads and all Trotter slices of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceExpectations {
    /// `⟨σ_i⟩` per logical spin.
    pub means: Vec<f64>,
    /// `⟨σ_i σ_j⟩` for every pair `i < j`, taken within a slice.
    pub pair_means: BTreeMap<(usize, usize), f64>,
    /// Number of configurations averaged (reads × slices).
    pub n_points: usize,
}

pub fn slice_expectations(samples: &SampleSet) -> Result<SliceExpectations> {
    let hist = SpinHistogram::from_samples(samples)?;
    let n = samples.n_spins;
    let mut pair_means = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            pair_means.insert((i, j), hist.pair_mean(i, j)?);
        }
    }
    Ok(SliceExpectations {
        means: hist.spin_means()?,
        pair_means,
        n_points: samples.len() * samples.n_slices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::SpinConfiguration;
    use crate::sampler::{SaSchedule, ScheduleRecord, SqaSchedule};

    fn set(reads: Vec<Vec<i8>>, n_spins: usize, n_slices: usize) -> SampleSet {
        let n = reads.len();
        SampleSet {
            reads: reads.into_iter().map(|r| SpinConfiguration::new(r).unwrap()).collect(),
            effective_energies: vec![0.0; n],
            n_spins,
            n_slices,
            schedule: if n_slices == 1 {
                ScheduleRecord::Sa(SaSchedule::default())
            } else {
                ScheduleRecord::Sqa(SqaSchedule::default())
            },
            seed: 0,
        }
    }

    #[test]
    fn constant_data() {
        let s = set(vec![vec![1; 6]; 4], 3, 2);
        let e = slice_expectations(&s).unwrap();
        assert_eq!(e.means, vec![1.0; 3]);
        assert!(e.pair_means.values().all(|&v| v == 1.0));
        assert_eq!(e.pair_means.len(), 3);
        assert_eq!(e.n_points, 8);
    }

    #[test]
    fn balanced_data_has_zero_mean() {
        let s = set(vec![vec![1, 1], vec![-1, -1]], 2, 1);
        let e = slice_expectations(&s).unwrap();
        assert_eq!(e.means, vec![0.0, 0.0]);
        assert_eq!(e.pair_means[&(0, 1)], 1.0);
    }

    #[test]
    fn recount_of_known_frequencies() {
        // Two reads of 2 slices each, 3 spins per slice:
        //   (+,+,-) (+,-,-) | (-,+,-) (+,+,+)
        // spin 0: +,+,-,+ → 0.5 ; spin 1: +,-,+,+ → 0.5 ; spin 2: -,-,-,+ → -0.5
        // σ0σ1: +,-,-,+ → 0 ; σ0σ2: -,-,+,+ → 0 ; σ1σ2: -,+,-,+ → 0
        let s = set(vec![vec![1, 1, -1, 1, -1, -1], vec![-1, 1, -1, 1, 1, 1]], 3, 2);
        let e = slice_expectations(&s).unwrap();
        assert_eq!(e.means, vec![0.5, 0.5, -0.5]);
        assert_eq!(e.pair_means[&(0, 1)], 0.0);
        assert_eq!(e.pair_means[&(0, 2)], 0.0);
        assert_eq!(e.pair_means[&(1, 2)], 0.0);
    }

    #[test]
    fn empty_set_is_usage_error() {
        let s = set(vec![], 3, 1);
        assert!(matches!(slice_expectations(&s), Err(Error::Usage(_))));
    }

    #[test]
    fn entropy_of_uniform_histogram() {
        let mut h = SpinHistogram::new(3).unwrap();
        for b in 0..8 {
            h.add_bits(b, 2.0);
        }
        assert!((h.entropy().unwrap() - 8f64.ln()).abs() < 1e-12);
        let mut single = SpinHistogram::new(3).unwrap();
        single.add_bits(5, 10.0);
        assert_eq!(single.entropy().unwrap(), 0.0);
    }
}
