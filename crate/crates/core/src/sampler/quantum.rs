use rayon::prelude::*;

use super::kernel::{random_spins, to_config, Couplings, Replicas};
use super::{read_rng, SampleSet, ScheduleRecord, SqaSchedule};
use crate::error::Result;
use crate::ising::{build_effective_model, effective_energy, inter_slice_coupling, IsingModel, SpinConfiguration};

/// Simulated quantum annealing on the Suzuki–Trotter representation of
/// `model` with a transverse field.
///
/// Γ decreases linearly per sweep; the inter-slice coupling is recomputed at
/// the start of each sweep and every (slice, spin) site is then visited once
/// with Metropolis acceptance at the fixed β. Each read returns the whole
/// extended configuration, whose energy is `H^eff` under `gamma_final`.
pub fn sqa_sample(model: &IsingModel, schedule: &SqaSchedule, seed: u64) -> Result<SampleSet> {
    schedule.validate()?;
    let r = schedule.n_replicas;
    let couplings = Couplings::new(model);
    let j_plus: Vec<f64> = (0..schedule.n_sweeps)
        .map(|t| inter_slice_coupling(schedule.gamma_at(t), schedule.beta, r))
        .collect::<Result<_>>()?;
    let reads: Vec<SpinConfiguration> = (0..schedule.n_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = read_rng(seed, read);
            let mut state = Replicas::new(&couplings, random_spins(model.n_spins() * r, &mut rng));
            for &jp in &j_plus {
                state.trotter_sweep(jp, schedule.beta, &mut rng);
            }
            SpinConfiguration::from_raw(to_config(state.spins()))
        })
        .collect();
    let extended = build_effective_model(model, schedule.gamma_final, schedule.beta, r)?;
    let effective_energies = reads
        .iter()
        .map(|c| effective_energy(&extended, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet {
        reads,
        effective_energies,
        n_spins: model.n_spins(),
        n_slices: r,
        schedule: ScheduleRecord::Sqa(*schedule),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::sampler::slice_expectations;

    fn fixed_field(gamma: f64, n_replicas: usize, n_sweeps: usize, n_reads: usize) -> SqaSchedule {
        SqaSchedule {
            gamma_initial: gamma,
            gamma_final: gamma,
            beta: 2.0,
            n_replicas,
            n_sweeps,
            n_reads,
        }
    }

    #[test]
    fn pure_transverse_field_is_z_symmetric() {
        let model = IsingModel::new(1).unwrap();
        let set = sqa_sample(&model, &fixed_field(2.0, 25, 100, 4000), 1).unwrap();
        let mean = slice_expectations(&set).unwrap().means[0];
        // slices are correlated; 4000 reads still bound the mean tightly
        assert!(mean.abs() < 0.05, "<σz> = {mean}");
    }

    #[test]
    fn single_spin_matches_two_level_oracle() {
        // H = -h σz - Γ σx has levels ±E, E = sqrt(h² + Γ²), and
        // <σz> = (h/E) tanh(βE).
        let (h, gamma, beta) = (1.0f64, 2.0f64, 2.0f64);
        let e = (h * h + gamma * gamma).sqrt();
        let exact = h / e * (beta * e).tanh();
        let model = IsingModel::with_biases(vec![h]).unwrap();
        let set = sqa_sample(&model, &fixed_field(gamma, 25, 200, 10_000), 2).unwrap();
        let mean = slice_expectations(&set).unwrap().means[0];
        assert!((mean - exact).abs() < 0.05, "<σz> = {mean}, exact {exact}");
    }

    /// Exact Boltzmann distribution of the extended model at fixed Γ, by
    /// enumerating every extended configuration.
    fn exact_extended(model: &IsingModel, gamma: f64, beta: f64, r: usize) -> Vec<f64> {
        let ext = build_effective_model(model, gamma, beta, r).unwrap();
        let n = ext.n_spins();
        let weights: Vec<f64> = (0..1u64 << n)
            .map(|b| (-beta * ext.classical_energy(&SpinConfiguration::from_bits(b, n)).unwrap()).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }

    fn bits_of(c: &SpinConfiguration) -> u64 {
        c.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    #[test]
    fn frozen_schedule_converges_to_extended_boltzmann() {
        let mut model = IsingModel::with_biases(vec![0.4, -0.6]).unwrap();
        model.set_coupling(0, 1, 0.8).unwrap();
        for r in [2usize, 3, 4] {
            let gamma = 0.9;
            let exact = exact_extended(&model, gamma, 2.0, r);
            let reads = 20_000;
            let set = sqa_sample(&model, &fixed_field(gamma, r, 30, reads), 17 + r as u64).unwrap();
            let mut counts: HashMap<u64, usize> = HashMap::new();
            for read in &set.reads {
                *counts.entry(bits_of(read)).or_default() += 1;
            }
            let tv: f64 = exact
                .iter()
                .enumerate()
                .map(|(b, &p)| (p - *counts.get(&(b as u64)).unwrap_or(&0) as f64 / reads as f64).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.03, "r = {r}: total variation {tv}");
        }
    }

    #[test]
    fn deterministic_with_exact_final_energies() {
        let mut model = IsingModel::with_biases(vec![0.2, -0.5, 0.7]).unwrap();
        model.set_coupling(0, 1, -0.3).unwrap();
        model.set_coupling(1, 2, 0.9).unwrap();
        let schedule = SqaSchedule {
            n_sweeps: 20,
            n_reads: 12,
            ..SqaSchedule::quantum()
        };
        let a = sqa_sample(&model, &schedule, 99).unwrap();
        let b = sqa_sample(&model, &schedule, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_slices, 25);
        assert_eq!(a.reads[0].len(), 75);
        let ext = build_effective_model(&model, 2.0, 2.0, 25).unwrap();
        for (read, e) in a.reads.iter().zip(&a.effective_energies) {
            assert_eq!(effective_energy(&ext, read).unwrap(), *e);
        }
    }
}
