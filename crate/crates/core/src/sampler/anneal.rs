use rayon::prelude::*;

use super::kernel::{random_spins, to_config, Couplings, Replicas};
use super::{read_rng, SaSchedule, SampleSet, ScheduleRecord};
use crate::error::Result;
use crate::ising::{IsingModel, SpinConfiguration};

/// Thermal simulated annealing. The model's transverse field is ignored.
///
/// Each read starts from uniformly random spins and performs `n_sweeps`
/// ascending-order Metropolis sweeps while β rises linearly from
/// `beta_initial` to `beta_final`; the final configuration is returned.
pub fn sa_sample(model: &IsingModel, schedule: &SaSchedule, seed: u64) -> Result<SampleSet> {
    schedule.validate()?;
    let couplings = Couplings::new(model);
    let reads: Vec<SpinConfiguration> = (0..schedule.n_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = read_rng(seed, read);
            let mut state = Replicas::new(&couplings, random_spins(model.n_spins(), &mut rng));
            for t in 0..schedule.n_sweeps {
                state.classical_sweep(schedule.beta_at(t), &mut rng);
            }
            SpinConfiguration::from_raw(to_config(state.spins()))
        })
        .collect();
    let effective_energies = reads
        .iter()
        .map(|c| model.classical_energy(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet {
        reads,
        effective_energies,
        n_spins: model.n_spins(),
        n_slices: 1,
        schedule: ScheduleRecord::Sa(*schedule),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(n_sweeps: usize, n_reads: usize, beta_final: f64) -> SaSchedule {
        SaSchedule {
            beta_initial: 0.01,
            beta_final,
            n_sweeps,
            n_reads,
        }
    }

    #[test]
    fn free_spins_are_unbiased() {
        let model = IsingModel::new(6).unwrap();
        let reads = 4000;
        let set = sa_sample(&model, &schedule(20, reads, 2.0), 11).unwrap();
        for i in 0..6 {
            let mean: f64 = set.reads.iter().map(|r| f64::from(r.as_slice()[i])).sum::<f64>() / reads as f64;
            // 4 binomial standard errors of a ±1 mean
            assert!(mean.abs() < 4.0 / (reads as f64).sqrt(), "spin {i} mean {mean}");
        }
    }

    #[test]
    fn single_spin_two_state_ratio() {
        let model = IsingModel::with_biases(vec![1.0]).unwrap();
        let reads = 10_000;
        let set = sa_sample(&model, &schedule(100, reads, 2.0), 5).unwrap();
        let up = set.reads.iter().filter(|r| r.as_slice()[0] == 1).count() as f64 / reads as f64;
        let p = (2.0f64).exp() / ((2.0f64).exp() + (-2.0f64).exp());
        let se = (p * (1.0 - p) / reads as f64).sqrt();
        assert!((up - p).abs() < 4.0 * se, "P(+1) = {up}, expected {p}");
    }

    #[test]
    fn ferromagnetic_pair_alignment() {
        let mut model = IsingModel::new(2).unwrap();
        model.set_coupling(0, 1, 1.0).unwrap();
        let reads = 10_000;
        let set = sa_sample(&model, &schedule(100, reads, 2.0), 9).unwrap();
        let aligned = set
            .reads
            .iter()
            .filter(|r| r.as_slice()[0] == r.as_slice()[1])
            .count() as f64
            / reads as f64;
        let p = 2.0 * (2.0f64).exp() / (2.0 * (2.0f64).exp() + 2.0 * (-2.0f64).exp());
        let se = (p * (1.0 - p) / reads as f64).sqrt();
        assert!((aligned - p).abs() < 4.0 * se, "P(aligned) = {aligned}, expected {p}");
    }

    #[test]
    fn cold_anneal_finds_unique_ground_state() {
        let mut model = IsingModel::with_biases(vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        model.set_coupling(0, 1, 1.0).unwrap();
        model.set_coupling(1, 2, -0.7).unwrap();
        model.set_coupling(2, 3, 0.5).unwrap();
        model.set_coupling(0, 3, -0.4).unwrap();
        let (ground, _) = (0..16u64)
            .map(|b| {
                let c = SpinConfiguration::from_bits(b, 4);
                let e = model.classical_energy(&c).unwrap();
                (c, e)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let set = sa_sample(&model, &schedule(5000, 200, 50.0), 3).unwrap();
        let hits = set.reads.iter().filter(|r| **r == ground).count();
        // (+,+,-,-) is a single-flip local minimum 0.8 above the ground state;
        // a slow cold anneal still escapes it almost always.
        assert!(hits >= 190, "ground state hit {hits}/200 times");
    }

    #[test]
    fn deterministic_and_energies_exact() {
        let mut model = IsingModel::with_biases(vec![0.5, -1.0, 0.25]).unwrap();
        model.set_coupling(0, 2, 0.8).unwrap();
        let s = schedule(50, 30, 2.0);
        let a = sa_sample(&model, &s, 42).unwrap();
        let b = sa_sample(&model, &s, 42).unwrap();
        assert_eq!(a, b);
        for (read, e) in a.reads.iter().zip(&a.effective_energies) {
            assert_eq!(model.classical_energy(read).unwrap(), *e);
        }
        let c = sa_sample(&model, &s, 43).unwrap();
        assert_ne!(a.reads, c.reads);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let model = IsingModel::with_biases(vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let s = schedule(40, 64, 2.0);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| sa_sample(&model, &s, 7).unwrap());
        let b = parallel.install(|| sa_sample(&model, &s, 7).unwrap());
        assert_eq!(a, b);
    }
}
