//! Brute-force reference values: Boltzmann enumeration of classical models,
//! dense diagonalisation of transverse-field models, and enumeration of the
//! Trotter extended model.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ising::{build_effective_model, IsingModel, SpinConfiguration};
use crate::machine::{BoltzmannMachine, VisibleAssignment};
use crate::sampler::SpinHistogram;

pub const MAX_CLASSICAL_SPINS: usize = 16;
pub const MAX_QUANTUM_SPINS: usize = 10;
pub const MAX_EXTENDED_SPINS: usize = 20;

fn check_size(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n > limit {
        return Err(Error::Capacity { what, actual: n, limit });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// `ln Σ exp(x)` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Exact Boltzmann distribution over all `2^n` spin configurations.
/// Index `b` is the configuration with spin `i` up iff bit `i` of `b` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Boltzmann {
    pub n_spins: usize,
    pub probabilities: Vec<f64>,
    pub free_energy: f64,
}

impl Boltzmann {
    pub fn of(model: &IsingModel, beta: f64) -> Result<Self> {
        Self::with_limit(model, beta, MAX_CLASSICAL_SPINS, "classical enumeration spins")
    }

    fn with_limit(model: &IsingModel, beta: f64, limit: usize, what: &'static str) -> Result<Self> {
        check_beta(beta)?;
        let n = model.n_spins();
        check_size(n, limit, what)?;
        let log_weights: Vec<f64> = (0..1u64 << n)
            .map(|b| Ok(-beta * model.classical_energy(&SpinConfiguration::from_bits(b, n))?))
            .collect::<Result<_>>()?;
        let log_z = log_sum_exp(&log_weights);
        Ok(Self {
            n_spins: n,
            probabilities: log_weights.iter().map(|lw| (lw - log_z).exp()).collect(),
            free_energy: -log_z / beta,
        })
    }

    /// `⟨σ_i⟩` for every spin.
    pub fn spin_means(&self) -> Vec<f64> {
        (0..self.n_spins)
            .map(|i| {
                self.probabilities
                    .iter()
                    .enumerate()
                    .map(|(b, p)| if b >> i & 1 == 1 { *p } else { -p })
                    .sum()
            })
            .collect()
    }

    /// `⟨σ_i σ_j⟩`.
    pub fn pair_mean(&self, i: usize, j: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(b, p)| if (b >> i ^ b >> j) & 1 == 0 { *p } else { -p })
            .sum()
    }

    /// Probabilities as a weighted histogram, usable wherever empirical
    /// frequencies are expected.
    pub fn to_histogram(&self) -> Result<SpinHistogram> {
        let mut hist = SpinHistogram::new(self.n_spins)?;
        for (b, &p) in self.probabilities.iter().enumerate() {
            hist.add_bits(b as u64, p);
        }
        Ok(hist)
    }

    /// Total-variation distance to the normalised histogram.
    pub fn total_variation(&self, hist: &SpinHistogram) -> Result<f64> {
        if hist.n_spins() != self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                actual: hist.n_spins(),
            });
        }
        let mut empirical = vec![0.0; self.probabilities.len()];
        for (b, p) in hist.probabilities() {
            empirical[b as usize] = p;
        }
        Ok(self
            .probabilities
            .iter()
            .zip(&empirical)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
            / 2.0)
    }
}

/// `F(v) = −(1/β) ln Σ_h exp(−β 𝓔_v(h))` of a clamped machine.
pub fn exact_free_energy(bm: &BoltzmannMachine, v: VisibleAssignment, beta: f64) -> Result<f64> {
    check_size(bm.n_hidden(), MAX_CLASSICAL_SPINS, "classical enumeration spins")?;
    let clamped = bm.clamp(v)?;
    Ok(Boltzmann::of(&clamped.model, beta)?.free_energy + clamped.offset)
}

/// Exact Boltzmann distribution of a clamped machine in spin form.
pub fn exact_boltzmann(bm: &BoltzmannMachine, v: VisibleAssignment, beta: f64) -> Result<Boltzmann> {
    Boltzmann::of(&bm.clamp(v)?.model, beta)
}

/// Eigen-decomposition of `H = −Σ J σz σz − Σ h σz − Γ Σ σx` in the
/// computational basis (basis index bits as in [`Boltzmann`]).
pub fn transverse_field_spectrum(model: &IsingModel, gamma: f64) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = model.n_spins();
    check_size(n, MAX_QUANTUM_SPINS, "dense quantum spins")?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Parameter(format!("transverse field must be non-negative, got {gamma}")));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        h[(b, b)] = model.classical_energy(&SpinConfiguration::from_bits(b as u64, n))?;
        for i in 0..n {
            h[(b, b ^ 1 << i)] = -gamma;
        }
    }
    Ok(SymmetricEigen::new(h))
}

/// Thermal state of a transverse-field model: free energy and `⟨σz_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumThermal {
    pub free_energy: f64,
    pub z_means: Vec<f64>,
}

pub fn quantum_thermal(model: &IsingModel, gamma: f64, beta: f64) -> Result<QuantumThermal> {
    check_beta(beta)?;
    let n = model.n_spins();
    let eig = transverse_field_spectrum(model, gamma)?;
    let log_w: Vec<f64> = eig.eigenvalues.iter().map(|l| -beta * l).collect();
    let log_z = log_sum_exp(&log_w);
    let dim = 1usize << n;
    // diagonal of the density matrix in the computational basis
    let mut rho = vec![0.0; dim];
    for (k, lw) in log_w.iter().enumerate() {
        let p = (lw - log_z).exp();
        for (c, r) in rho.iter_mut().enumerate() {
            *r += p * eig.eigenvectors[(c, k)].powi(2);
        }
    }
    let z_means = (0..n)
        .map(|i| rho.iter().enumerate().map(|(c, r)| if c >> i & 1 == 1 { *r } else { -r }).sum())
        .collect();
    Ok(QuantumThermal {
        free_energy: -log_z / beta,
        z_means,
    })
}

/// `−(1/β) ln tr exp(−β H_v)` with `H_v` the clamped machine plus `−Γ Σ σx`.
pub fn exact_quantum_free_energy(bm: &BoltzmannMachine, v: VisibleAssignment, beta: f64, gamma: f64) -> Result<f64> {
    let clamped = bm.clamp(v)?;
    Ok(quantum_thermal(&clamped.model, gamma, beta)?.free_energy + clamped.offset)
}

/// Free energy of the classical extended model by enumeration of all its
/// `2^(n·r)` configurations.
pub fn exact_effective_free_energy(model: &IsingModel, gamma: f64, beta: f64, n_replicas: usize) -> Result<f64> {
    check_size(model.n_spins() * n_replicas, MAX_EXTENDED_SPINS, "extended enumeration spins")?;
    let ext = build_effective_model(model, gamma, beta, n_replicas)?;
    Ok(Boltzmann::with_limit(&ext, beta, MAX_EXTENDED_SPINS, "extended enumeration spins")?.free_energy)
}

/// Difference between the quantum free energy and the free energy of its
/// Trotter extended model: each slice link carries a factor
/// `(½ sinh(2βΓ/r))^{1/2}` that the extended energy leaves out, so
/// `F_quantum ≈ F_eff + trotter_free_energy_shift`.
pub fn trotter_free_energy_shift(n_spins: usize, gamma: f64, beta: f64, n_replicas: usize) -> Result<f64> {
    check_beta(beta)?;
    if !(gamma > 0.0) || n_replicas < 2 {
        return Err(Error::Parameter("shift needs gamma > 0 and at least 2 replicas".into()));
    }
    let r = n_replicas as f64;
    let a = 2.0 * beta * gamma / r;
    Ok(-(n_spins as f64 * r) / (2.0 * beta) * (0.5 * a.sinh()).ln())
}
