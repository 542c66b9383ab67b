//! Classical and transverse-field Ising models over ±1 spins, and the
//! Suzuki–Trotter construction of the classical model one dimension higher.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ising problem `H = -Σ J_ij s_i s_j - Σ h_i s_i - Γ Σ σ^x_i`.
///
/// Couplings are keyed by the unordered pair `(min(i,j), max(i,j))`, so each
/// bond is stored once and lookups are symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    n_spins: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    biases: Vec<f64>,
    transverse_field: f64,
}

fn pair_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl IsingModel {
    /// A model with `n_spins` free spins: no couplings, zero biases, Γ = 0.
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::Parameter("an Ising model needs at least one spin".into()));
        }
        Ok(Self {
            n_spins,
            couplings: BTreeMap::new(),
            biases: vec![0.0; n_spins],
            transverse_field: 0.0,
        })
    }

    pub fn with_biases(biases: Vec<f64>) -> Result<Self> {
        let mut model = Self::new(biases.len())?;
        for (i, &b) in biases.iter().enumerate() {
            model.set_bias(i, b)?;
        }
        Ok(model)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn transverse_field(&self) -> f64 {
        self.transverse_field
    }

    /// Iterates bonds as `((i, j), J_ij)` with `i < j`, in ascending order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn n_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// `J_ij`, or 0 when the pair is not coupled.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&pair_key(i, j)).copied().unwrap_or(0.0)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                actual: i + 1,
            });
        }
        Ok(())
    }

    fn check_finite(value: f64, what: &str) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Parameter(format!("{what} must be finite, got {value}")));
        }
        Ok(())
    }

    /// Sets `J_ij` (replacing any previous value). A zero value removes the bond.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::Parameter(format!("self-coupling ({i}, {i}) is not allowed")));
        }
        Self::check_finite(value, "coupling")?;
        if value == 0.0 {
            self.couplings.remove(&pair_key(i, j));
        } else {
            self.couplings.insert(pair_key(i, j), value);
        }
        Ok(())
    }

    /// Adds `value` to `J_ij`.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let current = self.coupling(i, j);
        self.set_coupling(i, j, current + value)
    }

    pub fn set_bias(&mut self, i: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        Self::check_finite(value, "bias")?;
        self.biases[i] = value;
        Ok(())
    }

    pub fn add_bias(&mut self, i: usize, value: f64) -> Result<()> {
        let current = self.bias(i);
        self.set_bias(i, current + value)
    }

    pub fn set_transverse_field(&mut self, gamma: f64) -> Result<()> {
        Self::check_finite(gamma, "transverse field")?;
        if gamma < 0.0 {
            return Err(Error::Parameter(format!("transverse field must be non-negative, got {gamma}")));
        }
        self.transverse_field = gamma;
        Ok(())
    }

    /// Adjacency lists `(neighbour, J)` per spin, in ascending neighbour order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_spins];
        for (&(i, j), &v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        for list in &mut adj {
            list.sort_by_key(|&(k, _)| k);
        }
        adj
    }

    /// `-Σ J_ij s_i s_j - Σ h_i s_i`. The transverse field is ignored.
    pub fn classical_energy(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.len() != self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                actual: config.len(),
            });
        }
        let s = config.as_slice();
        let coupling_term: f64 = self
            .couplings
            .iter()
            .map(|(&(i, j), &v)| v * f64::from(s[i] * s[j]))
            .sum();
        let bias_term: f64 = self
            .biases
            .iter()
            .zip(s)
            .map(|(&h, &si)| h * f64::from(si))
            .sum();
        Ok(-coupling_term - bias_term)
    }
}

/// Spins over {−1, +1}. For extended (Trotter) models the layout is
/// slice-major: site `k * n_spins + i` holds spin `i` of slice `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Parameter(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(spins))
    }

    pub fn uniform(len: usize, spin: i8) -> Result<Self> {
        Self::new(vec![spin; len])
    }

    /// Builds a configuration from the low `len` bits of `bits`: bit set → +1.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        Self((0..len).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        Self(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    /// Spins of Trotter slice `k` in a slice-major extended configuration.
    pub fn slice(&self, n_spins: usize, k: usize) -> &[i8] {
        &self.0[k * n_spins..(k + 1) * n_spins]
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

/// Inter-slice ferromagnetic coupling `J⁺ = (1/2β) ln coth(Γβ/r)`.
pub fn inter_slice_coupling(gamma: f64, beta: f64, n_replicas: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Parameter(format!("transverse field must be positive, got {gamma}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("inverse temperature must be positive, got {beta}")));
    }
    if n_replicas < 2 {
        return Err(Error::Parameter(format!("need at least 2 Trotter replicas, got {n_replicas}")));
    }
    let x = gamma * beta / n_replicas as f64;
    // ln coth x = ln(1 + e^{-2x}) - ln(1 - e^{-2x})
    let e = (-2.0 * x).exp();
    let log_coth = e.ln_1p() - (-(-2.0 * x).exp_m1()).ln();
    Ok(log_coth / (2.0 * beta))
}

/// Classical model on `n_spins · n_replicas` sites equivalent (via the
/// Suzuki–Trotter formula) to `model` with transverse field `gamma` at `beta`.
///
/// Intra-slice couplings and biases are divided by the replica count. Slices
/// are coupled periodically (slice `r-1` back to slice 0); with two replicas the
/// two bonds coincide and are stored once with weight `2 J⁺`.
pub fn build_effective_model(
    model: &IsingModel,
    gamma: f64,
    beta: f64,
    n_replicas: usize,
) -> Result<IsingModel> {
    let j_plus = inter_slice_coupling(gamma, beta, n_replicas)?;
    let n = model.n_spins();
    let r = n_replicas as f64;
    let mut extended = IsingModel::new(n * n_replicas)?;
    for k in 0..n_replicas {
        let base = k * n;
        for i in 0..n {
            extended.set_bias(base + i, model.bias(i) / r)?;
        }
        for ((i, j), v) in model.couplings() {
            extended.set_coupling(base + i, base + j, v / r)?;
        }
    }
    let slice_bond = if n_replicas == 2 { 2.0 * j_plus } else { j_plus };
    let n_slice_bonds = if n_replicas == 2 { 1 } else { n_replicas };
    for k in 0..n_slice_bonds {
        let next = (k + 1) % n_replicas;
        for i in 0..n {
            extended.set_coupling(k * n + i, next * n + i, slice_bond)?;
        }
    }
    Ok(extended)
}

/// `H^eff` evaluated on an extended configuration.
pub fn effective_energy(extended: &IsingModel, config: &SpinConfiguration) -> Result<f64> {
    extended.classical_energy(config)
}
