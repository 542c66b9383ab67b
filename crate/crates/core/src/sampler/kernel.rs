use rand::Rng;

use crate::ising::IsingModel;

/// Compressed adjacency of a classical model, laid out for the sweep loops.
pub(crate) struct Couplings {
    offsets: Vec<usize>,
    edges: Vec<(usize, f64)>,
    biases: Vec<f64>,
}

impl Couplings {
    pub(crate) fn new(model: &IsingModel) -> Self {
        let adj = model.adjacency();
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for list in &adj {
            edges.extend_from_slice(list);
            offsets.push(edges.len());
        }
        Self {
            offsets,
            edges,
            biases: model.biases().to_vec(),
        }
    }

    pub(crate) fn n_spins(&self) -> usize {
        self.biases.len()
    }

    /// `h_i + Σ_j J_ij s_j` over spins of one slice.
    fn local_field(&self, i: usize, spins: &[f64]) -> f64 {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        self.edges[lo..hi]
            .iter()
            .fold(self.biases[i], |field, &(j, w)| field + w * spins[j])
    }

    #[inline(always)]
    fn neighbours(&self, i: usize) -> &[(usize, f64)] {
        // SAFETY: `offsets` has n_spins + 1 monotone entries ending at edges.len().
        unsafe {
            let lo = *self.offsets.get_unchecked(i);
            let hi = *self.offsets.get_unchecked(i + 1);
            self.edges.get_unchecked(lo..hi)
        }
    }
}

#[inline(always)]
fn accept<R: Rng>(delta: f64, beta: f64, rng: &mut R) -> bool {
    delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp()
}

/// Spins of one or more slices of a model, with cached intra-slice local
/// fields `h_i + Σ_j J_ij s_j` kept current on every accepted flip.
pub(crate) struct Replicas<'a> {
    couplings: &'a Couplings,
    spins: Vec<f64>,
    fields: Vec<f64>,
}

impl<'a> Replicas<'a> {
    pub(crate) fn new(couplings: &'a Couplings, spins: Vec<f64>) -> Self {
        let n = couplings.n_spins();
        debug_assert_eq!(spins.len() % n, 0);
        let fields = spins
            .chunks(n)
            .flat_map(|slice| (0..n).map(move |i| couplings.local_field(i, slice)))
            .collect();
        Self { couplings, spins, fields }
    }

    pub(crate) fn spins(&self) -> &[f64] {
        &self.spins
    }

    #[inline(always)]
    fn flip(&mut self, base: usize, i: usize) {
        let site = base + i;
        let old = self.spins[site];
        self.spins[site] = -old;
        let change = -2.0 * old;
        for &(j, w) in self.couplings.neighbours(i) {
            // SAFETY: j < n_spins and base is the start of a full slice.
            unsafe { *self.fields.get_unchecked_mut(base + j) += w * change };
        }
    }

    /// One ascending-order Metropolis sweep of a single classical slice.
    pub(crate) fn classical_sweep<R: Rng>(&mut self, beta: f64, rng: &mut R) {
        for i in 0..self.couplings.n_spins() {
            let delta = 2.0 * self.spins[i] * self.fields[i];
            if accept(delta, beta, rng) {
                self.flip(0, i);
            }
        }
    }

    /// One Metropolis sweep over every (slice, spin) site of the Trotter
    /// model in ascending slice-major order. Intra-slice terms are scaled by
    /// `1/r`; neighbouring slices (periodic) couple with `j_plus`.
    pub(crate) fn trotter_sweep<R: Rng>(&mut self, j_plus: f64, beta: f64, rng: &mut R) {
        let n = self.couplings.n_spins();
        let r = self.spins.len() / n;
        let inv_r = 1.0 / r as f64;
        for k in 0..r {
            let prev = if k == 0 { r - 1 } else { k - 1 } * n;
            let next = if k + 1 == r { 0 } else { k + 1 } * n;
            let base = k * n;
            for i in 0..n {
                let s = self.spins[base + i];
                let field = self.fields[base + i] * inv_r + j_plus * (self.spins[prev + i] + self.spins[next + i]);
                if accept(2.0 * s * field, beta, rng) {
                    self.flip(base, i);
                }
            }
        }
    }
}

pub(crate) fn random_spins<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

pub(crate) fn to_config(spins: &[f64]) -> Vec<i8> {
    spins.iter().map(|&s| if s > 0.0 { 1 } else { -1 }).collect()
}
