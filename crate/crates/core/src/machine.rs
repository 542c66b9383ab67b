//! Boltzmann machines over one-hot state and action units, and clamping of a
//! visible assignment into an Ising problem over the hidden units.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;

/// Which edges a machine is allowed to carry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "layers", rename_all = "lowercase")]
pub enum Layout {
    /// Complete bipartite visible–hidden graph, no hidden–hidden edges.
    Rbm,
    /// Layered: states touch the first hidden layer, actions the last, and
    /// consecutive hidden layers are fully connected.
    Dbm(Vec<usize>),
    /// Every visible–hidden and every hidden–hidden edge.
    Gbm,
}

/// An undirected edge of the machine. Visible nodes are numbered with states
/// first, then actions; hidden pairs are stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Edge {
    VisibleHidden { visible: usize, hidden: usize },
    HiddenHidden { a: usize, b: usize },
}

impl Edge {
    pub fn hidden_pair(a: usize, b: usize) -> Self {
        Edge::HiddenHidden { a: a.min(b), b: a.max(b) }
    }
}

/// One-hot state and action assignment of the visible layer, stored by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VisibleAssignment {
    pub state: usize,
    pub action: usize,
}

fn one_hot_index(bits: &[u8], what: &str) -> Result<usize> {
    let mut hot = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b, hot) {
            (0, _) => {}
            (1, None) => hot = Some(i),
            (1, Some(_)) => return Err(Error::Encoding(format!("{what} vector has more than one active unit"))),
            _ => return Err(Error::Encoding(format!("{what} vector entry {i} is {b}, expected 0 or 1"))),
        }
    }
    hot.ok_or_else(|| Error::Encoding(format!("{what} vector has no active unit")))
}

impl VisibleAssignment {
    pub fn new(bm: &BoltzmannMachine, state: usize, action: usize) -> Result<Self> {
        if state >= bm.n_states || action >= bm.n_actions {
            return Err(Error::Encoding(format!(
                "assignment (state {state}, action {action}) outside {} states and {} actions",
                bm.n_states, bm.n_actions
            )));
        }
        Ok(Self { state, action })
    }

    pub fn from_one_hot(bm: &BoltzmannMachine, state_vec: &[u8], action_vec: &[u8]) -> Result<Self> {
        if state_vec.len() != bm.n_states || action_vec.len() != bm.n_actions {
            return Err(Error::Encoding(format!(
                "one-hot lengths ({}, {}) do not match machine ({}, {})",
                state_vec.len(),
                action_vec.len(),
                bm.n_states,
                bm.n_actions
            )));
        }
        Self::new(bm, one_hot_index(state_vec, "state")?, one_hot_index(action_vec, "action")?)
    }

    pub fn state_vec(&self, n_states: usize) -> Vec<u8> {
        (0..n_states).map(|i| u8::from(i == self.state)).collect()
    }

    pub fn action_vec(&self, n_actions: usize) -> Vec<u8> {
        (0..n_actions).map(|i| u8::from(i == self.action)).collect()
    }
}

/// A clamped machine in spin form: `𝓔_v(h) = H(σ) + offset` with `h = (σ+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedModel {
    pub model: IsingModel,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "StoredMachine")]
pub struct BoltzmannMachine {
    n_states: usize,
    n_actions: usize,
    n_hidden: usize,
    layout: Layout,
    edges: Vec<Edge>,
    weights: Vec<f64>,
    #[serde(skip)]
    index: BTreeMap<Edge, usize>,
    #[serde(skip)]
    by_visible: Vec<Vec<(usize, usize)>>,
    #[serde(skip)]
    hidden_edges: Vec<(usize, usize, usize)>,
}

impl BoltzmannMachine {
    /// A machine with every allowed weight set to zero.
    pub fn new(n_states: usize, n_actions: usize, layout: Layout) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Parameter("machine needs at least one state and one action".into()));
        }
        let n_visible = n_states + n_actions;
        let mut edges = Vec::new();
        let n_hidden = match &layout {
            Layout::Rbm | Layout::Gbm => {
                return Err(Error::Layout("use BoltzmannMachine::rbm or ::gbm for single-layer layouts".into()))
            }
            Layout::Dbm(layers) => {
                if layers.len() < 2 || layers.contains(&0) {
                    return Err(Error::Layout(format!("DBM needs at least two non-empty hidden layers, got {layers:?}")));
                }
                let starts: Vec<usize> = layers
                    .iter()
                    .scan(0, |acc, &len| {
                        let s = *acc;
                        *acc += len;
                        Some(s)
                    })
                    .collect();
                let last = layers.len() - 1;
                for v in 0..n_visible {
                    let layer = if v < n_states { 0 } else { last };
                    for h in starts[layer]..starts[layer] + layers[layer] {
                        edges.push(Edge::VisibleHidden { visible: v, hidden: h });
                    }
                }
                for k in 0..last {
                    for a in starts[k]..starts[k] + layers[k] {
                        for b in starts[k + 1]..starts[k + 1] + layers[k + 1] {
                            edges.push(Edge::HiddenHidden { a, b });
                        }
                    }
                }
                layers.iter().sum()
            }
        };
        Ok(Self::assemble(n_states, n_actions, n_hidden, layout, edges))
    }

    pub fn rbm(n_states: usize, n_actions: usize, n_hidden: usize) -> Result<Self> {
        Self::single_layer(n_states, n_actions, n_hidden, Layout::Rbm)
    }

    pub fn dbm(n_states: usize, n_actions: usize, layers: &[usize]) -> Result<Self> {
        Self::new(n_states, n_actions, Layout::Dbm(layers.to_vec()))
    }

    pub fn gbm(n_states: usize, n_actions: usize, n_hidden: usize) -> Result<Self> {
        Self::single_layer(n_states, n_actions, n_hidden, Layout::Gbm)
    }

    fn single_layer(n_states: usize, n_actions: usize, n_hidden: usize, layout: Layout) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || n_hidden == 0 {
            return Err(Error::Parameter("machine needs states, actions and hidden nodes".into()));
        }
        let mut edges: Vec<Edge> = (0..n_states + n_actions)
            .flat_map(|v| (0..n_hidden).map(move |h| Edge::VisibleHidden { visible: v, hidden: h }))
            .collect();
        if layout == Layout::Gbm {
            for a in 0..n_hidden {
                for b in a + 1..n_hidden {
                    edges.push(Edge::HiddenHidden { a, b });
                }
            }
        }
        Ok(Self::assemble(n_states, n_actions, n_hidden, layout, edges))
    }

    fn assemble(n_states: usize, n_actions: usize, n_hidden: usize, layout: Layout, edges: Vec<Edge>) -> Self {
        let weights = vec![0.0; edges.len()];
        let mut bm = Self {
            n_states,
            n_actions,
            n_hidden,
            layout,
            edges,
            weights,
            index: BTreeMap::new(),
            by_visible: Vec::new(),
            hidden_edges: Vec::new(),
        };
        bm.rebuild_index();
        bm
    }

    fn rebuild_index(&mut self) {
        self.by_visible = vec![Vec::new(); self.n_states + self.n_actions];
        self.hidden_edges.clear();
        self.index.clear();
        for (id, &e) in self.edges.iter().enumerate() {
            self.index.insert(e, id);
            match e {
                Edge::VisibleHidden { visible, hidden } => self.by_visible[visible].push((hidden, id)),
                Edge::HiddenHidden { a, b } => self.hidden_edges.push((a, b, id)),
            }
        }
    }

    /// Draws every weight independently from N(0, std²).
    pub fn randomize<R: Rng + ?Sized>(&mut self, std: f64, rng: &mut R) {
        for w in &mut self.weights {
            let z: f64 = StandardNormal.sample(rng);
            *w = std * z;
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_visible(&self) -> usize {
        self.n_states + self.n_actions
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn edge_id(&self, edge: Edge) -> Option<usize> {
        self.index.get(&edge).copied()
    }

    pub fn weight(&self, edge: Edge) -> Option<f64> {
        self.edge_id(edge).map(|id| self.weights[id])
    }

    pub fn set_weight(&mut self, edge: Edge, value: f64) -> Result<()> {
        let id = self
            .edge_id(edge)
            .ok_or_else(|| Error::Layout(format!("{edge:?} is not an edge of this {:?} machine", self.layout)))?;
        if !value.is_finite() {
            return Err(Error::Parameter(format!("weight must be finite, got {value}")));
        }
        self.weights[id] = value;
        Ok(())
    }

    /// `(hidden, edge id)` for every weight touching the active state or action.
    pub fn active_edges(&self, v: VisibleAssignment) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_visible[v.state]
            .iter()
            .chain(&self.by_visible[self.n_states + v.action])
            .copied()
    }

    /// `(a, b, edge id)` for every hidden–hidden weight.
    pub fn hidden_edges(&self) -> &[(usize, usize, usize)] {
        &self.hidden_edges
    }

    /// Visible input `Σ_v w^{vh} v` to each hidden node.
    pub fn hidden_input(&self, v: VisibleAssignment) -> Vec<f64> {
        let mut input = vec![0.0; self.n_hidden];
        for (h, id) in self.active_edges(v) {
            input[h] += self.weights[id];
        }
        input
    }

    /// Clamped energy `−Σ w^{vh} v h − Σ w^{hh'} h h'` of binary hidden units.
    pub fn binary_energy(&self, v: VisibleAssignment, hidden: &[u8]) -> Result<f64> {
        if hidden.len() != self.n_hidden {
            return Err(Error::Dimension {
                expected: self.n_hidden,
                actual: hidden.len(),
            });
        }
        let input = self.hidden_input(v);
        let linear: f64 = input.iter().zip(hidden).map(|(c, &h)| c * f64::from(h)).sum();
        let pair: f64 = self
            .hidden_edges
            .iter()
            .map(|&(a, b, id)| self.weights[id] * f64::from(hidden[a] * hidden[b]))
            .sum();
        Ok(-linear - pair)
    }

    /// Rewrites the clamped binary energy over hidden units as a spin model.
    pub fn clamp(&self, v: VisibleAssignment) -> Result<ClampedModel> {
        VisibleAssignment::new(self, v.state, v.action)?;
        let input = self.hidden_input(v);
        let mut biases: Vec<f64> = input.iter().map(|c| c / 2.0).collect();
        let mut offset = -input.iter().sum::<f64>() / 2.0;
        let mut couplings = Vec::with_capacity(self.hidden_edges.len());
        for &(a, b, id) in &self.hidden_edges {
            let w = self.weights[id];
            biases[a] += w / 4.0;
            biases[b] += w / 4.0;
            offset -= w / 4.0;
            couplings.push((a, b, w / 4.0));
        }
        let mut model = IsingModel::with_biases(biases)?;
        for (a, b, j) in couplings {
            model.add_coupling(a, b, j)?;
        }
        Ok(ClampedModel { model, offset })
    }

    /// Closed-form hidden activations `σ(w^{sh} + w^{ah})` of an RBM.
    pub fn rbm_hidden_activations(&self, v: VisibleAssignment) -> Result<Vec<f64>> {
        if self.layout != Layout::Rbm {
            return Err(Error::Layout(format!("closed-form activations need an RBM, got {:?}", self.layout)));
        }
        VisibleAssignment::new(self, v.state, v.action)?;
        Ok(self.hidden_input(v).into_iter().map(sigmoid).collect())
    }
}

#[derive(Deserialize)]
struct StoredMachine {
    n_states: usize,
    n_actions: usize,
    n_hidden: usize,
    layout: Layout,
    edges: Vec<Edge>,
    weights: Vec<f64>,
}

impl From<StoredMachine> for BoltzmannMachine {
    fn from(s: StoredMachine) -> Self {
        let mut bm = Self::assemble(s.n_states, s.n_actions, s.n_hidden, s.layout, s.edges);
        bm.weights = s.weights;
        bm
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
