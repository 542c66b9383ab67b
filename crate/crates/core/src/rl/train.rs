use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{generate_samples, Algorithm, LearningRate, PolicyRefresh, TrainingConfig, TrainingSample};
use crate::error::{Error, Result};
use crate::free_energy::{
    classical_free_energy_with_statistics, quantum_free_energy, rbm_free_energy_from_activations, HiddenStatistics,
};
use crate::machine::{BoltzmannMachine, VisibleAssignment};
use crate::mdp::{draw_reward, step, Action, Maze, TransitionKernel};
use crate::sampler::{sa_sample, splitmix64, sqa_sample, SamplerRng, SpinHistogram};

/// `Q(s, a) = −F` together with the hidden expectations of the same pass.
#[derive(Debug, Clone, PartialEq)]
pub struct QEstimate {
    pub q: f64,
    pub stats: HiddenStatistics,
}

/// A machine with zero weights sized for the maze and the configuration.
pub fn build_machine(maze: &Maze, config: &TrainingConfig) -> Result<BoltzmannMachine> {
    config.validate()?;
    match config.algorithm {
        Algorithm::Rbm => BoltzmannMachine::rbm(maze.n_states(), Action::ALL.len(), config.hidden[0]),
        _ => BoltzmannMachine::dbm(maze.n_states(), Action::ALL.len(), &config.hidden),
    }
}

/// Negative free energy of the machine clamped to `(state, action)`. Sampled
/// algorithms draw fresh samples seeded with `seed`.
pub fn q_value(
    bm: &BoltzmannMachine,
    maze: &Maze,
    state: usize,
    action: Action,
    config: &TrainingConfig,
    seed: u64,
) -> Result<QEstimate> {
    if state >= maze.n_states() || !maze.is_admissible(state, action) {
        return Err(Error::Usage(format!("{action} is not admissible at state {state}")));
    }
    let v = VisibleAssignment::new(bm, state, action.index())?;
    match config.algorithm {
        Algorithm::Rbm => {
            let act = bm.rbm_hidden_activations(v)?;
            let q = -rbm_free_energy_from_activations(bm, v, &act);
            Ok(QEstimate {
                q,
                stats: HiddenStatistics {
                    means: act,
                    pair_means: Vec::new(),
                },
            })
        }
        Algorithm::DbmSa | Algorithm::DbmSqa => {
            let clamped = bm.clamp(v)?;
            let samples = if config.algorithm == Algorithm::DbmSa {
                sa_sample(&clamped.model, &config.sa, seed)?
            } else {
                sqa_sample(&clamped.model, &config.sqa, seed)?
            };
            let (f, stats) = classical_free_energy_with_statistics(bm, v, &samples, config.beta)?;
            Ok(QEstimate { q: -f.value, stats })
        }
        Algorithm::Qbm => {
            let clamped = bm.clamp(v)?;
            let samples = sqa_sample(&clamped.model, &config.sqa, seed)?;
            let f = quantum_free_energy(&samples, config.beta)?.value + clamped.offset;
            let stats = HiddenStatistics::from_histogram(bm, &SpinHistogram::from_samples(&samples)?)?;
            Ok(QEstimate { q: -f, stats })
        }
    }
}

/// Argmax of `Q(state, ·)` over admissible actions; ties go to the earlier
/// action in [`Action::ALL`]. Returns the evaluated Q values as well.
pub fn greedy_action(
    bm: &BoltzmannMachine,
    maze: &Maze,
    state: usize,
    config: &TrainingConfig,
    seed: u64,
) -> Result<(Action, Vec<(Action, f64)>)> {
    let qs: Vec<(Action, f64)> = maze
        .admissible_actions(state)
        .into_iter()
        .map(|a| Ok((a, q_value(bm, maze, state, a, config, splitmix64(seed ^ a.index() as u64))?.q)))
        .collect::<Result<_>>()?;
    let mut best = qs[0];
    for &(a, q) in &qs[1..] {
        if q > best.1 {
            best = (a, q);
        }
    }
    Ok((best.0, qs))
}

/// TD(0) step: `Δw^{vh} = ε_w·E·⟨h⟩` on weights touching the active units
/// and `Δw^{hh'} = ε_w·E·⟨hh'⟩` on hidden pairs.
pub fn td_update(
    bm: &mut BoltzmannMachine,
    v: VisibleAssignment,
    stats: &HiddenStatistics,
    td_error: f64,
    rate: &mut LearningRate,
) -> Result<()> {
    if stats.means.len() != bm.n_hidden() {
        return Err(Error::Dimension {
            expected: bm.n_hidden(),
            actual: stats.means.len(),
        });
    }
    let n_pairs = bm.hidden_edges().len();
    if !stats.pair_means.is_empty() && stats.pair_means.len() != n_pairs {
        return Err(Error::Dimension {
            expected: n_pairs,
            actual: stats.pair_means.len(),
        });
    }
    let mut deltas: Vec<(usize, f64)> = bm
        .active_edges(v)
        .map(|(h, id)| (id, td_error * stats.means[h]))
        .collect();
    deltas.extend(
        bm.hidden_edges()
            .iter()
            .zip(&stats.pair_means)
            .map(|(&(_, _, id), m)| (id, td_error * m)),
    );
    let w = bm.weights_mut();
    for (id, g) in deltas {
        w[id] += rate.rate(id, g) * g;
    }
    Ok(())
}

/// Greedy policy after every training sample (entry 0 is the initial policy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub actions: Vec<Vec<Action>>,
    pub td_errors: Vec<f64>,
    /// Largest |Q| evaluated during training.
    pub max_abs_q: f64,
}

/// Training state of one run.
pub struct Trainer<'a> {
    maze: &'a Maze,
    kernel: TransitionKernel,
    config: &'a TrainingConfig,
    bm: BoltzmannMachine,
    rate: LearningRate,
    policy: Vec<Action>,
    rng: SamplerRng,
    max_abs_q: f64,
}

impl<'a> Trainer<'a> {
    /// Draws N(0, std²) weights and the initial greedy policy.
    pub fn new(maze: &'a Maze, kernel: TransitionKernel, config: &'a TrainingConfig, seed: u64) -> Result<Self> {
        let mut bm = build_machine(maze, config)?;
        let mut rng = SamplerRng::seed_from_u64(seed);
        bm.randomize(config.weight_std, &mut rng);
        let rate = LearningRate::new(config.eps0, config.rate, bm.n_weights());
        let mut t = Self {
            maze,
            kernel,
            config,
            bm,
            rate,
            policy: Vec::new(),
            rng,
            max_abs_q: 0.0,
        };
        t.policy = (0..maze.n_states()).map(|s| t.greedy(s)).collect::<Result<_>>()?;
        Ok(t)
    }

    pub fn from_machine(
        maze: &'a Maze,
        kernel: TransitionKernel,
        config: &'a TrainingConfig,
        bm: BoltzmannMachine,
        seed: u64,
    ) -> Result<Self> {
        let expected = build_machine(maze, config)?;
        if expected.edges() != bm.edges() {
            return Err(Error::Layout("machine does not match the maze and configuration".into()));
        }
        let rate = LearningRate::new(config.eps0, config.rate, bm.n_weights());
        let mut t = Self {
            maze,
            kernel,
            config,
            bm,
            rate,
            policy: Vec::new(),
            rng: SamplerRng::seed_from_u64(seed),
            max_abs_q: 0.0,
        };
        t.policy = (0..maze.n_states()).map(|s| t.greedy(s)).collect::<Result<_>>()?;
        Ok(t)
    }

    fn greedy(&mut self, state: usize) -> Result<Action> {
        let (a, qs) = greedy_action(&self.bm, self.maze, state, self.config, self.rng.next_u64())?;
        self.track(qs.iter().map(|x| x.1));
        Ok(a)
    }

    fn track(&mut self, qs: impl Iterator<Item = f64>) {
        for q in qs {
            self.max_abs_q = self.max_abs_q.max(q.abs());
        }
    }

    pub fn machine(&self) -> &BoltzmannMachine {
        &self.bm
    }

    pub fn policy(&self) -> &[Action] {
        &self.policy
    }

    pub fn rng(&mut self) -> &mut SamplerRng {
        &mut self.rng
    }

    /// One TD(0) update; returns the TD error.
    pub fn step(&mut self, sample: TrainingSample) -> Result<f64> {
        let (s1, a1) = (sample.state, sample.action);
        let (s2, reward) = match sample.next {
            Some(next) => (next, draw_reward(self.maze, next, &mut self.rng)),
            None => step(self.maze, &self.kernel, s1, a1, &mut self.rng)?,
        };
        let (a2, qs2) = greedy_action(&self.bm, self.maze, s2, self.config, self.rng.next_u64())?;
        self.track(qs2.iter().map(|x| x.1));
        let q1 = q_value(&self.bm, self.maze, s1, a1, self.config, self.rng.next_u64())?;
        let q2 = q_value(&self.bm, self.maze, s2, a2, self.config, self.rng.next_u64())?;
        self.track([q1.q, q2.q].into_iter());
        let td = reward + self.maze.gamma() * q2.q - q1.q;
        let v1 = VisibleAssignment::new(&self.bm, s1, a1.index())?;
        td_update(&mut self.bm, v1, &q1.stats, td, &mut self.rate)?;
        match self.config.refresh {
            PolicyRefresh::VisitedState => self.policy[s1] = self.greedy(s1)?,
            PolicyRefresh::AllStates => {
                for s in 0..self.maze.n_states() {
                    self.policy[s] = self.greedy(s)?;
                }
            }
        }
        Ok(td)
    }
}

/// Runs one training run of `config.n_samples` samples.
pub fn train(maze: &Maze, kernel: TransitionKernel, config: &TrainingConfig, seed: u64) -> Result<PolicyTrace> {
    let mut trainer = Trainer::new(maze, kernel, config, seed)?;
    let mut actions = vec![trainer.policy.clone()];
    let mut td_errors = Vec::with_capacity(config.n_samples);
    if config.n_samples > 0 {
        let samples = generate_samples(maze, &kernel, config.strategy, config.n_samples, &mut trainer.rng)?;
        for sample in samples {
            td_errors.push(trainer.step(sample)?);
            actions.push(trainer.policy.clone());
        }
    }
    Ok(PolicyTrace {
        actions,
        td_errors,
        max_abs_q: trainer.max_abs_q,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::exact::exact_free_energy;
    use crate::free_energy::rbm_free_energy;
    use crate::machine::Edge;
    use crate::mdp::{parse_maze, value_iteration};
    use crate::rl::{RateRule, SampleStrategy};
    use crate::sampler::SaSchedule;

    const REFERENCE_MAZE: &str = "R....\n..W..\n..P..";

    fn rbm_config(m: usize) -> TrainingConfig {
        TrainingConfig::full(Algorithm::Rbm).with_hidden_total(m)
    }

    #[test]
    fn zero_weight_rbm_q() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let config = rbm_config(16);
        let bm = build_machine(&maze, &config).unwrap();
        for s in 0..maze.n_states() {
            for a in maze.admissible_actions(s) {
                let q = q_value(&bm, &maze, s, a, &config, 0).unwrap().q;
                assert!((q - 11.090_354_888_959_125).abs() < 1e-12);
            }
        }
        assert!(matches!(q_value(&bm, &maze, 0, Action::Up, &config, 0), Err(Error::Usage(_))));
    }

    #[test]
    fn greedy_tie_break_and_single_action() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let config = rbm_config(4);
        let bm = build_machine(&maze, &config).unwrap();
        assert_eq!(greedy_action(&bm, &maze, maze.state_at(1, 1).unwrap(), &config, 0).unwrap().0, Action::Up);
        assert_eq!(greedy_action(&bm, &maze, 0, &config, 0).unwrap().0, Action::Down);
        let single = parse_maze(".").unwrap();
        let bm1 = build_machine(&single, &config).unwrap();
        assert_eq!(greedy_action(&bm1, &single, 0, &config, 0).unwrap().0, Action::StandStill);
    }

    #[test]
    fn hand_set_weights_select_left() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let config = rbm_config(1);
        let mut bm = build_machine(&maze, &config).unwrap();
        let left = maze.n_states() + Action::Left.index();
        bm.set_weight(Edge::VisibleHidden { visible: left, hidden: 0 }, 2.0).unwrap();
        let s = maze.state_at(1, 1).unwrap();
        let (a, qs) = greedy_action(&bm, &maze, s, &config, 0).unwrap();
        assert_eq!(a, Action::Left);
        // Q(left) = ln(1 + e²), every other action ln 2
        for (b, q) in qs {
            let want = if b == Action::Left { (1.0 + 2f64.exp()).ln() } else { 2f64.ln() };
            assert!((q - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_visible_update() {
        let mut bm = BoltzmannMachine::rbm(1, 1, 1).unwrap();
        let stats = HiddenStatistics {
            means: vec![0.5],
            pair_means: vec![],
        };
        let mut rate = LearningRate::new(0.01, RateRule::Constant, bm.n_weights());
        td_update(&mut bm, VisibleAssignment { state: 0, action: 0 }, &stats, 2.0, &mut rate).unwrap();
        assert_eq!(bm.weights(), &[0.01, 0.01]);
        td_update(&mut bm, VisibleAssignment { state: 0, action: 0 }, &stats, 0.0, &mut rate).unwrap();
        assert_eq!(bm.weights(), &[0.01, 0.01]);
    }

    #[test]
    fn positive_td_error_raises_q() {
        let maze = parse_maze("R.").unwrap();
        let config = rbm_config(1);
        let mut bm = build_machine(&maze, &config).unwrap();
        bm.set_weight(Edge::VisibleHidden { visible: 1, hidden: 0 }, 0.3).unwrap();
        let before = q_value(&bm, &maze, 1, Action::Left, &config, 0).unwrap();
        let mut rate = LearningRate::new(0.01, RateRule::default(), bm.n_weights());
        td_update(&mut bm, VisibleAssignment { state: 1, action: 2 }, &before.stats, 5.0, &mut rate).unwrap();
        let after = q_value(&bm, &maze, 1, Action::Left, &config, 0).unwrap();
        // ⟨h⟩ > 0 so both active weights rise by ε₀ (first Adagrad step)
        assert!(after.q > before.q);
        let w = bm.weight(Edge::VisibleHidden { visible: 1, hidden: 0 }).unwrap();
        assert!((w - 0.31).abs() < 1e-9);
    }

    #[test]
    fn rbm_gradient_matches_finite_difference() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let config = rbm_config(6);
        let mut bm = build_machine(&maze, &config).unwrap();
        bm.randomize(1.0, &mut SamplerRng::seed_from_u64(12));
        let v = VisibleAssignment { state: 4, action: 1 };
        let act = bm.rbm_hidden_activations(v).unwrap();
        for (h, id) in bm.active_edges(v).collect::<Vec<_>>() {
            let eps = 1e-5;
            let mut plus = bm.clone();
            plus.weights_mut()[id] += eps;
            let mut minus = bm.clone();
            minus.weights_mut()[id] -= eps;
            let fd = -(rbm_free_energy(&plus, v).unwrap().value - rbm_free_energy(&minus, v).unwrap().value) / (2.0 * eps);
            assert!((fd - act[h]).abs() / act[h] < 1e-6, "{fd} vs {}", act[h]);
        }
    }

    #[test]
    fn dbm_q_close_to_exact() {
        let maze = parse_maze("R.\n.P").unwrap();
        let mut config = TrainingConfig::full(Algorithm::DbmSa);
        config.hidden = vec![2, 2];
        config.sa = SaSchedule {
            n_sweeps: 200,
            n_reads: 10_000,
            ..SaSchedule::default()
        };
        let mut bm = build_machine(&maze, &config).unwrap();
        bm.randomize(1.0, &mut SamplerRng::seed_from_u64(2));
        let q = q_value(&bm, &maze, 3, Action::Up, &config, 9).unwrap().q;
        let exact = -exact_free_energy(&bm, VisibleAssignment { state: 3, action: 0 }, 2.0).unwrap();
        assert!((q - exact).abs() < 0.2, "{q} vs {exact}");
    }

    #[test]
    fn rbm_training_is_bit_identical() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let mut config = rbm_config(8);
        config.n_samples = 60;
        config.strategy = SampleStrategy::Uniform;
        let a = train(&maze, TransitionKernel::windy(), &config, 5).unwrap();
        let b = train(&maze, TransitionKernel::windy(), &config, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.actions.len(), 61);
    }

    #[test]
    fn zero_samples_and_zero_rate() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let mut config = rbm_config(8);
        config.n_samples = 0;
        let t = train(&maze, TransitionKernel::Clear, &config, 1).unwrap();
        assert_eq!(t.actions.len(), 1);
        config.n_samples = 80;
        config.eps0 = 0.0;
        let t = train(&maze, TransitionKernel::Clear, &config, 1).unwrap();
        assert!(t.actions.iter().all(|p| *p == t.actions[0]));
    }

    #[test]
    fn learns_two_cell_maze() {
        let maze = parse_maze("R.").unwrap();
        let oracle = value_iteration(&maze, &TransitionKernel::Clear, 1e-12).unwrap();
        let mut config = rbm_config(16);
        config.n_samples = 200;
        for seed in 0..5 {
            let t = train(&maze, TransitionKernel::Clear, &config, seed).unwrap();
            let last = t.actions.last().unwrap();
            assert!(oracle.is_optimal(1, last[1]), "seed {seed}: {:?}", last[1]);
        }
    }

    #[test]
    fn q_stays_bounded_on_reference_maze() {
        let maze = parse_maze(REFERENCE_MAZE).unwrap();
        let t = train(&maze, TransitionKernel::Clear, &rbm_config(16), 3).unwrap();
        assert!(t.max_abs_q.is_finite() && t.max_abs_q < 200.0 / (1.0 - 0.8) + 100.0);
        assert!(t.td_errors.iter().all(|e| e.is_finite()));
        for policy in &t.actions {
            for (s, a) in policy.iter().enumerate() {
                assert!(maze.is_admissible(s, *a));
            }
        }
    }

    #[test]
    fn sampled_training_is_deterministic() {
        let maze = parse_maze("R.\n.P").unwrap();
        for algorithm in [Algorithm::DbmSa, Algorithm::DbmSqa, Algorithm::Qbm] {
            let mut config = TrainingConfig::desk(algorithm).with_hidden_total(4);
            config.n_samples = 4;
            config.sa.n_sweeps = 20;
            config.sqa.n_sweeps = 10;
            config.sa.n_reads = 5;
            config.sqa.n_reads = 5;
            let a = train(&maze, TransitionKernel::Clear, &config, 8).unwrap();
            assert_eq!(a, train(&maze, TransitionKernel::Clear, &config, 8).unwrap());
            assert_eq!(a.actions.len(), 5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn visible_update_is_sparse(state in 0usize..14, action in 0usize..5, td in -50.0f64..50.0, seed in any::<u64>()) {
            let maze = parse_maze(REFERENCE_MAZE).unwrap();
            let config = TrainingConfig::full(Algorithm::DbmSa);
            let mut bm = build_machine(&maze, &config).unwrap();
            bm.randomize(1.0, &mut SamplerRng::seed_from_u64(seed));
            let before = bm.clone();
            let v = VisibleAssignment { state, action };
            let stats = HiddenStatistics { means: vec![0.3; 16], pair_means: vec![] };
            let mut rate = LearningRate::new(0.01, RateRule::default(), bm.n_weights());
            td_update(&mut bm, v, &stats, td, &mut rate).unwrap();
            let active: Vec<usize> = before.active_edges(v).map(|x| x.1).collect();
            for id in 0..bm.n_weights() {
                if !active.contains(&id) {
                    prop_assert_eq!(bm.weights()[id], before.weights()[id]);
                }
            }
        }
    }
}
