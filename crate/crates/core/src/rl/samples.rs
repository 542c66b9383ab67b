use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{transitions, Action, Maze, TransitionKernel};

/// How training transitions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    /// Cycle over admissible `(s, a)` pairs; the next state comes from the kernel.
    Sweep,
    /// Cycle over `(s, a, s')` triples with `P(s'|s,a) > 0` (windy kernels only).
    SweepSas,
    /// Independent uniform draws over admissible `(s, a)` pairs.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub state: usize,
    pub action: Action,
    /// Fixed next state, when the strategy prescribes one.
    pub next: Option<usize>,
}

/// Admissible pairs in row-major state order, then action order.
pub fn admissible_pairs(maze: &Maze) -> Vec<(usize, Action)> {
    (0..maze.n_states())
        .flat_map(|s| maze.admissible_actions(s).into_iter().map(move |a| (s, a)))
        .collect()
}

pub fn generate_samples<R: Rng + ?Sized>(
    maze: &Maze,
    kernel: &TransitionKernel,
    strategy: SampleStrategy,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<TrainingSample>> {
    if n_samples == 0 {
        return Err(Error::Parameter("at least one training sample is required".into()));
    }
    let pairs = admissible_pairs(maze);
    let samples = match strategy {
        SampleStrategy::Sweep => pairs
            .iter()
            .cycle()
            .take(n_samples)
            .map(|&(state, action)| TrainingSample { state, action, next: None })
            .collect(),
        SampleStrategy::SweepSas => {
            if !kernel.is_windy() {
                return Err(Error::Usage("sweep-sas needs a windy kernel".into()));
            }
            let mut triples = Vec::new();
            for &(state, action) in &pairs {
                for (next, p) in transitions(maze, kernel, state, action)? {
                    if p > 0.0 {
                        triples.push(TrainingSample {
                            state,
                            action,
                            next: Some(next),
                        });
                    }
                }
            }
            triples.into_iter().cycle().take(n_samples).collect()
        }
        SampleStrategy::Uniform => (0..n_samples)
            .map(|_| {
                let (state, action) = pairs[rng.random_range(0..pairs.len())];
                TrainingSample { state, action, next: None }
            })
            .collect(),
    };
    Ok(samples)
}
