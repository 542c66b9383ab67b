use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, Cell, Maze};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum TransitionKernel {
    /// The intended destination is reached surely.
    Clear,
    /// The intended destination is reached with `p_intended`; the rest is
    /// split equally over the other states reachable by an admissible action.
    Windy { p_intended: f64 },
}

impl TransitionKernel {
    pub fn windy() -> Self {
        TransitionKernel::Windy { p_intended: 0.8 }
    }

    pub fn is_windy(&self) -> bool {
        matches!(self, TransitionKernel::Windy { .. })
    }
}

/// `(next state, probability)` pairs of `P(·|s, a)`, ascending by state.
pub fn transitions(maze: &Maze, kernel: &TransitionKernel, state: usize, action: Action) -> Result<Vec<(usize, f64)>> {
    let intended = maze.destination(state, action).ok_or_else(|| {
        let (row, col) = maze.position(state);
        Error::Usage(format!("{action} is inadmissible at ({row}, {col})"))
    })?;
    let p = match *kernel {
        TransitionKernel::Clear => return Ok(vec![(intended, 1.0)]),
        TransitionKernel::Windy { p_intended } => p_intended,
    };
    let mut others: Vec<usize> = Action::ALL
        .iter()
        .filter_map(|&a| maze.destination(state, a))
        .filter(|&s| s != intended)
        .collect();
    others.sort_unstable();
    others.dedup();
    if others.is_empty() {
        return Ok(vec![(intended, 1.0)]);
    }
    let q = (1.0 - p) / others.len() as f64;
    let mut out: Vec<(usize, f64)> = others.into_iter().map(|s| (s, q)).chain([(intended, p)]).collect();
    out.sort_unstable_by_key(|&(s, _)| s);
    Ok(out)
}

/// Samples a transition and the reward held by the destination cell;
/// stochastic cells draw a fresh payout on every visit.
pub fn step<R: Rng + ?Sized>(
    maze: &Maze,
    kernel: &TransitionKernel,
    state: usize,
    action: Action,
    rng: &mut R,
) -> Result<(usize, f64)> {
    let dist = transitions(maze, kernel, state, action)?;
    let next = if dist.len() == 1 {
        dist[0].0
    } else {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        dist.iter()
            .find(|&&(_, p)| {
                acc += p;
                u < acc
            })
            .unwrap_or(&dist[dist.len() - 1])
            .0
    };
    Ok((next, draw_reward(maze, next, rng)))
}

pub(crate) fn draw_reward<R: Rng + ?Sized>(maze: &Maze, state: usize, rng: &mut R) -> f64 {
    let v = maze.values();
    match maze.cell_of(state) {
        Cell::StochasticReward => {
            if rng.random::<f64>() < v.stochastic_p {
                v.stochastic_high
            } else {
                0.0
            }
        }
        _ => maze.expected_value(state),
    }
}
