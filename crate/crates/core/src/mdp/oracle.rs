use serde::{Deserialize, Serialize};

use super::{transitions, Action, Maze, TransitionKernel};
use crate::error::{Error, Result};

/// Actions whose `Q*` lies within this distance of the maximum are optimal.
pub const TIE_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 100_000;

/// Exact solution of a maze MDP with stochastic rewards replaced by their
/// expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPolicySet {
    /// `V*` per state.
    pub values: Vec<f64>,
    /// `Q*(s, a)` over the admissible actions of each state, in action order.
    pub q_values: Vec<Vec<(Action, f64)>>,
    /// `α*(s)` in action order.
    pub optimal: Vec<Vec<Action>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRow {
    pub row: usize,
    pub col: usize,
    pub actions: Vec<Action>,
}

impl OptimalPolicySet {
    pub fn is_optimal(&self, state: usize, action: Action) -> bool {
        self.optimal[state].contains(&action)
    }

    /// `α*` per free cell, row-major.
    pub fn table(&self, maze: &Maze) -> Vec<OracleRow> {
        self.optimal
            .iter()
            .enumerate()
            .map(|(s, actions)| {
                let (row, col) = maze.position(s);
                OracleRow {
                    row,
                    col,
                    actions: actions.clone(),
                }
            })
            .collect()
    }
}

fn q_value(maze: &Maze, kernel: &TransitionKernel, v: &[f64], state: usize, action: Action) -> Result<f64> {
    Ok(transitions(maze, kernel, state, action)?
        .into_iter()
        .map(|(t, p)| p * (maze.expected_value(t) + maze.gamma() * v[t]))
        .sum())
}

/// One application of the Bellman optimality operator.
pub fn bellman_update(maze: &Maze, kernel: &TransitionKernel, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != maze.n_states() {
        return Err(Error::Dimension {
            expected: maze.n_states(),
            actual: v.len(),
        });
    }
    (0..maze.n_states())
        .map(|s| {
            maze.admissible_actions(s)
                .into_iter()
                .map(|a| q_value(maze, kernel, v, s, a))
                .try_fold(f64::NEG_INFINITY, |m, q| Ok(m.max(q?)))
        })
        .collect()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Value iteration from `V = 0` until successive iterates differ by less
/// than `tol` in the sup norm.
pub fn value_iteration(maze: &Maze, kernel: &TransitionKernel, tol: f64) -> Result<OptimalPolicySet> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut v = vec![0.0; maze.n_states()];
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let next = bellman_update(maze, kernel, &v)?;
        let change = sup_distance(&next, &v);
        // the operator is a γ-contraction; allow for rounding near convergence
        debug_assert!(change <= maze.gamma() * last_change + 1e-9 * (1.0 + last_change));
        v = next;
        iterations += 1;
        if change < tol {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::Parameter(format!("value iteration did not reach {tol} in {MAX_ITERATIONS} sweeps")));
        }
        last_change = change;
    }
    let mut q_values = Vec::with_capacity(v.len());
    let mut optimal = Vec::with_capacity(v.len());
    for s in 0..maze.n_states() {
        let qs: Vec<(Action, f64)> = maze
            .admissible_actions(s)
            .into_iter()
            .map(|a| Ok((a, q_value(maze, kernel, &v, s, a)?)))
            .collect::<Result<_>>()?;
        let best = qs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        optimal.push(qs.iter().filter(|x| best - x.1 <= TIE_TOL).map(|x| x.0).collect());
        q_values.push(qs);
    }
    Ok(OptimalPolicySet {
        values: v,
        q_values,
        optimal,
        iterations,
    })
}

/// Expected fidelity of a policy drawing each state's action uniformly from
/// its admissible set: the mean over states of `|α*(s)| / |adm(s)|`.
pub fn random_policy_fidelity(maze: &Maze, oracle: &OptimalPolicySet) -> f64 {
    let total: f64 = (0..maze.n_states())
        .map(|s| oracle.optimal[s].len() as f64 / maze.admissible_actions(s).len() as f64)
        .sum();
    total / maze.n_states() as f64
}
