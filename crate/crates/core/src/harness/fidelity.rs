use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Action, Maze, OptimalPolicySet};
use crate::rl::PolicyTrace;

/// Fidelity per training sample, aggregated over runs. Index 0 is the
/// policy before the first update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrace {
    pub mean: Vec<f64>,
    /// Sample standard deviation across runs of the per-run fidelity (0 for a
    /// single run).
    pub std: Vec<f64>,
    /// Per-run fidelity, when retained.
    pub runs: Option<Vec<Vec<f64>>>,
}

impl FidelityTrace {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Number of training samples `T_s`.
    pub fn n_samples(&self) -> usize {
        self.mean.len().saturating_sub(1)
    }

    pub fn without_runs(mut self) -> Self {
        self.runs = None;
        self
    }
}

/// Fraction of states whose action is in `α*`.
pub fn policy_fidelity(policy: &[Action], oracle: &OptimalPolicySet) -> Result<f64> {
    if policy.len() != oracle.optimal.len() {
        return Err(Error::Dimension {
            expected: oracle.optimal.len(),
            actual: policy.len(),
        });
    }
    let hits = policy.iter().enumerate().filter(|&(s, a)| oracle.is_optimal(s, *a)).count();
    Ok(hits as f64 / policy.len() as f64)
}

/// Per-sample fidelity of one run.
pub fn run_fidelity(trace: &PolicyTrace, oracle: &OptimalPolicySet) -> Result<Vec<f64>> {
    trace.actions.iter().map(|p| policy_fidelity(p, oracle)).collect()
}

/// Mean and sample standard deviation over runs at every training sample.
pub fn fidelity(traces: &[PolicyTrace], oracle: &OptimalPolicySet) -> Result<FidelityTrace> {
    let runs = traces
        .iter()
        .map(|t| run_fidelity(t, oracle))
        .collect::<Result<Vec<_>>>()?;
    aggregate(runs)
}

/// Aggregates per-run fidelity series of equal length.
pub fn aggregate(runs: Vec<Vec<f64>>) -> Result<FidelityTrace> {
    let Some(first) = runs.first() else {
        return Err(Error::Parameter("at least one run is required".into()));
    };
    let len = first.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != len) {
        return Err(Error::Dimension {
            expected: len,
            actual: bad.len(),
        });
    }
    let n = runs.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for i in 0..len {
        let m = runs.iter().map(|r| r[i]).sum::<f64>() / n;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(FidelityTrace {
        mean,
        std,
        runs: Some(runs),
    })
}

/// `av_ℓ`: mean of `fid(i)` for `i = T_s − ℓ ..= T_s`, i.e. the last `ℓ + 1`
/// entries.
pub fn average_fidelity(trace: &FidelityTrace, window: usize) -> Result<f64> {
    average_of(&trace.mean, window)
}

pub(crate) fn average_of(series: &[f64], window: usize) -> Result<f64> {
    let n_samples = series.len().saturating_sub(1);
    if series.is_empty() || window > n_samples {
        return Err(Error::Parameter(format!(
            "window {window} exceeds the {n_samples} training samples"
        )));
    }
    let tail = &series[n_samples - window..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Monte Carlo estimate of the fidelity of uniformly random policies:
/// `(mean, standard error)` over `n_draws` policies.
pub fn monte_carlo_baseline<R: Rng + ?Sized>(
    maze: &Maze,
    oracle: &OptimalPolicySet,
    n_draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_draws < 2 {
        return Err(Error::Parameter("at least two draws are required".into()));
    }
    let admissible: Vec<Vec<Action>> = (0..maze.n_states()).map(|s| maze.admissible_actions(s)).collect();
    let mut policy = vec![Action::StandStill; maze.n_states()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_draws {
        for (p, adm) in policy.iter_mut().zip(&admissible) {
            *p = adm[rng.random_range(0..adm.len())];
        }
        let f = policy_fidelity(&policy, oracle)?;
        sum += f;
        sum_sq += f * f;
    }
    let n = n_draws as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    Ok((mean, (var.max(0.0) / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::mdp::{parse_maze, random_policy_fidelity, value_iteration, TransitionKernel};
    use crate::sampler::SamplerRng;

    fn trace(actions: Vec<Vec<Action>>) -> PolicyTrace {
        PolicyTrace {
            actions,
            td_errors: vec![],
            max_abs_q: 0.0,
        }
    }

    #[test]
    fn always_optimal_is_one() {
        let m = parse_maze("R....\n..W..\n..P..").unwrap();
        let o = value_iteration(&m, &TransitionKernel::Clear, 1e-12).unwrap();
        let best: Vec<Action> = o.optimal.iter().map(|a| a[0]).collect();
        let f = fidelity(&[trace(vec![best.clone(); 4]), trace(vec![best; 4])], &o).unwrap();
        assert_eq!(f.mean, vec![1.0; 4]);
        assert_eq!(f.std, vec![0.0; 4]);
    }

    #[test]
    fn half_of_two_states() {
        let m = parse_maze("R.").unwrap();
        let o = value_iteration(&m, &TransitionKernel::Clear, 1e-12).unwrap();
        // optimal: stand still on R, left on the neutral cell
        let f = fidelity(&[trace(vec![vec![Action::StandStill, Action::StandStill]])], &o).unwrap();
        assert_eq!(f.mean, vec![0.5]);
        let bad = trace(vec![vec![Action::StandStill]]);
        assert!(matches!(fidelity(&[bad], &o), Err(Error::Dimension { .. })));
    }

    #[test]
    fn sample_std_across_runs() {
        let f = aggregate(vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 1.0]]).unwrap();
        assert_eq!(f.mean, vec![0.5, 1.0]);
        assert!((f.std[0] - 0.5).abs() < 1e-15);
        assert_eq!(f.std[1], 0.0);
        assert!(aggregate(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(aggregate(vec![]).is_err());
    }

    #[test]
    fn averages_cover_window_plus_one() {
        let constant = aggregate(vec![vec![0.3; 11]]).unwrap();
        for l in 0..=10 {
            assert!((average_fidelity(&constant, l).unwrap() - 0.3).abs() < 1e-15);
        }
        assert!(average_fidelity(&constant, 11).is_err());
        let mut spike = vec![0.0; 6];
        spike[5] = 1.0;
        assert_eq!(average_of(&spike, 0).unwrap(), 1.0);
        assert_eq!(average_of(&spike, 1).unwrap(), 0.5);
        // ramp i/500 over the last 11 points: mean of 490..=500 over 500
        let ramp: Vec<f64> = (0..=500).map(|i| i as f64 / 500.0).collect();
        assert!((average_of(&ramp, 10).unwrap() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let m = parse_maze("R....\n..W..\n..P..").unwrap();
        let o = value_iteration(&m, &TransitionKernel::Clear, 1e-12).unwrap();
        let exact = random_policy_fidelity(&m, &o);
        let (mc, se) = monte_carlo_baseline(&m, &o, 20_000, &mut SamplerRng::seed_from_u64(1)).unwrap();
        assert!((mc - exact).abs() < 3.0 * se, "{mc} ± {se} vs {exact}");
    }
}
