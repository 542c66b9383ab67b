//! Times one full-scale SA and SQA invocation on a 16-spin two-layer model.
use std::time::Instant;

use boltzrl::ising::IsingModel;
use boltzrl::sampler::{sa_sample, sqa_sample, SaSchedule, SqaSchedule};

fn main() {
    let mut model = IsingModel::new(16).unwrap();
    for i in 0..8 {
        model.set_bias(i, 0.1 * i as f64 - 0.3).unwrap();
        for j in 8..16 {
            model.set_coupling(i, j, ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5).unwrap();
        }
    }
    let t = Instant::now();
    let set = sqa_sample(&model, &SqaSchedule::default(), 1).unwrap();
    let dt = t.elapsed().as_secs_f64();
    let sites = 16.0 * 25.0 * 300.0 * 150.0;
    println!("SQA full schedule: {:.3} s ({:.2} ns/site), {} reads", dt, dt / sites * 1e9, set.len());
    let sa = SaSchedule { n_sweeps: 5000, ..SaSchedule::default() };
    let t = Instant::now();
    sa_sample(&model, &sa, 1).unwrap();
    let dt = t.elapsed().as_secs_f64();
    let sites = 16.0 * 5000.0 * 150.0;
    println!("SA 5000 sweeps: {:.3} s ({:.2} ns/site)", dt, dt / sites * 1e9);
}
