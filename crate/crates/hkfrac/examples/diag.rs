use std::time::Instant;
use hkfrac::continuation::{continue_solution, ContinuationOptions, Target};
use hkfrac::space::{CauchyProblem, FhkParams, Mesh, SGrid};
use hkfrac::volterra::{estimate_l, local_radius, picard_solve, volterra_residual, SolveOptions};

fn main() {
    let params = FhkParams::new(0.5, 0.25, 2.0).unwrap();
    let lambda = 0.5;
    let problem = CauchyProblem::scalar(
        params, 1.0,
        |t: f64, x: f64| (-t * t * x * t.sin()).exp() / (t.sqrt() * (1.0 - t)),
        lambda, 0.9,
    ).unwrap();
    let sample_grid = SGrid::uniform(2.0, 0.9, 64).unwrap();
    let l = estimate_l(&problem, 1.0, &sample_grid).unwrap();
    let h = local_radius(1.0, l, lambda, &params, 0.9).unwrap();
    println!("L={l:.3} h={h:.5}");
    let t0 = Instant::now();
    let opts = SolveOptions { n: 192, mesh: Mesh::Graded { r: 2.0 }, tol: 1e-10, ..Default::default() };
    let local = picard_solve(&problem, &opts, h).unwrap();
    println!("local: {:?} (iters {})", t0.elapsed(), local.iterations);
    let t1 = Instant::now();
    let copts = ContinuationOptions {
        target: Target::Time(0.9),
        step_nodes: 48,
        solve: SolveOptions { tol: 1e-10, ..Default::default() },
        ..Default::default()
    };
    let report = continue_solution(&problem, &local, &copts).unwrap();
    println!("continuation: {:?}, steps {}, nodes {}", t1.elapsed(), report.steps.len(), report.traj.grid().len());
    for (i, s) in report.steps.iter().enumerate().take(6) {
        println!("  step {i}: [{:.4},{:.4}] theta={:.2e} k={:.2} iters={}", s.t_from, s.t_to, s.theta, s.k_eff, s.iterations);
    }
    let t2 = Instant::now();
    let res = volterra_residual(&problem, &report.traj).unwrap();
    println!("residual {res:.2e} in {:?}", t2.elapsed());
}
