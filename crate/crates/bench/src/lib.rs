//! Fixtures shared by the benchmarks and the scaling test.

use std::f64::consts::PI;
use std::time::Instant;

use risbeam_core::optimizer::{InnerSolver, LiftedVariable};
use risbeam_core::sim::{BsSpec, LinkBudget, MultipathSpec, RisSpec, Scenario, TargetSpec};
use risbeam_core::{upa_geometry, Angles, Result, ScaParams, TargetSet, Wavelength};

pub fn wavelength() -> Wavelength {
    Wavelength::from_ghz(28.0).expect("valid frequency")
}

/// Far-field target set on a linear array of `n` elements with `nq` receive
/// directions spread over ±20°.
pub fn far_targets(n: usize, nq: usize) -> Result<TargetSet> {
    let wl = wavelength();
    let g = upa_geometry(n, 1, wl.meters() / 2.0, wl.meters() / 2.0)?;
    let t = Angles::new(0.0, (-30f64).to_radians());
    let entries = (0..nq)
        .map(|k| {
            let el = if nq == 1 { 0.0 } else { -20.0 + 40.0 * k as f64 / (nq - 1) as f64 };
            risbeam_core::grcs::response_far(&g, t, Angles::new(0.0, el.to_radians()), PI, wl)
        })
        .collect();
    TargetSet::new(entries, "bench")
}

/// Parameters that pin the inner solver to exactly `iters` ADMM steps.
pub fn fixed_inner(iters: usize) -> ScaParams {
    ScaParams { inner_tol: 1e-15, inner_max_iter: iters, ..Default::default() }
}

/// Small 3D link scenario for Monte-Carlo timing.
pub fn snr_scenario(n: usize, trials: usize) -> Scenario {
    Scenario {
        freq_ghz: 28.0,
        ris: RisSpec { ny: n, nz: n, spacing_wavelengths: 0.5 },
        bs: BsSpec { position_m: [30.0, 80.0, 5.0], antennas: [2, 2], uncertainty_m: [0.0; 3], uncertainty_points: 1 },
        target: TargetSpec { center_m: [30.0, -5.0, -5.0], size_m: [2.0, 2.0], grid: [1, 1] },
        scan: None,
        optimizer: Default::default(),
        multipath: MultipathSpec::default(),
        link: LinkBudget::default(),
        seed: 1,
        trials,
        experiments: Default::default(),
    }
}

/// Best-of-`reps` wall-clock seconds per ADMM iteration of one inner solve
/// at array size `n`.
pub fn seconds_per_inner_iteration(n: usize, nq: usize, iters: usize, reps: usize) -> Result<f64> {
    let q = far_targets(n, nq)?;
    let params = fixed_inner(iters);
    let w0 = LiftedVariable::from_profile(&q.entries()[0].matched_profile(), &q)?;
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let mut solver = InnerSolver::new(&q, &params)?;
        let start = Instant::now();
        let sol = solver.solve(&w0, 1e-3)?;
        let dt = start.elapsed().as_secs_f64() / sol.iterations.max(1) as f64;
        best = best.min(dt);
    }
    Ok(best)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
