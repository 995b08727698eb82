//! Surface-energy calibration: run the funnel scenario over a grid of
//! surface energies, measure the angle of repose per point, and invert the
//! AOR(gamma) curve at a target angle by piecewise-linear interpolation.

use crate::analysis::measure_snapshot_aor;
use crate::config::RunConfig;
use crate::integrator::ExecMode;
use crate::scenario::{run_funnel, RunStatus};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CalibrationResult {
    /// (surface energy mJ/m^2, AOR degrees), sorted by surface energy.
    pub grid: Vec<(f64, f64)>,
    pub target_aor: f64,
    /// Fitted surface energy, mJ/m^2.
    pub fitted_gamma: f64,
    /// The target lay outside the simulated AOR range; the fit is a linear
    /// extrapolation from the nearest bracket.
    pub extrapolated: bool,
    /// Indices of the grid bracket used (equal when the target hits a grid
    /// point exactly).
    pub bracket: (usize, usize),
}

/// Invert a measured AOR(gamma) grid at `target_aor`. The grid must have at
/// least two points and strictly increasing AOR over gamma.
pub fn interpolate_gamma(grid: &[(f64, f64)], target_aor: f64) -> Result<CalibrationResult> {
    if grid.len() < 2 {
        return Err(Error::Calibration(format!("need at least 2 grid points, got {}", grid.len())));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in grid.windows(2) {
        if !(w[1].1 > w[0].1) {
            return Err(Error::Calibration(format!(
                "AOR(gamma) not strictly increasing between gamma = {} (AOR {}) and gamma = {} (AOR {})",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    // Exact grid hit.
    if let Some(k) = grid.iter().position(|&(_, a)| a == target_aor) {
        return Ok(CalibrationResult {
            fitted_gamma: grid[k].0,
            grid,
            target_aor,
            extrapolated: false,
            bracket: (k, k),
        });
    }
    let n = grid.len();
    let (lo, hi, extrapolated) = if target_aor < grid[0].1 {
        (0, 1, true)
    } else if target_aor > grid[n - 1].1 {
        (n - 2, n - 1, true)
    } else {
        let hi = grid.iter().position(|&(_, a)| a > target_aor).unwrap();
        (hi - 1, hi, false)
    };
    let (g0, a0) = grid[lo];
    let (g1, a1) = grid[hi];
    let t = (target_aor - a0) / (a1 - a0);
    Ok(CalibrationResult {
        fitted_gamma: g0 + t * (g1 - g0),
        grid,
        target_aor,
        extrapolated,
        bracket: (lo, hi),
    })
}

/// Full simulation-backed calibration: one funnel run per grid point and
/// seed (surface energies in mJ/m^2), AOR measured on both projection axes
/// and averaged over `seeds_per_point` independent seeds. `on_point`
/// observes each finished grid point with its seed-averaged AOR.
pub fn calibrate_gamma(
    base: &RunConfig,
    gamma_grid_mj_m2: &[f64],
    target_aor: f64,
    seed: u64,
    seeds_per_point: usize,
    exec: ExecMode,
    mut on_point: impl FnMut(f64, f64, RunStatus),
) -> Result<CalibrationResult> {
    if gamma_grid_mj_m2.len() < 2 {
        return Err(Error::Calibration(format!(
            "need at least 2 gamma grid points, got {}",
            gamma_grid_mj_m2.len()
        )));
    }
    let seeds = seeds_per_point.max(1);
    let mut grid = Vec::with_capacity(gamma_grid_mj_m2.len());
    for &gamma in gamma_grid_mj_m2 {
        let mut material = base.material;
        material.surface_energy = gamma * 1e-3;
        material.validate()?;
        let mut aor_sum = 0.0;
        let mut worst = RunStatus::Completed;
        for k in 0..seeds {
            let outcome = run_funnel(
                &base.scenario,
                &base.dist,
                material,
                seed + k as u64,
                exec,
                base.dt,
                |_, _| {},
                None,
            )?;
            if let Some(err) = outcome.error {
                return Err(err);
            }
            if outcome.status != RunStatus::Completed {
                worst = outcome.status;
            }
            let (aor, _, _) =
                measure_snapshot_aor(&outcome.snapshot, base.aor_bin_width, &base.exclusions)?;
            aor_sum += aor;
        }
        let aor = aor_sum / seeds as f64;
        on_point(gamma, aor, worst);
        grid.push((gamma, aor));
    }
    interpolate_gamma(&grid, target_aor)
}
