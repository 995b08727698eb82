//! Command-line surface: `run`, `calibrate`, `measure-aor` and `derive`
//! subcommands, plus the structured text report.

use crate::analysis::{measure_snapshot_aor, AorResult, PileSnapshot};
use crate::calibrate::{calibrate_gamma, CalibrationResult};
use crate::config::RunConfig;
use crate::core::{effective_pair, plasticity_threshold, sphere_mass};
use crate::forces::{
    adhesion_cutoffs, adhesion_gravity_ratio, damping_constant, rolling_coefficient,
    stiffness_bound_terms, tangential_constants,
};
use crate::integrator::{critical_dt, ExecMode};
use crate::scenario::{run_funnel, FunnelOutcome, RunStatus};
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::{Error, Result};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const USAGE: &str = "\
powderdem — cohesive powder DEM with funnel tests and AOR calibration

USAGE:
    powderdem run        (--config PATH | --preset NAME) [--seed N] [--out DIR] [--sequential]
    powderdem calibrate  (--config PATH | --preset NAME) --gamma-grid G1,G2,... --target-aor DEG
                         [--seed N] [--seeds-per-point N] [--out DIR] [--sequential]
    powderdem measure-aor --snapshot PATH (--config PATH | --preset NAME) [--cube-top-um Z]
    powderdem derive     (--config PATH | --preset NAME)

PRESETS: desk, paper-a0-4
Surface energies on --gamma-grid are in mJ/m^2; --target-aor in degrees.
";

struct Args {
    flags: Vec<(String, Option<String>)>,
}

impl Args {
    fn parse(args: &[String]) -> Result<Args> {
        let mut flags = Vec::new();
        let mut it = args.iter().peekable();
        while let Some(a) = it.next() {
            if let Some(name) = a.strip_prefix("--") {
                let takes_value = !matches!(name, "sequential");
                let value = if takes_value {
                    Some(
                        it.next()
                            .ok_or_else(|| Error::Config {
                                line: None,
                                message: format!("flag --{name} needs a value"),
                            })?
                            .clone(),
                    )
                } else {
                    None
                };
                flags.push((name.to_string(), value));
            } else {
                return Err(Error::Config { line: None, message: format!("unexpected argument '{a}'") });
            }
        }
        Ok(Args { flags })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(n, _)| n == name)
    }
}

fn load_config(args: &Args) -> Result<RunConfig> {
    let mut config = match (args.get("config"), args.get("preset")) {
        (Some(path), None) => RunConfig::from_path(Path::new(path))?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (Some(_), Some(_)) => {
            return Err(Error::Config { line: None, message: "pass either --config or --preset, not both".into() })
        }
        (None, None) => {
            return Err(Error::Config { line: None, message: "one of --config or --preset is required".into() })
        }
    };
    if let Some(seed) = args.get("seed") {
        config.seed = seed
            .parse()
            .map_err(|e| Error::Config { line: None, message: format!("--seed: {e}") })?;
    }
    if let Some(dir) = args.get("out") {
        config.out_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn exec_mode(args: &Args) -> ExecMode {
    if args.has("sequential") {
        ExecMode::Sequential
    } else {
        ExecMode::default()
    }
}

/// Derived model constants for a configuration, evaluated for a reference
/// pair of two median-diameter particles, as key: value lines.
pub fn derived_report(config: &RunConfig) -> String {
    let m = &config.material;
    let d50 = config.dist.median();
    let r = d50 / 2.0;
    let mass = sphere_mass(r, m.density);
    let (m_eff, r_eff) = effective_pair(mass, mass, r, r);
    let d_n = damping_constant(m.restitution, m.stiffness, m_eff).unwrap_or(f64::NAN);
    let (k_t, d_t) = tangential_constants(m.stiffness, m.poisson, d_n);
    let d_r = rolling_coefficient(m.restitution, m.youngs, m.poisson, r_eff, m.reference_velocity)
        .unwrap_or(f64::NAN);
    let law = adhesion_cutoffs(m.surface_energy, m.hamaker, r_eff, m.adhesion_decline);
    let m_min = sphere_mass(config.dist.d_min / 2.0, m.density);
    let dt_crit = critical_dt(m_min, m.stiffness);
    let ratio = adhesion_gravity_ratio(m.surface_energy, r_eff, mass, m.gravity);
    let (dyn_term, adh_term) =
        stiffness_bound_terms(m.density, m.reference_velocity, config.dist.d_max / 2.0, m.surface_energy, m.penetration_bound);
    let r_cy = plasticity_threshold(m.surface_energy, m.youngs);

    let mut s = String::new();
    let _ = writeln!(s, "median_diameter_m: {d50:.6e}");
    let _ = writeln!(s, "median_pair_m_eff_kg: {m_eff:.6e}");
    let _ = writeln!(s, "median_pair_r_eff_m: {r_eff:.6e}");
    let _ = writeln!(s, "k_n_N_m: {:.6e}", m.stiffness);
    let _ = writeln!(s, "d_n_kg_s: {d_n:.6e}");
    let _ = writeln!(s, "k_t_N_m: {k_t:.6e}");
    let _ = writeln!(s, "d_t_kg_s: {d_t:.6e}");
    let _ = writeln!(s, "d_r: {d_r:.6e}");
    let _ = writeln!(s, "pull_off_force_N: {:.6e}", law.pull_off);
    let _ = writeln!(s, "g0_m: {:.6e}", law.g0);
    let _ = writeln!(s, "g_star_m: {:.6e}", law.g_star);
    let _ = writeln!(s, "dt_crit_s: {dt_crit:.6e}");
    let _ = writeln!(s, "adhesion_gravity_ratio: {ratio:.4}");
    let _ = writeln!(s, "stiffness_bound_adhesive_N_m: {adh_term:.6e}");
    let _ = writeln!(s, "stiffness_bound_dynamic_at_vref_N_m: {dyn_term:.6e}");
    let _ = writeln!(s, "plasticity_critical_radius_m: {r_cy:.6e}");
    if m.stiffness < adh_term {
        let _ = writeln!(s, "warning: k_n below the quasi-static adhesion stiffness bound");
    }
    if m.stiffness < dyn_term {
        let _ = writeln!(
            s,
            "warning: k_n below the dynamic stiffness bound at the reference velocity; penetration may exceed its target for fast impacts"
        );
    }
    if config.dist.d_min / 2.0 < r_cy {
        let _ = writeln!(s, "warning: smallest particles fall below the plasticity radius estimate");
    }
    s
}

fn status_str(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Completed => "completed",
        RunStatus::Clogged => "clogged",
        RunStatus::TimedOut => "timed-out",
        RunStatus::Aborted => "aborted",
    }
}

fn aor_lines(prefix: &str, aor: &AorResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{prefix}_deg: {:.3}", aor.angle_deg);
    let _ = writeln!(
        s,
        "{prefix}_left_slope: {:.5}  {prefix}_left_bins: {}  {prefix}_left_residual_m: {:.3e}",
        aor.left.slope, aor.left.bins_used, aor.left.residual
    );
    let _ = writeln!(
        s,
        "{prefix}_right_slope: {:.5}  {prefix}_right_bins: {}  {prefix}_right_residual_m: {:.3e}",
        aor.right.slope, aor.right.bins_used, aor.right.residual
    );
    s
}

fn run_report(
    config: &RunConfig,
    outcome: &FunnelOutcome,
    aor: Option<(f64, AorResult, AorResult)>,
    dt: f64,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", status_str(outcome.status));
    if let Some(err) = &outcome.error {
        let _ = writeln!(s, "abort_error: {err}");
    }
    let _ = writeln!(s, "final_time_s: {:.6}", outcome.final_time);
    let _ = writeln!(s, "dt_s: {dt:.6e}");
    let _ = writeln!(s, "seed: {}", config.seed);
    let _ = writeln!(s, "particles_inserted: {}", outcome.inserted);
    let _ = writeln!(s, "particles_escaped: {}", outcome.escaped);
    let _ = writeln!(s, "particles_final: {}", outcome.state.particles.len());
    let _ = writeln!(s, "pile_covered_cube: {}", outcome.covered);
    let _ = writeln!(s, "cube_top_final_m: {:.6e}", outcome.snapshot.cube_top);
    match &aor {
        Some((mean, ax, ay)) => {
            let _ = writeln!(s, "aor_deg: {mean:.3}");
            s.push_str(&aor_lines("aor_x", ax));
            s.push_str(&aor_lines("aor_y", ay));
            let _ = writeln!(s, "aor_top_exclusion: {}", config.exclusions.top_fraction);
            let _ = writeln!(s, "aor_bottom_exclusion: {}", config.exclusions.bottom_fraction);
            let _ = writeln!(s, "aor_bin_width_m: {:.3e}", config.aor_bin_width);
        }
        None => {
            let _ = writeln!(s, "aor_deg: unmeasurable");
        }
    }
    let d = &outcome.state.diagnostics;
    let _ = writeln!(s, "max_penetration_m: {:.6e}", d.max_penetration);
    let pen_bound = config.material.penetration_bound * config.dist.d_max / 2.0;
    let _ = writeln!(s, "max_penetration_bound_m: {pen_bound:.6e}");
    if d.max_penetration > pen_bound {
        let _ = writeln!(s, "warning: max penetration exceeded c_g * r_max");
    }
    let _ = writeln!(s, "max_speed_m_s: {:.4}", d.max_speed);
    let (dyn_actual, _) = stiffness_bound_terms(
        config.material.density,
        d.max_speed,
        config.dist.d_max / 2.0,
        config.material.surface_energy,
        config.material.penetration_bound,
    );
    let _ = writeln!(s, "stiffness_bound_dynamic_at_max_speed_N_m: {dyn_actual:.6e}");
    if config.material.stiffness < dyn_actual {
        let _ = writeln!(s, "warning: observed max speed pushes the dynamic stiffness bound above k_n");
    }
    s.push_str(&derived_report(config));
    s
}

fn cmd_run(args: &Args) -> Result<()> {
    let config = load_config(args)?;
    let exec = exec_mode(args);
    std::fs::create_dir_all(&config.out_dir)?;
    let dt = config.dt.unwrap_or_else(|| {
        critical_dt(sphere_mass(config.dist.d_min / 2.0, config.material.density), config.material.stiffness)
    });
    let out_dir = config.out_dir.clone();
    let mut snap_index = 0usize;
    // Interval CSVs need a configured interval; the final snapshot only
    // needs the csv format.
    let write_series = config.write_csv && config.snapshot_interval.is_some();
    // Emit progress every callback; write CSV series only when configured.
    let callback_interval = config.snapshot_interval.or(Some(0.02));
    let outcome = run_funnel(
        &config.scenario,
        &config.dist,
        config.material,
        config.seed,
        exec,
        config.dt,
        |t, state| {
            eprintln!(
                "t = {t:.3} s  particles = {}  mean KE = {:.2e} J",
                state.particles.len(),
                state.mean_kinetic_energy()
            );
            if write_series {
                let path = out_dir.join(format!("snapshot_{snap_index:04}_t{t:.4}.csv"));
                let _ = write_snapshot(&state.particles, &path);
                snap_index += 1;
            }
        },
        callback_interval,
    )?;

    if config.write_csv {
        let name = if outcome.status == RunStatus::Aborted { "diagnostic.csv" } else { "final.csv" };
        write_snapshot(&outcome.state.particles, &out_dir.join(name))?;
    }

    let aor = measure_snapshot_aor(&outcome.snapshot, config.aor_bin_width, &config.exclusions).ok();
    let report = run_report(&config, &outcome, aor, dt);
    if config.write_report {
        std::fs::write(out_dir.join("report.txt"), &report)?;
    }
    print!("{report}");
    if outcome.status == RunStatus::Aborted {
        return Err(outcome.error.unwrap_or(Error::Io("aborted".into())));
    }
    Ok(())
}

fn calibration_report(result: &CalibrationResult) -> String {
    let mut s = String::new();
    for (gamma, aor) in &result.grid {
        let _ = writeln!(s, "grid_point: gamma_mJ_m2 = {gamma}  aor_deg = {aor:.3}");
    }
    let _ = writeln!(s, "target_aor_deg: {}", result.target_aor);
    let _ = writeln!(s, "fitted_gamma_mJ_m2: {}", result.fitted_gamma);
    let _ = writeln!(s, "extrapolated: {}", result.extrapolated);
    let _ = writeln!(s, "bracket: {} {}", result.bracket.0, result.bracket.1);
    s
}

fn cmd_calibrate(args: &Args) -> Result<()> {
    let config = load_config(args)?;
    let exec = exec_mode(args);
    let grid_str = args
        .get("gamma-grid")
        .ok_or(Error::Config { line: None, message: "--gamma-grid is required".into() })?;
    let gamma_grid: Vec<f64> = grid_str
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config { line: None, message: format!("--gamma-grid: {e}") })?;
    let target: f64 = args
        .get("target-aor")
        .ok_or(Error::Config { line: None, message: "--target-aor is required".into() })?
        .parse()
        .map_err(|e| Error::Config { line: None, message: format!("--target-aor: {e}") })?;
    let seeds_per_point: usize = match args.get("seeds-per-point") {
        None => 1,
        Some(s) => s
            .parse()
            .map_err(|e| Error::Config { line: None, message: format!("--seeds-per-point: {e}") })?,
    };
    let result = calibrate_gamma(
        &config,
        &gamma_grid,
        target,
        config.seed,
        seeds_per_point,
        exec,
        |gamma, aor, status| {
            println!("gamma_mJ_m2 = {gamma}  aor_deg = {aor:.3}  status = {}", status_str(status));
        },
    )?;
    let report = calibration_report(&result);
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(config.out_dir.join("calibration.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn cmd_measure_aor(args: &Args) -> Result<()> {
    let config = load_config(args)?;
    let path = args
        .get("snapshot")
        .ok_or(Error::Config { line: None, message: "--snapshot is required".into() })?;
    let particles = read_snapshot(Path::new(path), config.material.density)?;
    let side = config.scenario.cube_side;
    let cube_top = match args.get("cube-top-um") {
        Some(s) => s.parse::<f64>().map_err(|e| Error::Config {
            line: None,
            message: format!("--cube-top-um: {e}"),
        })? * 1e-6,
        None => {
            // Estimate from the bottom layer inside the footprint.
            particles
                .iter()
                .filter(|p| p.position.x.abs() <= 0.45 * side && p.position.y.abs() <= 0.45 * side)
                .map(|p| p.position.z - p.radius)
                .fold(f64::INFINITY, f64::min)
        }
    };
    if !cube_top.is_finite() {
        return Err(Error::Analysis("no particles inside the cube footprint".into()));
    }
    let snap = PileSnapshot {
        particles: particles.iter().map(|p| (p.position, p.radius)).collect(),
        cube_center: (0.0, 0.0),
        cube_top,
        cube_side: side,
    };
    let (mean, ax, ay) = measure_snapshot_aor(&snap, config.aor_bin_width, &config.exclusions)?;
    println!("cube_top_m: {cube_top:.6e}");
    println!("aor_deg: {mean:.3}");
    print!("{}", aor_lines("aor_x", &ax));
    print!("{}", aor_lines("aor_y", &ay));
    Ok(())
}

fn cmd_derive(args: &Args) -> Result<()> {
    let config = load_config(args)?;
    print!("{}", derived_report(&config));
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn main(argv: &[String]) -> i32 {
    let Some((cmd, rest)) = argv.split_first() else {
        eprint!("{USAGE}");
        return 2;
    };
    let args = match Args::parse(rest) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let result = match cmd.as_str() {
        "run" => cmd_run(&args),
        "calibrate" => cmd_calibrate(&args),
        "measure-aor" => cmd_measure_aor(&args),
        "derive" => cmd_derive(&args),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            return 0;
        }
        other => {
            eprintln!("error: unknown subcommand '{other}'");
            eprint!("{USAGE}");
            return 2;
        }
    };
    match result {
        Ok(()) => 0,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
