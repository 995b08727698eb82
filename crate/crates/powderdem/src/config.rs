//! Run configuration: a flat sectioned key-value text format with explicit
//! units in the key names (lengths in micrometers where suffixed `_um`,
//! surface energy in mJ/m^2). Parse errors carry the 1-based line number.

use crate::analysis::FlankExclusions;
use crate::core::{fit_lognormal, MaterialParams, SizeDistribution};
use crate::forces::min_stiffness;
use crate::integrator::SettleCriterion;
use crate::scenario::FunnelConfig;
use crate::walls::Vibration;
use crate::{Error, Result};

use std::collections::HashMap;
use std::path::PathBuf;

const UM: f64 = 1e-6;

pub const PRESET_DESK: &str = include_str!("../presets/desk.cfg");
pub const PRESET_PAPER_A0_4: &str = include_str!("../presets/paper-a0-4.cfg");

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub material: MaterialParams,
    /// Stiffness was requested as `auto` (quasi-static adhesion bound).
    pub stiffness_auto: bool,
    pub dist: SizeDistribution,
    pub scenario: FunnelConfig,
    /// None means the critical step size is used.
    pub dt: Option<f64>,
    pub snapshot_interval: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub write_csv: bool,
    pub write_report: bool,
    /// Profile bin width for pile analysis; defaults to half the median
    /// diameter.
    pub aor_bin_width: f64,
    pub exclusions: FlankExclusions,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<RunConfig> {
        match name {
            "desk" => RunConfig::from_text(PRESET_DESK),
            "paper-a0-4" => RunConfig::from_text(PRESET_PAPER_A0_4),
            other => Err(Error::Config {
                line: None,
                message: format!("unknown preset '{other}' (available: desk, paper-a0-4)"),
            }),
        }
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let raw = RawConfig::parse(text)?;
        let mut used: Vec<(String, String)> = Vec::new();

        fn req(raw: &RawConfig, used: &mut Vec<(String, String)>, key: &str) -> Result<f64> {
            used.push(("material".into(), key.into()));
            raw.require_f64("material", key)
        }
        let material = MaterialParams {
            density: req(&raw, &mut used, "density_kg_m3")?,
            surface_energy: req(&raw, &mut used, "surface_energy_mJ_m2")? * 1e-3,
            hamaker: req(&raw, &mut used, "hamaker_J")?,
            friction: req(&raw, &mut used, "friction")?,
            restitution: req(&raw, &mut used, "restitution")?,
            stiffness: 0.0, // set below
            poisson: req(&raw, &mut used, "poisson")?,
            youngs: req(&raw, &mut used, "youngs_Pa")?,
            penetration_bound: req(&raw, &mut used, "penetration_bound")?,
            adhesion_decline: req(&raw, &mut used, "adhesion_decline")?,
            reference_velocity: req(&raw, &mut used, "reference_velocity_m_s")?,
            gravity: req(&raw, &mut used, "gravity_m_s2")?,
        };

        let dist = if raw.has("psd", "d10_um") {
            for k in ["d10_um", "d50_um", "d90_um"] {
                used.push(("psd".into(), k.into()));
            }
            fit_lognormal(
                raw.require_f64("psd", "d10_um")? * UM,
                raw.require_f64("psd", "d50_um")? * UM,
                raw.require_f64("psd", "d90_um")? * UM,
            )?
        } else {
            for k in ["log_median_um", "log_sigma", "d_min_um", "d_max_um"] {
                used.push(("psd".into(), k.into()));
            }
            SizeDistribution::new(
                (raw.require_f64("psd", "log_median_um")? * UM).ln(),
                raw.require_f64("psd", "log_sigma")?,
                raw.require_f64("psd", "d_min_um")? * UM,
                raw.require_f64("psd", "d_max_um")? * UM,
            )?
        };

        used.push(("material".into(), "stiffness_N_m".into()));
        let (stiffness, stiffness_auto) = match raw.require_str("material", "stiffness_N_m")? {
            ("auto", _) => {
                if material.surface_energy <= 0.0 {
                    return Err(Error::Config {
                        line: raw.line_of("material", "stiffness_N_m"),
                        message: "stiffness_N_m = auto requires surface_energy_mJ_m2 > 0; set an explicit stiffness".into(),
                    });
                }
                (
                    min_stiffness(
                        material.density,
                        0.0,
                        dist.d_max / 2.0,
                        material.surface_energy,
                        material.penetration_bound,
                    ),
                    true,
                )
            }
            (s, line) => (
                s.parse::<f64>().map_err(|e| Error::Config {
                    line: Some(line),
                    message: format!("stiffness_N_m: {e}"),
                })?,
                false,
            ),
        };
        let mut material = material;
        material.stiffness = stiffness;
        material.validate()?;

        let defaults = FunnelConfig::desk();
        fn opt_f(
            raw: &RawConfig,
            used: &mut Vec<(String, String)>,
            section: &str,
            key: &str,
            default: f64,
        ) -> Result<f64> {
            used.push((section.into(), key.into()));
            raw.optional_f64(section, key, default)
        }
        let vibration = {
            used.push(("scenario".into(), "vibration_enabled".into()));
            let enabled = raw.optional_bool("scenario", "vibration_enabled", defaults.vibration.is_some())?;
            let amplitude = opt_f(
                &raw,
                &mut used,
                "scenario",
                "vibration_amplitude_um",
                defaults.vibration.map_or(8.0, |v| v.amplitude / UM),
            )? * UM;
            let frequency = opt_f(
                &raw,
                &mut used,
                "scenario",
                "vibration_frequency_Hz",
                defaults.vibration.map_or(400.0, |v| v.frequency),
            )?;
            enabled.then_some(Vibration { amplitude, frequency })
        };
        let scenario = FunnelConfig {
            opening_diameter: opt_f(&raw, &mut used, "scenario", "opening_diameter_um", defaults.opening_diameter / UM)?
                * UM,
            cone_apex_angle_deg: opt_f(&raw, &mut used, "scenario", "cone_apex_angle_deg", defaults.cone_apex_angle_deg)?,
            cone_top_radius: opt_f(&raw, &mut used, "scenario", "cone_top_radius_um", defaults.cone_top_radius / UM)?
                * UM,
            cube_side: opt_f(&raw, &mut used, "scenario", "cube_side_um", defaults.cube_side / UM)? * UM,
            drop_gap: opt_f(&raw, &mut used, "scenario", "drop_gap_um", defaults.drop_gap / UM)? * UM,
            feed_rate: opt_f(&raw, &mut used, "scenario", "feed_rate_per_s", defaults.feed_rate)?,
            feed_budget: opt_f(&raw, &mut used, "scenario", "feed_budget", defaults.feed_budget as f64)? as usize,
            initial_charge: opt_f(&raw, &mut used, "scenario", "initial_charge", defaults.initial_charge as f64)?
                as usize,
            vibration,
            cube_descent_speed: opt_f(
                &raw,
                &mut used,
                "scenario",
                "cube_descent_speed_mm_s",
                defaults.cube_descent_speed * 1e3,
            )? * 1e-3,
            cube_descent_trigger: opt_f(&raw, &mut used, "scenario", "cube_descent_trigger", defaults.cube_descent_trigger)?,
            max_drop_clearance: opt_f(
                &raw,
                &mut used,
                "scenario",
                "drop_clearance_cap_um",
                defaults.max_drop_clearance / UM,
            )? * UM,
            settle: SettleCriterion {
                mean_ke: opt_f(&raw, &mut used, "scenario", "settle_mean_ke_J", defaults.settle.mean_ke)?,
                hold_time: opt_f(&raw, &mut used, "scenario", "settle_hold_s", defaults.settle.hold_time)?,
            },
            t_max: opt_f(&raw, &mut used, "scenario", "t_max_s", defaults.t_max)?,
        };
        scenario.validate(dist.d_max)?;

        used.push(("integrator".into(), "dt_s".into()));
        let dt = match raw.optional_str("integrator", "dt_s") {
            None => None,
            Some(("auto", _)) => None,
            Some((s, line)) => Some(s.parse::<f64>().map_err(|e| Error::Config {
                line: Some(line),
                message: format!("dt_s: {e}"),
            })?),
        };
        let snapshot_interval = {
            used.push(("integrator".into(), "snapshot_interval_s".into()));
            let v = raw.optional_f64("integrator", "snapshot_interval_s", 0.0)?;
            (v > 0.0).then_some(v)
        };
        used.push(("integrator".into(), "seed".into()));
        let seed = raw.optional_f64("integrator", "seed", 42.0)? as u64;

        used.push(("output".into(), "dir".into()));
        let out_dir = PathBuf::from(
            raw.optional_str("output", "dir").map(|(s, _)| s.to_string()).unwrap_or_else(|| "out".into()),
        );
        used.push(("output".into(), "formats".into()));
        let formats = raw
            .optional_str("output", "formats")
            .map(|(s, _)| s.to_string())
            .unwrap_or_else(|| "csv,report".into());
        let write_csv = formats.split(',').any(|f| f.trim() == "csv");
        let write_report = formats.split(',').any(|f| f.trim() == "report");

        let aor_bin_width = opt_f(&raw, &mut used, "analysis", "aor_bin_um", dist.median() / 2.0 / UM)? * UM;
        let exclusions = FlankExclusions {
            top_fraction: opt_f(&raw, &mut used, "analysis", "aor_top_exclusion", 0.2)?,
            bottom_fraction: opt_f(&raw, &mut used, "analysis", "aor_bottom_exclusion", 0.1)?,
            min_bins: 5,
        };

        raw.check_unknown(&used)?;

        Ok(RunConfig {
            material,
            stiffness_auto,
            dist,
            scenario,
            dt,
            snapshot_interval,
            seed,
            out_dir,
            write_csv,
            write_report,
            aor_bin_width,
            exclusions,
        })
    }
}

struct RawConfig {
    /// (section, key) -> (value, line).
    entries: HashMap<(String, String), (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = HashMap::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Config {
                    line: Some(lineno),
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: Some(lineno),
                message: "expected 'key = value'".into(),
            })?;
            if section.is_empty() {
                return Err(Error::Config {
                    line: Some(lineno),
                    message: "key outside of any [section]".into(),
                });
            }
            let key = key.trim().to_string();
            if entries
                .insert((section.clone(), key.clone()), (value.trim().to_string(), lineno))
                .is_some()
            {
                return Err(Error::Config {
                    line: Some(lineno),
                    message: format!("duplicate key '{key}' in [{section}]"),
                });
            }
        }
        Ok(RawConfig { entries })
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.entries.contains_key(&(section.to_string(), key.to_string()))
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|e| e.1)
    }

    fn require_str(&self, section: &str, key: &str) -> Result<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| Error::Config {
                line: None,
                message: format!("missing required key '{key}' in [{section}]"),
            })
    }

    fn require_f64(&self, section: &str, key: &str) -> Result<f64> {
        let (v, line) = self.require_str(section, key)?;
        v.parse::<f64>().map_err(|e| Error::Config { line: Some(line), message: format!("{key}: {e}") })
    }

    fn optional_str(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn optional_f64(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.optional_str(section, key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<f64>()
                .map_err(|e| Error::Config { line: Some(line), message: format!("{key}: {e}") }),
        }
    }

    fn optional_bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.optional_str(section, key) {
            None => Ok(default),
            Some(("true", _)) => Ok(true),
            Some(("false", _)) => Ok(false),
            Some((other, line)) => Err(Error::Config {
                line: Some(line),
                message: format!("{key}: expected true/false, got '{other}'"),
            }),
        }
    }

    fn check_unknown(&self, used: &[(String, String)]) -> Result<()> {
        for ((section, key), (_, line)) in &self.entries {
            let known = used.iter().any(|(s, k)| s == section && k == key)
                || (section == "psd") // both psd forms are admissible
                    && ["d10_um", "d50_um", "d90_um", "log_median_um", "log_sigma", "d_min_um", "d_max_um"]
                        .contains(&key.as_str());
            if !known {
                return Err(Error::Config {
                    line: Some(*line),
                    message: format!("unknown key '{key}' in [{section}]"),
                });
            }
        }
        Ok(())
    }
}
