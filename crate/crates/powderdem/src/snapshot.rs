//! Particle snapshot serialization.
//!
//! Comma-separated text with the fixed header
//! `id,x,y,z,vx,vy,vz,wx,wy,wz,r`, one particle per row ordered by id, all
//! values printed with 17 significant digits so a write-read round trip is
//! bit-exact.

use crate::core::{sphere_mass, Particle};
use crate::math::Vec3;
use crate::{Error, Result};

use std::fmt::Write as _;
use std::path::Path;

pub const SNAPSHOT_HEADER: &str = "id,x,y,z,vx,vy,vz,wx,wy,wz,r";

pub fn snapshot_to_string(particles: &[Particle]) -> String {
    let mut rows: Vec<&Particle> = particles.iter().collect();
    rows.sort_by_key(|p| p.id);
    let mut out = String::with_capacity(64 + rows.len() * 240);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for p in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.id,
            p.position.x,
            p.position.y,
            p.position.z,
            p.velocity.x,
            p.velocity.y,
            p.velocity.z,
            p.angular_velocity.x,
            p.angular_velocity.y,
            p.angular_velocity.z,
            p.radius,
        );
    }
    out
}

pub fn write_snapshot(particles: &[Particle], path: &Path) -> Result<()> {
    std::fs::write(path, snapshot_to_string(particles))?;
    Ok(())
}

/// Parse a snapshot; masses are reconstructed from the radii and `density`.
pub fn parse_snapshot(text: &str, density: f64) -> Result<Vec<Particle>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SNAPSHOT_HEADER => {}
        _ => {
            return Err(Error::Config { line: Some(1), message: format!("expected snapshot header '{SNAPSHOT_HEADER}'") })
        }
    }
    let mut particles = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Config {
                line: Some(lineno + 1),
                message: format!("expected 11 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Config {
                line: Some(lineno + 1),
                message: format!("{what}: {e}"),
            })
        };
        let id: u32 = fields[0].trim().parse().map_err(|e| Error::Config {
            line: Some(lineno + 1),
            message: format!("id: {e}"),
        })?;
        let radius = parse(fields[10], "radius")?;
        let mut p = Particle::new(id, Vec3::new(parse(fields[1], "x")?, parse(fields[2], "y")?, parse(fields[3], "z")?), radius, density);
        p.velocity = Vec3::new(parse(fields[4], "vx")?, parse(fields[5], "vy")?, parse(fields[6], "vz")?);
        p.angular_velocity = Vec3::new(parse(fields[7], "wx")?, parse(fields[8], "wy")?, parse(fields[9], "wz")?);
        debug_assert!((p.mass - sphere_mass(radius, density)).abs() <= p.mass * 1e-12);
        particles.push(p);
    }
    Ok(particles)
}

pub fn read_snapshot(path: &Path, density: f64) -> Result<Vec<Particle>> {
    parse_snapshot(&std::fs::read_to_string(path)?, density)
}
