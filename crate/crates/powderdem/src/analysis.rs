//! Post-processing of pile snapshots: 2D height profiles, angle-of-repose
//! measurement from flank line fits, and packing diagnostics.

use crate::math::{Aabb, Vec3};
use crate::{Error, Result};

/// Frozen particle configuration over the cube target.
#[derive(Clone, Debug)]
pub struct PileSnapshot {
    /// Position and radius per particle.
    pub particles: Vec<(Vec3, f64)>,
    /// Cube top face center (x, y).
    pub cube_center: (f64, f64),
    /// Cube top face height.
    pub cube_top: f64,
    pub cube_side: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Pile height above the cube top, binned along one horizontal axis across
/// the cube footprint.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightProfile {
    /// Center coordinate of the first bin, relative to the cube center.
    pub start: f64,
    pub bin_width: f64,
    pub heights: Vec<f64>,
}

impl HeightProfile {
    pub fn bin_center(&self, i: usize) -> f64 {
        self.start + self.bin_width * i as f64
    }
}

/// Maximum particle top surface (z + r) per bin along `axis`, restricted to
/// the cube footprint and measured relative to the cube top. Bins without
/// particles are filled by linear interpolation between their non-empty
/// neighbors (nearest value at the profile ends).
pub fn project_pile(snap: &PileSnapshot, axis: Axis, bin_width: f64) -> Result<HeightProfile> {
    if snap.particles.is_empty() {
        return Err(Error::Analysis("empty snapshot".into()));
    }
    let half = snap.cube_side / 2.0;
    let nbins = ((snap.cube_side / bin_width).ceil() as usize).max(1);
    let mut heights = vec![f64::NEG_INFINITY; nbins];
    let mut any = false;
    for &(pos, r) in &snap.particles {
        let dx = pos.x - snap.cube_center.0;
        let dy = pos.y - snap.cube_center.1;
        if dx.abs() > half || dy.abs() > half || pos.z + r < snap.cube_top {
            continue;
        }
        let along = match axis {
            Axis::X => dx,
            Axis::Y => dy,
        };
        let bin = (((along + half) / bin_width).floor() as isize).clamp(0, nbins as isize - 1) as usize;
        let top = pos.z + r - snap.cube_top;
        if top > heights[bin] {
            heights[bin] = top;
            any = true;
        }
    }
    if !any {
        return Err(Error::Analysis("no particles over the cube footprint".into()));
    }
    fill_empty_bins(&mut heights);
    Ok(HeightProfile { start: -half + bin_width / 2.0, bin_width, heights })
}

fn fill_empty_bins(heights: &mut [f64]) {
    let n = heights.len();
    let filled: Vec<usize> = (0..n).filter(|&i| heights[i] > f64::NEG_INFINITY).collect();
    let first = filled[0];
    let last = *filled.last().unwrap();
    for i in 0..first {
        heights[i] = heights[first];
    }
    for i in (last + 1)..n {
        heights[i] = heights[last];
    }
    let mut prev = first;
    for &next in &filled[1..] {
        if next > prev + 1 {
            let h0 = heights[prev];
            let h1 = heights[next];
            let span = (next - prev) as f64;
            for (k, h) in heights[(prev + 1)..next].iter_mut().enumerate() {
                *h = h0 + (h1 - h0) * (k + 1) as f64 / span;
            }
        }
        prev = next;
    }
}

/// Which parts of the profile are excluded from the flank fits: the curved
/// impact zone near the apex and the boundary layer at the bottom, as
/// fractions of the peak height.
#[derive(Clone, Copy, Debug)]
pub struct FlankExclusions {
    pub top_fraction: f64,
    pub bottom_fraction: f64,
    /// A flank with fewer usable bins than this cannot be measured.
    pub min_bins: usize,
}

impl Default for FlankExclusions {
    fn default() -> Self {
        FlankExclusions { top_fraction: 0.2, bottom_fraction: 0.1, min_bins: 5 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlankFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the line fit, m.
    pub residual: f64,
    pub bins_used: usize,
}

#[derive(Clone, Debug)]
pub struct AorResult {
    /// Angle of repose, degrees; average of the two flank angles.
    pub angle_deg: f64,
    pub left: FlankFit,
    pub right: FlankFit,
    pub exclusions: FlankExclusions,
}

/// Angle of repose from a height profile: least-squares line through each
/// flank between the exclusion bounds, angle averaged over both flanks.
pub fn measure_aor(profile: &HeightProfile, exclusions: &FlankExclusions) -> Result<AorResult> {
    let n = profile.heights.len();
    if n < 3 {
        return Err(Error::Analysis("profile too short".into()));
    }
    // Peak region: midpoint of the run of maximal bins.
    let peak_h = profile.heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak_h > 0.0) {
        // A flat zero-height profile is a zero-degree pile.
        let flat = FlankFit { slope: 0.0, intercept: 0.0, residual: 0.0, bins_used: n };
        return Ok(AorResult { angle_deg: 0.0, left: flat, right: flat, exclusions: *exclusions });
    }
    let first_peak = profile.heights.iter().position(|&h| h == peak_h).unwrap();
    let last_peak = n - 1 - profile.heights.iter().rev().position(|&h| h == peak_h).unwrap();
    let peak = (first_peak + last_peak) / 2;

    let h_hi = (1.0 - exclusions.top_fraction) * peak_h;
    let h_lo = exclusions.bottom_fraction * peak_h;
    // A profile whose lowest bin already sits above the top exclusion is
    // flat: there are no flanks, the pile is a level layer.
    let min_h = profile.heights.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_h >= h_hi {
        let flat = FlankFit { slope: 0.0, intercept: min_h, residual: 0.0, bins_used: n };
        return Ok(AorResult { angle_deg: 0.0, left: flat, right: flat, exclusions: *exclusions });
    }
    let in_band = |h: f64| h >= h_lo && h <= h_hi;

    let left: Vec<(f64, f64)> = (0..=peak)
        .filter(|&i| in_band(profile.heights[i]))
        .map(|i| (profile.bin_center(i), profile.heights[i]))
        .collect();
    let right: Vec<(f64, f64)> = (peak..n)
        .filter(|&i| in_band(profile.heights[i]))
        .map(|i| (profile.bin_center(i), profile.heights[i]))
        .collect();
    if left.len() < exclusions.min_bins || right.len() < exclusions.min_bins {
        return Err(Error::Analysis(format!(
            "flank too short to measure: {} / {} usable bins (need {})",
            left.len(),
            right.len(),
            exclusions.min_bins
        )));
    }
    let left_fit = line_fit(&left);
    let right_fit = line_fit(&right);
    let angle_left = left_fit.slope.abs().atan().to_degrees();
    let angle_right = right_fit.slope.abs().atan().to_degrees();
    Ok(AorResult {
        angle_deg: 0.5 * (angle_left + angle_right),
        left: left_fit,
        right: right_fit,
        exclusions: *exclusions,
    })
}

fn line_fit(points: &[(f64, f64)]) -> FlankFit {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let mut ss = 0.0;
    for &(x, y) in points {
        let e = y - (slope * x + intercept);
        ss += e * e;
    }
    FlankFit { slope, intercept, residual: (ss / n).sqrt(), bins_used: points.len() }
}

/// Angle of repose averaged over both horizontal projection axes, reducing
/// azimuthal noise. Returns the mean angle plus the per-axis results.
pub fn measure_snapshot_aor(
    snap: &PileSnapshot,
    bin_width: f64,
    exclusions: &FlankExclusions,
) -> Result<(f64, AorResult, AorResult)> {
    let px = project_pile(snap, Axis::X, bin_width)?;
    let py = project_pile(snap, Axis::Y, bin_width)?;
    let ax = measure_aor(&px, exclusions)?;
    let ay = measure_aor(&py, exclusions)?;
    let mean = 0.5 * (ax.angle_deg + ay.angle_deg);
    Ok((mean, ax, ay))
}

/// Solid volume fraction of the spheres inside a probe box, using the exact
/// circle-rectangle cross-section area integrated over height.
pub fn packing_fraction(snap: &PileSnapshot, region: &Aabb) -> f64 {
    let vol = region.volume();
    if vol <= 0.0 {
        return 0.0;
    }
    let mut solid = 0.0;
    for &(pos, r) in &snap.particles {
        solid += sphere_box_overlap(pos, r, region);
    }
    solid / vol
}

/// Overlap volume of a sphere and an axis-aligned box. Cross sections are
/// exact circle-rectangle intersection areas; the height integral uses
/// adaptive Simpson quadrature to ~1e-10 relative accuracy.
pub fn sphere_box_overlap(center: Vec3, r: f64, b: &Aabb) -> f64 {
    let z0 = (center.z - r).max(b.min.z);
    let z1 = (center.z + r).min(b.max.z);
    if z0 >= z1 {
        return 0.0;
    }
    let slice = |z: f64| {
        let dz = z - center.z;
        let rr = r * r - dz * dz;
        if rr <= 0.0 {
            return 0.0;
        }
        circle_rect_area(
            rr.sqrt(),
            b.min.x - center.x,
            b.max.x - center.x,
            b.min.y - center.y,
            b.max.y - center.y,
        )
    };
    adaptive_simpson(&slice, z0, z1, 1e-12 * r * r * r, 24)
}

/// Area of the intersection of a disc of radius `r` centered at the origin
/// with the rectangle [x0, x1] x [y0, y1].
fn circle_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    circle_quadrant_area(r, x1, y1) - circle_quadrant_area(r, x0, y1) - circle_quadrant_area(r, x1, y0)
        + circle_quadrant_area(r, x0, y0)
}

/// Area of the disc region { u <= x, v <= y } for a disc of radius `r`
/// centered at the origin.
fn circle_quadrant_area(r: f64, x: f64, y: f64) -> f64 {
    if x <= -r || y <= -r {
        return 0.0;
    }
    let x = x.min(r);
    // Antiderivative of the half-chord: int c(u) du, c(u) = sqrt(r^2 - u^2).
    let half_chord_int = |u: f64| 0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin());
    if y >= r {
        // Full chord from -r to x.
        return 2.0 * (half_chord_int(x) - half_chord_int(-r));
    }
    let u_star = (r * r - y * y).max(0.0).sqrt();
    if y >= 0.0 {
        // Full chords where |u| > u_star, chord cut at height y in between.
        let mut area = 0.0;
        let a = (-u_star).min(x);
        area += 2.0 * (half_chord_int(a) - half_chord_int(-r));
        if x > -u_star {
            let b = x.min(u_star);
            area += y * (b - (-u_star)) + (half_chord_int(b) - half_chord_int(-u_star));
            if x > u_star {
                area += 2.0 * (half_chord_int(x) - half_chord_int(u_star));
            }
        }
        area
    } else {
        // Only the band |u| <= u_star contributes, cut from -c(u) to y.
        if x <= -u_star {
            return 0.0;
        }
        let b = x.min(u_star);
        y * (b - (-u_star)) + (half_chord_int(b) - half_chord_int(-u_star))
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_rec(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_rec(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}
