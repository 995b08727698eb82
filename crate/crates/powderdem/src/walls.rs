//! Rigid triangulated walls with prescribed rigid-body motion.
//!
//! Meshes are stored in a reference frame; the motion program supplies a
//! time-dependent translation offset and velocity (piecewise linear, plus an
//! optional vertical vibration). Narrow phase is closest-point-on-triangle
//! over a per-mesh acceleration grid; reporting a single closest point per
//! mesh deduplicates edge and vertex contacts between adjacent triangles.

use crate::core::Particle;
use crate::forces::ContactGeometry;
use crate::math::{Aabb, Vec3};
use crate::{Error, Result};

use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle {
    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).norm()
    }

    fn aabb(&self) -> Aabb {
        let min = Vec3::new(
            self.a.x.min(self.b.x).min(self.c.x),
            self.a.y.min(self.b.y).min(self.c.y),
            self.a.z.min(self.b.z).min(self.c.z),
        );
        let max = Vec3::new(
            self.a.x.max(self.b.x).max(self.c.x),
            self.a.y.max(self.b.y).max(self.c.y),
            self.a.z.max(self.b.z).max(self.c.z),
        );
        Aabb::new(min, max)
    }
}

/// Closest point on a triangle to `p` (barycentric region walk).
pub fn closest_point_on_triangle(p: Vec3, tri: &Triangle) -> Vec3 {
    let (a, b, c) = (tri.a, tri.b, tri.c);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Vertical sinusoidal vibration added on top of the base motion.
#[derive(Clone, Copy, Debug)]
pub struct Vibration {
    /// Amplitude, m.
    pub amplitude: f64,
    /// Frequency, Hz.
    pub frequency: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct MotionSegment {
    pub t_start: f64,
    /// Offset at the start of the segment.
    pub offset: Vec3,
    /// Constant velocity over the segment; the offset is its integral, so
    /// the program stays consistent by construction.
    pub velocity: Vec3,
}

/// Piecewise-linear rigid translation program, optionally with vibration.
#[derive(Clone, Debug)]
pub struct MotionProgram {
    segments: Vec<MotionSegment>,
    pub vibration: Option<Vibration>,
    /// Vibration acts only before this time (a switched-off vibrator). The
    /// cut happens at a zero crossing of the sine, so the offset stays
    /// continuous.
    pub vibration_stop: Option<f64>,
}

impl Default for MotionProgram {
    fn default() -> Self {
        MotionProgram::stationary()
    }
}

impl MotionProgram {
    pub fn stationary() -> Self {
        MotionProgram {
            segments: vec![MotionSegment { t_start: 0.0, offset: Vec3::zero(), velocity: Vec3::zero() }],
            vibration: None,
            vibration_stop: None,
        }
    }

    pub fn with_vibration(mut self, vib: Vibration) -> Self {
        self.vibration = Some(vib);
        self
    }

    /// Switch the vibrator off at the next zero crossing after `t`.
    pub fn stop_vibration_after(&mut self, t: f64) {
        if let Some(vib) = self.vibration {
            let period = 1.0 / vib.frequency;
            let cycles = (t / (period / 2.0)).ceil();
            self.vibration_stop = Some(cycles * period / 2.0);
        }
    }

    /// Continue with a new constant velocity from time `t` on; the offset
    /// stays continuous.
    pub fn push_velocity(&mut self, t: f64, velocity: Vec3) {
        let (offset, _) = self.base_at(t);
        debug_assert!(t >= self.segments.last().unwrap().t_start);
        self.segments.push(MotionSegment { t_start: t, offset, velocity });
    }

    fn base_at(&self, t: f64) -> (Vec3, Vec3) {
        // Programs grow forward in time; the active segment is almost always
        // the last one.
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.t_start <= t)
            .unwrap_or(&self.segments[0]);
        (seg.offset + seg.velocity * (t - seg.t_start), seg.velocity)
    }

    /// Offset and velocity at time `t`, vibration included.
    pub fn at(&self, t: f64) -> (Vec3, Vec3) {
        let (mut offset, mut velocity) = self.base_at(t);
        if let Some(vib) = self.vibration {
            if self.vibration_stop.map_or(true, |stop| t < stop) {
                let omega = TAU * vib.frequency;
                offset.z += vib.amplitude * (omega * t).sin();
                velocity.z += vib.amplitude * omega * (omega * t).cos();
            }
        }
        (offset, velocity)
    }

    /// Base velocity of the last segment (ignoring vibration).
    pub fn current_velocity(&self) -> Vec3 {
        self.segments.last().unwrap().velocity
    }
}

/// Per-mesh uniform grid over triangle AABBs, queried with a point.
#[derive(Clone, Debug)]
struct TriGrid {
    origin: Vec3,
    cell_size: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl TriGrid {
    fn build(triangles: &[Triangle], margin: f64) -> TriGrid {
        let mut lo = triangles[0].a;
        let mut hi = lo;
        for t in triangles {
            for v in [t.a, t.b, t.c] {
                lo.x = lo.x.min(v.x);
                lo.y = lo.y.min(v.y);
                lo.z = lo.z.min(v.z);
                hi.x = hi.x.max(v.x);
                hi.y = hi.y.max(v.y);
                hi.z = hi.z.max(v.z);
            }
        }
        lo -= Vec3::new(margin, margin, margin);
        hi += Vec3::new(margin, margin, margin);
        let span = hi - lo;
        let longest = span.x.max(span.y).max(span.z);
        let cell_size = (longest / 48.0).max(2.0 * margin);
        let dims = [
            (span.x / cell_size).floor() as usize + 1,
            (span.y / cell_size).floor() as usize + 1,
            (span.z / cell_size).floor() as usize + 1,
        ];
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for (idx, t) in triangles.iter().enumerate() {
            let bb = t.aabb();
            let c_lo = Self::coords(lo, cell_size, dims, bb.min - Vec3::new(margin, margin, margin));
            let c_hi = Self::coords(lo, cell_size, dims, bb.max + Vec3::new(margin, margin, margin));
            for z in c_lo[2]..=c_hi[2] {
                for y in c_lo[1]..=c_hi[1] {
                    for x in c_lo[0]..=c_hi[0] {
                        cells[(z * dims[1] + y) * dims[0] + x].push(idx as u32);
                    }
                }
            }
        }
        TriGrid { origin: lo, cell_size, dims, cells }
    }

    fn coords(origin: Vec3, cell: f64, dims: [usize; 3], p: Vec3) -> [usize; 3] {
        // as-cast truncation saturates negatives to zero, matching the clamp.
        let rel = p - origin;
        [
            ((rel.x / cell) as usize).min(dims[0] - 1),
            ((rel.y / cell) as usize).min(dims[1] - 1),
            ((rel.z / cell) as usize).min(dims[2] - 1),
        ]
    }

    fn query(&self, p: Vec3) -> &[u32] {
        let rel = p - self.origin;
        if rel.x < 0.0
            || rel.y < 0.0
            || rel.z < 0.0
            || rel.x >= self.dims[0] as f64 * self.cell_size
            || rel.y >= self.dims[1] as f64 * self.cell_size
            || rel.z >= self.dims[2] as f64 * self.cell_size
        {
            return &[];
        }
        let c = Self::coords(self.origin, self.cell_size, self.dims, p);
        &self.cells[(c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]]
    }
}

/// Rigid triangulated boundary with motion program and adhesion switch.
#[derive(Clone, Debug)]
pub struct WallMesh {
    pub id: u32,
    pub triangles: Vec<Triangle>,
    pub motion: MotionProgram,
    pub adhesion_enabled: bool,
    grid: TriGrid,
    /// Cached per-triangle bounds for the narrow-phase reject.
    tri_aabbs: Vec<Aabb>,
}

impl WallMesh {
    /// `margin` must cover the largest interaction distance (particle radius
    /// plus adhesion reach) expected against this mesh.
    pub fn new(
        id: u32,
        triangles: Vec<Triangle>,
        motion: MotionProgram,
        adhesion_enabled: bool,
        margin: f64,
    ) -> Result<WallMesh> {
        if triangles.is_empty() {
            return Err(Error::InvalidParameter("wall mesh has no triangles".into()));
        }
        for (i, t) in triangles.iter().enumerate() {
            if !(t.area() > 0.0) {
                return Err(Error::InvalidParameter(format!("wall triangle {i} is degenerate")));
            }
        }
        let grid = TriGrid::build(&triangles, margin);
        let tri_aabbs = triangles.iter().map(Triangle::aabb).collect();
        Ok(WallMesh { id, triangles, motion, adhesion_enabled, grid, tri_aabbs })
    }

    /// Offset and velocity of the rigid motion at time `t`.
    pub fn motion_at(&self, t: f64) -> (Vec3, Vec3) {
        self.motion.at(t)
    }

    /// Closest-point contact query against the mesh displaced by `offset`.
    /// Returns the single globally closest surface point within
    /// `particle.radius + reach`, which deduplicates contacts on shared
    /// edges and vertices.
    pub fn contact_with_offset(
        &self,
        particle: &Particle,
        offset: Vec3,
        wall_velocity: Vec3,
        reach: f64,
    ) -> Option<WallContact> {
        let local = particle.position - offset;
        let search = particle.radius + reach;
        let mut best_d2 = search * search;
        let mut best_point: Option<Vec3> = None;
        for &ti in self.grid.query(local) {
            // Cheap reject on the cached triangle AABB before the exact test.
            let bb = &self.tri_aabbs[ti as usize];
            let dx = (bb.min.x - local.x).max(0.0).max(local.x - bb.max.x);
            let dy = (bb.min.y - local.y).max(0.0).max(local.y - bb.max.y);
            let dz = (bb.min.z - local.z).max(0.0).max(local.z - bb.max.z);
            if dx * dx + dy * dy + dz * dz >= best_d2 {
                continue;
            }
            let cp = closest_point_on_triangle(local, &self.triangles[ti as usize]);
            let d2 = (cp - local).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best_point = Some(cp);
            }
        }
        let cp_local = best_point?;
        let cp_world = cp_local + offset;
        let delta = cp_world - particle.position;
        let dist = delta.norm();
        if dist <= 0.0 {
            return None; // center exactly on the surface; unreachable under the step-size bound
        }
        let normal = delta / dist;
        let gap = dist - particle.radius;
        let geom = ContactGeometry {
            normal,
            gap,
            gap_rate: (wall_velocity - particle.velocity).dot(normal),
            offset_i: normal * (particle.radius + 0.5 * gap),
            offset_j: Vec3::zero(),
        };
        Some(WallContact { geometry: geom, wall_velocity })
    }

    /// Contact query at time `t` (evaluates the motion program itself).
    pub fn sphere_wall_contact(&self, particle: &Particle, t: f64, reach: f64) -> Option<WallContact> {
        let (offset, velocity) = self.motion_at(t);
        self.contact_with_offset(particle, offset, velocity, reach)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WallContact {
    pub geometry: ContactGeometry,
    pub wall_velocity: Vec3,
}

/// Open frustum for the funnel cone: inner surface of revolution from the
/// discharge opening (radius `opening_radius` at z = 0) up to `top_radius`,
/// with the half angle measured from the cone axis.
pub fn funnel_cone(
    opening_radius: f64,
    half_angle_deg: f64,
    top_radius: f64,
    segments: usize,
    rings: usize,
) -> Vec<Triangle> {
    assert!(top_radius > opening_radius && segments >= 3 && rings >= 1);
    let slope = half_angle_deg.to_radians().tan();
    let height = (top_radius - opening_radius) / slope;
    let mut tris = Vec::with_capacity(segments * rings * 2);
    for ring in 0..rings {
        let z0 = height * ring as f64 / rings as f64;
        let z1 = height * (ring + 1) as f64 / rings as f64;
        let r0 = opening_radius + slope * z0;
        let r1 = opening_radius + slope * z1;
        for s in 0..segments {
            let a0 = TAU * s as f64 / segments as f64;
            let a1 = TAU * (s + 1) as f64 / segments as f64;
            let p00 = Vec3::new(r0 * a0.cos(), r0 * a0.sin(), z0);
            let p01 = Vec3::new(r0 * a1.cos(), r0 * a1.sin(), z0);
            let p10 = Vec3::new(r1 * a0.cos(), r1 * a0.sin(), z1);
            let p11 = Vec3::new(r1 * a1.cos(), r1 * a1.sin(), z1);
            tris.push(Triangle { a: p00, b: p01, c: p11 });
            tris.push(Triangle { a: p00, b: p11, c: p10 });
        }
    }
    tris
}

/// Cube target: top face centered at `top_center` plus the four side faces
/// reaching down one side length. The bottom face is omitted; particles
/// below the cube are out of play.
pub fn cube_target(top_center: Vec3, side: f64) -> Vec<Triangle> {
    let h = side / 2.0;
    let zt = top_center.z;
    let zb = zt - side;
    let c = top_center;
    let v = |dx: f64, dy: f64, z: f64| Vec3::new(c.x + dx * h, c.y + dy * h, z);
    let mut tris = Vec::with_capacity(10);
    // Top.
    tris.push(Triangle { a: v(-1.0, -1.0, zt), b: v(1.0, -1.0, zt), c: v(1.0, 1.0, zt) });
    tris.push(Triangle { a: v(-1.0, -1.0, zt), b: v(1.0, 1.0, zt), c: v(-1.0, 1.0, zt) });
    // Sides.
    let quads = [
        [v(-1.0, -1.0, zb), v(1.0, -1.0, zb), v(1.0, -1.0, zt), v(-1.0, -1.0, zt)],
        [v(1.0, -1.0, zb), v(1.0, 1.0, zb), v(1.0, 1.0, zt), v(1.0, -1.0, zt)],
        [v(1.0, 1.0, zb), v(-1.0, 1.0, zb), v(-1.0, 1.0, zt), v(1.0, 1.0, zt)],
        [v(-1.0, 1.0, zb), v(-1.0, -1.0, zb), v(-1.0, -1.0, zt), v(-1.0, 1.0, zt)],
    ];
    for q in quads {
        tris.push(Triangle { a: q[0], b: q[1], c: q[2] });
        tris.push(Triangle { a: q[0], b: q[2], c: q[3] });
    }
    tris
}

/// ASCII triangle soup: one triangle per line, nine whitespace-separated
/// floats (ax ay az bx by bz cx cy cz). Lines starting with '#' and blank
/// lines are skipped.
pub fn load_triangle_soup(path: &std::path::Path) -> Result<Vec<Triangle>> {
    let text = std::fs::read_to_string(path)?;
    parse_triangle_soup(&text)
}

pub fn parse_triangle_soup(text: &str) -> Result<Vec<Triangle>> {
    let mut tris = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Config {
            line: Some(lineno + 1),
            message: format!("triangle soup: {e}"),
        })?;
        if vals.len() != 9 {
            return Err(Error::Config {
                line: Some(lineno + 1),
                message: format!("triangle soup: expected 9 floats, got {}", vals.len()),
            });
        }
        tris.push(Triangle {
            a: Vec3::new(vals[0], vals[1], vals[2]),
            b: Vec3::new(vals[3], vals[4], vals[5]),
            c: Vec3::new(vals[6], vals[7], vals[8]),
        });
    }
    Ok(tris)
}
