//! Velocity-Verlet time stepping and per-step orchestration: escape removal,
//! grid rebuild, pair and wall force evaluation, tangential history sync,
//! state update.
//!
//! Force evaluation is data-parallel over the candidate pair list (rayon,
//! behind the `parallel` feature) with results written into an order-stable
//! buffer and accumulated sequentially in fixed pair order, so a run is
//! bit-identical regardless of execution mode or thread count.

use crate::core::{sphere_mass, MaterialParams, Particle};
use crate::forces::{evaluate_contact, evaluate_pair, ContactOutput, ForceSetup};
use crate::math::{Aabb, Vec3};
use crate::neighbors::{CellGrid, ContactTable, WallContactTable};
use crate::walls::WallMesh;
use crate::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode of the force loop. Both modes produce bit-identical
/// results; `Parallel` falls back to sequential execution when the crate is
/// built without the `parallel` feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Critical step size of the penalty contact, 0.2 sqrt(m_min / k_N).
pub fn critical_dt(m_min: f64, k_n: f64) -> f64 {
    0.2 * (m_min / k_n).sqrt()
}

/// Settling detector: mean particle kinetic energy below `mean_ke` for at
/// least `hold_time` seconds of simulated time.
#[derive(Clone, Copy, Debug)]
pub struct SettleCriterion {
    pub mean_ke: f64,
    pub hold_time: f64,
}

impl Default for SettleCriterion {
    fn default() -> Self {
        SettleCriterion { mean_ke: 1e-16, hold_time: 5e-3 }
    }
}

/// Accumulated run diagnostics.
#[derive(Clone, Copy, Debug, Default)]
pub struct Diagnostics {
    /// Largest penetration depth seen, m.
    pub max_penetration: f64,
    /// Largest particle speed seen, m/s.
    pub max_speed: f64,
    /// Particles removed after leaving the domain.
    pub escaped: usize,
}

pub struct SimulationState {
    pub particles: Vec<Particle>,
    pub walls: Vec<WallMesh>,
    pub contacts: ContactTable,
    pub wall_contacts: Vec<WallContactTable>,
    pub material: MaterialParams,
    pub setup: ForceSetup,
    pub time: f64,
    pub step_count: usize,
    /// Particles leaving this box are removed and counted as escaped.
    pub domain: Aabb,
    pub diagnostics: Diagnostics,
    pub exec: ExecMode,
    /// Largest particle radius the state was sized for.
    pub r_max: f64,
    /// Smallest particle mass the state was sized for (step-size bound).
    pub m_min: f64,
    cell_size: f64,
    next_id: u32,
    accel: Vec<Vec3>,
    alpha: Vec<Vec3>,
    accel_valid: bool,
    grid: CellGrid,
    pair_keys: Vec<(u32, u32)>,
    pair_out: Vec<Option<ContactOutput>>,
    wall_out: Vec<Option<ContactOutput>>,
    force_buf: Vec<Vec3>,
    torque_buf: Vec<Vec3>,
}

impl SimulationState {
    /// `d_min`/`d_max` bound the particle diameters that will ever live in
    /// this state; they size the neighbor grid and the step-size guard.
    pub fn new(
        material: MaterialParams,
        d_min: f64,
        d_max: f64,
        domain: Aabb,
        exec: ExecMode,
    ) -> Result<SimulationState> {
        material.validate()?;
        if !(d_min > 0.0 && d_min <= d_max) {
            return Err(Error::InvalidParameter(format!(
                "diameter bounds must satisfy 0 < d_min <= d_max, got {d_min:e}, {d_max:e}"
            )));
        }
        let setup = ForceSetup::new(&material);
        // Grid invariant: any pair within the adhesion reach lies in the
        // same or adjacent cells.
        let cell_size = d_max + setup.g_star;
        Ok(SimulationState {
            particles: Vec::new(),
            walls: Vec::new(),
            contacts: ContactTable::new(),
            wall_contacts: Vec::new(),
            material,
            setup,
            time: 0.0,
            step_count: 0,
            domain,
            diagnostics: Diagnostics::default(),
            exec,
            r_max: d_max / 2.0,
            m_min: sphere_mass(d_min / 2.0, material.density),
            cell_size,
            next_id: 0,
            accel: Vec::new(),
            alpha: Vec::new(),
            accel_valid: false,
            grid: CellGrid::new(),
            pair_keys: Vec::new(),
            pair_out: Vec::new(),
            wall_out: Vec::new(),
            force_buf: Vec::new(),
            torque_buf: Vec::new(),
        })
    }

    pub fn add_wall(&mut self, wall: WallMesh) {
        self.walls.push(wall);
        self.wall_contacts.push(WallContactTable::default());
    }

    /// Insert a particle; the caller guarantees it does not overlap existing
    /// ones. Returns its id.
    pub fn spawn(&mut self, position: Vec3, radius: f64) -> u32 {
        debug_assert!(radius <= self.r_max * (1.0 + 1e-12), "radius exceeds declared d_max");
        let id = self.next_id;
        self.next_id += 1;
        self.particles.push(Particle::new(id, position, radius, self.material.density));
        // A freshly inserted particle is contact-free by contract.
        self.accel.push(self.material.gravity_vector());
        self.alpha.push(Vec3::zero());
        id
    }

    pub fn spawn_with_velocity(&mut self, position: Vec3, radius: f64, velocity: Vec3) -> u32 {
        let id = self.spawn(position, radius);
        self.particles.last_mut().unwrap().velocity = velocity;
        id
    }

    /// Remove particles outside the domain box, preserving order (particle
    /// ids stay ascending along the vector, which the contact tables rely
    /// on). Returns how many were removed.
    pub fn purge_escaped(&mut self) -> usize {
        let n = self.particles.len();
        let mut write = 0usize;
        for read in 0..n {
            if self.domain.contains(self.particles[read].position) {
                if write != read {
                    self.particles[write] = self.particles[read];
                    self.accel[write] = self.accel[read];
                    self.alpha[write] = self.alpha[read];
                }
                write += 1;
            }
        }
        let removed = n - write;
        self.particles.truncate(write);
        self.accel.truncate(write);
        self.alpha.truncate(write);
        self.diagnostics.escaped += removed;
        removed
    }

    pub fn total_linear_momentum(&self) -> Vec3 {
        let mut p = Vec3::zero();
        for part in &self.particles {
            p += part.velocity * part.mass;
        }
        p
    }

    pub fn total_kinetic_energy(&self) -> f64 {
        self.particles.iter().map(|p| p.kinetic_energy()).sum()
    }

    pub fn mean_kinetic_energy(&self) -> f64 {
        if self.particles.is_empty() {
            0.0
        } else {
            self.total_kinetic_energy() / self.particles.len() as f64
        }
    }

    /// True when any pair or wall contact is mechanically active.
    pub fn any_contact_active(&self) -> bool {
        !self.contacts.is_empty() || self.wall_contacts.iter().any(|t| !t.entries.is_empty())
    }

    /// Candidate pairs from a fresh grid over the current positions.
    pub fn grid_pairs(&mut self) -> Vec<(u32, u32)> {
        self.grid.rebuild(&self.particles, self.cell_size);
        let mut pairs = Vec::new();
        self.grid.candidate_pairs(&self.particles, self.setup.g_star, &mut pairs);
        pairs
    }

    /// Pure pairwise force/torque query over an explicit pair list (indices,
    /// sorted); tangential histories are read but not written. Forces are
    /// accumulated in list order, so two lists that contain the same
    /// interacting pairs in the same order give bit-identical results.
    pub fn pairwise_forces(&self, pairs: &[(u32, u32)], dt: f64) -> (Vec<Vec3>, Vec<Vec3>) {
        let n = self.particles.len();
        let mut forces = vec![Vec3::zero(); n];
        let mut torques = vec![Vec3::zero(); n];
        for &(i, j) in pairs {
            let (pi, pj) = (&self.particles[i as usize], &self.particles[j as usize]);
            let prev = self.contacts.get((pi.id, pj.id));
            if let Some(out) = evaluate_pair(pi, pj, prev, &self.setup, dt) {
                forces[i as usize] += out.force_i;
                forces[j as usize] -= out.force_i;
                torques[i as usize] += out.torque_i;
                torques[j as usize] += out.torque_j;
            }
        }
        (forces, torques)
    }

    fn evaluate_pair_outputs(&mut self, dt: f64) {
        let particles = &self.particles;
        let contacts = &self.contacts;
        let setup = &self.setup;
        let pair_keys = &self.pair_keys;
        let eval = |&(i, j): &(u32, u32)| -> Option<ContactOutput> {
            let (pi, pj) = (&particles[i as usize], &particles[j as usize]);
            evaluate_pair(pi, pj, contacts.get((pi.id, pj.id)), setup, dt)
        };
        #[cfg(feature = "parallel")]
        if self.exec == ExecMode::Parallel && pair_keys.len() >= 2048 {
            pair_keys.par_iter().map(eval).collect_into_vec(&mut self.pair_out);
            return;
        }
        self.pair_out.clear();
        self.pair_out.extend(pair_keys.iter().map(eval));
    }

    fn evaluate_wall_outputs(&mut self, wall_idx: usize, offset: Vec3, wall_vel: Vec3, dt: f64) {
        let particles = &self.particles;
        let setup = &self.setup;
        let wall = &self.walls[wall_idx];
        let table = &self.wall_contacts[wall_idx];
        let reach = setup.g_star;
        let eval = |p: &Particle| -> Option<ContactOutput> {
            let contact = wall.contact_with_offset(p, offset, wall_vel, reach)?;
            let prev = table.get(p.id);
            Some(evaluate_contact(
                &contact.geometry,
                p.velocity,
                contact.wall_velocity,
                p.angular_velocity,
                Vec3::zero(),
                p.mass,
                p.radius,
                p.moment_of_inertia(),
                prev,
                setup,
                wall.adhesion_enabled,
                dt,
            ))
        };
        #[cfg(feature = "parallel")]
        if self.exec == ExecMode::Parallel && particles.len() >= 2048 {
            particles.par_iter().map(eval).collect_into_vec(&mut self.wall_out);
            return;
        }
        self.wall_out.clear();
        self.wall_out.extend(particles.iter().map(eval));
    }

    /// Full force evaluation at the current positions/velocities: rebuilds
    /// the grid, evaluates pair and wall contacts, syncs tangential
    /// histories and refreshes accelerations.
    fn evaluate_forces(&mut self, eval_time: f64, dt: f64) {
        let n = self.particles.len();
        self.grid.rebuild(&self.particles, self.cell_size);
        self.pair_keys.clear();
        #[cfg(feature = "parallel")]
        if self.exec == ExecMode::Parallel && n >= 2048 {
            self.grid
                .candidate_pairs_par(&self.particles, self.setup.g_star, &mut self.pair_keys);
        } else {
            self.grid.candidate_pairs(&self.particles, self.setup.g_star, &mut self.pair_keys);
        }
        #[cfg(not(feature = "parallel"))]
        self.grid.candidate_pairs(&self.particles, self.setup.g_star, &mut self.pair_keys);

        self.evaluate_pair_outputs(dt);

        self.force_buf.clear();
        self.force_buf.resize(n, Vec3::zero());
        self.torque_buf.clear();
        self.torque_buf.resize(n, Vec3::zero());

        let mut max_pen = self.diagnostics.max_penetration;
        let mut new_contacts = Vec::with_capacity(self.contacts.len() + 16);
        for (&(i, j), out) in self.pair_keys.iter().zip(&self.pair_out) {
            if let Some(o) = out {
                self.force_buf[i as usize] += o.force_i;
                self.force_buf[j as usize] -= o.force_i;
                self.torque_buf[i as usize] += o.torque_i;
                self.torque_buf[j as usize] += o.torque_j;
                if let Some(s) = o.state {
                    new_contacts.push(((self.particles[i as usize].id, self.particles[j as usize].id), s));
                }
                if o.penetration > max_pen {
                    max_pen = o.penetration;
                }
            }
        }
        debug_assert!(new_contacts.windows(2).all(|w| w[0].0 < w[1].0));
        self.contacts = ContactTable { entries: new_contacts };

        for w in 0..self.walls.len() {
            let (offset, wall_vel) = self.walls[w].motion_at(eval_time);
            self.evaluate_wall_outputs(w, offset, wall_vel, dt);
            let mut new_table = Vec::with_capacity(self.wall_contacts[w].entries.len() + 16);
            for (idx, out) in self.wall_out.iter().enumerate() {
                if let Some(o) = out {
                    self.force_buf[idx] += o.force_i;
                    self.torque_buf[idx] += o.torque_i;
                    if let Some(s) = o.state {
                        new_table.push((self.particles[idx].id, s));
                    }
                    if o.penetration > max_pen {
                        max_pen = o.penetration;
                    }
                }
            }
            self.wall_contacts[w] = WallContactTable { entries: new_table };
        }
        self.diagnostics.max_penetration = max_pen;

        let gravity = self.material.gravity_vector();
        for i in 0..n {
            let p = &self.particles[i];
            self.accel[i] = self.force_buf[i] / p.mass + gravity;
            self.alpha[i] = self.torque_buf[i] / p.moment_of_inertia();
        }
        self.accel_valid = true;
    }

    /// One velocity-Verlet step. Forces are evaluated once, at the drifted
    /// positions with first-half-kick velocities; tangential histories
    /// integrate (Backward Euler) inside that evaluation.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !self.accel_valid {
            self.evaluate_forces(self.time, dt);
        }
        let half = 0.5 * dt;
        for (i, p) in self.particles.iter_mut().enumerate() {
            p.velocity += self.accel[i] * half;
            p.angular_velocity += self.alpha[i] * half;
            p.position += p.velocity * dt;
        }
        self.evaluate_forces(self.time + dt, dt);
        let mut max_speed2 = 0.0f64;
        for (i, p) in self.particles.iter_mut().enumerate() {
            p.velocity += self.accel[i] * half;
            p.angular_velocity += self.alpha[i] * half;
            let v2 = p.velocity.norm_squared();
            if v2 > max_speed2 {
                max_speed2 = v2;
            }
        }
        let max_speed = max_speed2.sqrt();
        if max_speed > self.diagnostics.max_speed {
            self.diagnostics.max_speed = max_speed;
        }
        self.time += dt;
        self.step_count += 1;
        if !max_speed.is_finite() {
            return Err(self.first_non_finite());
        }
        for p in &self.particles {
            if !(p.position.is_finite() && p.velocity.is_finite()) {
                return Err(Error::NonFiniteState { step: self.step_count, particle_id: p.id });
            }
        }
        Ok(())
    }

    fn first_non_finite(&self) -> Error {
        for p in &self.particles {
            if !(p.position.is_finite() && p.velocity.is_finite()) {
                return Error::NonFiniteState { step: self.step_count, particle_id: p.id };
            }
        }
        Error::NonFiniteState { step: self.step_count, particle_id: u32::MAX }
    }

    /// Guard a configured step size against the critical bound for the
    /// smallest admissible particle.
    pub fn check_dt(&self, dt: f64) -> Result<()> {
        let dt_crit = critical_dt(self.m_min, self.material.stiffness);
        if dt > dt_crit {
            return Err(Error::TimeStepTooLarge { dt, dt_crit });
        }
        Ok(())
    }
}

/// What the per-step hook wants the driver to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookControl {
    Continue,
    Stop,
}

/// Drive `state` to `t_end` (or early termination). After every step the
/// hook runs (feeding, wall triggers, custom termination), escaped particles
/// are purged, and snapshots are emitted at the configured interval with
/// strictly increasing times. The settle criterion, when given, stops the
/// run once the mean kinetic energy stays below its threshold for the hold
/// time.
pub fn run(
    state: &mut SimulationState,
    dt: f64,
    t_end: f64,
    settle: Option<SettleCriterion>,
    snapshot_interval: Option<f64>,
    mut on_snapshot: impl FnMut(f64, &SimulationState),
    mut hook: impl FnMut(&mut SimulationState) -> Result<HookControl>,
) -> Result<()> {
    state.check_dt(dt)?;
    let t_start = state.time;
    let mut next_snapshot = snapshot_interval.map(|iv| t_start + iv);
    let mut settle_since: Option<f64> = None;
    while state.time < t_end - 0.5 * dt {
        state.step(dt)?;
        state.purge_escaped();
        if hook(state)? == HookControl::Stop {
            break;
        }
        if let Some(ts) = next_snapshot {
            if state.time >= ts {
                on_snapshot(state.time, state);
                next_snapshot = Some(state.time + snapshot_interval.unwrap());
            }
        }
        if let Some(cr) = settle {
            if state.mean_kinetic_energy() < cr.mean_ke {
                let since = *settle_since.get_or_insert(state.time);
                if state.time - since >= cr.hold_time {
                    break;
                }
            } else {
                settle_since = None;
            }
        }
    }
    Ok(())
}
