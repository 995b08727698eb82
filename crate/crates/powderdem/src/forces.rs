//! Pairwise force and torque laws.
//!
//! Normal contact is a linear spring-dashpot with tension cut-off, tangential
//! contact a Coulomb law regularized by a spring-dashpot on the integrated
//! tangential gap with return mapping in the slip case, rolling resistance a
//! viscous torque proportional to the normal force, and adhesion a pull-off
//! force plateau joined to a van der Waals force curve with a hard outer
//! cut-off.
//!
//! Everything here is a pure function of its inputs; the only mutation is the
//! per-contact tangential history, which each contact owns exclusively.

use crate::core::{effective_pair, MaterialParams};
use crate::math::Vec3;
use crate::{Error, Result};

use std::f64::consts::PI;

/// Geometry of one contact, seen from particle `i`. The normal points from
/// `i` toward `j` (for walls: toward the wall surface point).
#[derive(Clone, Copy, Debug)]
pub struct ContactGeometry {
    /// Unit normal from i toward j.
    pub normal: Vec3,
    /// Normal gap, m; negative means penetration.
    pub gap: f64,
    /// Rate of change of the gap, m/s.
    pub gap_rate: f64,
    /// Vector from the centroid of i to the contact point.
    pub offset_i: Vec3,
    /// Vector from the centroid of j to the contact point (zero for walls).
    pub offset_j: Vec3,
}

impl ContactGeometry {
    /// Geometry of a sphere-sphere pair. Positions must not coincide.
    pub fn sphere_sphere(
        pos_i: Vec3,
        vel_i: Vec3,
        r_i: f64,
        pos_j: Vec3,
        vel_j: Vec3,
        r_j: f64,
    ) -> ContactGeometry {
        let delta = pos_j - pos_i;
        let dist = delta.norm();
        let normal = delta / dist;
        let gap = dist - (r_i + r_j);
        let gap_rate = (vel_j - vel_i).dot(normal);
        ContactGeometry {
            normal,
            gap,
            gap_rate,
            offset_i: normal * (r_i + 0.5 * gap),
            offset_j: normal * (-(r_j + 0.5 * gap)),
        }
    }
}

/// Persistent per-contact state. Created zeroed at first touch, destroyed
/// when the pair separates; the rolling coefficient is fixed over a contact's
/// lifetime (it depends only on material constants and the pair's effective
/// radius), so it is computed once at creation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairContactState {
    /// Integrated tangential gap vector, m; kept orthogonal to the current normal.
    pub tangential_gap: Vec3,
    /// Rolling resistance coefficient for this pair.
    pub rolling_coeff: f64,
}

impl PairContactState {
    pub fn fresh(rolling_coeff: f64) -> Self {
        PairContactState { tangential_gap: Vec3::zero(), rolling_coeff }
    }
}

/// Force decomposition for one pair, acting on particle i. The partner
/// receives the exact negation of each force and the matching torque.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairForces {
    pub normal: Vec3,
    pub tangential: Vec3,
    pub adhesion: Vec3,
    pub rolling_torque: Vec3,
}

/// Damping constant of the linear spring-dashpot reproducing the coefficient
/// of restitution `c_cor` (exact without tension cut-off).
pub fn damping_constant(c_cor: f64, k_n: f64, m_eff: f64) -> Result<f64> {
    if !(c_cor > 0.0 && c_cor <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "restitution must lie in (0, 1] for the damping relation, got {c_cor}"
        )));
    }
    Ok(damping_constant_unchecked(c_cor, k_n, m_eff))
}

#[inline]
pub(crate) fn damping_constant_unchecked(c_cor: f64, k_n: f64, m_eff: f64) -> f64 {
    let l = c_cor.ln();
    2.0 * l.abs() * (k_n * m_eff / (l * l + PI * PI)).sqrt()
}

/// Lower bound on the penalty stiffness keeping relative penetration below
/// `c_g`, for dynamic collisions (first term) and static adhesion loads
/// (second term).
pub fn min_stiffness(density: f64, v_max: f64, r_max: f64, surface_energy: f64, c_g: f64) -> f64 {
    let dynamic = 8.0 * PI * density * v_max * v_max * r_max / (c_g * c_g);
    let adhesive = 4.0 * PI * surface_energy / c_g;
    dynamic.max(adhesive)
}

/// Both stiffness-bound terms separately, for reporting.
pub fn stiffness_bound_terms(
    density: f64,
    v_max: f64,
    r_max: f64,
    surface_energy: f64,
    c_g: f64,
) -> (f64, f64) {
    (
        8.0 * PI * density * v_max * v_max * r_max / (c_g * c_g),
        4.0 * PI * surface_energy / c_g,
    )
}

/// Tangential spring-dashpot constants from the normal ones; the stiffness
/// ratio is a material property, the damping is carried over.
pub fn tangential_constants(k_n: f64, poisson: f64, d_n: f64) -> (f64, f64) {
    let k_t = (1.0 - poisson) / (1.0 - 0.5 * poisson) * k_n;
    (k_t, d_n)
}

/// Rolling resistance coefficient from material properties and the impact
/// velocity the restitution coefficient refers to.
pub fn rolling_coefficient(
    c_cor: f64,
    youngs: f64,
    poisson: f64,
    r_eff: f64,
    v_impact: f64,
) -> Result<f64> {
    if !(v_impact > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "impact velocity must be positive, got {v_impact}"
        )));
    }
    const C1: f64 = 1.15344;
    let stiffness_term = youngs * (r_eff / 2.0).sqrt() / (1.0 - poisson * poisson);
    Ok((1.0 - c_cor) / (C1 * v_impact.powf(0.2)) * stiffness_term.powf(-0.2))
}

/// Normal contact force on particle i: spring-dashpot with tension cut-off,
/// zero for separated pairs.
pub fn normal_force(geom: &ContactGeometry, k_n: f64, d_n: f64) -> Vec3 {
    normal_force_with_cutoff(geom, k_n, d_n, true)
}

/// Same law with the tension cut-off optionally disabled (the analytic
/// restitution relation holds exactly only without the cut-off; oracle tests
/// use this variant).
pub fn normal_force_with_cutoff(geom: &ContactGeometry, k_n: f64, d_n: f64, cutoff: bool) -> Vec3 {
    if geom.gap > 0.0 {
        return Vec3::zero();
    }
    let mut scalar = k_n * geom.gap + d_n * geom.gap_rate;
    if cutoff {
        scalar = scalar.min(0.0);
    }
    geom.normal * scalar
}

/// Rate of the tangential gap vector; orthogonal to the contact normal.
pub fn tangential_gap_rate(
    vel_i: Vec3,
    vel_j: Vec3,
    omega_i: Vec3,
    omega_j: Vec3,
    geom: &ContactGeometry,
) -> Vec3 {
    (vel_i - vel_j).reject(geom.normal) + omega_i.cross(geom.offset_i)
        - omega_j.cross(geom.offset_j)
}

/// Backward Euler update of the tangential gap, re-projected onto the plane
/// orthogonal to the current normal. Slip rescaling happens separately in
/// [`tangential_force`] once the Coulomb bound is known.
pub fn update_tangential_history(state: &mut PairContactState, gap_rate: Vec3, dt: f64, normal: Vec3) {
    state.tangential_gap = (state.tangential_gap + gap_rate * dt).reject(normal);
}

/// Trial forces below this magnitude produce no tangential force at all.
const TANGENTIAL_TRIAL_FLOOR: f64 = 1e-18;

/// Coulomb tangential force on particle i from the (already updated)
/// history. In the slip case the stored gap is rescaled so the stored elastic
/// force sits exactly on the Coulomb limit (return mapping).
pub fn tangential_force(
    state: &mut PairContactState,
    gap_rate: Vec3,
    f_cn_magnitude: f64,
    friction: f64,
    k_t: f64,
    d_t: f64,
) -> Vec3 {
    let trial = state.tangential_gap * k_t + gap_rate * d_t;
    let trial_mag = trial.norm();
    if trial_mag < TANGENTIAL_TRIAL_FLOOR {
        return Vec3::zero();
    }
    let coulomb = friction * f_cn_magnitude;
    if trial_mag <= coulomb {
        // Stick: the spring-dashpot force itself.
        return -trial;
    }
    // Slip: clamp to the Coulomb bound and return-map the stored gap.
    let gap_mag = state.tangential_gap.norm();
    if gap_mag > 0.0 {
        state.tangential_gap = state.tangential_gap * (coulomb / (k_t * gap_mag));
    }
    trial * (-coulomb / trial_mag)
}

/// Viscous rolling resistance torque on particle i; opposes the relative
/// angular velocity component orthogonal to the normal. The partner receives
/// the exact negation.
pub fn rolling_torque(
    f_cn_magnitude: f64,
    r_eff: f64,
    d_r: f64,
    omega_i: Vec3,
    omega_j: Vec3,
    normal: Vec3,
) -> Vec3 {
    let delta_omega = (omega_i - omega_j).reject(normal);
    delta_omega * (-d_r * f_cn_magnitude * r_eff)
}

/// Adhesion force law for one pair: pull-off plateau magnitude, the gap `g0`
/// where the van der Waals curve reaches the plateau, and the outer cut-off
/// `g_star`.
#[derive(Clone, Copy, Debug)]
pub struct AdhesionLaw {
    /// Pull-off force magnitude, N.
    pub pull_off: f64,
    /// Plateau gap, m.
    pub g0: f64,
    /// Outer cut-off gap, m.
    pub g_star: f64,
}

/// Cut-off parameters of the regularized adhesion law. All branches are
/// attraction magnitudes; `g0` is independent of the pair radius because the
/// effective radius cancels between the force curve and the pull-off force.
pub fn adhesion_cutoffs(surface_energy: f64, hamaker: f64, r_eff: f64, c_fs0: f64) -> AdhesionLaw {
    if surface_energy <= 0.0 {
        return AdhesionLaw { pull_off: 0.0, g0: 0.0, g_star: 0.0 };
    }
    let pull_off = 4.0 * PI * surface_energy * r_eff;
    let g0 = (hamaker * r_eff / (6.0 * pull_off)).sqrt();
    AdhesionLaw { pull_off, g0, g_star: g0 / c_fs0.sqrt() }
}

/// Adhesive force on particle i: attraction along +n (toward j), plateau for
/// gaps up to `g0` (including penetration), van der Waals decay up to
/// `g_star`, zero beyond.
pub fn adhesive_force(gap: f64, normal: Vec3, law: &AdhesionLaw, hamaker: f64, r_eff: f64) -> Vec3 {
    normal * adhesive_magnitude(gap, law, hamaker, r_eff)
}

#[inline]
pub fn adhesive_magnitude(gap: f64, law: &AdhesionLaw, hamaker: f64, r_eff: f64) -> f64 {
    if law.pull_off == 0.0 || gap >= law.g_star {
        0.0
    } else if gap <= law.g0 {
        law.pull_off
    } else {
        hamaker * r_eff / (6.0 * gap * gap)
    }
}

/// Dimensionless ratio of the pull-off force to the gravity force on a
/// particle of mass `m`.
pub fn adhesion_gravity_ratio(surface_energy: f64, r_eff: f64, mass: f64, gravity: f64) -> f64 {
    4.0 * PI * surface_energy * r_eff / (mass * gravity)
}

/// Material-level constants shared by every pair evaluation of a run.
#[derive(Clone, Copy, Debug)]
pub struct ForceSetup {
    pub k_n: f64,
    pub k_t: f64,
    pub friction: f64,
    pub restitution: f64,
    pub surface_energy: f64,
    pub hamaker: f64,
    pub youngs: f64,
    pub poisson: f64,
    pub reference_velocity: f64,
    /// Plateau gap, identical for all pairs.
    pub g0: f64,
    /// Outer adhesion cut-off, identical for all pairs; zero when adhesion is off.
    pub g_star: f64,
    pub tension_cutoff: bool,
    /// Hoisted restitution factor: d_N = d_n_factor * sqrt(k_N * m_eff).
    d_n_factor: f64,
}

impl ForceSetup {
    pub fn new(mat: &MaterialParams) -> ForceSetup {
        let (k_t, _) = tangential_constants(mat.stiffness, mat.poisson, 0.0);
        // g0/g_star do not depend on r_eff; evaluate with any positive radius.
        let law = adhesion_cutoffs(mat.surface_energy, mat.hamaker, 1.0, mat.adhesion_decline);
        let l = mat.restitution.ln();
        ForceSetup {
            k_n: mat.stiffness,
            k_t,
            friction: mat.friction,
            restitution: mat.restitution,
            surface_energy: mat.surface_energy,
            hamaker: mat.hamaker,
            youngs: mat.youngs,
            poisson: mat.poisson,
            reference_velocity: mat.reference_velocity,
            g0: law.g0,
            g_star: law.g_star,
            tension_cutoff: true,
            d_n_factor: 2.0 * l.abs() / (l * l + PI * PI).sqrt(),
        }
    }

    /// Pair damping constant using the hoisted restitution factor; equal to
    /// [`damping_constant`] for this setup's restitution.
    #[inline]
    pub fn pair_damping(&self, m_eff: f64) -> f64 {
        self.d_n_factor * (self.k_n * m_eff).sqrt()
    }

    /// Center-distance cut-off for a pair with radius sum `r_sum`.
    #[inline]
    pub fn interaction_cutoff(&self, r_sum: f64) -> f64 {
        r_sum + self.g_star
    }
}

/// Everything one contact evaluation produces. Forces act on i; the partner
/// gets the exact negation plus its own torque.
#[derive(Clone, Copy, Debug)]
pub struct ContactOutput {
    pub force_i: Vec3,
    pub torque_i: Vec3,
    pub torque_j: Vec3,
    /// Updated tangential history; present iff the pair is touching.
    pub state: Option<PairContactState>,
    /// Penetration depth (positive, m) when touching; zero otherwise.
    pub penetration: f64,
}

/// Stability bound for the viscous rolling damping: per contact, the
/// relaxation rate of the relative spin is capped at this fraction of 1/dt.
/// The rolling time constant I/(d_R |f_CN| r_eff) can drop below the step
/// size once adhesion-loaded normal forces come in (the critical step
/// estimate only covers the normal spring), and an explicit update of a
/// faster-than-resolvable damping diverges. Capping keeps the torque purely
/// dissipative at the fastest rate the step can represent.
const ROLLING_RATE_LIMIT: f64 = 0.1;

/// Full force evaluation of one contact given its geometry and kinematics.
/// Used identically for particle-particle and particle-wall pairs; walls
/// enter with infinite mass/radius/inertia, their surface velocity and zero
/// spin. `inertia_red` is the reduced moment of inertia of the pair.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_contact(
    geom: &ContactGeometry,
    vel_i: Vec3,
    vel_j: Vec3,
    omega_i: Vec3,
    omega_j: Vec3,
    m_eff: f64,
    r_eff: f64,
    inertia_red: f64,
    prev: Option<&PairContactState>,
    setup: &ForceSetup,
    adhesion_enabled: bool,
    dt: f64,
) -> ContactOutput {
    let adhesion_on = adhesion_enabled && setup.surface_energy > 0.0;

    if geom.gap > 0.0 {
        // Out of mechanical contact: adhesion only.
        let mut force = Vec3::zero();
        if adhesion_on && geom.gap < setup.g_star {
            let mag = if geom.gap <= setup.g0 {
                4.0 * PI * setup.surface_energy * r_eff
            } else {
                setup.hamaker * r_eff / (6.0 * geom.gap * geom.gap)
            };
            force = geom.normal * mag;
        }
        return ContactOutput {
            force_i: force,
            torque_i: Vec3::zero(),
            torque_j: Vec3::zero(),
            state: None,
            penetration: 0.0,
        };
    }

    // Touching: full mechanical contact plus adhesion plateau.
    let d_n = setup.pair_damping(m_eff);
    let f_cn = normal_force_with_cutoff(geom, setup.k_n, d_n, setup.tension_cutoff);
    let f_cn_mag = f_cn.norm();

    let mut state = match prev {
        Some(s) => *s,
        None => {
            let d_r = rolling_coefficient(
                setup.restitution,
                setup.youngs,
                setup.poisson,
                r_eff,
                setup.reference_velocity,
            )
            .expect("reference velocity validated at setup");
            PairContactState::fresh(d_r)
        }
    };

    let gap_rate_t = tangential_gap_rate(vel_i, vel_j, omega_i, omega_j, geom);
    update_tangential_history(&mut state, gap_rate_t, dt, geom.normal);
    let f_ct = tangential_force(&mut state, gap_rate_t, f_cn_mag, setup.friction, setup.k_t, d_n);

    // Damping coefficient of the rolling torque, capped at the step-size
    // stability limit for this pair's reduced inertia.
    let rolling_damping = (state.rolling_coeff * f_cn_mag * r_eff)
        .min(ROLLING_RATE_LIMIT * inertia_red / dt);
    let m_r = (omega_i - omega_j).reject(geom.normal) * (-rolling_damping);

    let mut force_i = f_cn + f_ct;
    if adhesion_on {
        force_i += geom.normal * (4.0 * PI * setup.surface_energy * r_eff);
    }

    ContactOutput {
        force_i,
        torque_i: m_r + geom.offset_i.cross(f_ct),
        torque_j: -m_r + geom.offset_j.cross(-f_ct),
        state: Some(state),
        penetration: -geom.gap,
    }
}

/// Evaluate one particle-particle pair, or `None` when the pair is beyond
/// every interaction cut-off. `prev` is the pair's tangential history from
/// the previous step, if it was touching.
pub fn evaluate_pair(
    p_i: &crate::core::Particle,
    p_j: &crate::core::Particle,
    prev: Option<&PairContactState>,
    setup: &ForceSetup,
    dt: f64,
) -> Option<ContactOutput> {
    let delta = p_j.position - p_i.position;
    let cutoff = setup.interaction_cutoff(p_i.radius + p_j.radius);
    if delta.norm_squared() >= cutoff * cutoff {
        return None;
    }
    let geom = ContactGeometry::sphere_sphere(
        p_i.position,
        p_i.velocity,
        p_i.radius,
        p_j.position,
        p_j.velocity,
        p_j.radius,
    );
    let (m_eff, r_eff) = effective_pair(p_i.mass, p_j.mass, p_i.radius, p_j.radius);
    let inertia_red = 1.0 / (1.0 / p_i.moment_of_inertia() + 1.0 / p_j.moment_of_inertia());
    Some(evaluate_contact(
        &geom,
        p_i.velocity,
        p_j.velocity,
        p_i.angular_velocity,
        p_j.angular_velocity,
        m_eff,
        r_eff,
        inertia_red,
        prev,
        setup,
        true,
        dt,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{sphere_mass, Particle};

    const UM: f64 = 1e-6;

    fn geom(gap: f64, gap_rate: f64) -> ContactGeometry {
        let n = Vec3::new(0.0, 0.0, 1.0);
        ContactGeometry {
            normal: n,
            gap,
            gap_rate,
            offset_i: n * (17.0 * UM + 0.5 * gap),
            offset_j: n * (-(17.0 * UM + 0.5 * gap)),
        }
    }

    #[test]
    fn damping_zero_for_elastic() {
        assert_eq!(damping_constant(1.0, 0.05, 1e-11).unwrap(), 0.0);
        assert!(damping_constant(0.0, 0.05, 1e-11).is_err());
    }

    #[test]
    fn hoisted_damping_factor_matches_formula() {
        let mat = MaterialParams::default();
        let setup = ForceSetup::new(&mat);
        for &m_eff in &[1e-12, 4.558e-11, 9.1e-11] {
            let a = setup.pair_damping(m_eff);
            let b = damping_constant(mat.restitution, mat.stiffness, m_eff).unwrap();
            assert!((a - b).abs() / b < 1e-12);
        }
    }

    #[test]
    fn damping_reference_pair() {
        // Two equal d = 34 um Ti-6Al-4V particles.
        let m = sphere_mass(17.0 * UM, 4430.0);
        let m_eff = m / 2.0;
        assert!((m_eff - 4.558e-11).abs() / m_eff < 1e-3);
        let d_n = damping_constant(0.4, 0.05, m_eff).unwrap();
        assert!((d_n - 8.4539e-7).abs() / d_n < 1e-4, "d_n = {d_n:e}");
    }

    #[test]
    fn damping_inverts_to_restitution() {
        // Analytic half-period solution of the damped oscillator: the
        // outgoing/incoming speed ratio is exp(-delta * pi / omega_d).
        for &c in &[0.1, 0.4, 0.7, 0.95] {
            let m_eff = 4.5e-11;
            let k = 0.05;
            let d_n = damping_constant(c, k, m_eff).unwrap();
            let delta = d_n / (2.0 * m_eff);
            let omega0 = (k / m_eff).sqrt();
            let omega_d = (omega0 * omega0 - delta * delta).sqrt();
            let ratio = (-delta * PI / omega_d).exp();
            assert!((ratio - c).abs() < 1e-12, "c={c}: ratio {ratio}");
        }
    }

    #[test]
    fn min_stiffness_quasi_static() {
        let k = min_stiffness(4430.0, 0.0, 22.0 * UM, 0.1e-3, 0.025);
        assert!((k - 5.0265482e-2).abs() / k < 1e-6, "k = {k}");
        assert_eq!(min_stiffness(4430.0, 0.0, 22.0 * UM, 0.0, 0.025), 0.0);
    }

    #[test]
    fn min_stiffness_dynamic_dominates() {
        let k = min_stiffness(4430.0, 0.1, 22.0 * UM, 0.1e-3, 0.025);
        assert!((k - 39.191).abs() / k < 1e-3, "k = {k}");
        let (dynamic, adhesive) = stiffness_bound_terms(4430.0, 0.1, 22.0 * UM, 0.1e-3, 0.025);
        assert!(dynamic > adhesive);
    }

    #[test]
    fn tangential_constants_values() {
        let (k_t, d_t) = tangential_constants(0.05, 0.0, 7.0e-7);
        assert_eq!(k_t, 0.05);
        assert_eq!(d_t, 7.0e-7);
        let (k_t, _) = tangential_constants(0.05, 0.342, 0.0);
        assert!((k_t - 0.0396864).abs() < 1e-6, "k_t = {k_t}");
    }

    #[test]
    fn rolling_coefficient_values() {
        assert_eq!(rolling_coefficient(1.0, 110e9, 0.342, 8.5 * UM, 0.1).unwrap(), 0.0);
        let d_r = rolling_coefficient(0.4, 110e9, 0.342, 8.5 * UM, 0.1).unwrap();
        assert!((d_r - 1.7148e-2).abs() / d_r < 1e-3, "d_r = {d_r}");
        // Monotonically decreasing in impact velocity.
        let d_r2 = rolling_coefficient(0.4, 110e9, 0.342, 8.5 * UM, 0.2).unwrap();
        assert!(d_r2 < d_r);
        assert!(rolling_coefficient(0.4, 110e9, 0.342, 8.5 * UM, 0.0).is_err());
    }

    #[test]
    fn normal_force_branches() {
        // Separated: zero.
        assert_eq!(normal_force(&geom(1.0 * UM, 0.0), 0.05, 1e-6), Vec3::zero());
        // Penetrating, static: compressive 2e-8 N pushing i away from j (-n).
        let f = normal_force(&geom(-0.4 * UM, 0.0), 0.05, 1e-6);
        assert!((f.z + 2e-8).abs() < 1e-20, "f = {f:?}");
        // Fast separation: spring+dashpot sum positive gets clamped to zero.
        let f = normal_force(&geom(-1e-9, 1.0), 0.05, 1e-6);
        assert_eq!(f, Vec3::zero());
        // Without the cut-off the tensile value comes through.
        let f = normal_force_with_cutoff(&geom(-1e-9, 1.0), 0.05, 1e-6, false);
        assert!(f.z > 0.0);
    }

    #[test]
    fn gap_rate_cases() {
        let g = geom(-0.1 * UM, 0.0);
        // Identical velocities, no spin.
        let r = tangential_gap_rate(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0), Vec3::zero(), Vec3::zero(), &g);
        assert!(r.norm() < 1e-18);
        // Pure normal approach.
        let r = tangential_gap_rate(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0), Vec3::zero(), Vec3::zero(), &g);
        assert!(r.norm() < 1e-18);
        // Equal spins about the contact normal cancel.
        let w = Vec3::new(0.0, 0.0, 5.0);
        let r = tangential_gap_rate(Vec3::zero(), Vec3::zero(), w, w, &g);
        assert!(r.norm() < 1e-18);
        // Orthogonality for a generic state.
        let r = tangential_gap_rate(
            Vec3::new(0.3, -0.1, 0.7),
            Vec3::new(-0.2, 0.4, 0.1),
            Vec3::new(10.0, -3.0, 2.0),
            Vec3::new(-5.0, 1.0, 9.0),
            &g,
        );
        assert!(r.dot(g.normal).abs() <= 1e-12 * r.norm());
    }

    #[test]
    fn history_backward_euler() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let mut s = PairContactState::fresh(0.0);
        // Zero rate: unchanged.
        update_tangential_history(&mut s, Vec3::zero(), 1e-6, n);
        assert_eq!(s.tangential_gap, Vec3::zero());
        // One step of constant rate from zero.
        let rate = Vec3::new(0.01, 0.0, 0.0);
        update_tangential_history(&mut s, rate, 1e-6, n);
        assert_eq!(s.tangential_gap, Vec3::new(1e-8, 0.0, 0.0));
        // Re-projection strips any normal component.
        s.tangential_gap = Vec3::new(1e-8, 0.0, 5e-9);
        update_tangential_history(&mut s, Vec3::zero(), 1e-6, n);
        assert_eq!(s.tangential_gap.z, 0.0);
    }

    #[test]
    fn tangential_stick_and_slip() {
        let mut s = PairContactState::fresh(0.0);
        // No history, no rate: zero force.
        let f = tangential_force(&mut s, Vec3::zero(), 2e-8, 0.4, 0.04, 8e-7);
        assert_eq!(f, Vec3::zero());
        // Small trial below the bound: force equals the trial (stick).
        s.tangential_gap = Vec3::new(1e-10, 0.0, 0.0);
        let f = tangential_force(&mut s, Vec3::zero(), 2e-8, 0.4, 0.04, 8e-7);
        assert!((f.x + 0.04 * 1e-10).abs() < 1e-25);
        // Large trial: clamped at mu * |f_CN| = 8e-9 N and return-mapped.
        s.tangential_gap = Vec3::new(1e-3, 0.0, 0.0);
        let f = tangential_force(&mut s, Vec3::zero(), 2e-8, 0.4, 0.04, 8e-7);
        assert!((f.norm() - 8e-9).abs() < 1e-22, "f = {:?}", f);
        assert!(f.x < 0.0);
        let stored = s.tangential_gap.norm() * 0.04;
        assert!((stored - 8e-9).abs() < 1e-22, "stored elastic force {stored:e}");
    }

    #[test]
    fn sustained_sliding_converges_to_coulomb() {
        // Block-on-plane analogue: constant sliding rate, fixed normal force.
        let n = Vec3::new(0.0, 0.0, 1.0);
        let mut s = PairContactState::fresh(0.0);
        let rate = Vec3::new(0.05, 0.0, 0.0);
        let (k_t, d_t) = (0.04, 8.0e-7);
        let f_cn = 2e-8;
        let dt = 1e-6;
        for _ in 0..2000 {
            update_tangential_history(&mut s, rate, dt, n);
            let _ = tangential_force(&mut s, rate, f_cn, 0.4, k_t, d_t);
        }
        let stored = k_t * s.tangential_gap.norm();
        assert!((stored - 0.4 * f_cn).abs() / (0.4 * f_cn) < 1e-9, "stored {stored:e}");
    }

    #[test]
    fn rolling_torque_cases() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let w = Vec3::new(3.0, 1.0, -2.0);
        // Equal spins: zero.
        assert_eq!(rolling_torque(1e-8, 8.5 * UM, 0.017, w, w, n), Vec3::zero());
        // Relative spin purely about n: zero.
        let t = rolling_torque(1e-8, 8.5 * UM, 0.017, Vec3::new(0.0, 0.0, 4.0), Vec3::zero(), n);
        assert!(t.norm() < 1e-30);
        // Grazing contact with zero normal force: zero.
        assert_eq!(rolling_torque(0.0, 8.5 * UM, 0.017, w, Vec3::zero(), n), Vec3::zero());
        // Opposes the relative perpendicular spin.
        let t = rolling_torque(1e-8, 8.5 * UM, 0.017, Vec3::new(5.0, 0.0, 0.0), Vec3::zero(), n);
        assert!(t.x < 0.0 && t.y == 0.0 && t.z == 0.0);
    }

    #[test]
    fn adhesion_cutoff_values() {
        let law = adhesion_cutoffs(0.1e-3, 40e-20, 8.5 * UM, 0.01);
        assert!((law.pull_off - 1.0681e-8).abs() / law.pull_off < 1e-4, "F_S0 = {:e}", law.pull_off);
        assert!((law.g0 - 7.2837e-9).abs() / law.g0 < 1e-4, "g0 = {:e}", law.g0);
        assert!((law.g_star - 7.2837e-8).abs() / law.g_star < 1e-4);
        // c_FS0 = 1% puts the cut-off at exactly 10 g0.
        assert!((law.g_star / law.g0 - 10.0).abs() < 1e-12);
        // gamma = 0 disables adhesion.
        let off = adhesion_cutoffs(0.0, 40e-20, 8.5 * UM, 0.01);
        assert_eq!(off.pull_off, 0.0);
        assert_eq!(off.g_star, 0.0);
    }

    #[test]
    fn adhesive_force_branches() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let r_eff = 8.5 * UM;
        let law = adhesion_cutoffs(0.1e-3, 40e-20, r_eff, 0.01);
        // Penetrating: plateau, pulling i toward j (+n).
        let f = adhesive_force(-UM, n, &law, 40e-20, r_eff);
        assert!((f.z - law.pull_off).abs() < 1e-20);
        // At g0 exactly: van der Waals value equals the plateau (continuity).
        let vdw_at_g0 = 40e-20 * r_eff / (6.0 * law.g0 * law.g0);
        assert!((vdw_at_g0 - law.pull_off).abs() / law.pull_off < 1e-12);
        // Beyond the cut-off: zero.
        assert_eq!(adhesive_force(law.g_star, n, &law, 40e-20, r_eff), Vec3::zero());
        assert_eq!(adhesive_force(1.0, n, &law, 40e-20, r_eff), Vec3::zero());
        // Non-increasing magnitude across the whole range.
        let mut prev = f64::INFINITY;
        let mut g = -(2.0 * UM);
        while g < law.g_star * 1.5 {
            let mag = adhesive_magnitude(g, &law, 40e-20, r_eff);
            assert!(mag <= prev + 1e-25, "not monotone at gap {g:e}");
            prev = mag;
            g += 1e-9;
        }
    }

    #[test]
    fn adhesion_gravity_ratio_values() {
        let m = sphere_mass(17.0 * UM, 4430.0);
        let ratio = adhesion_gravity_ratio(0.1e-3, 8.5 * UM, m, 9.81);
        assert!(ratio > 11.0 && ratio < 15.0, "ratio = {ratio}");
        assert!((ratio - 11.944).abs() < 0.01, "ratio = {ratio}");
        assert_eq!(adhesion_gravity_ratio(0.0, 8.5 * UM, m, 9.81), 0.0);
        // Linear in gamma: 4x surface energy gives exactly 4x the ratio.
        let r4 = adhesion_gravity_ratio(0.4e-3, 8.5 * UM, m, 9.81);
        assert!((r4 / ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pair_evaluation_newton_third_law_symmetry() {
        let mat = MaterialParams::default();
        let setup = ForceSetup::new(&mat);
        let mut p_i = Particle::new(0, Vec3::zero(), 17.0 * UM, mat.density);
        let mut p_j = Particle::new(1, Vec3::new(33.5 * UM, 0.0, 0.0), 17.0 * UM, mat.density);
        p_i.velocity = Vec3::new(0.05, 0.01, 0.0);
        p_j.velocity = Vec3::new(-0.03, 0.0, 0.02);
        p_i.angular_velocity = Vec3::new(100.0, -50.0, 20.0);
        p_j.angular_velocity = Vec3::new(-30.0, 10.0, 0.0);
        let out = evaluate_pair(&p_i, &p_j, None, &setup, 1e-6).unwrap();
        assert!(out.state.is_some());
        assert!(out.penetration > 0.0);
        // The partner force is the exact negation by construction; check the
        // torques are finite and the normal force component is compressive.
        let n = (p_j.position - p_i.position).normalized();
        let geom = ContactGeometry::sphere_sphere(
            p_i.position, p_i.velocity, p_i.radius, p_j.position, p_j.velocity, p_j.radius,
        );
        let d_n = damping_constant_unchecked(setup.restitution, setup.k_n, 4.558e-11);
        let f_cn = normal_force(&geom, setup.k_n, d_n);
        assert!(f_cn.dot(n) <= 0.0);
        assert!(out.force_i.is_finite() && out.torque_i.is_finite() && out.torque_j.is_finite());
    }

    #[test]
    fn pair_evaluation_out_of_range_is_none() {
        let mat = MaterialParams::default();
        let setup = ForceSetup::new(&mat);
        let p_i = Particle::new(0, Vec3::zero(), 17.0 * UM, mat.density);
        let p_j = Particle::new(1, Vec3::new(100.0 * UM, 0.0, 0.0), 17.0 * UM, mat.density);
        assert!(evaluate_pair(&p_i, &p_j, None, &setup, 1e-6).is_none());
    }
}
