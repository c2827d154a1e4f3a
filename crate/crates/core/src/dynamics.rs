//! Classical motion of an adiabatically following atom under gravity and
//! the mirror's Zeeman potential, plus closed-form bounce kinematics.

use crate::constants::{G_GRAV, HBAR};
use crate::error::{DynamicsError, FieldError};
use crate::field::MirrorSpec;
use crate::integrator::{bisect, try_step, DenseSegment, Phase};
use crate::potential::{AtomSpecies, PotentialModel};

/// Event times are refined to this resolution [s].
pub const EVENT_TIME_TOL: f64 = 1e-12;
/// Default magnetic-energy fraction that defines "interacting with the mirror".
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Adiabaticity margins are reported up to this value.
pub const MARGIN_CAP: f64 = 1e12;

// Absolute error floors: position [m], velocity [m/s], multiplied by tol.
const POSITION_FLOOR: f64 = 1e-9;
const VELOCITY_FLOOR: f64 = 1e-6;
const MIN_STEP: f64 = 1e-16;

/// Instantaneous phase-space point of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub t: f64,
}

impl State {
    pub fn at_rest(x: f64, y: f64) -> Self {
        State {
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            t: 0.0,
        }
    }

    fn phase(&self) -> Phase {
        [self.x, self.y, self.vx, self.vy]
    }

    fn from_phase(p: Phase, t: f64) -> Self {
        State {
            x: p[0],
            y: p[1],
            vx: p[2],
            vy: p[3],
            t,
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn kinetic_energy(&self, species: &AtomSpecies) -> f64 {
        0.5 * species.mass * (self.vx * self.vx + self.vy * self.vy)
    }
}

/// Summary of one surface reflection (or of the final penetration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceEvent {
    pub t_turn: f64,
    pub y_turn: f64,
    pub x_at_turn: f64,
    /// Time spent with mirror energy above ε × mechanical energy [s].
    pub interaction_time: f64,
    pub penetrated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested end time.
    Completed,
    /// Crossed y = 0; the atom is lost.
    Penetrated,
    /// Left the mirror laterally; the atom is lost.
    LeftMirror,
    /// Stopped at the first lower turning point on request.
    Bounced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    /// Per-step relative error bound.
    pub tol: f64,
    /// Gravitational acceleration along −y [m/s²].
    pub gravity: f64,
    /// Terminate when |x| exceeds this [m].
    pub lateral_limit: Option<f64>,
    pub stop_at_bounce: bool,
    /// Threshold used for the interaction time stored in bounce records.
    pub epsilon: f64,
    pub max_steps: usize,
}

impl PropagateOptions {
    pub fn new(tol: f64) -> Self {
        PropagateOptions {
            tol,
            ..Default::default()
        }
    }
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            tol: 1e-9,
            gravity: G_GRAV,
            lateral_limit: None,
            stop_at_bounce: false,
            epsilon: DEFAULT_EPSILON,
            max_steps: 5_000_000,
        }
    }
}

/// Samples, dense output and events of one propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Accepted step ends plus event-refined points, in time order.
    pub samples: Vec<State>,
    pub segments: Vec<DenseSegment>,
    pub bounces: Vec<BounceEvent>,
    /// Upper turning points (vy from + to −).
    pub apexes: Vec<State>,
    pub termination: Termination,
    /// Total mechanical energy at the initial state [J].
    pub initial_energy: f64,
    pub gravity: f64,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_final(&self) -> f64 {
        self.samples.last().expect("non-empty trajectory").t
    }

    pub fn final_state(&self) -> State {
        *self.samples.last().expect("non-empty trajectory")
    }

    /// Dense-output state at `t`, or `None` outside the propagated span.
    pub fn state_at(&self, t: f64) -> Option<State> {
        if t < self.t_start() || t > self.t_final() {
            return None;
        }
        if self.segments.is_empty() {
            return Some(State { t, ..self.samples[0] });
        }
        let idx = self
            .segments
            .partition_point(|s| s.t1() < t)
            .min(self.segments.len() - 1);
        Some(State::from_phase(self.segments[idx].eval(t), t))
    }

    /// Total mechanical energy along the samples [J].
    pub fn energies(
        &self,
        species: &AtomSpecies,
        model: &PotentialModel,
    ) -> Result<Vec<f64>, FieldError> {
        self.samples
            .iter()
            .map(|s| mechanical_energy(species, model, self.gravity, s))
            .collect()
    }
}

/// ½mv² + µ|B| + m·g·y [J].
pub fn mechanical_energy(
    species: &AtomSpecies,
    model: &PotentialModel,
    gravity: f64,
    s: &State,
) -> Result<f64, FieldError> {
    Ok(s.kinetic_energy(species)
        + model.magnetic_energy_unchecked(species, s.x, s.y)?
        + species.mass * gravity * s.y)
}

/// Adaptive Dormand–Prince propagation with event detection.
pub fn propagate(
    species: &AtomSpecies,
    model: &PotentialModel,
    s0: State,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory, DynamicsError> {
    propagate_with(species, model, s0, t_end, &PropagateOptions::new(tol))
}

pub fn propagate_with(
    species: &AtomSpecies,
    model: &PotentialModel,
    s0: State,
    t_end: f64,
    opts: &PropagateOptions,
) -> Result<Trajectory, DynamicsError> {
    species.validate()?;
    if !(s0.y > 0.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "initial height must be above the surface, got y = {}",
            s0.y
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if !(t_end >= s0.t) {
        return Err(DynamicsError::InvalidInput(format!(
            "end time {t_end} precedes start time {}",
            s0.t
        )));
    }

    let m = species.mass;
    let g = opts.gravity;
    let k = model.wavenumber();
    let bias_energy = model.bias_energy(species);
    let mut rhs = |_t: f64, p: &Phase| -> Result<Phase, FieldError> {
        let (fx, fy) = model.magnetic_force_unchecked(species, p[0], p[1])?;
        Ok([p[2], p[3], fx / m, fy / m - g])
    };

    let initial_energy = mechanical_energy(species, model, g, &s0)?;
    let mut traj = Trajectory {
        samples: vec![s0],
        segments: Vec::new(),
        bounces: Vec::new(),
        apexes: Vec::new(),
        termination: Termination::Completed,
        initial_energy,
        gravity: g,
    };

    let mut t = s0.t;
    let mut y = s0.phase();
    let mut k1 = rhs(t, &y)?;
    let mut h = (1e-6f64).min(t_end - t);
    let atol = [
        opts.tol * POSITION_FLOOR,
        opts.tol * POSITION_FLOOR,
        opts.tol * VELOCITY_FLOOR,
        opts.tol * VELOCITY_FLOOR,
    ];
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(DynamicsError::IntegrationFailure {
                t,
                reason: format!("exceeded {} steps", opts.max_steps),
            });
        }

        // Resolve the exponential wall: at most 0.05 decay lengths per step.
        let here = State::from_phase(y, t);
        let mirror_energy = model.magnetic_energy_unchecked(species, y[0], y[1])? - bias_energy;
        if mirror_energy > 1e-3 * here.kinetic_energy(species) && y[3] != 0.0 {
            h = h.min(0.05 / (k * y[3].abs()));
        }
        h = h.min(t_end - t);
        if t + h == t {
            break;
        }

        let trial = match try_step(&mut rhs, t, &y, &k1, h) {
            Ok(trial) => trial,
            Err(_) => {
                // A stage left the model's domain; retry with a smaller step.
                h *= 0.25;
                if h < MIN_STEP {
                    if y[3] < 0.0 && y[1] * k < 1e-3 {
                        traj.termination = Termination::Penetrated;
                        traj.bounces.push(BounceEvent {
                            t_turn: t,
                            y_turn: 0.0,
                            x_at_turn: y[0],
                            interaction_time: 0.0,
                            penetrated: true,
                        });
                        break;
                    }
                    return Err(DynamicsError::IntegrationFailure {
                        t,
                        reason: "step size underflow at the model domain boundary".into(),
                    });
                }
                continue;
            }
        };

        let mut err: f64 = 0.0;
        for i in 0..4 {
            let sc = atol[i] + opts.tol * y[i].abs().max(trial.y_new[i].abs());
            let ratio = trial.error[i].abs() / sc;
            if !(ratio <= err) {
                err = ratio;
            }
            if !trial.y_new[i].is_finite() {
                err = f64::NAN;
            }
        }
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac;
            if h < MIN_STEP {
                return Err(DynamicsError::IntegrationFailure {
                    t,
                    reason: format!("step size underflow (error ratio {err:e})"),
                });
            }
            continue;
        }

        let seg = trial.dense;
        let t_new = if h >= t_end - t { t_end } else { t + h };
        let y_new = trial.y_new;

        // Terminal events: penetration, then lateral exit.
        let mut terminal: Option<(f64, Termination)> = None;
        if y_new[1] <= 0.0 {
            let tp = bisect(|tt| seg.eval(tt)[1], t, t_new, EVENT_TIME_TOL);
            terminal = Some((tp, Termination::Penetrated));
        }
        if let Some(limit) = opts.lateral_limit {
            if y_new[0].abs() > limit {
                let tl = bisect(|tt| seg.eval(tt)[0].abs() - limit, t, t_new, EVENT_TIME_TOL);
                if terminal.is_none_or(|(tp, _)| tl < tp) {
                    terminal = Some((tl, Termination::LeftMirror));
                }
            }
        }

        // Turning points.
        let (vy_old, vy_new) = (y[3], y_new[3]);
        let bouncing = vy_old < 0.0 && vy_new >= 0.0;
        let cresting = vy_old > 0.0 && vy_new <= 0.0;
        let mut stop_here: Option<State> = None;
        if bouncing || cresting {
            let tt = if vy_new == 0.0 {
                t_new
            } else {
                bisect(|tt| seg.eval(tt)[3], t, t_new, EVENT_TIME_TOL)
            };
            // A turn below the surface means the atom crossed y = 0 and
            // came back within this step.
            if bouncing && seg.eval(tt)[1] <= 0.0 {
                let tp = bisect(|tt| seg.eval(tt)[1], t, tt, EVENT_TIME_TOL);
                if terminal.is_none_or(|(t0, _)| tp < t0) {
                    terminal = Some((tp, Termination::Penetrated));
                }
            }
            if terminal.is_none_or(|(tp, _)| tt <= tp) {
                let st = State::from_phase(seg.eval(tt), tt);
                if bouncing {
                    traj.bounces.push(BounceEvent {
                        t_turn: tt,
                        y_turn: st.y,
                        x_at_turn: st.x,
                        interaction_time: 0.0,
                        penetrated: false,
                    });
                    if opts.stop_at_bounce {
                        stop_here = Some(st);
                    }
                } else {
                    traj.apexes.push(st);
                }
                if tt < t_new && stop_here.is_none() {
                    traj.samples.push(st);
                }
            }
        }

        traj.segments.push(seg);

        if let Some(st) = stop_here {
            traj.samples.push(st);
            traj.termination = Termination::Bounced;
            break;
        }
        if let Some((tp, kind)) = terminal {
            let st = State::from_phase(traj.segments.last().unwrap().eval(tp), tp);
            traj.samples.push(st);
            traj.termination = kind;
            if kind == Termination::Penetrated {
                traj.bounces.push(BounceEvent {
                    t_turn: tp,
                    y_turn: 0.0,
                    x_at_turn: st.x,
                    interaction_time: 0.0,
                    penetrated: true,
                });
            }
            break;
        }

        traj.samples.push(State::from_phase(y_new, t_new));
        t = t_new;
        y = y_new;
        k1 = trial.k_new;
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
    }

    let windows: Vec<f64> = traj
        .bounces
        .iter()
        .map(|b| mirror_window(&traj, species, model, b.t_turn, opts.epsilon))
        .collect::<Result<_, _>>()?;
    for (b, w) in traj.bounces.iter_mut().zip(windows) {
        b.interaction_time = w;
    }
    Ok(traj)
}

/// Length of the interval around `t_turn` where the mirror's energy exceeds
/// `epsilon` × the mechanical energy (bias contribution removed from both).
fn mirror_window(
    traj: &Trajectory,
    species: &AtomSpecies,
    model: &PotentialModel,
    t_turn: f64,
    epsilon: f64,
) -> Result<f64, FieldError> {
    if traj.segments.is_empty() {
        return Ok(0.0);
    }
    let bias = model.bias_energy(species);
    let threshold = epsilon * (traj.initial_energy - bias);
    let t_lo = traj.t_start();
    let t_hi = traj.t_final();
    let excess = |t: f64| -> f64 {
        let s = traj.state_at(t).expect("time inside trajectory");
        match model.magnetic_energy_unchecked(species, s.x, s.y) {
            Ok(u) => u - bias - threshold,
            Err(_) => f64::INFINITY,
        }
    };
    if excess(t_turn) <= 0.0 {
        return Ok(0.0);
    }
    let idx = traj
        .segments
        .partition_point(|s| s.t1() < t_turn)
        .min(traj.segments.len() - 1);

    let mut start = t_lo;
    for j in (0..=idx).rev() {
        let seg = &traj.segments[j];
        let a = seg.t0.max(t_lo);
        if excess(a) <= 0.0 {
            let b = seg.t1().min(t_turn);
            start = bisect(excess, a, b, EVENT_TIME_TOL);
            break;
        }
    }
    let mut end = t_hi;
    for seg in &traj.segments[idx..] {
        let b = seg.t1().min(t_hi);
        if excess(b) <= 0.0 {
            let a = seg.t0.max(t_turn);
            end = bisect(excess, a, b, EVENT_TIME_TOL);
            break;
        }
        if b >= t_hi {
            break;
        }
    }
    Ok(end - start)
}

/// Exact 1D bounce off `u0·e^(−ky)` without gravity, turning at `t_turn`.
///
/// y(t) = y_t + (2/k) ln cosh(k v (t − t_turn)/2), with v = √(2E/m) and
/// y_t = ln(u0/E)/k.
pub fn analytic_exp_bounce(u0: f64, k: f64, mass: f64, energy: f64, t_turn: f64, t: f64) -> State {
    let v = (2.0 * energy / mass).sqrt();
    let y_t = (u0 / energy).ln() / k;
    let z = 0.5 * k * v * (t - t_turn);
    let za = z.abs();
    // ln cosh z without overflow.
    let ln_cosh = za + (-2.0 * za).exp().ln_1p() - std::f64::consts::LN_2;
    State {
        x: 0.0,
        y: y_t + 2.0 / k * ln_cosh,
        vx: 0.0,
        vy: v * z.tanh(),
        t,
    }
}

/// Highest drop a surface field `b_surface` [T] can reflect: µB/(m·g) [m].
pub fn max_reflect_height(species: &AtomSpecies, b_surface: f64) -> f64 {
    species.moment * b_surface / (species.mass * G_GRAV)
}

/// Turning height ln(µB1/(m·g·h))/k of an atom dropped from rest at `drop_height`.
pub fn turning_point(
    species: &AtomSpecies,
    b1: f64,
    k: f64,
    drop_height: f64,
) -> Result<f64, DynamicsError> {
    let drop_energy = species.mass * G_GRAV * drop_height;
    let ratio = species.moment * b1 / drop_energy;
    if !(ratio >= 1.0) {
        return Err(DynamicsError::Penetration {
            drop_height,
            required_b1: drop_energy / species.moment,
        });
    }
    Ok(ratio.ln() / k)
}

/// Corrugation-to-exponential ratio (B3/B1)·e^(−2k·y_t) at the turning point.
pub fn harmonic_ratio_at_turning(
    spec: &MirrorSpec,
    species: &AtomSpecies,
    drop_height: f64,
) -> Result<f64, DynamicsError> {
    let c = spec.harmonic_coefficients()?;
    let y_t = turning_point(species, c.b1, c.k, drop_height)?;
    if c.b3 == 0.0 {
        return Ok(0.0);
    }
    Ok(c.b3 / c.b1 * (-2.0 * c.k * y_t).exp())
}

/// Duration of the first bounce's mirror interaction at threshold `epsilon`.
pub fn interaction_time(
    trajectory: &Trajectory,
    species: &AtomSpecies,
    model: &PotentialModel,
    epsilon: f64,
) -> Result<f64, DynamicsError> {
    let first = trajectory.bounces.first().ok_or(DynamicsError::NoBounce)?;
    Ok(mirror_window(trajectory, species, model, first.t_turn, epsilon)?)
}

/// Minimum over the trajectory of ω_Larmor / |dθ/dt|, where θ is the
/// in-plane field angle and ω_Larmor = µ|B|/ħ. Values are capped at
/// [`MARGIN_CAP`].
pub fn adiabaticity_margin(
    trajectory: &Trajectory,
    species: &AtomSpecies,
    spec: &MirrorSpec,
) -> Result<f64, DynamicsError> {
    let c = spec.harmonic_coefficients()?;
    let bias = spec.bias_field;
    let midpoints = trajectory
        .segments
        .iter()
        .map(|s| State::from_phase(s.eval(s.t0 + 0.5 * s.h), s.t0 + 0.5 * s.h));
    let mut margin = MARGIN_CAP;
    for s in trajectory.samples.iter().copied().chain(midpoints) {
        if s.y <= 0.0 {
            continue;
        }
        let v = c.vector(s.x, s.y, bias);
        let total = v.magnitude();
        let in_plane = v.in_plane_magnitude();
        if total == 0.0 {
            return Err(FieldError::UndefinedDirection { x: s.x, y: s.y }.into());
        }
        if in_plane < f64::MIN_POSITIVE {
            // Field lies along the bias: direction is static.
            continue;
        }
        let (dbx, dby) = c.vector_rate(s.x, s.y, s.vx, s.vy);
        let (ux, uy) = (v.bx / in_plane, v.by / in_plane);
        let rate = ((ux * dby - uy * dbx) / in_plane).abs();
        let omega = species.moment * total / HBAR;
        if rate > 0.0 {
            margin = margin.min(omega / rate);
        }
    }
    Ok(margin)
}
