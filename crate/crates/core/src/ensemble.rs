//! Deterministic Monte Carlo propagation of a released atom cloud.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::constants::K_B;
use crate::dynamics::{propagate_with, BounceEvent, PropagateOptions, State, Termination, Trajectory};
use crate::error::{DynamicsError, EnsembleError};
use crate::potential::{AtomSpecies, PotentialModel};

/// Half-width of the 1 cm mirror [m]; atoms beyond it are lost.
pub const MIRROR_HALF_WIDTH: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_atoms: usize,
    /// Cloud temperature [K].
    pub temperature: f64,
    /// Cloud centre height at release [m].
    pub release_height: f64,
    /// Initial rms radii [m].
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Mean release velocity (vx, vy) [m/s].
    pub mean_velocity: (f64, f64),
    pub seed: u64,
    /// Strictly increasing, non-negative snapshot times [s].
    pub snapshot_times: Vec<f64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |msg: String| Err(EnsembleError::InvalidSpec(msg));
        if self.n_atoms == 0 {
            return bad("n_atoms must be at least 1".into());
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.release_height > 0.0) || !self.release_height.is_finite() {
            return bad(format!(
                "release_height must be > 0, got {}",
                self.release_height
            ));
        }
        if !(self.sigma_x >= 0.0 && self.sigma_y >= 0.0) {
            return bad("cloud radii must be >= 0".into());
        }
        if !(self.mean_velocity.0.is_finite() && self.mean_velocity.1.is_finite()) {
            return bad("mean velocity must be finite".into());
        }
        if self.snapshot_times.is_empty() {
            return bad("at least one snapshot time is required".into());
        }
        if !(self.snapshot_times[0] >= 0.0) {
            return bad("snapshot times must be >= 0".into());
        }
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("snapshot times must be strictly increasing".into());
        }
        if !self.snapshot_times.last().unwrap().is_finite() {
            return bad("snapshot times must be finite".into());
        }
        Ok(())
    }

    /// Per-axis thermal velocity spread √(k_B T / m) [m/s].
    pub fn thermal_velocity(&self, species: &AtomSpecies) -> f64 {
        (K_B * self.temperature / species.mass).sqrt()
    }
}

/// Evenly spaced snapshot times 0, dt, 2dt, … up to and including `t_max`.
pub fn uniform_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Cloud statistics over the atoms still on the mirror at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub mean_y: f64,
    pub rms_x: f64,
    pub rms_y: f64,
    pub mean_vx: f64,
    pub rms_vx: f64,
    pub n_survivors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudTimeSeries {
    pub n_atoms: usize,
    pub snapshots: Vec<Snapshot>,
}

impl CloudTimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Fraction of atoms surviving at the last snapshot at or before `t`.
    pub fn survival_fraction(&self, t: f64) -> Result<f64, EnsembleError> {
        let (first, last) = match (self.snapshots.first(), self.snapshots.last()) {
            (Some(f), Some(l)) => (f.t, l.t),
            _ => {
                return Err(EnsembleError::OutOfRange {
                    t,
                    t_min: f64::NAN,
                    t_max: f64::NAN,
                })
            }
        };
        if !(t >= first && t <= last) {
            return Err(EnsembleError::OutOfRange {
                t,
                t_min: first,
                t_max: last,
            });
        }
        let idx = self.snapshots.partition_point(|s| s.t <= t) - 1;
        Ok(self.snapshots[idx].n_survivors as f64 / self.n_atoms as f64)
    }
}

/// Run-level settings that are not part of the cloud description.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOptions {
    pub tol: f64,
    /// Worker count; `None` uses all available cores.
    pub threads: Option<usize>,
    pub lateral_limit: f64,
    /// Multiply vx by this factor at every lower turning point.
    pub velocity_kick: Option<f64>,
    pub epsilon: f64,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            tol: 1e-9,
            threads: None,
            lateral_limit: MIRROR_HALF_WIDTH,
            velocity_kick: None,
            epsilon: crate::dynamics::DEFAULT_EPSILON,
        }
    }
}

/// How and when one atom's propagation ended.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub index: usize,
    pub initial: State,
    pub bounces: Vec<BounceEvent>,
    pub fate: Termination,
    /// Time the atom left the ensemble, if it did.
    pub loss_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub series: CloudTimeSeries,
    pub records: Vec<AtomRecord>,
}

fn atom_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Initial state of atom `index`, drawn from its own random stream.
pub fn sample_initial(spec: &EnsembleSpec, species: &AtomSpecies, index: usize) -> State {
    let mut rng = atom_rng(spec.seed, index);
    let sigma_v = spec.thermal_velocity(species);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = spec.sigma_x * normal();
    let y = spec.release_height + spec.sigma_y * normal();
    let vx = spec.mean_velocity.0 + sigma_v * normal();
    let vy = spec.mean_velocity.1 + sigma_v * normal();
    State { x, y, vx, vy, t: 0.0 }
}

struct AtomOutcome {
    record: AtomRecord,
    /// (x, y, vx) at each snapshot, or `None` once lost.
    samples: Vec<Option<(f64, f64, f64)>>,
}

fn simulate_atom(
    spec: &EnsembleSpec,
    species: &AtomSpecies,
    model: &PotentialModel,
    opts: &EnsembleOptions,
    index: usize,
) -> Result<AtomOutcome, DynamicsError> {
    let initial = sample_initial(spec, species, index);
    let times = &spec.snapshot_times;
    let t_end = *times.last().expect("validated non-empty");
    let mut record = AtomRecord {
        index,
        initial,
        bounces: Vec::new(),
        fate: Termination::Completed,
        loss_time: None,
    };
    if !(initial.y > 0.0) || initial.x.abs() > opts.lateral_limit {
        record.fate = if initial.y > 0.0 {
            Termination::LeftMirror
        } else {
            Termination::Penetrated
        };
        record.loss_time = Some(0.0);
        return Ok(AtomOutcome {
            record,
            samples: vec![None; times.len()],
        });
    }

    let popts = PropagateOptions {
        tol: opts.tol,
        lateral_limit: Some(opts.lateral_limit),
        stop_at_bounce: opts.velocity_kick.is_some(),
        epsilon: opts.epsilon,
        ..Default::default()
    };
    let mut pieces: Vec<Trajectory> = Vec::new();
    let mut start = initial;
    loop {
        let traj = propagate_with(species, model, start, t_end, &popts)?;
        record.bounces.extend(traj.bounces.iter().copied());
        let end = traj.final_state();
        let termination = traj.termination;
        pieces.push(traj);
        match termination {
            Termination::Bounced => {
                let factor = opts.velocity_kick.unwrap_or(1.0);
                start = State {
                    vx: end.vx * factor,
                    ..end
                };
                if end.t >= t_end {
                    break;
                }
            }
            Termination::Completed => break,
            lost => {
                record.fate = lost;
                record.loss_time = Some(end.t);
                break;
            }
        }
    }

    let alive_until = record.loss_time.unwrap_or(f64::INFINITY);
    let mut piece = 0;
    let samples = times
        .iter()
        .map(|&t| {
            if t >= alive_until {
                return None;
            }
            while piece + 1 < pieces.len() && t > pieces[piece].t_final() {
                piece += 1;
            }
            let s = pieces[piece].state_at(t)?;
            Some((s.x, s.y, s.vx))
        })
        .collect();
    Ok(AtomOutcome { record, samples })
}

fn fold_snapshot(t: f64, outcomes: &[AtomOutcome], slot: usize) -> Snapshot {
    let alive = || outcomes.iter().filter_map(|o| o.samples[slot]);
    let n = alive().count();
    if n == 0 {
        return Snapshot {
            t,
            mean_y: f64::NAN,
            rms_x: f64::NAN,
            rms_y: f64::NAN,
            mean_vx: f64::NAN,
            rms_vx: f64::NAN,
            n_survivors: 0,
        };
    }
    let nf = n as f64;
    let (mut sx, mut sy, mut svx) = (0.0, 0.0, 0.0);
    for (x, y, vx) in alive() {
        sx += x;
        sy += y;
        svx += vx;
    }
    let (mx, my, mvx) = (sx / nf, sy / nf, svx / nf);
    let (mut vxx, mut vyy, mut vvv) = (0.0, 0.0, 0.0);
    for (x, y, vx) in alive() {
        vxx += (x - mx) * (x - mx);
        vyy += (y - my) * (y - my);
        vvv += (vx - mvx) * (vx - mvx);
    }
    Snapshot {
        t,
        mean_y: my,
        rms_x: (vxx / nf).sqrt(),
        rms_y: (vyy / nf).sqrt(),
        mean_vx: mvx,
        rms_vx: (vvv / nf).sqrt(),
        n_survivors: n,
    }
}

/// Propagates every atom to the last snapshot time and reduces the cloud
/// statistics in atom-index order, so the result does not depend on the
/// number of workers.
pub fn run_ensemble(
    spec: &EnsembleSpec,
    species: &AtomSpecies,
    model: &PotentialModel,
    opts: &EnsembleOptions,
) -> Result<EnsembleRun, EnsembleError> {
    spec.validate()?;
    species
        .validate()
        .map_err(|e| EnsembleError::InvalidSpec(e.to_string()))?;
    if !(opts.tol > 0.0) {
        return Err(EnsembleError::InvalidSpec(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if !(opts.lateral_limit > 0.0) {
        return Err(EnsembleError::InvalidSpec(
            "lateral limit must be positive".into(),
        ));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| EnsembleError::ThreadPool(e.to_string()))?;

    let results: Vec<Result<AtomOutcome, DynamicsError>> = pool.install(|| {
        (0..spec.n_atoms)
            .into_par_iter()
            .map(|i| simulate_atom(spec, species, model, opts, i))
            .collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(source) => {
                return Err(EnsembleError::Atom {
                    index,
                    seed: spec.seed,
                    source,
                })
            }
        }
    }

    let snapshots = spec
        .snapshot_times
        .iter()
        .enumerate()
        .map(|(slot, &t)| fold_snapshot(t, &outcomes, slot))
        .collect();
    Ok(EnsembleRun {
        series: CloudTimeSeries {
            n_atoms: spec.n_atoms,
            snapshots,
        },
        records: outcomes.into_iter().map(|o| o.record).collect(),
    })
}
