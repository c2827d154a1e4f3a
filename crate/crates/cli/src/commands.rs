use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use stripe_mirror::io::{self as csv, num, FieldSample};
use stripe_mirror::{
    adiabaticity_margin, default_post_window, fit_expansion, harmonic_ratio_at_turning,
    max_reflect_height, propagate_with, run_ensemble, run_validation, specularity_test,
    turning_point, CloudTimeSeries, FieldError, PropagateOptions, SpecularityOptions,
    SpecularityReport, State, Termination,
};

use crate::config::{dimension_of, parse_quantity, Dimension, ModelKind, RawConfig, RunConfig};
use crate::error::CliError;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Context {
    fn create(&self, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        Ok((BufWriter::new(File::create(&path)?), path))
    }
}

/// Ordered `key = value` report.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    fn text(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, num(value))
    }

    fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    }

    fn emit<W: Write>(&self, out: W, ctx: &Context, file: Option<&str>) -> Result<(), CliError> {
        self.write_to(out)?;
        if let Some(name) = file {
            let (mut f, _) = ctx.create(name)?;
            self.write_to(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }
}

fn field_err(e: FieldError) -> CliError {
    CliError::Config(e.to_string())
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::Penetrated => "penetrated",
        Termination::LeftMirror => "left-mirror",
        Termination::Bounced => "bounced",
    }
}

pub fn coeffs<W: Write>(cfg: &RunConfig, ctx: &Context, out: W) -> Result<(), CliError> {
    let m = &cfg.mirror;
    let c = m.harmonic_coefficients().map_err(field_err)?;
    let sp = &cfg.species;
    let drop = cfg.ensemble.release_height;
    let mut r = Report::default();
    r.text("command", "coeffs")
        .text("model", cfg.model.name())
        .num("a_m", m.period)
        .num("c_m", m.stripe_width)
        .num("b_m", m.layer_thickness)
        .num("duty_ratio", m.duty_ratio())
        .num("M0_A_per_m", m.magnetization)
        .text("B1_input", &cfg.b1_input)
        .num("B1_T", c.b1)
        .num("B1_G", c.b1 * 1e4)
        .num("B3_T", c.b3)
        .num("B3_signed_T", c.b3_signed())
        .num("duty1", c.duty1)
        .num("duty3", c.duty3)
        .num("k_per_m", c.k)
        .num("bias_T", m.bias_field)
        .text("species", &sp.name)
        .num("h_max_m", max_reflect_height(sp, c.b1))
        .num("drop_m", drop);
    match turning_point(sp, c.b1, c.k, drop) {
        Ok(y) => {
            r.text("penetrates", false).num("turning_point_m", y);
            if let Ok(ratio) = harmonic_ratio_at_turning(m, sp, drop) {
                r.num("harmonic_ratio_at_turning", ratio);
            }
        }
        Err(_) => {
            r.text("penetrates", true);
        }
    }
    r.emit(out, ctx, None)
}

/// Field vector and magnitude at one point for the configured model.
pub fn field_sample(cfg: &RunConfig, x: f64, y: f64) -> Result<FieldSample, CliError> {
    let m = &cfg.mirror;
    let c = m.harmonic_coefficients().map_err(field_err)?;
    let (vector, magnitude) = match cfg.model {
        ModelKind::ExactStripes => {
            let v = stripe_mirror::field_exact(m, x, y).map_err(field_err)?;
            (v, v.magnitude())
        }
        ModelKind::TwoTerm => (
            m.field_vector_expansion(x, y).map_err(field_err)?,
            m.field_two_term(x, y).map_err(field_err)?,
        ),
        ModelKind::FullExpansion => (
            m.field_vector_expansion(x, y).map_err(field_err)?,
            m.field_full_expansion(x, y).map_err(field_err)?,
        ),
        ModelKind::PureExponential => {
            let v = m.field_vector_expansion(x, y).map_err(field_err)?;
            (v, (c.b1 * (-c.k * y).exp()).hypot(m.bias_field))
        }
    };
    Ok(FieldSample {
        x,
        y,
        vector,
        magnitude,
    })
}

pub fn field_map<W: Write>(cfg: &RunConfig, ctx: &Context, mut out: W) -> Result<(), CliError> {
    let rows = cfg
        .grid
        .points()
        .into_iter()
        .map(|(x, y)| field_sample(cfg, x, y))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut f, path) = ctx.create("field_map.csv")?;
    csv::write_field_map(&mut f, &rows)?;
    f.flush()?;
    writeln!(out, "field_map = {}", path.display())?;
    writeln!(out, "rows = {}", rows.len())?;
    Ok(())
}

pub fn drop<W: Write>(cfg: &RunConfig, ctx: &Context, out: W) -> Result<(), CliError> {
    let model = cfg.potential()?;
    let sp = &cfg.species;
    let e = &cfg.ensemble;
    let s0 = State {
        x: 0.0,
        y: e.release_height,
        vx: e.mean_velocity.0,
        vy: e.mean_velocity.1,
        t: 0.0,
    };
    let opts = PropagateOptions {
        tol: cfg.tol,
        lateral_limit: Some(cfg.lateral_limit),
        epsilon: cfg.epsilon,
        ..Default::default()
    };
    let traj = propagate_with(sp, &model, s0, cfg.t_max, &opts)?;
    let energies = traj.energies(sp, &model).map_err(|e| CliError::Integration(e.to_string()))?;
    let (mut f, path) = ctx.create("trajectory.csv")?;
    csv::write_trajectory(&mut f, &traj.samples, &energies)?;
    f.flush()?;

    let drift = energies
        .iter()
        .map(|x| (x / energies[0] - 1.0).abs())
        .fold(0.0, f64::max);
    let penetrated = traj.termination == Termination::Penetrated;
    let mut r = Report::default();
    r.text("command", "drop")
        .text("model", cfg.model.name())
        .num("drop_m", e.release_height)
        .num("t_max_s", cfg.t_max)
        .num("tol", cfg.tol)
        .num("epsilon", cfg.epsilon)
        .text("termination", termination_name(traj.termination))
        .text("penetrated", penetrated)
        .text("n_bounces", traj.bounces.iter().filter(|b| !b.penetrated).count());
    let mut i = 0;
    for b in traj.bounces.iter().filter(|b| !b.penetrated) {
        i += 1;
        r.num(format!("bounce_{i}_t_s"), b.t_turn)
            .num(format!("bounce_{i}_y_turn_m"), b.y_turn)
            .num(format!("bounce_{i}_x_m"), b.x_at_turn)
            .num(format!("bounce_{i}_interaction_time_s"), b.interaction_time);
    }
    if let Some(b) = traj.bounces.iter().find(|b| b.penetrated) {
        r.num("penetration_t_s", b.t_turn);
    }
    for (j, a) in traj.apexes.iter().enumerate() {
        r.num(format!("apex_{}_t_s", j + 1), a.t)
            .num(format!("apex_{}_y_m", j + 1), a.y);
    }
    r.num("energy_drift", drift);
    match adiabaticity_margin(&traj, sp, &cfg.mirror) {
        Ok(m) => r.num("adiabaticity_margin", m),
        Err(_) => r.text("adiabaticity_margin", "undefined"),
    };
    r.text("trajectory", path.display());
    r.emit(out, ctx, Some("drop_report.txt"))
}

pub fn ensemble<W: Write>(cfg: &RunConfig, ctx: &Context, out: W) -> Result<(), CliError> {
    let model = cfg.potential()?;
    let run = run_ensemble(
        &cfg.ensemble,
        &cfg.species,
        &model,
        &cfg.ensemble_options(ctx.threads),
    )?;
    let (mut f, path) = ctx.create("ensemble.csv")?;
    csv::write_series(&mut f, &run.series)?;
    f.flush()?;
    let (mut f, bounce_path) = ctx.create("bounces.csv")?;
    csv::write_bounce_records(&mut f, &run.records)?;
    f.flush()?;

    let last = run.series.snapshots.last().expect("non-empty series");
    let mut r = Report::default();
    r.text("command", "ensemble")
        .text("model", cfg.model.name())
        .text("n_atoms", cfg.ensemble.n_atoms)
        .text("seed", cfg.ensemble.seed)
        .num("temperature_K", cfg.ensemble.temperature)
        .num("sigma_v_ms", cfg.ensemble.thermal_velocity(&cfg.species))
        .num("release_height_m", cfg.ensemble.release_height)
        .num("kick", cfg.kick)
        .text("n_snapshots", run.series.snapshots.len())
        .text("n_survivors_final", last.n_survivors)
        .num("survival_fraction_final", last.n_survivors as f64 / cfg.ensemble.n_atoms as f64)
        .text("series", path.display())
        .text("bounce_records", bounce_path.display());
    r.emit(out, ctx, None)
}

/// Expansion fit and specularity test with the configured windows.
pub fn analyse_series(
    cfg: &RunConfig,
    series: &CloudTimeSeries,
) -> Result<SpecularityReport, CliError> {
    let a = &cfg.analysis;
    let fit = fit_expansion(series, a.fit_window)?;
    let post = a
        .post_window
        .unwrap_or_else(|| default_post_window(series, a.fit_window));
    let opts = SpecularityOptions {
        threshold_sigma: a.threshold_sigma,
        guard: a.guard,
    };
    Ok(specularity_test(series, &fit, post, &opts)?)
}

pub fn analyze<W: Write>(
    cfg: &RunConfig,
    ctx: &Context,
    series_path: &Path,
    out: W,
) -> Result<(), CliError> {
    let text = fs::read_to_string(series_path)?;
    let series = csv::parse_series(&text)?;
    let report = analyse_series(cfg, &series)?;
    let (mut f, path) = ctx.create("residuals.csv")?;
    csv::write_residuals(&mut f, &report)?;
    f.flush()?;

    let fit = &report.pre_fit;
    let mut r = Report::default();
    r.text("command", "analyze")
        .num("fit_t_min_s", fit.fit_window.0)
        .num("fit_t_max_s", fit.fit_window.1)
        .text("n_fit", fit.n_fit)
        .num("slope_ms", fit.slope)
        .num("intercept_m", fit.intercept)
        .num("fit_residual_rms_m", fit.residual_rms)
        .num("post_t_min_s", report.post_window.0)
        .num("post_t_max_s", report.post_window.1)
        .num("guard_s", cfg.analysis.guard)
        .text(
            "guard_intervals_s",
            report
                .guard_intervals
                .iter()
                .map(|g| format!("{}:{}", num(g.0), num(g.1)))
                .collect::<Vec<_>>()
                .join(" "),
        )
        .text("n_post", report.n_post)
        .num("post_residual_mean_m", report.post_residual_mean)
        .num("post_residual_rms_m", report.post_residual_rms)
        .num("standard_error_m", report.standard_error)
        .num("statistic", report.statistic)
        .num("threshold_sigma", report.threshold_sigma)
        .text("verdict", report.verdict)
        .text("residuals", path.display());
    r.emit(out, ctx, Some("analysis_report.txt"))
}

pub const SWEEP_HEADER: &str = "parameter,value_si,duty1,duty3,b1_T,b3_T,h_max_m,turning_point_m,interaction_time_s,survival_fraction,specularity_statistic";

fn sweep_row(cfg: &RunConfig, threads: Option<usize>) -> Result<[f64; 9], CliError> {
    let c = cfg.mirror.harmonic_coefficients().map_err(field_err)?;
    let sp = &cfg.species;
    let e = &cfg.ensemble;
    let model = cfg.potential()?;
    let turning = turning_point(sp, c.b1, c.k, e.release_height).unwrap_or(f64::NAN);
    let opts = PropagateOptions {
        tol: cfg.tol,
        lateral_limit: Some(cfg.lateral_limit),
        epsilon: cfg.epsilon,
        ..Default::default()
    };
    let s0 = State::at_rest(0.0, e.release_height);
    let traj = propagate_with(sp, &model, s0, cfg.t_max, &opts)?;
    let interaction = traj
        .bounces
        .first()
        .filter(|b| !b.penetrated)
        .map_or(f64::NAN, |b| b.interaction_time);
    let run = run_ensemble(e, sp, &model, &cfg.ensemble_options(threads))?;
    let survival = run
        .series
        .survival_fraction(cfg.t_max.min(*e.snapshot_times.last().unwrap()))?;
    let statistic = analyse_series(cfg, &run.series).map_or(f64::NAN, |r| r.statistic);
    Ok([
        c.duty1,
        c.duty3,
        c.b1,
        c.b3,
        max_reflect_height(sp, c.b1),
        turning,
        interaction,
        survival,
        statistic,
    ])
}

pub fn sweep<W: Write>(
    raw: &RawConfig,
    ctx: &Context,
    param: &str,
    values: &[String],
    mut out: W,
) -> Result<(), CliError> {
    match dimension_of(param) {
        None => return Err(CliError::Config(format!("sweep: unknown parameter `{param}`"))),
        Some(Dimension::Text) => {
            return Err(CliError::Config(format!(
                "sweep: parameter `{param}` is not numeric"
            )))
        }
        Some(_) => {}
    }
    if values.is_empty() {
        return Err(CliError::Config("sweep: no values given".into()));
    }
    let dim = dimension_of(param).unwrap();
    let mut table = String::new();
    table.push_str(SWEEP_HEADER);
    table.push('\n');
    for v in values {
        let mut raw = raw.clone();
        raw.set(param, v)?;
        let cfg = RunConfig::from_raw(&raw)?;
        let si = parse_quantity(param, v, dim)?;
        let row = sweep_row(&cfg, ctx.threads)?;
        table.push_str(param);
        table.push(',');
        table.push_str(&num(si));
        for x in row {
            table.push(',');
            table.push_str(&num(x));
        }
        table.push('\n');
    }
    let (mut f, _) = ctx.create("sweep.csv")?;
    f.write_all(table.as_bytes())?;
    f.flush()?;
    out.write_all(table.as_bytes())?;
    Ok(())
}

pub fn validate<W: Write>(mut out: W) -> Result<(), CliError> {
    let results = run_validation();
    for r in &results {
        writeln!(out, "{r}")?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(out, "validation = {} of {} checks passed", results.len() - failed, results.len())?;
    if failed > 0 {
        return Err(CliError::Validation(failed));
    }
    Ok(())
}
