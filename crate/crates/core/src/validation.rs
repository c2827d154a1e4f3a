//! Self-check suite comparing the library against independent oracles.

use std::f64::consts::PI;
use std::fmt;

use crate::dynamics::{
    analytic_exp_bounce, max_reflect_height, propagate, propagate_with, turning_point,
    PropagateOptions, State, Termination,
};
use crate::error::FieldError;
use crate::field::{
    duty_factor, field_exact, harmonic_amplitude, HarmonicCoefficients, MirrorSpec, StripeCount,
};
use crate::potential::{force, potential_energy, AtomSpecies, PotentialModel};

/// Source of the first and third harmonic coefficients under test.
pub type CoefficientFn = fn(&MirrorSpec) -> Result<HarmonicCoefficients, FieldError>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured discrepancy in the check's own units.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:<4} value={:.3e} tol={:.1e} {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

fn check(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name,
        passed: value.is_finite() && value <= tolerance,
        value,
        tolerance,
        detail: detail.into(),
    }
}

fn failed(name: &'static str, tolerance: f64, err: impl fmt::Display) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        value: f64::NAN,
        tolerance,
        detail: format!("error: {err}"),
    }
}

fn reference_mirror() -> MirrorSpec {
    MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2).expect("valid reference mirror")
}

/// Runs every check with the library's own coefficient formula.
pub fn run_validation() -> Vec<CheckResult> {
    run_validation_with(MirrorSpec::harmonic_coefficients)
}

pub fn run_validation_with(coefficients: CoefficientFn) -> Vec<CheckResult> {
    vec![
        duty_factors(),
        coefficient_lattice(coefficients),
        single_stripe_quadrature(),
        max_height_formula(),
        turning_point_formula(),
        analytic_bounce(),
        energy_conservation(),
        force_gradient(),
        reflection_threshold(),
    ]
}

fn duty_factors() -> CheckResult {
    let cases = [
        (duty_factor(1, 1.0 / 3.0), (3.0f64).sqrt() / 2.0),
        (duty_factor(3, 1.0 / 3.0), 0.0),
        (duty_factor(3, 0.25), (0.5f64).sqrt()),
        (duty_factor(3, 0.5), -1.0),
        (duty_factor(1, 0.5), 1.0),
    ];
    let worst = cases
        .iter()
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    check("duty_factors", worst, 1e-15, "sin(n*pi*c/a) for c/a in {1/4, 1/3, 1/2}")
}

/// Infinite-array Fourier series: n = 1, 3 from `coefficients`, the rest
/// from the general amplitude formula.
fn fourier_series(
    spec: &MirrorSpec,
    c: &HarmonicCoefficients,
    x: f64,
    y: f64,
) -> (f64, f64) {
    let k = spec.wavenumber();
    let (mut bx, mut by) = (0.0, 0.0);
    for n in 1..=200u32 {
        let amp = match n {
            1 => c.b1_signed(),
            3 => c.b3_signed(),
            _ => harmonic_amplitude(spec, n),
        };
        let a = amp * (-(n as f64) * k * y).exp();
        let (s, co) = (n as f64 * k * x).sin_cos();
        bx -= a * co;
        by += a * s;
    }
    (bx, by)
}

/// Lattice sums over 2001 and 4001 stripes, extrapolated in 1/N to the
/// infinite array, against the Fourier series.
fn coefficient_lattice(coefficients: CoefficientFn) -> CheckResult {
    const NAME: &str = "coefficients_vs_lattice";
    const TOL: f64 = 1e-4;
    let spec = reference_mirror();
    let coeffs = match coefficients(&spec) {
        Ok(c) => c,
        Err(e) => return failed(NAME, TOL, e),
    };
    let a = spec.period;
    let mut worst: f64 = 0.0;
    for &(x, y) in &[(0.0, 0.25 * a), (0.3 * a, 0.5 * a), (0.0, a), (0.25 * a, a)] {
        let small = field_exact(&spec.with_stripes(StripeCount::Finite(2001)), x, y);
        let large = field_exact(&spec.with_stripes(StripeCount::Finite(4001)), x, y);
        let (small, large) = match (small, large) {
            (Ok(s), Ok(l)) => (s, l),
            (Err(e), _) | (_, Err(e)) => return failed(NAME, TOL, e),
        };
        let ex = 2.0 * large.bx - small.bx;
        let ey = 2.0 * large.by - small.by;
        let (fx, fy) = fourier_series(&spec, &coeffs, x, y);
        worst = worst.max((ex - fx).hypot(ey - fy) / fx.hypot(fy));
    }
    check(NAME, worst, TOL, "relative |B| mismatch, y in [a/4, a]")
}

/// One stripe against direct midpoint quadrature of its two charge sheets.
fn single_stripe_quadrature() -> CheckResult {
    const NAME: &str = "single_stripe_quadrature";
    let spec = reference_mirror().with_stripes(StripeCount::Finite(1));
    let (c, b) = (spec.stripe_width, spec.layer_thickness);
    let scale = crate::constants::MU0 * spec.magnetization / (2.0 * PI);
    let steps = 4000;
    let mut worst: f64 = 0.0;
    for &(x, y) in &[(0.0, 0.2e-6), (0.7e-6, 0.5e-6), (-1.3e-6, 2e-6)] {
        let exact = match field_exact(&spec, x, y) {
            Ok(v) => v,
            Err(e) => return failed(NAME, 1e-6, e),
        };
        let (mut qx, mut qy) = (0.0, 0.0);
        for (x0, sign) in [(0.5 * c, 1.0), (-0.5 * c, -1.0)] {
            for i in 0..steps {
                let yp = -b * (i as f64 + 0.5) / steps as f64;
                let (dx, dy) = (x - x0, y - yp);
                let r2 = dx * dx + dy * dy;
                qx += sign * dx / r2 * b / steps as f64;
                qy += sign * dy / r2 * b / steps as f64;
            }
        }
        let (qx, qy) = (scale * qx, scale * qy);
        worst = worst.max((exact.bx - qx).hypot(exact.by - qy) / qx.hypot(qy));
    }
    check(NAME, worst, 1e-6, "closed form vs 4000-point quadrature")
}

fn max_height_formula() -> CheckResult {
    let h = max_reflect_height(&AtomSpecies::cesium(), 0.1);
    // µB/(mg) with the cesium constants written out.
    let oracle = 9.2740e-24 * 0.1 / (2.2069e-25 * 9.81);
    check(
        "max_reflect_height",
        (h / oracle - 1.0).abs(),
        1e-12,
        format!("h_max(Cs, 0.1 T) = {h:.5} m"),
    )
}

fn turning_point_formula() -> CheckResult {
    const NAME: &str = "turning_points";
    let sp = AtomSpecies::cesium();
    let k = 2.0 * PI / 1e-6;
    let mut worst: f64 = 0.0;
    for (h, want) in [(2e-3, 0.85411e-6), (20e-3, 0.48764e-6)] {
        match turning_point(&sp, 0.1, k, h) {
            Ok(y) => worst = worst.max((y - want).abs()),
            Err(e) => return failed(NAME, 1e-10, e),
        }
    }
    check(NAME, worst, 1e-10, "a = 1 um, B1 = 0.1 T, drops 2 mm and 20 mm [m]")
}

fn analytic_bounce() -> CheckResult {
    const NAME: &str = "integrator_vs_analytic";
    const TOL: f64 = 1e-9;
    let sp = AtomSpecies::cesium();
    let (u0, k) = (sp.moment * 0.2, 2.0 * PI / 1e-6);
    let model = match PotentialModel::pure_exponential(u0, k) {
        Ok(m) => m,
        Err(e) => return failed(NAME, TOL, e),
    };
    let v = 0.6;
    let e = 0.5 * sp.mass * v * v;
    let y_t = (u0 / e).ln() / k;
    let z = 4.0f64.exp();
    let t_turn = 2.0 / (k * v) * (z + (z * z - 1.0).sqrt()).ln();
    let start = analytic_exp_bounce(u0, k, sp.mass, e, t_turn, 0.0);
    let opts = PropagateOptions {
        tol: 1e-10,
        gravity: 0.0,
        ..Default::default()
    };
    let traj = match propagate_with(&sp, &model, start, 2.0 * t_turn, &opts) {
        Ok(t) => t,
        Err(err) => return failed(NAME, TOL, err),
    };
    let mut worst: f64 = 0.0;
    for i in 0..=500 {
        let t = (2.0 * t_turn) * (i as f64 / 500.0);
        if let Some(s) = traj.state_at(t) {
            let a = analytic_exp_bounce(u0, k, sp.mass, e, t_turn, t);
            worst = worst.max((s.y - a.y).abs());
        } else {
            worst = f64::NAN;
        }
    }
    check(NAME, worst, TOL, format!("max |dy| [m], turning point {y_t:.3e} m"))
}

fn energy_conservation() -> CheckResult {
    const NAME: &str = "energy_conservation";
    const TOL: f64 = 1e-9;
    let sp = AtomSpecies::cesium();
    let spec = reference_mirror().with_bias(1e-5);
    let model = match PotentialModel::two_term(spec) {
        Ok(m) => m,
        Err(e) => return failed(NAME, TOL, e),
    };
    let s0 = State {
        vx: 0.02,
        ..State::at_rest(0.0, 3e-3)
    };
    let fall = (2.0 * 3e-3 / crate::constants::G_GRAV).sqrt();
    let traj = match propagate(&sp, &model, s0, 2.0 * fall, 1e-10) {
        Ok(t) => t,
        Err(e) => return failed(NAME, TOL, e),
    };
    match traj.energies(&sp, &model) {
        Ok(es) => {
            let drift = es
                .iter()
                .map(|e| (e / es[0] - 1.0).abs())
                .fold(0.0, f64::max);
            check(NAME, drift, TOL, "3 mm drop, bounce and rise, tol 1e-10")
        }
        Err(e) => failed(NAME, TOL, e),
    }
}

fn force_gradient() -> CheckResult {
    const NAME: &str = "force_vs_gradient";
    const TOL: f64 = 1e-6;
    let sp = AtomSpecies::cesium();
    let spec = MirrorSpec::with_surface_field(3e-6, 1.2e-6, 30e-9, 0.2)
        .expect("valid mirror")
        .with_bias(1e-5);
    let a = spec.period;
    let mut worst: f64 = 0.0;
    for model in [PotentialModel::two_term(spec), PotentialModel::full_expansion(spec)] {
        let model = match model {
            Ok(m) => m,
            Err(e) => return failed(NAME, TOL, e),
        };
        for i in 0..16 {
            let x = a * (i as f64 * 0.137).fract();
            let y = a * (0.3 + 0.11 * i as f64);
            let h = 1e-4 * a;
            let u = |x: f64, y: f64| potential_energy(&sp, &model, x, y);
            let grads = (|| -> Result<(f64, f64, (f64, f64)), FieldError> {
                let gx = -(u(x + h, y)? - u(x - h, y)?) / (2.0 * h);
                let gy = -(u(x, y + h)? - u(x, y - h)?) / (2.0 * h);
                Ok((gx, gy, force(&sp, &model, x, y)?))
            })();
            match grads {
                Ok((gx, gy, (fx, fy))) => {
                    let scale = gx.hypot(gy).max(sp.mass * crate::constants::G_GRAV);
                    worst = worst.max((fx - gx).hypot(fy - gy) / scale);
                }
                Err(e) => return failed(NAME, TOL, e),
            }
        }
    }
    check(NAME, worst, TOL, "analytic force vs central difference")
}

fn reflection_threshold() -> CheckResult {
    const NAME: &str = "reflection_threshold";
    let sp = AtomSpecies::cesium();
    let b0 = 0.01;
    let model = match PotentialModel::pure_exponential(sp.moment * b0, 2.0 * PI / 3e-6) {
        Ok(m) => m,
        Err(e) => return failed(NAME, 0.0, e),
    };
    let h_max = max_reflect_height(&sp, b0);
    let mut mismatches = 0.0;
    for (factor, reflects) in [(1.0 - 1e-5, true), (1.0 + 1e-5, false)] {
        let h = h_max * factor;
        let t_end = 1.5 * (2.0 * h / crate::constants::G_GRAV).sqrt();
        match propagate(&sp, &model, State::at_rest(0.0, h), t_end, 1e-10) {
            Ok(t) => {
                if (t.termination != Termination::Penetrated) != reflects {
                    mismatches += 1.0;
                }
            }
            Err(e) => return failed(NAME, 0.0, e),
        }
    }
    check(NAME, mismatches, 0.0, "drops at h_max*(1 -/+ 1e-5)")
}
