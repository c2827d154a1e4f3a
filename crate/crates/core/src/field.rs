//! Magnetic field above a periodic array of in-plane magnetized stripes.
//!
//! The array lies in the plane y = 0 (magnetic layer at −b ≤ y ≤ 0), the
//! stripes run along z and the magnetization points along x. Two families of
//! evaluators live here:
//!
//! * harmonic expansions of the infinite array ([`HarmonicCoefficients`]),
//!   used on the hot path of the dynamics, and
//! * the exact field of a finite number of stripes ([`field_exact`]), built
//!   from closed-form magnetic-charge sheets and used as an oracle.
//!
//! All quantities are SI. A uniform bias field along z is added in quadrature.

use std::f64::consts::PI;

use crate::constants::MU0;
use crate::error::FieldError;

/// Duty factors smaller than this are exact zeros polluted by rounding.
const DUTY_ZERO: f64 = 1e-12;

/// Number of stripes in the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripeCount {
    Finite(u32),
    Infinite,
}

/// Geometry and magnetization of the stripe array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSpec {
    /// Magnetization period `a` [m].
    pub period: f64,
    /// Width `c` of one magnetized stripe [m].
    pub stripe_width: f64,
    /// Thickness `b` of the magnetic layer [m].
    pub layer_thickness: f64,
    /// Remanent magnetization `M0` of the stripes [A/m].
    pub magnetization: f64,
    pub stripes: StripeCount,
    /// Uniform bias field along the stripe axis z [T].
    pub bias_field: f64,
}

impl MirrorSpec {
    /// Infinite array without bias field.
    pub fn new(
        period: f64,
        stripe_width: f64,
        layer_thickness: f64,
        magnetization: f64,
    ) -> Result<Self, FieldError> {
        let spec = MirrorSpec {
            period,
            stripe_width,
            layer_thickness,
            magnetization,
            stripes: StripeCount::Infinite,
            bias_field: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec whose duty-corrected first-harmonic coefficient equals
    /// `b1` [T], back-solving the magnetization.
    pub fn with_surface_field(
        period: f64,
        stripe_width: f64,
        layer_thickness: f64,
        b1: f64,
    ) -> Result<Self, FieldError> {
        if !(b1 > 0.0 && b1.is_finite()) {
            return Err(FieldError::InvalidGeometry(format!(
                "target surface field must be positive, got {b1} T"
            )));
        }
        let mut spec = MirrorSpec::new(period, stripe_width, layer_thickness, 1.0)?;
        let per_unit_m0 = spec.harmonic_coefficients()?.b1;
        spec.magnetization = b1 / per_unit_m0;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_stripes(mut self, stripes: StripeCount) -> Self {
        self.stripes = stripes;
        self
    }

    pub fn with_bias(mut self, bias_field: f64) -> Self {
        self.bias_field = bias_field;
        self
    }

    /// Checks every geometric invariant, naming the first one violated.
    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |msg: String| Err(FieldError::InvalidGeometry(msg));
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period_a must be positive, got {}", self.period));
        }
        if !(self.stripe_width > 0.0 && self.stripe_width < self.period) {
            return bad(format!(
                "stripe_width_c must satisfy 0 < c < a, got c = {} with a = {}",
                self.stripe_width, self.period
            ));
        }
        if !(self.layer_thickness > 0.0 && self.layer_thickness.is_finite()) {
            return bad(format!(
                "layer_thickness_b must be positive, got {}",
                self.layer_thickness
            ));
        }
        if !(self.magnetization > 0.0 && self.magnetization.is_finite()) {
            return bad(format!(
                "magnetization_M0 must be positive, got {}",
                self.magnetization
            ));
        }
        if !self.bias_field.is_finite() {
            return bad(format!("bias_field_Bz must be finite, got {}", self.bias_field));
        }
        if let StripeCount::Finite(n) = self.stripes {
            if n == 0 || n % 2 == 0 {
                return bad(format!("n_stripes must be a positive odd integer, got {n}"));
            }
        }
        Ok(())
    }

    /// Wavenumber k = 2π/a [1/m].
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Duty ratio c/a.
    pub fn duty_ratio(&self) -> f64 {
        self.stripe_width / self.period
    }

    /// Duty-corrected first and third harmonic amplitudes.
    pub fn harmonic_coefficients(&self) -> Result<HarmonicCoefficients, FieldError> {
        self.validate()?;
        let k = self.wavenumber();
        let kb = k * self.layer_thickness;
        let ratio = self.duty_ratio();
        let duty1 = duty_factor(1, ratio);
        let duty3 = duty_factor(3, ratio);
        let scale = MU0 * self.magnetization;
        let b1_raw = scale * (-(-kb).exp_m1()) / PI;
        let b3_raw = scale * (-(-3.0 * kb).exp_m1()) / (3.0 * PI);
        Ok(HarmonicCoefficients {
            b1: (b1_raw * duty1).abs(),
            b3: (b3_raw * duty3).abs(),
            duty1,
            duty3,
            k,
        })
    }

    /// Two-harmonic magnitude `|B1 e^(−ky) + B3 e^(−3ky) cos 2kx|` with the
    /// bias added in quadrature.
    pub fn field_two_term(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        check_above(y)?;
        Ok(self.harmonic_coefficients()?.two_term(x, y, self.bias_field))
    }

    /// Magnitude from the three-term squared expansion, bias in quadrature.
    pub fn field_full_expansion(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        check_above(y)?;
        self.harmonic_coefficients()?
            .full_expansion(x, y, self.bias_field)
    }

    /// Field vector of the two-harmonic expansion.
    pub fn field_vector_expansion(&self, x: f64, y: f64) -> Result<FieldVector, FieldError> {
        check_above(y)?;
        Ok(self.harmonic_coefficients()?.vector(x, y, self.bias_field))
    }
}

/// Signed amplitude µ0·M0·(1 − e^(−nkb))/(nπ) · sin(nπc/a) of harmonic `n`
/// of the infinite array [T].
pub fn harmonic_amplitude(spec: &MirrorSpec, harmonic: u32) -> f64 {
    let n = harmonic as f64;
    let kb = spec.wavenumber() * spec.layer_thickness;
    MU0 * spec.magnetization * (-(-n * kb).exp_m1()) / (n * PI)
        * duty_factor(harmonic, spec.duty_ratio())
}

/// sin(nπ c/a), with rounding-level values snapped to an exact zero.
pub fn duty_factor(harmonic: u32, duty_ratio: f64) -> f64 {
    let s = (harmonic as f64 * PI * duty_ratio).sin();
    if s.abs() < DUTY_ZERO {
        0.0
    } else {
        s
    }
}

fn check_above(y: f64) -> Result<(), FieldError> {
    if y > 0.0 {
        Ok(())
    } else {
        Err(FieldError::BelowSurface { y })
    }
}

/// Duty-corrected harmonic amplitudes of the infinite array.
///
/// `b1` and `b3` are magnitudes; the signs of the duty factors are kept in
/// `duty1`/`duty3` so the phase of the corrugation term survives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicCoefficients {
    pub b1: f64,
    pub b3: f64,
    pub duty1: f64,
    pub duty3: f64,
    pub k: f64,
}

impl HarmonicCoefficients {
    pub fn b1_signed(&self) -> f64 {
        self.b1.copysign(self.duty1)
    }

    pub fn b3_signed(&self) -> f64 {
        if self.duty3 == 0.0 {
            0.0
        } else {
            self.b3.copysign(self.duty3)
        }
    }

    /// Signed mirror part of the two-term expansion. Defined for any y so the
    /// integrator may probe slightly below the surface.
    #[inline]
    pub fn two_term_mirror(&self, x: f64, y: f64) -> f64 {
        let e1 = (-self.k * y).exp();
        let b3 = self.b3_signed();
        if b3 == 0.0 {
            self.b1 * e1
        } else {
            self.b1 * e1 + b3 * e1 * e1 * e1 * (2.0 * self.k * x).cos()
        }
    }

    #[inline]
    pub fn two_term(&self, x: f64, y: f64, bias: f64) -> f64 {
        self.two_term_mirror(x, y).hypot(bias)
    }

    /// Gradient (∂|B|/∂x, ∂|B|/∂y) of the two-term magnitude.
    pub fn two_term_gradient(&self, x: f64, y: f64, bias: f64) -> (f64, f64) {
        let k = self.k;
        let e1 = (-k * y).exp();
        let e3 = e1 * e1 * e1;
        let b3 = self.b3_signed();
        let (s2, c2) = (2.0 * k * x).sin_cos();
        let bm = self.b1 * e1 + b3 * e3 * c2;
        let mag = bm.hypot(bias);
        if mag == 0.0 {
            return (0.0, 0.0);
        }
        let dbm_dx = -2.0 * k * b3 * e3 * s2;
        let dbm_dy = -k * self.b1 * e1 - 3.0 * k * b3 * e3 * c2;
        (bm * dbm_dx / mag, bm * dbm_dy / mag)
    }

    /// Mirror part of B² from the three printed terms of the expansion,
    /// `B1²e^(−2ky) + 2B1B3 cos(2kx) e^(−4ky) + B3² e^(−9ky)`.
    #[inline]
    pub fn full_expansion_squared(&self, x: f64, y: f64) -> f64 {
        let k = self.k;
        let b3 = self.b3_signed();
        self.b1 * self.b1 * (-2.0 * k * y).exp()
            + 2.0 * self.b1 * b3 * (2.0 * k * x).cos() * (-4.0 * k * y).exp()
            + b3 * b3 * (-9.0 * k * y).exp()
    }

    pub fn full_expansion(&self, x: f64, y: f64, bias: f64) -> Result<f64, FieldError> {
        let sq = self.full_expansion_squared(x, y);
        if sq < 0.0 {
            return Err(FieldError::NegativeSquaredField { value: sq, y });
        }
        Ok((sq + bias * bias).sqrt())
    }

    pub fn full_expansion_gradient(
        &self,
        x: f64,
        y: f64,
        bias: f64,
    ) -> Result<(f64, f64), FieldError> {
        let mag = self.full_expansion(x, y, bias)?;
        if mag == 0.0 {
            return Ok((0.0, 0.0));
        }
        let k = self.k;
        let b3 = self.b3_signed();
        let (s2, c2) = (2.0 * k * x).sin_cos();
        let e2 = (-2.0 * k * y).exp();
        let e4 = (-4.0 * k * y).exp();
        let e9 = (-9.0 * k * y).exp();
        let dsq_dx = -4.0 * k * self.b1 * b3 * s2 * e4;
        let dsq_dy =
            -2.0 * k * self.b1 * self.b1 * e2 - 8.0 * k * self.b1 * b3 * c2 * e4 - 9.0 * k * b3 * b3 * e9;
        Ok((dsq_dx / (2.0 * mag), dsq_dy / (2.0 * mag)))
    }

    /// Vector sum of the first and third rotating harmonics.
    ///
    /// Harmonic n contributes `B_n e^(−nky) (−cos nkx, sin nkx)`, so the
    /// in-plane field rotates once per period.
    pub fn vector(&self, x: f64, y: f64, bias: f64) -> FieldVector {
        let k = self.k;
        let a1 = self.b1_signed() * (-k * y).exp();
        let a3 = self.b3_signed() * (-3.0 * k * y).exp();
        let (s1, c1) = (k * x).sin_cos();
        let (s3, c3) = (3.0 * k * x).sin_cos();
        FieldVector {
            bx: -a1 * c1 - a3 * c3,
            by: a1 * s1 + a3 * s3,
            bz: bias,
        }
    }

    /// Time derivative of the in-plane field vector seen by an atom moving
    /// with velocity (vx, vy) through the two-harmonic field.
    pub fn vector_rate(&self, x: f64, y: f64, vx: f64, vy: f64) -> (f64, f64) {
        let k = self.k;
        let mut dbx = 0.0;
        let mut dby = 0.0;
        for (n, amp) in [(1.0, self.b1_signed()), (3.0, self.b3_signed())] {
            if amp == 0.0 {
                continue;
            }
            let a = amp * (-n * k * y).exp();
            let (s, c) = (n * k * x).sin_cos();
            let nk = n * k;
            // Bx = −a cos, By = a sin; ∂a/∂y = −nk a.
            dbx += nk * a * s * vx + nk * a * c * vy;
            dby += nk * a * c * vx - nk * a * s * vy;
        }
        (dbx, dby)
    }
}

/// Cartesian field vector [T].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldVector {
    pub fn magnitude(&self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }

    pub fn in_plane_magnitude(&self) -> f64 {
        self.bx.hypot(self.by)
    }

    /// Angle of the in-plane component, atan2(By, Bx).
    pub fn in_plane_angle(&self) -> f64 {
        self.by.atan2(self.bx)
    }
}

/// Exact 2D field of a finite array of uniformly magnetized stripes.
///
/// Stripe j is centered at x = j·a (j symmetric about zero), spans
/// −b ≤ y ≤ 0 and carries magnetization +M0 along x; the gaps are empty.
/// Each stripe is represented by two magnetic-charge sheets of density ±M0
/// on its x-faces. A vertical sheet of density σ at x0 gives
///
/// ```text
/// Bx = µ0σ/2π · atan(b·u / (u² + y(y+b)))
/// By = µ0σ/4π · ln((u² + (y+b)²) / (u² + y²)),   u = x − x0
/// ```
pub fn field_exact(spec: &MirrorSpec, x: f64, y: f64) -> Result<FieldVector, FieldError> {
    spec.validate()?;
    let n = match spec.stripes {
        StripeCount::Finite(n) => n,
        StripeCount::Infinite => return Err(FieldError::InfiniteArray),
    };
    let a = spec.period;
    let half_c = 0.5 * spec.stripe_width;
    let b = spec.layer_thickness;
    let half_n = (n / 2) as i64;
    if y <= 0.0 {
        let j = (x / a).round();
        if y >= -b && (x - j * a).abs() <= half_c && j.abs() <= half_n as f64 {
            return Err(FieldError::InsideLayer { x, y });
        }
        return Err(FieldError::BelowSurface { y });
    }

    let y_yb = y * (y + b);
    let lift = 2.0 * y * b + b * b;
    let mut bx = 0.0;
    let mut by = 0.0;
    for j in -half_n..=half_n {
        let center = j as f64 * a;
        let u_pos = x - (center + half_c);
        let u_neg = x - (center - half_c);
        bx += (b * u_pos / (u_pos * u_pos + y_yb)).atan()
            - (b * u_neg / (u_neg * u_neg + y_yb)).atan();
        by += 0.5
            * ((lift / (u_pos * u_pos + y * y)).ln_1p() - (lift / (u_neg * u_neg + y * y)).ln_1p());
    }
    let scale = MU0 * spec.magnetization / (2.0 * PI);
    Ok(FieldVector {
        bx: scale * bx,
        by: scale * by,
        bz: spec.bias_field,
    })
}

/// In-plane direction of the field, atan2(By, Bx).
///
/// Finite arrays use [`field_exact`]; infinite arrays use the two-harmonic
/// vector expansion.
pub fn field_direction_angle(spec: &MirrorSpec, x: f64, y: f64) -> Result<f64, FieldError> {
    let v = match spec.stripes {
        StripeCount::Finite(_) => field_exact(spec, x, y)?,
        StripeCount::Infinite => spec.field_vector_expansion(x, y)?,
    };
    if v.in_plane_magnitude() == 0.0 {
        return Err(FieldError::UndefinedDirection { x, y });
    }
    Ok(v.in_plane_angle())
}

#[cfg(test)]
mod tests {
    use super::*;

    const UM: f64 = 1e-6;

    fn reference_mirror() -> MirrorSpec {
        MirrorSpec::with_surface_field(3.0 * UM, 1.0 * UM, 30e-9, 0.2).unwrap()
    }

    fn square_mirror() -> MirrorSpec {
        MirrorSpec::new(3.0 * UM, 1.5 * UM, 30e-9, 8e5).unwrap()
    }

    /// Independent sheet field by midpoint quadrature over the layer depth.
    fn sheet_by_quadrature(sigma_m0: f64, x0: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
        let n = 20_000;
        let dy = b / n as f64;
        let (mut hx, mut hy) = (0.0, 0.0);
        for i in 0..n {
            let yp = -b + (i as f64 + 0.5) * dy;
            let (u, v) = (x - x0, y - yp);
            let r2 = u * u + v * v;
            hx += u / r2 * dy;
            hy += v / r2 * dy;
        }
        let s = MU0 * sigma_m0 / (2.0 * PI);
        (s * hx, s * hy)
    }

    #[test]
    fn third_harmonic_vanishes_at_one_third_duty() {
        let c = reference_mirror().harmonic_coefficients().unwrap();
        assert_eq!(c.b3, 0.0);
        assert!((c.duty1 - (PI / 3.0).sin()).abs() < 1e-15);
        assert!((c.duty1 - 0.8660).abs() < 1e-4);
        assert!((3.0 * PI / 3.0).sin().abs() < 1e-12);
    }

    #[test]
    fn square_array_has_unit_duty_factors() {
        let c = square_mirror().harmonic_coefficients().unwrap();
        assert!((c.duty1 - 1.0).abs() < 1e-15);
        assert!((c.duty3 + 1.0).abs() < 1e-15);
        let kb = c.k * 30e-9;
        let expected = (1.0 - (-3.0 * kb).exp()) / (3.0 * (1.0 - (-kb).exp()));
        assert!((c.b3 / c.b1 - expected).abs() < 1e-12);
        assert!(expected > 1.0 / 3.0 && expected < 1.0);
    }

    #[test]
    fn thick_layer_limit() {
        let spec = MirrorSpec::new(1e-6, 0.25e-6, 1e-3, 1e6).unwrap();
        let c = spec.harmonic_coefficients().unwrap();
        let limit = MU0 * 1e6 * (PI / 4.0).sin() / PI;
        assert!((c.b1 / limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surface_field_back_solve() {
        let spec = reference_mirror();
        let c = spec.harmonic_coefficients().unwrap();
        assert!((c.b1 - 0.2).abs() < 1e-14);
    }

    #[test]
    fn invalid_geometry_names_invariant() {
        let err = MirrorSpec::new(1e-6, 2e-6, 30e-9, 1e6).unwrap_err();
        assert!(err.to_string().contains("stripe_width_c"));
        let err = MirrorSpec::new(1e-6, 0.5e-6, 0.0, 1e6).unwrap_err();
        assert!(err.to_string().contains("layer_thickness_b"));
        let even = square_mirror().with_stripes(StripeCount::Finite(4));
        assert!(even.validate().unwrap_err().to_string().contains("odd"));
    }

    #[test]
    fn two_term_rejects_points_below_surface() {
        assert!(matches!(
            reference_mirror().field_two_term(0.0, 0.0),
            Err(FieldError::BelowSurface { .. })
        ));
    }

    #[test]
    fn corrugation_free_field_is_independent_of_x() {
        let spec = reference_mirror();
        for &y in &[0.1 * UM, 1.0 * UM, 4.0 * UM] {
            let b0 = spec.field_two_term(0.0, y).unwrap();
            for i in 1..10 {
                let x = i as f64 * 0.37 * UM;
                assert_eq!(spec.field_two_term(x, y).unwrap(), b0);
            }
        }
    }

    #[test]
    fn turning_point_field_matches_drop_energy() {
        // a = 1 µm, B1 = 0.1 T, Cs dropped from 2 cm.
        let spec = MirrorSpec::with_surface_field(1e-6, 1e-6 / 3.0, 30e-9, 0.1).unwrap();
        let (m, mu, g, h): (f64, f64, f64, f64) = (2.2069e-25, 9.2740e-24, 9.81, 0.02);
        let k = spec.wavenumber();
        let y_t = (mu * 0.1 / (m * g * h)).ln() / k;
        let b = spec.field_two_term(0.0, y_t).unwrap();
        assert!((b / (m * g * h / mu) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_expansion_single_term_and_cross_term() {
        let spec = reference_mirror();
        let c = spec.harmonic_coefficients().unwrap();
        let y = 0.7 * UM;
        let b = spec.field_full_expansion(0.3 * UM, y).unwrap();
        assert!((b / (c.b1 * (-c.k * y).exp()) - 1.0).abs() < 1e-15);

        let sq = square_mirror();
        let c = sq.harmonic_coefficients().unwrap();
        let x = sq.period / 8.0;
        let expected =
            (c.b1.powi(2) * (-2.0 * c.k * y).exp() + c.b3.powi(2) * (-9.0 * c.k * y).exp()).sqrt();
        let got = sq.field_full_expansion(x, y).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expansions_agree_far_from_surface() {
        let sq = square_mirror();
        let y = 10.0 / sq.wavenumber();
        for i in 0..8 {
            let x = i as f64 * 0.4 * UM;
            let t = sq.field_two_term(x, y).unwrap();
            let f = sq.field_full_expansion(x, y).unwrap();
            assert!((t / f - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn bias_adds_in_quadrature() {
        let spec = reference_mirror().with_bias(1e-5);
        let y = 2.0 * UM;
        let m = reference_mirror().field_two_term(0.0, y).unwrap();
        let b = spec.field_two_term(0.0, y).unwrap();
        assert!((b - m.hypot(1e-5)).abs() < 1e-18);
        assert!(b >= m && b >= 1e-5);
    }

    #[test]
    fn single_sheet_matches_quadrature() {
        let spec = MirrorSpec::new(3.0 * UM, 1.0 * UM, 30e-9, 1e6)
            .unwrap()
            .with_stripes(StripeCount::Finite(1));
        for &(x, y) in &[(0.2 * UM, 0.1 * UM), (-1.3 * UM, 0.4 * UM), (2.5 * UM, 1.7 * UM)] {
            let v = field_exact(&spec, x, y).unwrap();
            let (p_x, p_y) = sheet_by_quadrature(1e6, 0.5 * UM, 30e-9, x, y);
            let (n_x, n_y) = sheet_by_quadrature(-1e6, -0.5 * UM, 30e-9, x, y);
            let (qx, qy) = (p_x + n_x, p_y + n_y);
            let scale = qx.hypot(qy);
            assert!((v.bx - qx).abs() < 1e-6 * scale, "{x} {y}: {} vs {qx}", v.bx);
            assert!((v.by - qy).abs() < 1e-6 * scale, "{x} {y}: {} vs {qy}", v.by);
        }
    }

    #[test]
    fn single_stripe_reflection_symmetry() {
        let spec = reference_mirror().with_stripes(StripeCount::Finite(1));
        let y = 0.8 * UM;
        for &x in &[0.1 * UM, 0.6 * UM, 2.0 * UM] {
            let r = field_exact(&spec, x, y).unwrap();
            let l = field_exact(&spec, -x, y).unwrap();
            assert!((r.bx - l.bx).abs() <= 1e-12 * r.bx.abs());
            assert!((r.by + l.by).abs() <= 1e-12 * r.by.abs());
        }
    }

    #[test]
    fn exact_field_rejects_layer_and_infinite_array() {
        let spec = reference_mirror().with_stripes(StripeCount::Finite(11));
        assert!(matches!(
            field_exact(&spec, 0.0, -10e-9),
            Err(FieldError::InsideLayer { .. })
        ));
        assert!(matches!(
            field_exact(&reference_mirror(), 0.0, 1e-6),
            Err(FieldError::InfiniteArray)
        ));
    }

    #[test]
    fn vector_expansion_tracks_exact_square_array() {
        // c/a = 1/2 has no even harmonics; between y = 0.3a and 0.45a both
        // the fifth harmonic and the finite-array edge field are below 1e-3.
        let spec = square_mirror().with_stripes(StripeCount::Finite(2001));
        let a = spec.period;
        for i in 0..6 {
            let x = i as f64 * a / 6.0;
            for &yf in &[0.3, 0.35, 0.4, 0.45] {
                let e = field_exact(&spec, x, yf * a).unwrap();
                let v = spec.field_vector_expansion(x, yf * a).unwrap();
                let scale = e.magnitude();
                assert!(
                    (e.bx - v.bx).hypot(e.by - v.by) < 2e-3 * scale,
                    "x = {x}, y = {yf}a"
                );
            }
        }
    }

    #[test]
    fn direction_winds_once_per_period() {
        let spec = square_mirror();
        let a = spec.period;
        let y = 2.0 * a;
        let steps = 64;
        let mut total = 0.0;
        let mut prev = field_direction_angle(&spec, 0.0, y).unwrap();
        for i in 1..=steps {
            let cur = field_direction_angle(&spec, a * i as f64 / steps as f64, y).unwrap();
            let mut d = cur - prev;
            d -= (2.0 * PI) * (d / (2.0 * PI)).round();
            total += d;
            prev = cur;
        }
        assert!((total.abs() - 2.0 * PI).abs() < 1e-9, "winding {total}");
    }

    #[test]
    fn direction_is_height_independent_for_single_harmonic() {
        let spec = reference_mirror();
        for &x in &[0.1e-6, 0.9e-6, 2.2e-6] {
            let a1 = field_direction_angle(&spec, x, 1e-6).unwrap();
            let a2 = field_direction_angle(&spec, x, 2e-6).unwrap();
            assert!((a1 - a2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_bias_field_has_no_z_component() {
        let spec = square_mirror().with_stripes(StripeCount::Finite(101));
        let v = field_exact(&spec, 0.4e-6, 0.9e-6).unwrap();
        assert_eq!(v.bz, 0.0);
        let w = spec.field_vector_expansion(0.4e-6, 0.9e-6).unwrap();
        assert_eq!(w.bz, 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let spec = square_mirror().with_bias(1e-4);
        let c = spec.harmonic_coefficients().unwrap();
        let h = 1e-12;
        for &(x, y) in &[(0.3e-6, 0.5e-6), (1.1e-6, 0.2e-6), (2.9e-6, 1.3e-6)] {
            let (gx, gy) = c.two_term_gradient(x, y, 1e-4);
            let fx = (c.two_term(x + h, y, 1e-4) - c.two_term(x - h, y, 1e-4)) / (2.0 * h);
            let fy = (c.two_term(x, y + h, 1e-4) - c.two_term(x, y - h, 1e-4)) / (2.0 * h);
            let s = gx.hypot(gy);
            assert!((gx - fx).abs() < 1e-6 * s && (gy - fy).abs() < 1e-6 * s);

            let (gx, gy) = c.full_expansion_gradient(x, y, 1e-4).unwrap();
            let fe = |x, y| c.full_expansion(x, y, 1e-4).unwrap();
            let fx = (fe(x + h, y) - fe(x - h, y)) / (2.0 * h);
            let fy = (fe(x, y + h) - fe(x, y - h)) / (2.0 * h);
            let s = gx.hypot(gy);
            assert!((gx - fx).abs() < 1e-6 * s && (gy - fy).abs() < 1e-6 * s);
        }
    }

    #[test]
    fn vector_rate_matches_finite_difference() {
        let spec = square_mirror();
        let c = spec.harmonic_coefficients().unwrap();
        let (x, y, vx, vy) = (0.7e-6, 0.6e-6, 0.02, -0.3);
        let dt = 1e-12;
        let p = c.vector(x + vx * dt, y + vy * dt, 0.0);
        let m = c.vector(x - vx * dt, y - vy * dt, 0.0);
        let (dbx, dby) = c.vector_rate(x, y, vx, vy);
        let (fx, fy) = ((p.bx - m.bx) / (2.0 * dt), (p.by - m.by) / (2.0 * dt));
        let s = fx.hypot(fy);
        assert!((dbx - fx).abs() < 1e-6 * s && (dby - fy).abs() < 1e-6 * s);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expansions_are_periodic(x in -5e-6f64..5e-6, y in 0.05e-6f64..5e-6, ratio in 0.05f64..0.95) {
                let spec = MirrorSpec::new(2e-6, 2e-6 * ratio, 30e-9, 5e5).unwrap();
                let a = spec.period;
                let t0 = spec.field_two_term(x, y).unwrap();
                let t1 = spec.field_two_term(x + a, y).unwrap();
                prop_assert!((t0 - t1).abs() <= 1e-12 * t0);
                if let (Ok(f0), Ok(f1)) = (spec.field_full_expansion(x, y), spec.field_full_expansion(x + a, y)) {
                    prop_assert!((f0 - f1).abs() <= 1e-12 * f0);
                }
            }

            #[test]
            fn corrugation_free_decay_rate(y in 0.01e-6f64..8e-6) {
                let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.3).unwrap();
                let c = spec.harmonic_coefficients().unwrap();
                let (_, gy) = c.two_term_gradient(0.4e-6, y, 0.0);
                let b = c.two_term(0.4e-6, y, 0.0);
                prop_assert!((gy / b / -c.k - 1.0).abs() < 1e-6);
            }

            #[test]
            fn quadrature_bias_dominates(bias in 0.0f64..1e-2, y in 0.1e-6f64..10e-6) {
                let spec = MirrorSpec::with_surface_field(3e-6, 1.2e-6, 30e-9, 0.2).unwrap();
                let mirror = spec.field_two_term(0.3e-6, y).unwrap();
                let total = spec.with_bias(bias).field_two_term(0.3e-6, y).unwrap();
                prop_assert!(total >= mirror.max(bias));
            }
        }
    }
}
