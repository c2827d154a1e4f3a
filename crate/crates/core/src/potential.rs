//! Atom species and the Zeeman-plus-gravity potential seen by a weak-field
//! seeker above the mirror.

use crate::constants::{ATOMIC_MASS_UNIT, G_GRAV, MU_B};
use crate::error::{DynamicsError, FieldError};
use crate::field::{field_exact, HarmonicCoefficients, MirrorSpec, StripeCount};

/// Mass and effective magnetic moment of the bouncing atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub name: String,
    /// [kg]
    pub mass: f64,
    /// Weak-field-seeking moment g_F·m_F·µ_B [J/T].
    pub moment: f64,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, mass: f64, moment: f64) -> Result<Self, DynamicsError> {
        let species = AtomSpecies {
            name: name.into(),
            mass,
            moment,
        };
        species.validate()?;
        Ok(species)
    }

    /// ¹³³Cs in the 6²S₁/₂ F=4, m_F=4 state: g_F·m_F = 1/4 · 4 = 1.
    pub fn cesium() -> Self {
        AtomSpecies {
            name: "Cs".to_string(),
            mass: 2.2069e-25,
            moment: MU_B,
        }
    }

    /// Looks up a species by name (case-insensitive).
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cs" | "cs133" | "cesium" | "caesium" => Some(Self::cesium()),
            "rb87" | "rubidium" | "rb" => Some(AtomSpecies {
                // F=2, m_F=2: g_F·m_F = 1/2 · 2.
                name: "Rb87".to_string(),
                mass: 86.909 * ATOMIC_MASS_UNIT,
                moment: MU_B,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(DynamicsError::InvalidSpecies(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.moment > 0.0 && self.moment.is_finite()) {
            return Err(DynamicsError::InvalidSpecies(format!(
                "moment must be positive (weak-field seeker), got {}",
                self.moment
            )));
        }
        Ok(())
    }
}

/// A mirror field model with its precomputed harmonic coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorField {
    pub spec: MirrorSpec,
    pub coeffs: HarmonicCoefficients,
}

impl MirrorField {
    pub fn new(spec: MirrorSpec) -> Result<Self, FieldError> {
        let coeffs = spec.harmonic_coefficients()?;
        Ok(MirrorField { spec, coeffs })
    }
}

/// Which field description drives the atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialModel {
    TwoTerm(MirrorField),
    FullExpansion(MirrorField),
    ExactStripes(MirrorField),
    /// Magnetic energy `u0·e^(−ky)` [J], independent of species.
    PureExponential { u0: f64, k: f64 },
}

impl PotentialModel {
    pub fn two_term(spec: MirrorSpec) -> Result<Self, FieldError> {
        Ok(PotentialModel::TwoTerm(MirrorField::new(spec)?))
    }

    pub fn full_expansion(spec: MirrorSpec) -> Result<Self, FieldError> {
        Ok(PotentialModel::FullExpansion(MirrorField::new(spec)?))
    }

    pub fn exact_stripes(spec: MirrorSpec) -> Result<Self, FieldError> {
        if spec.stripes == StripeCount::Infinite {
            return Err(FieldError::InfiniteArray);
        }
        Ok(PotentialModel::ExactStripes(MirrorField::new(spec)?))
    }

    pub fn pure_exponential(u0: f64, k: f64) -> Result<Self, FieldError> {
        if !(u0 >= 0.0 && u0.is_finite()) || !(k > 0.0 && k.is_finite()) {
            return Err(FieldError::InvalidGeometry(format!(
                "pure exponential needs u0 >= 0 and k > 0, got u0 = {u0}, k = {k}"
            )));
        }
        Ok(PotentialModel::PureExponential { u0, k })
    }

    /// Decay wavenumber of the leading exponential [1/m].
    pub fn wavenumber(&self) -> f64 {
        match self {
            PotentialModel::TwoTerm(m)
            | PotentialModel::FullExpansion(m)
            | PotentialModel::ExactStripes(m) => m.coeffs.k,
            PotentialModel::PureExponential { k, .. } => *k,
        }
    }

    pub fn mirror(&self) -> Option<&MirrorField> {
        match self {
            PotentialModel::TwoTerm(m)
            | PotentialModel::FullExpansion(m)
            | PotentialModel::ExactStripes(m) => Some(m),
            PotentialModel::PureExponential { .. } => None,
        }
    }

    /// Zeeman energy of the uniform bias alone [J].
    pub fn bias_energy(&self, species: &AtomSpecies) -> f64 {
        self.mirror()
            .map_or(0.0, |m| species.moment * m.spec.bias_field.abs())
    }

    /// Field magnitude |B| [T]; `None` for the pure exponential model.
    pub fn field_magnitude(&self, x: f64, y: f64) -> Option<Result<f64, FieldError>> {
        match self {
            PotentialModel::TwoTerm(m) => Some(Ok(m.coeffs.two_term(x, y, m.spec.bias_field))),
            PotentialModel::FullExpansion(m) => {
                Some(m.coeffs.full_expansion(x, y, m.spec.bias_field))
            }
            PotentialModel::ExactStripes(m) => {
                Some(field_exact(&m.spec, x, y).map(|v| v.magnitude()))
            }
            PotentialModel::PureExponential { .. } => None,
        }
    }

    /// Magnetic energy [J] without the above-surface check. Analytic models
    /// are continued below y = 0; the exact model reports a domain error.
    pub(crate) fn magnetic_energy_unchecked(
        &self,
        species: &AtomSpecies,
        x: f64,
        y: f64,
    ) -> Result<f64, FieldError> {
        match self {
            PotentialModel::PureExponential { u0, k } => Ok(u0 * (-k * y).exp()),
            _ => Ok(species.moment * self.field_magnitude(x, y).expect("field model")?),
        }
    }

    /// Magnetic force −∇(µ|B|) [N] without the above-surface check.
    pub(crate) fn magnetic_force_unchecked(
        &self,
        species: &AtomSpecies,
        x: f64,
        y: f64,
    ) -> Result<(f64, f64), FieldError> {
        let mu = species.moment;
        match self {
            PotentialModel::PureExponential { u0, k } => Ok((0.0, k * u0 * (-k * y).exp())),
            PotentialModel::TwoTerm(m) => {
                let (gx, gy) = m.coeffs.two_term_gradient(x, y, m.spec.bias_field);
                Ok((-mu * gx, -mu * gy))
            }
            PotentialModel::FullExpansion(m) => {
                let (gx, gy) = m.coeffs.full_expansion_gradient(x, y, m.spec.bias_field)?;
                Ok((-mu * gx, -mu * gy))
            }
            PotentialModel::ExactStripes(m) => {
                let h = (1e-10f64).min(y / 100.0);
                if !(h > 0.0) {
                    return Err(FieldError::BelowSurface { y });
                }
                let b = |x, y| field_exact(&m.spec, x, y).map(|v| v.magnitude());
                let gx = (b(x + h, y)? - b(x - h, y)?) / (2.0 * h);
                let gy = (b(x, y + h)? - b(x, y - h)?) / (2.0 * h);
                Ok((-mu * gx, -mu * gy))
            }
        }
    }
}

fn check_above(y: f64) -> Result<(), FieldError> {
    if y > 0.0 {
        Ok(())
    } else {
        Err(FieldError::BelowSurface { y })
    }
}

/// Total potential energy µ|B| + m·g·y [J] of an adiabatically following
/// weak-field seeker.
pub fn potential_energy(
    species: &AtomSpecies,
    model: &PotentialModel,
    x: f64,
    y: f64,
) -> Result<f64, FieldError> {
    check_above(y)?;
    Ok(model.magnetic_energy_unchecked(species, x, y)? + species.mass * G_GRAV * y)
}

/// Force −∇U including gravity [N].
///
/// Analytic gradients for the expansion and exponential models; the exact
/// stripe model uses a central difference with step min(1e−10 m, y/100).
pub fn force(
    species: &AtomSpecies,
    model: &PotentialModel,
    x: f64,
    y: f64,
) -> Result<(f64, f64), FieldError> {
    check_above(y)?;
    let (fx, fy) = model.magnetic_force_unchecked(species, x, y)?;
    Ok((fx, fy - species.mass * G_GRAV))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn zero_field_is_gravity_only() {
        let cs = AtomSpecies::cesium();
        let model = PotentialModel::pure_exponential(0.0, 2.0 * PI / 1e-6).unwrap();
        for &y in &[1e-7, 1e-3, 0.25] {
            assert_eq!(
                potential_energy(&cs, &model, 0.0, y).unwrap(),
                cs.mass * G_GRAV * y
            );
        }
    }

    #[test]
    fn exponential_threshold_at_max_drop() {
        let cs = AtomSpecies::cesium();
        let u0 = MU_B * 0.1;
        let k = 2.0 * PI / 1e-6;
        let model = PotentialModel::pure_exponential(u0, k).unwrap();
        let drop = 0.4;
        let e_drop = cs.mass * G_GRAV * drop;
        let y_t = (u0 / e_drop).ln() / k;
        let u = potential_energy(&cs, &model, 0.0, y_t).unwrap() - cs.mass * G_GRAV * y_t;
        assert!((u / e_drop - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_force_is_analytic() {
        let cs = AtomSpecies::cesium();
        let (u0, k) = (MU_B * 0.05, 2.0 * PI / 2e-6);
        let model = PotentialModel::pure_exponential(u0, k).unwrap();
        let y = 0.6e-6;
        let (fx, fy) = force(&cs, &model, 0.0, y).unwrap();
        assert_eq!(fx, 0.0);
        assert_eq!(fy, k * u0 * (-k * y).exp() - cs.mass * G_GRAV);
    }

    #[test]
    fn corrugation_free_two_term_has_no_lateral_force() {
        let cs = AtomSpecies::cesium();
        let spec = MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2).unwrap();
        let model = PotentialModel::two_term(spec).unwrap();
        let mut s = 7u64;
        for _ in 0..200 {
            let x = (lcg(&mut s) - 0.5) * 1e-4;
            let y = lcg(&mut s) * 5e-6 + 1e-9;
            assert_eq!(force(&cs, &model, x, y).unwrap().0, 0.0);
            let h = 1e-9;
            let du = potential_energy(&cs, &model, x + h, y).unwrap()
                - potential_energy(&cs, &model, x - h, y).unwrap();
            assert_eq!(du, 0.0);
        }
    }

    #[test]
    fn analytic_force_matches_finite_difference() {
        let cs = AtomSpecies::cesium();
        let spec = MirrorSpec::new(2e-6, 0.7e-6, 30e-9, 6e5)
            .unwrap()
            .with_bias(1e-5);
        let models = [
            PotentialModel::two_term(spec).unwrap(),
            PotentialModel::full_expansion(spec).unwrap(),
        ];
        let mut s = 42u64;
        for model in &models {
            for _ in 0..100 {
                let x = lcg(&mut s) * 4e-6;
                let y = 0.1e-6 + lcg(&mut s) * 2e-6;
                let (fx, fy) = force(&cs, model, x, y).unwrap();
                let h = 1e-6 * 1e-6;
                let u = |x, y| potential_energy(&cs, model, x, y).unwrap();
                let gx = -(u(x + h, y) - u(x - h, y)) / (2.0 * h);
                let gy = -(u(x, y + h) - u(x, y - h)) / (2.0 * h);
                let scale = fx.hypot(fy);
                assert!((fx - gx).abs() < 1e-6 * scale, "fx {fx} vs {gx}");
                assert!((fy - gy).abs() < 1e-6 * scale, "fy {fy} vs {gy}");
            }
        }
    }

    #[test]
    fn exact_model_gradient_is_consistent_with_expansion() {
        let cs = AtomSpecies::cesium();
        let spec = MirrorSpec::new(3e-6, 1.5e-6, 30e-9, 8e5)
            .unwrap()
            .with_stripes(StripeCount::Finite(401));
        let exact = PotentialModel::exact_stripes(spec).unwrap();
        let approx = PotentialModel::two_term(spec).unwrap();
        let (_, fe) = exact.magnetic_force_unchecked(&cs, 0.0, 1.0e-6).unwrap();
        let (_, fa) = approx.magnetic_force_unchecked(&cs, 0.0, 1.0e-6).unwrap();
        assert!((fe / fa - 1.0).abs() < 2e-2);
    }

    #[test]
    fn species_validation() {
        assert!(AtomSpecies::new("x", -1.0, MU_B).is_err());
        assert!(AtomSpecies::new("x", 1e-25, 0.0).is_err());
        assert!(AtomSpecies::by_name("cs").is_some());
        assert!(AtomSpecies::by_name("unobtainium").is_none());
    }

    #[test]
    fn domain_errors_propagate() {
        let cs = AtomSpecies::cesium();
        let model = PotentialModel::pure_exponential(1e-26, 1e6).unwrap();
        assert!(potential_energy(&cs, &model, 0.0, -1e-9).is_err());
        assert!(force(&cs, &model, 0.0, 0.0).is_err());
    }
}
