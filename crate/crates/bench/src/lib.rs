//! Fixtures shared by the benchmarks.

use stripe_mirror::{AtomSpecies, MirrorSpec, PotentialModel, State, StripeCount};

/// Reference mirror: a = 3 µm, c = 1 µm, b = 30 nm, B1 = 0.2 T, 10 mG bias.
pub fn reference_mirror() -> MirrorSpec {
    MirrorSpec::with_surface_field(3e-6, 1e-6, 30e-9, 0.2)
        .expect("valid reference geometry")
        .with_bias(1e-5)
}

pub fn finite_mirror(stripes: u32) -> MirrorSpec {
    reference_mirror().with_stripes(StripeCount::Finite(stripes))
}

pub fn two_term_model() -> PotentialModel {
    PotentialModel::two_term(reference_mirror()).expect("valid model")
}

pub fn cesium() -> AtomSpecies {
    AtomSpecies::cesium()
}

/// Cesium released at rest 3 mm above the surface.
pub fn drop_start() -> State {
    State::at_rest(0.0, 3e-3)
}
