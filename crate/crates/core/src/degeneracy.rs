use serde::{Deserialize, Serialize};

/// Relative threshold for triple-product degeneracy tests.
pub const DEGENERACY_REL: f64 = 1e-10;

/// Geometric configurations that make the elimination equations rank deficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyFlag {
    /// `D1 x D2` vanishes, so the angular momentum equation cannot be solved for the radial velocities.
    CoincidentLinesOfSight,
    /// Both `E1 . D1 x D2` and `E2 . D1 x D2` vanish: the quadratic form is completely degenerate.
    CompletelyDegenerateQuadratic,
    /// The second line of sight is parallel to the observer position.
    ZenithObservation,
    /// `A1 . B1 x D2` vanishes: the linear radar-optical system is singular.
    RadarLinearSystem,
}

impl DegeneracyFlag {
    pub fn describe(self) -> &'static str {
        match self {
            DegeneracyFlag::CoincidentLinesOfSight => "D1 x D2 vanishes",
            DegeneracyFlag::CompletelyDegenerateQuadratic => "quadratic form completely degenerate",
            DegeneracyFlag::ZenithObservation => "zenith observation at the second epoch",
            DegeneracyFlag::RadarLinearSystem => "radar-optical linear system singular",
        }
    }
}
