//! Browser bindings: synthesize a pair from orbital elements, link it, sample the
//! linkage curves on a grid and solve the radar-optical quartic.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use keplink::attributable::{Attributable, ObserverState};
use keplink::config::LinkOptions;
use keplink::curves::{emit_curve_samples, CurveGrid, CurveKind};
use keplink::ephemeris::EphemerisModel;
use keplink::kepler::KeplerianElements;
use keplink::optical::link_optical;
use keplink::radar::link_radar_optical;
use keplink::synth::{synthesize_attributables, AttributableKind, NoiseModel, SyntheticPair};
use keplink::units::Physics;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const T0: f64 = 58_000.0;

/// Orbit entered on the page; angles in degrees, gap in days.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub a: f64,
    pub e: f64,
    pub incl_deg: f64,
    pub node_deg: f64,
    pub peri_deg: f64,
    pub mean_anomaly_deg: f64,
    pub gap_days: f64,
}

impl Scenario {
    fn elements(&self) -> KeplerianElements {
        KeplerianElements::new(
            self.a,
            self.e,
            self.incl_deg.to_radians(),
            self.node_deg.to_radians(),
            self.peri_deg.to_radians(),
            self.mean_anomaly_deg.to_radians(),
            T0,
        )
    }

    fn pair(&self, kind: AttributableKind) -> Result<SyntheticPair, String> {
        if !(self.gap_days != 0.0 && self.gap_days.is_finite()) {
            return Err("the epoch gap must be non-zero".into());
        }
        synthesize_attributables(
            &self.elements(),
            (T0, T0 + self.gap_days),
            &EphemerisModel::circular_earth(),
            &NoiseModel::default(),
            kind,
            &Physics::default(),
            None,
        )
        .map_err(|e| e.to_string())
    }
}

fn observers(pair: &SyntheticPair) -> (ObserverState, ObserverState) {
    (pair.truth[0].observer, pair.truth[1].observer)
}

#[derive(Serialize)]
struct Found {
    rho1: f64,
    rho2: f64,
    rhodot1: f64,
    rhodot2: f64,
    lenz_residual: f64,
    a: Option<f64>,
    e: Option<f64>,
}

#[derive(Serialize)]
pub struct LinkView {
    truth: (f64, f64),
    resultant_degree: usize,
    rho1_roots: Vec<f64>,
    solutions: Vec<Found>,
    /// Candidate pairs rejected by the unsquared Laplace-Lenz test.
    spurious: Vec<(f64, f64)>,
}

pub fn link_view(s: &Scenario) -> Result<LinkView, String> {
    let pair = s.pair(AttributableKind::Optical)?;
    let Attributable::Optical(a1) = &pair.first else { unreachable!() };
    let (o1, o2) = observers(&pair);
    let rep = link_optical(a1, &pair.second, &o1, &o2, &Physics::default(), &LinkOptions { covariance: false, ..Default::default() })
        .map_err(|e| e.to_string())?;
    Ok(LinkView {
        truth: (pair.truth[0].coords.rho, pair.truth[1].coords.rho),
        resultant_degree: rep.resultant_degree,
        rho1_roots: rep.rho1_roots,
        solutions: rep
            .solutions
            .iter()
            .map(|x| Found {
                rho1: x.rho1,
                rho2: x.rho2,
                rhodot1: x.rhodot1,
                rhodot2: x.rhodot2,
                lenz_residual: x.lenz_residual,
                a: x.elements1.map(|el| el.a),
                e: x.elements1.map(|el| el.e),
            })
            .collect(),
        spurious: rep.candidates.iter().filter(|c| c.spurious).map(|c| (c.rho1, c.rho2)).collect(),
    })
}

#[derive(Serialize)]
pub struct CurveView {
    max: f64,
    n: usize,
    /// Row-major `n x n` tables, `NaN` serialized as `null`.
    q: Vec<f64>,
    lenz: Vec<f64>,
    energy: Vec<f64>,
    lenz_crossings: Vec<(f64, f64)>,
    energy_crossings: Vec<(f64, f64)>,
}

pub fn curve_view(s: &Scenario, max: f64, n: usize) -> Result<CurveView, String> {
    if !(max > 0.0) || !(2..=400).contains(&n) {
        return Err("grid needs max > 0 and 2..400 nodes".into());
    }
    let pair = s.pair(AttributableKind::Optical)?;
    let Attributable::Optical(a1) = &pair.first else { unreachable!() };
    let (o1, o2) = observers(&pair);
    let grid = CurveGrid::square(max / n as f64, max, n);
    let samples = emit_curve_samples(a1, &pair.second, &o1, &o2, &Physics::default(), &grid).map_err(|e| e.to_string())?;
    let flat = |k: CurveKind| samples.table(k).values.concat();
    Ok(CurveView {
        max,
        n,
        q: flat(CurveKind::Q),
        lenz: flat(CurveKind::Lenz),
        energy: flat(CurveKind::Energy),
        lenz_crossings: samples.intersections_with_q(CurveKind::Lenz),
        energy_crossings: samples.intersections_with_q(CurveKind::Energy),
    })
}

#[derive(Serialize)]
pub struct RadarView {
    truth_rho2: f64,
    degree: usize,
    /// All quartic roots as `(re, im)`, AU.
    roots: Vec<(f64, f64)>,
    solutions: Vec<(f64, f64)>,
}

pub fn radar_view(s: &Scenario) -> Result<RadarView, String> {
    let pair = s.pair(AttributableKind::Radar)?;
    let Attributable::Radar(a1) = &pair.first else { unreachable!() };
    let (o1, o2) = observers(&pair);
    let rep = link_radar_optical(a1, &pair.second, &o1, &o2, &Physics::default(), &LinkOptions { covariance: false, ..Default::default() })
        .map_err(|e| e.to_string())?;
    Ok(RadarView {
        truth_rho2: pair.truth[1].coords.rho,
        degree: rep.degree,
        roots: rep.roots.iter().map(|z| (z.re, z.im)).collect(),
        solutions: rep.solutions.iter().map(|x| (x.rho2, x.rhodot2)).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

fn scenario(a: f64, e: f64, incl: f64, node: f64, peri: f64, m: f64, gap: f64) -> Scenario {
    Scenario { a, e, incl_deg: incl, node_deg: node, peri_deg: peri, mean_anomaly_deg: m, gap_days: gap }
}

/// Solutions of the optical linkage, as JSON.
#[wasm_bindgen]
pub fn link_pair(a: f64, e: f64, incl: f64, node: f64, peri: f64, m: f64, gap: f64) -> Result<String, JsError> {
    to_js(link_view(&scenario(a, e, incl, node, peri, m, gap)))
}

/// Curve tables on `[max/n, max]^2`, as JSON.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn curve_grid(a: f64, e: f64, incl: f64, node: f64, peri: f64, m: f64, gap: f64, max: f64, n: usize) -> Result<String, JsError> {
    to_js(curve_view(&scenario(a, e, incl, node, peri, m, gap), max, n))
}

/// Roots of the radar-optical quartic, as JSON.
#[wasm_bindgen]
pub fn radar_quartic(a: f64, e: f64, incl: f64, node: f64, peri: f64, m: f64, gap: f64) -> Result<String, JsError> {
    to_js(radar_view(&scenario(a, e, incl, node, peri, m, gap)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Scenario {
        let el = keplink::synth::near_earth_orbit(T0);
        scenario(el.a, el.e, el.i.to_degrees(), el.node.to_degrees(), el.peri.to_degrees(), el.mean_anomaly.to_degrees(), 182.0)
    }

    #[test]
    fn link_view_contains_the_truth() {
        let v = link_view(&reference()).unwrap();
        assert!(v.solutions.iter().any(|s| (s.rho1 - v.truth.0).abs() < 1e-6 * v.truth.0));
        assert!(v.resultant_degree <= 20);
    }

    #[test]
    fn curve_view_has_square_tables() {
        let v = curve_view(&reference(), 1.5, 60).unwrap();
        assert_eq!(v.q.len(), 3600);
        assert_eq!(v.lenz.len(), 3600);
        assert!(!v.lenz_crossings.is_empty());
        assert!(curve_view(&reference(), 1.5, 1).is_err());
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.starts_with("{\"max\":1.5"));
    }

    #[test]
    fn radar_view_recovers_rho2() {
        let v = radar_view(&reference()).unwrap();
        assert!(v.degree <= 4);
        assert!(v.solutions.iter().any(|s| (s.0 - v.truth_rho2).abs() < 1e-8 * v.truth_rho2));
    }

    #[test]
    fn zero_gap_is_rejected() {
        let mut s = reference();
        s.gap_days = 0.0;
        assert!(link_view(&s).is_err());
    }
}
