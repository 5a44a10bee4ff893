#![allow(dead_code)]

use std::f64::consts::PI;

use keplink::attributable::{Attributable, ObserverState, OpticalAttributable, RadarAttributable};
use keplink::config::LinkOptions;
use keplink::ephemeris::EphemerisModel;
use keplink::kepler::KeplerianElements;
use keplink::optical::{link_optical, OpticalLinkReport, OpticalSystem};
use keplink::synth::{min_range, near_earth_orbit, synthesize_attributables, AttributableKind, NoiseModel, SyntheticPair};
use keplink::units::Physics;
use rand::Rng;

pub const T0: f64 = 58000.0;

pub fn random_elements(rng: &mut impl Rng, epoch: f64) -> KeplerianElements {
    KeplerianElements::new(
        rng.random_range(0.6..3.0),
        rng.random_range(0.0..0.6),
        rng.random_range(0.0..0.5),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        epoch,
    )
}

pub fn optical(pair: &SyntheticPair) -> &OpticalAttributable {
    match &pair.first {
        Attributable::Optical(a) => a,
        Attributable::Radar(_) => panic!("expected an optical first attributable"),
    }
}

pub fn radar(pair: &SyntheticPair) -> &RadarAttributable {
    match &pair.first {
        Attributable::Radar(a) => a,
        Attributable::Optical(_) => panic!("expected a radar first attributable"),
    }
}

pub fn observers(pair: &SyntheticPair) -> (ObserverState, ObserverState) {
    (pair.truth[0].observer, pair.truth[1].observer)
}

/// The noiseless pair of the reference geometry: Earth-crossing orbit, circular
/// 1 AU observer, 182 days between the attributables.
pub fn reference_pair(phys: &Physics) -> SyntheticPair {
    synthesize_attributables(
        &near_earth_orbit(T0),
        (T0, T0 + 182.0),
        &EphemerisModel::circular_earth(),
        &NoiseModel::default(),
        AttributableKind::Optical,
        phys,
        None,
    )
    .unwrap()
}

/// A random noiseless pair with a gap in [30, 300] days, skipping geometries that
/// trip a degeneracy flag or put the body within 0.02 AU of the observer.
pub fn random_pair(rng: &mut impl Rng, kind: AttributableKind, phys: &Physics) -> SyntheticPair {
    loop {
        let el = random_elements(rng, T0);
        let gap = rng.random_range(30.0..300.0);
        let Ok(pair) =
            synthesize_attributables(&el, (T0, T0 + gap), &EphemerisModel::circular_earth(), &NoiseModel::default(), kind, phys, None)
        else {
            continue;
        };
        if min_range(&pair) < 0.02 {
            continue;
        }
        let (o1, o2) = observers(&pair);
        let ok = match kind {
            AttributableKind::Optical => OpticalSystem::new(optical(&pair), &pair.second, &o1, &o2, phys).is_ok(),
            AttributableKind::Radar => true,
        };
        if ok {
            return pair;
        }
    }
}

pub fn link(pair: &SyntheticPair, phys: &Physics, opts: &LinkOptions) -> keplink::Result<OpticalLinkReport> {
    let (o1, o2) = observers(pair);
    link_optical(optical(pair), &pair.second, &o1, &o2, phys, opts)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Index of the solution closest to the true distances, with its largest relative error
/// over `(rho1, rho2, rhodot1, rhodot2)`; range rates are compared on a floor of 1e-4.
pub fn closest_to_truth(sols: &[keplink::solution::LinkageSolution], pair: &SyntheticPair) -> Option<(usize, f64)> {
    let (c1, c2) = (pair.truth[0].coords, pair.truth[1].coords);
    let rate = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-4);
    let (k, _) = sols
        .iter()
        .enumerate()
        .map(|(k, s)| (k, rel(s.rho1, c1.rho).max(rel(s.rho2, c2.rho))))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let s = &sols[k];
    let e = rel(s.rho1, c1.rho).max(rel(s.rho2, c2.rho)).max(rate(s.rhodot1, c1.rhodot)).max(rate(s.rhodot2, c2.rhodot));
    Some((k, e))
}
