mod common;

use common::*;
use keplink::attributable::Attributable;
use keplink::config::LinkOptions;
use keplink::ephemeris::EphemerisModel;
use keplink::kepler::{angular_momentum, laplace_lenz};
use keplink::optical::{compute_optical_coefficients, projection_vector};
use keplink::radar::link_radar_optical;
use keplink::selection::annotate_solutions;
use keplink::synth::{near_earth_orbit, ARCSEC, synthesize_attributables, AttributableKind, NoiseModel, SyntheticPair};
use keplink::units::Physics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn swapped(pair: &SyntheticPair) -> SyntheticPair {
    SyntheticPair {
        first: Attributable::Optical(pair.second.clone()),
        second: optical(pair).clone(),
        truth: [pair.truth[1], pair.truth[0]],
        elements: pair.elements,
    }
}

#[test]
fn truth_recovered_on_random_orbits() {
    let phys = Physics::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = LinkOptions { covariance: false, ..Default::default() };
    for case in 0..100 {
        let pair = random_pair(&mut rng, AttributableKind::Optical, &phys);
        let rep = link(&pair, &phys, &opts).unwrap();
        let (_, err) = closest_to_truth(&rep.solutions, &pair).unwrap_or_else(|| panic!("case {case}: no solutions"));
        assert!(err < 1e-6, "case {case}: truth error {err:e}");
    }
}

#[test]
fn returned_solutions_satisfy_the_integrals() {
    let phys = Physics::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = LinkOptions { covariance: false, ..Default::default() };
    for _ in 0..40 {
        let pair = random_pair(&mut rng, AttributableKind::Optical, &phys);
        let rep = link(&pair, &phys, &opts).unwrap();
        let (_, o2) = observers(&pair);
        let c2 = compute_optical_coefficients(&pair.second, &o2).unwrap();
        let v = projection_vector(&c2).normalize();
        for s in &rep.solutions {
            let (a, b) = (&s.cartesian1, &s.cartesian2);
            let (ca, cb) = (angular_momentum(&a.r, &a.rdot), angular_momentum(&b.r, &b.rdot));
            assert!((ca - cb).norm() < 1e-9 * ca.norm().max(cb.norm()));
            let dl = laplace_lenz(&a.r, &a.rdot, phys.mu).unwrap() - laplace_lenz(&b.r, &b.rdot, phys.mu).unwrap();
            assert!(dl.dot(&v).abs() < LinkOptions::default().spurious_tol);
        }
        for c in rep.candidates.iter().filter(|c| c.spurious) {
            assert!(c.lenz_residual.abs() >= opts.spurious_tol);
        }
    }
}

#[test]
fn swapping_the_epochs_keeps_the_true_solution() {
    let phys = Physics::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let opts = LinkOptions { covariance: false, ..Default::default() };
    for case in 0..30 {
        let pair = random_pair(&mut rng, AttributableKind::Optical, &phys);
        let back = swapped(&pair);
        let fwd = link(&pair, &phys, &opts).unwrap();
        let Ok(rev) = link(&back, &phys, &opts) else { continue };
        let (i, _) = closest_to_truth(&fwd.solutions, &pair).unwrap();
        let (j, _) = closest_to_truth(&rev.solutions, &back).unwrap();
        let (a, b) = (&fwd.solutions[i], &rev.solutions[j]);
        for (x, y) in [(a.rho1, b.rho2), (a.rho2, b.rho1), (a.rhodot1, b.rhodot2), (a.rhodot2, b.rhodot1)] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-3), "case {case}: {x} vs {y}");
        }
    }
}

#[test]
fn reference_roots_include_the_true_distance() {
    let phys = Physics::default();
    let pair = reference_pair(&phys);
    let rep = link(&pair, &phys, &LinkOptions::default()).unwrap();
    assert!(rep.roots_converged);
    assert!(rep.resultant_degree <= 20);
    let t = pair.truth[0].coords.rho;
    assert!(rep.rho1_roots.iter().any(|r| rel(*r, t) < 1e-8));
}

#[test]
fn radar_optical_truth_and_integrals() {
    let phys = Physics::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..50 {
        let pair = random_pair(&mut rng, AttributableKind::Radar, &phys);
        let (o1, o2) = observers(&pair);
        let rep = link_radar_optical(radar(&pair), &pair.second, &o1, &o2, &phys, &LinkOptions::default()).unwrap();
        let truth = pair.truth[1].coords;
        let best = rep.solutions.iter().min_by(|a, b| rel(a.rho2, truth.rho).total_cmp(&rel(b.rho2, truth.rho))).unwrap();
        assert!(rel(best.rho2, truth.rho) < 1e-8, "case {case}");
        assert!((best.rhodot2 - truth.rhodot).abs() < 1e-8 * truth.rhodot.abs().max(1e-3));
        // Roots far outside the population (aphelia below 5 AU) sit where one ulp of
        // rho2 moves the Lenz residual by about 1e-9; they only have to clear the
        // spurious threshold.
        for s in &rep.solutions {
            let (a, b) = (&s.cartesian1, &s.cartesian2);
            let (ca, cb) = (angular_momentum(&a.r, &a.rdot), angular_momentum(&b.r, &b.rdot));
            let scale = (a.r.norm() * a.rdot.norm()).max(b.r.norm() * b.rdot.norm());
            assert!((ca - cb).norm() < 1e-9 * scale, "case {case}");
            let tol = if s.rho2 < 10.0 { 1e-9 } else { LinkOptions::default().spurious_tol };
            assert!(s.lenz_residual.abs() < tol, "case {case}: {:e} at rho2 {}", s.lenz_residual, s.rho2);
        }
    }
}

#[test]
fn solution_covariances_are_symmetric_and_psd() {
    let phys = Physics::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut checked = 0;
    for _ in 0..20 {
        let pair = random_pair(&mut rng, AttributableKind::Optical, &phys);
        let rep = link(&pair, &phys, &LinkOptions::default()).unwrap();
        for s in &rep.solutions {
            let Some(cov) = &s.covariance else { continue };
            for m in [&cov.unknowns, &cov.cartesian1, &cov.cartesian2] {
                assert!(m.asymmetry() <= 1e-12);
                assert!(m.min_eigenvalue() >= -1e-10 * m.trace());
            }
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

/// 0.5 arcsec on the angles and 0.5 arcsec/day on the rates.
#[test]
fn noisy_reference_geometry() {
    let phys = Physics::default();
    let noise = NoiseModel { sigma_angle: 0.5 * ARCSEC, sigma_rate: 0.5 * ARCSEC, ..NoiseModel::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (mut sq, mut sq_norm, mut worst_chi, mut found) = (0.0, 0.0, 0.0f64, 0);
    for _ in 0..100 {
        let pair = synthesize_attributables(
            &near_earth_orbit(T0),
            (T0, T0 + 182.0),
            &EphemerisModel::circular_earth(),
            &noise,
            AttributableKind::Optical,
            &phys,
            Some(&mut rng),
        )
        .unwrap();
        let (_, o2) = observers(&pair);
        let rep = link(&pair, &phys, &LinkOptions::default()).unwrap();
        let mut sols = rep.solutions;
        annotate_solutions(&mut sols, &pair.second, &o2, 100.0, &phys);
        let Some((k, _)) = closest_to_truth(&sols, &pair) else { continue };
        found += 1;
        let err = sols[k].rho1 - pair.truth[0].coords.rho;
        let sigma = sols[k].covariance.as_ref().unwrap().unknowns.data[0].sqrt();
        sq += err * err;
        sq_norm += (err / sigma).powi(2);
        worst_chi = worst_chi.max(sols[k].chi4.unwrap());
    }
    assert_eq!(found, 100);
    let rms = (sq / 100.0f64).sqrt();
    let rms_norm = (sq_norm / 100.0f64).sqrt();
    assert!(rms < 1e-3, "rho1 rms error {rms:e}");
    assert!((0.7..1.3).contains(&rms_norm), "normalized rms {rms_norm}");
    assert!(worst_chi < 25.0, "chi4 {worst_chi}");
}
