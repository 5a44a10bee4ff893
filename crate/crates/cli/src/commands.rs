use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use keplink::attributable::{Attributable, ObserverState, OpticalAttributable};
use keplink::config::RunConfig;
use keplink::curves::{emit_curve_samples, CurveGrid, CurveKind};
use keplink::ephemeris::EphemerisModel;
use keplink::error::{LinkError, Result};
use keplink::io::{read_attributables_file, read_ephemeris_csv, AttributableRecord};
use keplink::kepler::KeplerianElements;
use keplink::optical::link_optical;
use keplink::radar::link_radar_optical;
use keplink::selection::{annotate_solutions, chi4_for};
use keplink::solution::LinkageSolution;
use keplink::synth::{min_range, synthesize_attributables, AttributableKind, NoiseModel, SyntheticPair, TruthEpoch, ARCSEC};
use keplink::units::{Physics, UnitSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{emit, fmt17, to_json, to_json_line, write_atomic, Diagnostic};
use crate::{CurvesArgs, GlobalArgs, Kind, LinkArgs, RescoreArgs, SynthArgs};

pub struct Context {
    pub config: RunConfig,
    pub model: EphemerisModel,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self> {
        let units = UnitSystem::from(g.units);
        let mut config = RunConfig::new(units);
        if let Some(mu) = g.mu {
            config.mu = mu;
        }
        if let Some(tol) = g.spurious_tol {
            config.link.spurious_tol = tol;
        }
        config.link.fft_points = g.fft_points;
        config.chi4_threshold = g.chi4_threshold;
        config.validate()?;
        let model = match &g.ephemeris {
            Some(path) => EphemerisModel::Tabulated(read_ephemeris_csv(open(path)?)?),
            None => EphemerisModel::default_for(units),
        };
        Ok(Self { config, model })
    }

    pub fn physics(&self) -> Physics {
        self.config.physics()
    }

    fn observer(&self, tbar: f64) -> Result<ObserverState> {
        self.model.state(tbar, &self.physics())
    }

    /// Solves one pair and attaches `chi4` and the acceptance flag.
    pub fn link_pair(&self, first: &Attributable, second: &Attributable, radar: bool) -> Result<Vec<LinkageSolution>> {
        let phys = self.physics();
        let att2 = as_optical(second, "second")?;
        let (o1, o2) = (self.observer(first.tbar())?, self.observer(att2.tbar)?);
        let mut sols = match (first, radar) {
            (Attributable::Optical(a1), false) => link_optical(a1, att2, &o1, &o2, &phys, &self.config.link)?.solutions,
            (Attributable::Radar(a1), true) => link_radar_optical(a1, att2, &o1, &o2, &phys, &self.config.link)?.solutions,
            (a, _) => {
                let want = if radar { "radar" } else { "optical" };
                return Err(LinkError::Domain(format!("first attributable is {}, expected {want}", a.kind())));
            }
        };
        annotate_solutions(&mut sols, att2, &o2, self.config.chi4_threshold, &phys);
        Ok(sols)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))
}

fn as_optical<'a>(a: &'a Attributable, which: &str) -> Result<&'a OpticalAttributable> {
    match a {
        Attributable::Optical(o) => Ok(o),
        Attributable::Radar(_) => Err(LinkError::Domain(format!("{which} attributable must be optical"))),
    }
}

fn read_nonempty(path: &Path, units: UnitSystem) -> Result<Vec<Attributable>> {
    let atts = read_attributables_file(path, units)?;
    if atts.is_empty() {
        return Err(LinkError::InsufficientData(format!("{} holds no attributables", path.display())));
    }
    Ok(atts)
}

#[derive(Serialize)]
struct BatchEntry {
    index: usize,
    solutions: Option<usize>,
    accepted: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Diagnostic>,
}

/// `link-optical` and `link-radar-optical`. One record per file gives a solutions
/// array; `n` records per file link pairwise into `pair-NNNN.json` files under `--out`.
pub fn link(g: &GlobalArgs, a: &LinkArgs, radar: bool) -> Result<u8> {
    let ctx = Context::new(g)?;
    let units = ctx.config.units;
    let (first, second) = (read_nonempty(&a.first, units)?, read_nonempty(&a.second, units)?);
    if first.len() != second.len() {
        return Err(LinkError::Domain(format!("{} and {} records do not pair up", first.len(), second.len())));
    }
    if first.len() == 1 {
        let sols = ctx.link_pair(&first[0], &second[0], radar)?;
        emit(a.out.as_deref(), &to_json(&sols)?)?;
        return Ok(0);
    }
    let dir = a.out.as_deref().ok_or_else(|| LinkError::Domain("several pairs need an output directory (--out)".into()))?;
    let entries: Vec<BatchEntry> = (0..first.len())
        .into_par_iter()
        .map(|i| {
            let res = ctx.link_pair(&first[i], &second[i], radar).and_then(|sols| {
                write_atomic(&dir.join(format!("pair-{i:04}.json")), to_json(&sols)?.as_bytes())?;
                Ok(sols)
            });
            match res {
                Ok(s) => BatchEntry {
                    index: i,
                    solutions: Some(s.len()),
                    accepted: Some(s.iter().filter(|x| x.accepted == Some(true)).count()),
                    error: None,
                },
                Err(e) => BatchEntry { index: i, solutions: None, accepted: None, error: Some(Diagnostic::from_error(&e)) },
            }
        })
        .collect();
    print!("{}", to_json(&entries)?);
    Ok(entries.iter().find_map(|e| e.error.as_ref().map(|d| d.exit_code as u8)).unwrap_or(0))
}

#[derive(Serialize)]
struct Truth<'a> {
    elements: &'a KeplerianElements,
    truth: &'a [TruthEpoch; 2],
}

fn noise(a: &SynthArgs) -> NoiseModel {
    NoiseModel {
        sigma_angle: a.sigma_angle * ARCSEC,
        sigma_rate: a.sigma_rate * ARCSEC,
        sigma_rho: a.sigma_rho,
        sigma_rhodot: a.sigma_rhodot,
    }
}

fn kind(k: Kind) -> AttributableKind {
    match k {
        Kind::Optical => AttributableKind::Optical,
        Kind::Radar => AttributableKind::Radar,
    }
}

pub fn synth(g: &GlobalArgs, a: &SynthArgs) -> Result<u8> {
    let ctx = Context::new(g)?;
    if let Some(n) = a.batch {
        return synth_batch(&ctx, g, a, n);
    }
    let path = a.elements.as_deref().ok_or_else(|| LinkError::Domain("synth needs --elements".into()))?;
    let elements: KeplerianElements = serde_json::from_reader(open(path)?)?;
    let epochs = match a.epochs.as_deref() {
        Some(&[t1, t2]) => (t1, t2),
        _ => return Err(LinkError::Domain("synth needs --epochs T1 T2".into())),
    };
    let dir = a.out.as_deref().ok_or_else(|| LinkError::Domain("synth needs an output directory (--out)".into()))?;
    let mut rng = g.seed.map(ChaCha8Rng::seed_from_u64);
    let pair = synthesize_attributables(
        &elements,
        epochs,
        &ctx.model,
        &noise(a),
        kind(a.kind),
        &ctx.physics(),
        rng.as_mut().map(|r| r as &mut dyn rand::RngCore),
    )?;
    write_pair(dir, &pair, ctx.config.units)?;
    Ok(0)
}

fn write_pair(dir: &Path, pair: &SyntheticPair, units: UnitSystem) -> Result<()> {
    let line = |a: &Attributable| to_json_line(&AttributableRecord::from_attributable(a, units));
    write_atomic(&dir.join("att1.jsonl"), line(&pair.first)?.as_bytes())?;
    write_atomic(&dir.join("att2.jsonl"), line(&Attributable::Optical(pair.second.clone()))?.as_bytes())?;
    write_atomic(&dir.join("truth.json"), to_json(&Truth { elements: &pair.elements, truth: &pair.truth })?.as_bytes())
}

#[derive(Serialize)]
struct BatchReport {
    orbits: usize,
    linked: usize,
    recovered: usize,
    success_rate: f64,
    tolerance: f64,
    results: Vec<BatchOrbit>,
}

#[derive(Serialize)]
struct BatchOrbit {
    index: usize,
    elements: KeplerianElements,
    epochs: (f64, f64),
    solutions: Option<usize>,
    /// Largest relative error of the solution closest to the truth.
    best_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Diagnostic>,
}

/// Random elliptic orbit and epoch gap for the batch; orbit `index` uses its own
/// stream so the report does not depend on scheduling.
fn batch_case(seed: u64, index: usize, units: UnitSystem, t0: f64) -> (KeplerianElements, (f64, f64), ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let (a_range, gap_range) = match units {
        UnitSystem::AuDay => (0.6..3.0, 30.0..300.0),
        UnitSystem::KmS => (8_000.0..42_000.0, 0.05..0.5),
    };
    let el = KeplerianElements::new(
        rng.random_range(a_range),
        rng.random_range(0.0..0.6),
        rng.random_range(0.0..0.5),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
        t0,
    );
    let gap = rng.random_range(gap_range);
    (el, (t0, t0 + gap), rng)
}

fn relative_error(s: &LinkageSolution, pair: &SyntheticPair) -> f64 {
    let (c1, c2) = (pair.truth[0].coords, pair.truth[1].coords);
    let rel = |a: f64, b: f64, floor: f64| (a - b).abs() / b.abs().max(floor);
    match s.kind {
        keplink::solution::LinkageKind::Optical => rel(s.rho1, c1.rho, 0.0).max(rel(s.rho2, c2.rho, 0.0)),
        keplink::solution::LinkageKind::RadarOptical => rel(s.rho2, c2.rho, 0.0),
    }
    .max(rel(s.rhodot1, c1.rhodot, 1e-4))
    .max(rel(s.rhodot2, c2.rhodot, 1e-4))
}

fn synth_batch(ctx: &Context, g: &GlobalArgs, a: &SynthArgs, n: usize) -> Result<u8> {
    let t0 = a.epochs.as_ref().map_or(58_000.0, |e| e[0]);
    let seed = g.seed.unwrap_or(0);
    let noisy = g.seed.is_some();
    let tolerance = if noisy { 1e-2 } else { 1e-6 };
    let phys = ctx.physics();
    let results: Vec<BatchOrbit> = (0..n)
        .into_par_iter()
        .map(|index| {
            let (elements, epochs, mut rng) = batch_case(seed, index, ctx.config.units, t0);
            let mut run = || -> Result<(usize, f64)> {
                let pair = synthesize_attributables(
                    &elements,
                    epochs,
                    &ctx.model,
                    &noise(a),
                    kind(a.kind),
                    &phys,
                    if noisy { Some(&mut rng) } else { None },
                )?;
                if min_range(&pair) <= 0.0 {
                    return Err(LinkError::Domain("body at the observer".into()));
                }
                let sols = ctx.link_pair(&pair.first, &Attributable::Optical(pair.second.clone()), a.kind == Kind::Radar)?;
                let best = sols.iter().map(|s| relative_error(s, &pair)).fold(f64::INFINITY, f64::min);
                Ok((sols.len(), best))
            };
            match run() {
                Ok((k, best)) => BatchOrbit { index, elements, epochs, solutions: Some(k), best_error: Some(best), error: None },
                Err(e) => {
                    BatchOrbit { index, elements, epochs, solutions: None, best_error: None, error: Some(Diagnostic::from_error(&e)) }
                }
            }
        })
        .collect();
    let linked = results.iter().filter(|r| r.solutions.is_some()).count();
    let recovered = results.iter().filter(|r| r.best_error.is_some_and(|e| e < tolerance)).count();
    let report = BatchReport {
        orbits: n,
        linked,
        recovered,
        success_rate: if n > 0 { recovered as f64 / n as f64 } else { 0.0 },
        tolerance,
        results,
    };
    emit(a.out.as_deref(), &to_json(&report)?)?;
    Ok(0)
}

/// Parses `N` or `MIN:MAX:N`.
pub fn parse_grid(spec: Option<&str>, units: UnitSystem) -> Result<CurveGrid> {
    let (min, max) = match units {
        UnitSystem::AuDay => (0.005, 3.0),
        UnitSystem::KmS => (100.0, 100_000.0),
    };
    let bad = || LinkError::Domain(format!("grid must be N or MIN:MAX:N, got {spec:?}"));
    let parts: Vec<&str> = spec.unwrap_or("200").split(':').collect();
    let (min, max, n) = match parts.as_slice() {
        [n] => (min, max, n.parse().map_err(|_| bad())?),
        [a, b, n] => (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    if n == 0 || !(min < max) || !(min > 0.0) {
        return Err(bad());
    }
    Ok(CurveGrid::square(min, max, n))
}

#[derive(Serialize)]
struct CurveSummary {
    grid: CurveGrid,
    resolution: f64,
    /// Solver solutions `(rho1, rho2)`; empty when linkage fails.
    solutions: Vec<(f64, f64)>,
    p: Vec<(f64, f64)>,
    lenz: Vec<(f64, f64)>,
    energy: Vec<(f64, f64)>,
}

pub fn curves(g: &GlobalArgs, a: &CurvesArgs) -> Result<u8> {
    let ctx = Context::new(g)?;
    let units = ctx.config.units;
    let (f1, f2) = (read_nonempty(&a.first, units)?, read_nonempty(&a.second, units)?);
    let (a1, a2) = (as_optical(&f1[0], "first")?, as_optical(&f2[0], "second")?);
    let (o1, o2) = (ctx.observer(a1.tbar)?, ctx.observer(a2.tbar)?);
    let grid = parse_grid(g.grid.as_deref(), units)?;
    let samples = emit_curve_samples(a1, a2, &o1, &o2, &ctx.physics(), &grid)?;
    for kind in CurveKind::ALL {
        let mut text = String::from("rho1,rho2,value\n");
        for (x, y, v) in samples.rows(kind) {
            text.push_str(&format!("{},{},{}\n", fmt17(x), fmt17(y), fmt17(v)));
        }
        write_atomic(&a.out.join(format!("{}.csv", kind.name())), text.as_bytes())?;
    }
    let solutions = ctx
        .link_pair(&f1[0], &f2[0], false)
        .map(|s| s.iter().map(|s| (s.rho1, s.rho2)).collect())
        .unwrap_or_default();
    let summary = CurveSummary {
        grid,
        resolution: grid.resolution(),
        solutions,
        p: samples.intersections_with_q(CurveKind::P),
        lenz: samples.intersections_with_q(CurveKind::Lenz),
        energy: samples.intersections_with_q(CurveKind::Energy),
    };
    let text = to_json(&summary)?;
    write_atomic(&a.out.join("intersections.json"), text.as_bytes())?;
    print!("{text}");
    Ok(0)
}

/// Recomputes `chi4` and the acceptance flag of every solution in a solutions file.
pub fn rescore(g: &GlobalArgs, a: &RescoreArgs) -> Result<u8> {
    let ctx = Context::new(g)?;
    let mut sols: Vec<LinkageSolution> = serde_json::from_reader(open(&a.solutions)?)?;
    let second = read_nonempty(&a.second, ctx.config.units)?;
    let att2 = as_optical(&second[0], "second")?;
    let o2 = ctx.observer(att2.tbar)?;
    let phys = ctx.physics();
    for s in sols.iter_mut() {
        let chi4 = chi4_for(s, att2, &o2, &phys).ok();
        s.chi4 = chi4;
        s.accepted = Some(chi4.is_some_and(|c| c <= ctx.config.chi4_threshold));
    }
    emit(a.out.as_deref(), &to_json(&sols)?)?;
    Ok(0)
}
