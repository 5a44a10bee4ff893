//! File formats: attributables as JSON Lines, ephemeris tables and observation arcs as CSV.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::attributable::{Attributable, Observation, ObservationArc, OpticalAttributable, RadarAttributable};
use crate::ephemeris::EphemerisTable;
use crate::error::{LinkError, Result};
use crate::frames::Vec3;
use crate::synth::AttributableKind;
use crate::units::UnitSystem;

/// Reference frame label written with every record.
pub const DEFAULT_FRAME: &str = "inertial";

/// One line of an attributable `.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributableRecord {
    pub kind: AttributableKind,
    pub tbar_mjd: f64,
    pub values: [f64; 4],
    /// Row-major 4x4 covariance.
    pub cov: Vec<f64>,
    #[serde(default)]
    pub station: Option<String>,
    #[serde(default = "default_frame")]
    pub frame: String,
    pub units: UnitSystem,
}

fn default_frame() -> String {
    DEFAULT_FRAME.to_string()
}

impl AttributableRecord {
    pub fn from_attributable(att: &Attributable, units: UnitSystem) -> Self {
        let (kind, station) = match att {
            Attributable::Optical(a) => (AttributableKind::Optical, a.station.clone()),
            Attributable::Radar(a) => (AttributableKind::Radar, a.station.clone()),
        };
        let cov = att.cov();
        Self {
            kind,
            tbar_mjd: att.tbar(),
            values: att.values().into(),
            cov: (0..16).map(|k| cov[(k / 4, k % 4)]).collect(),
            station,
            frame: default_frame(),
            units,
        }
    }

    pub fn to_attributable(&self) -> Result<Attributable> {
        if self.cov.len() != 16 {
            return Err(LinkError::Parse(format!("covariance needs 16 entries, got {}", self.cov.len())));
        }
        if self.values.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) || !self.tbar_mjd.is_finite() {
            return Err(LinkError::Parse("non-finite number in attributable record".into()));
        }
        let cov = Matrix4::from_row_slice(&self.cov);
        let scale = cov.amax();
        if (cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(LinkError::Domain("attributable covariance is not symmetric".into()));
        }
        let v = Vector4::from(self.values);
        Ok(match self.kind {
            AttributableKind::Optical => {
                let mut a = OpticalAttributable::from_values(&v, self.tbar_mjd, cov)?;
                a.station = self.station.clone();
                Attributable::Optical(a)
            }
            AttributableKind::Radar => {
                let mut a = RadarAttributable::from_values(&v, self.tbar_mjd, cov)?;
                a.station = self.station.clone();
                Attributable::Radar(a)
            }
        })
    }
}

/// Reads attributables, one JSON object per non-empty line. Records in another unit
/// system than `units` are rejected.
pub fn read_attributables<R: BufRead>(reader: R, units: UnitSystem) -> Result<Vec<Attributable>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LinkError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AttributableRecord =
            serde_json::from_str(&line).map_err(|e| LinkError::Parse(format!("line {}: {e}", n + 1)))?;
        if rec.units != units {
            return Err(LinkError::Domain(format!(
                "line {}: record is in {} units, run uses {}",
                n + 1,
                rec.units.label(),
                units.label()
            )));
        }
        out.push(rec.to_attributable()?);
    }
    Ok(out)
}

pub fn read_attributables_file(path: &Path, units: UnitSystem) -> Result<Vec<Attributable>> {
    let f = std::fs::File::open(path).map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))?;
    read_attributables(std::io::BufReader::new(f), units)
}

pub fn write_attributables<W: Write>(mut w: W, atts: &[Attributable], units: UnitSystem) -> Result<()> {
    for a in atts {
        let line = serde_json::to_string(&AttributableRecord::from_attributable(a, units)).map_err(|e| LinkError::Io(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| LinkError::Io(e.to_string()))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EphemerisRow {
    mjd: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

/// Reads a table with header `mjd,qx,qy,qz,vx,vy,vz`.
pub fn read_ephemeris_csv<R: Read>(reader: R) -> Result<EphemerisTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let (mut mjd, mut q, mut qdot) = (Vec::new(), Vec::new(), Vec::new());
    for (n, row) in rdr.deserialize::<EphemerisRow>().enumerate() {
        let r = row.map_err(|e| LinkError::Parse(format!("ephemeris row {}: {e}", n + 1)))?;
        mjd.push(r.mjd);
        q.push(Vec3::new(r.qx, r.qy, r.qz));
        qdot.push(Vec3::new(r.vx, r.vy, r.vz));
    }
    EphemerisTable::new(mjd, q, qdot)
}

pub fn write_ephemeris_csv<W: Write>(w: W, table: &EphemerisTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for k in 0..table.mjd.len() {
        let (q, v) = (table.q[k], table.qdot[k]);
        wtr.serialize(EphemerisRow { mjd: table.mjd[k], qx: q.x, qy: q.y, qz: q.z, vx: v.x, vy: v.y, vz: v.z })
            .map_err(|e| LinkError::Io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| LinkError::Io(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct ArcRow {
    mjd: f64,
    ra_deg: f64,
    dec_deg: f64,
    #[serde(default)]
    rho: Option<f64>,
}

/// Reads an arc with header `mjd,ra_deg,dec_deg[,rho]`; angles become radians.
pub fn read_arc_csv<R: Read>(reader: R, sigma_angle: f64, sigma_rho: f64) -> Result<ObservationArc> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut obs = Vec::new();
    for (n, row) in rdr.deserialize::<ArcRow>().enumerate() {
        let r = row.map_err(|e| LinkError::Parse(format!("arc row {}: {e}", n + 1)))?;
        obs.push(Observation { t: r.mjd, alpha: r.ra_deg.to_radians(), delta: r.dec_deg.to_radians(), rho: r.rho });
    }
    ObservationArc::new(obs, sigma_angle, sigma_rho)
}
