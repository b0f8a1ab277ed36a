//! Versioned CSV artifacts.
//!
//! Every file starts with a `# schema: <name>/v<version>` line followed by a
//! header row. Floats use the shortest round-trip representation, so equal
//! inputs give equal bytes.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grcs::{to_db, GrcsField};
use crate::optimizer::ScaTrace;
use crate::profile::PhaseProfile;
use crate::sim::{IlluminationSummary, SnrResult, SweepRow};

pub const GRCS_FIELD_SCHEMA: &str = "risbeam/grcs-field/v1";
pub const PROFILE_SCHEMA: &str = "risbeam/profile/v1";
pub const TRACE_SCHEMA: &str = "risbeam/sca-trace/v1";
pub const SWEEP_SCHEMA: &str = "risbeam/region-sweep/v1";
pub const SNR_SCHEMA: &str = "risbeam/snr-vs-k/v1";
pub const REGIME_SCHEMA: &str = "risbeam/regime/v1";
pub const ILLUMINATION_SCHEMA: &str = "risbeam/illumination-summary/v1";

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn write_rows<W: Write, T: Serialize>(mut out: W, schema: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    writeln!(out, "# schema: {schema}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize)]
struct FieldRow {
    axis1: f64,
    axis2: f64,
    value_db: f64,
}

/// `axis1,axis2,value_db`, axis1 outer.
pub fn write_grcs_field<W: Write>(out: W, f: &GrcsField) -> Result<()> {
    let rows = f
        .axis1
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| f.axis2.iter().enumerate().map(move |(j, &b)| FieldRow { axis1: a, axis2: b, value_db: to_db(f.values[(i, j)]) }));
    write_rows(out, GRCS_FIELD_SCHEMA, rows)
}

#[derive(Serialize, serde::Deserialize)]
struct ProfileRow {
    index: usize,
    omega_rad: f64,
}

/// `index,omega_rad`.
pub fn write_profile<W: Write>(out: W, p: &PhaseProfile) -> Result<()> {
    write_rows(out, PROFILE_SCHEMA, p.omegas().iter().enumerate().map(|(index, &omega_rad)| ProfileRow { index, omega_rad }))
}

/// Reads a profile written by [`write_profile`]; rows must be in index order.
pub fn read_profile<R: Read>(input: R) -> Result<PhaseProfile> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text).map_err(io_err)?;
    let first = text.lines().next().unwrap_or("");
    if first.trim() != format!("# schema: {PROFILE_SCHEMA}") {
        return Err(Error::Io(format!("expected schema line '# schema: {PROFILE_SCHEMA}', found '{first}'")));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut omegas = Vec::new();
    for (i, row) in r.deserialize::<ProfileRow>().enumerate() {
        let row = row.map_err(io_err)?;
        if row.index != i {
            return Err(Error::Io(format!("profile row {i} has index {}", row.index)));
        }
        omegas.push(row.omega_rad);
    }
    PhaseProfile::new(omegas)
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    gamma_db: f64,
    rank_residual: f64,
    eta: f64,
    status: String,
}

/// `iter,gamma_db,rank_residual,eta,status`; row 0 is the initial point.
pub fn write_trace<W: Write>(out: W, t: &ScaTrace) -> Result<()> {
    let rows = t.rows().map(|r| TraceRow {
        iter: r.iter,
        gamma_db: to_db(r.gamma),
        rank_residual: r.rank_residual,
        eta: r.eta,
        status: r.status.to_string(),
    });
    write_rows(out, TRACE_SCHEMA, rows)
}

#[derive(Serialize)]
struct SweepCsvRow {
    r_m: f64,
    design: &'static str,
    min_grcs_db: f64,
}

/// `r_m,design,min_grcs_db`.
pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_rows(out, SWEEP_SCHEMA, rows.iter().map(|r| SweepCsvRow { r_m: r.r_m, design: r.design.name(), min_grcs_db: r.min_grcs_db }))
}

#[derive(Serialize)]
struct SnrCsvRow {
    k_db: f64,
    benchmark: &'static str,
    mean_snr_db: f64,
    std_err_db: Option<f64>,
    trials: usize,
}

/// `k_db,benchmark,mean_snr_db,std_err_db,trials`; the error column is empty for one trial.
pub fn write_snr<W: Write>(out: W, r: &SnrResult) -> Result<()> {
    let rows = r.points.iter().map(|p| SnrCsvRow {
        k_db: p.k_db,
        benchmark: p.benchmark.name(),
        mean_snr_db: p.mean_snr_db,
        std_err_db: p.std_err_db,
        trials: r.trials,
    });
    write_rows(out, SNR_SCHEMA, rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeRow {
    pub freq_ghz: f64,
    pub d_m: f64,
    pub d_ff_m: f64,
    pub d_qnf_m: f64,
}

/// `freq_ghz,d_m,d_ff_m,d_qnf_m`.
pub fn write_regime<W: Write>(out: W, rows: &[RegimeRow]) -> Result<()> {
    write_rows(out, REGIME_SCHEMA, rows.iter().copied())
}

#[derive(Serialize)]
struct IlluminationCsvRow<'a> {
    design: &'a str,
    min_in_region_db: f64,
    max_in_region_db: f64,
    leakage_db: f64,
    peak_db: f64,
    peak_x_m: f64,
    peak_y_m: f64,
    peak_z_m: f64,
}

/// `design,min_in_region_db,max_in_region_db,leakage_db,peak_db,peak_x_m,peak_y_m,peak_z_m`.
pub fn write_illumination_summary<W: Write>(out: W, rows: &[(String, IlluminationSummary)]) -> Result<()> {
    let rows = rows.iter().map(|(name, s)| IlluminationCsvRow {
        design: name,
        min_in_region_db: s.min_in_region_db,
        max_in_region_db: s.max_in_region_db,
        leakage_db: s.leakage_db,
        peak_db: s.peak_db,
        peak_x_m: s.peak_m[0],
        peak_y_m: s.peak_m[1],
        peak_z_m: s.peak_m[2],
    });
    write_rows(out, ILLUMINATION_SCHEMA, rows)
}
