//! CSV tables, JSON documents and run manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cohengine_core::sweepopt::{OptimizerInfo, SweepGrid, SweepRecord};
use cohengine_core::{CurrentSet, OptimizationTarget};
use serde::Serialize;

use crate::error::CliError;

pub const CSV_COLUMNS: [&str; 21] = [
    "p1",
    "c_re",
    "c_im",
    "e_m",
    "delta",
    "zeta",
    "e_tape",
    "q_c",
    "q_h",
    "s_tape",
    "f_tape",
    "f_classical",
    "c_coh",
    "s_tot",
    "eta",
    "eta_over_carnot",
    "cop",
    "cop_over_carnot",
    "ergotropy_rate",
    "regime",
    "status",
];

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub preset: Option<String>,
    pub config: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tape: BTreeMap<String, f64>,
    pub grid: Option<SweepGrid>,
    pub target: Option<OptimizationTarget>,
    pub seed: Option<u64>,
    pub level: Option<String>,
    pub workers: usize,
    pub flags: Vec<String>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_row(r: &SweepRecord) -> String {
    let cs = r.currents.as_ref();
    let f = |g: fn(&CurrentSet) -> f64| opt(cs.map(g));
    let fields = [
        num(r.p1),
        num(r.c.re),
        num(r.c.im),
        opt(r.e_m),
        f(|c| c.delta),
        f(|c| c.zeta),
        f(|c| c.e_tape),
        f(|c| c.q_c),
        f(|c| c.q_h),
        f(|c| c.s_tape),
        f(|c| c.f_tape),
        f(|c| c.f_classical),
        f(|c| c.c_coh),
        f(|c| c.s_tot),
        opt(cs.and_then(|c| c.eta)),
        opt(cs.and_then(|c| c.eta_over_carnot())),
        opt(cs.and_then(|c| c.cop)),
        opt(cs.and_then(|c| c.cop_over_carnot())),
        f(|c| c.ergotropy_rate),
        r.regime.map(|x| x.as_str().to_string()).unwrap_or_default(),
        r.status.to_string(),
    ];
    fields.join(",")
}

pub fn write_csv(mut w: impl Write, rows: &[SweepRecord]) -> io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        writeln!(w, "{}", csv_row(r))?;
    }
    w.flush()
}

/// JSON form of a single evaluated point.
#[derive(Debug, Serialize)]
pub struct PointDocument<'a> {
    pub p1: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub e_m: Option<f64>,
    #[serde(flatten)]
    pub currents: Option<&'a CurrentSet>,
    pub eta_over_carnot: Option<f64>,
    pub cop_over_carnot: Option<f64>,
    pub regime: Option<&'static str>,
    pub status: &'static str,
    pub optimizer: Option<OptimizerInfo>,
    pub manifest: Manifest,
}

impl<'a> PointDocument<'a> {
    pub fn new(r: &'a SweepRecord, manifest: Manifest) -> Self {
        let cs = r.currents.as_ref();
        PointDocument {
            p1: r.p1,
            c_re: r.c.re,
            c_im: r.c.im,
            e_m: r.e_m,
            currents: cs,
            eta_over_carnot: cs.and_then(|c| c.eta_over_carnot()),
            cop_over_carnot: cs.and_then(|c| c.cop_over_carnot()),
            regime: r.regime.map(|x| x.as_str()),
            status: r.status,
            optimizer: r.optimizer,
            manifest,
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w).map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Result<(), CliError> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, doc).map_err(io::Error::other)?;
        writeln!(w)
    })
}

/// Manifest sidecar path for a table written to `out`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
