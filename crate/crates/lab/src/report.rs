//! Plot-ready text outputs: correlation table, fit line and run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hbt_core::correlator::{CorrelationFunction, FitResult};
use hbt_core::oracles::{blurred_length, contrast_reduction};
use hbt_core::sources::CoherenceKernel;

use crate::config::RunConfig;
use crate::error::{LabError, Result};

pub const CORRELATION_HEADER: &str = "# dx[m] dy[m] dz[m] g2 stderr";

/// One row per bin; axes that are not binned read 0, invalid bins NaN.
pub fn correlation_table(cf: &CorrelationFunction) -> String {
    let mut out = String::with_capacity(64 * cf.len() + 64);
    out.push_str(CORRELATION_HEADER);
    out.push('\n');
    for b in 0..cf.len() {
        let c = cf.center(b);
        let _ = writeln!(out, "{:e} {:e} {:e} {:e} {:e}", c[0], c[1], c[2], cf.g2[b], cf.stderr[b]);
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"))
}

pub fn fit_line(fit: &FitResult) -> String {
    format!(
        "eta={:e} sign={} lx={} ly={} lz={} chi2red={:e} eta_err={:e}",
        fit.eta,
        fit.sign,
        opt(fit.lengths[0]),
        opt(fit.lengths[1]),
        opt(fit.lengths[2]),
        fit.chi2red,
        fit.eta_err
    )
}

/// Closed-form expectations for a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub g2_zero: f64,
    pub lengths: [f64; 3],
    pub measured_lengths: [f64; 3],
    pub contrast: f64,
    pub sign: i8,
}

impl Predictions {
    pub fn new(cfg: &RunConfig) -> Self {
        let lengths = cfg.expected_lengths();
        let mut measured = [f64::INFINITY; 3];
        let (mut l, mut d) = ([1.0; 3], [0.0; 3]);
        for a in cfg.binned_axes() {
            let i = a.index();
            measured[i] = blurred_length(lengths[i], cfg.resolution[i]);
            if lengths[i].is_finite() {
                l[i] = lengths[i];
                d[i] = cfg.resolution[i];
            }
        }
        let contrast = contrast_reduction(l, d);
        let sign = cfg.statistics.exchange_sign();
        Predictions {
            g2_zero: 1.0 + sign as f64 * contrast,
            lengths,
            measured_lengths: measured,
            contrast,
            sign,
        }
    }
}

/// Self-describing record of a simulate run.
pub fn manifest(cfg: &RunConfig, kernel: &CoherenceKernel, events_file: &str, events: usize) -> String {
    let p = Predictions::new(cfg);
    let mut out = String::from("# hbt run manifest\n");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.entries() {
        let _ = writeln!(out, "config.{k} = {v}");
    }
    let _ = writeln!(out, "kernel.mean_count = {:e}", kernel.trace());
    let _ = writeln!(out, "kernel.modes = {}", kernel.mode_count());
    let _ = writeln!(out, "kernel.max_eigenvalue = {:e}", kernel.max_eigenvalue());
    for a in &cfg.dims {
        let _ = writeln!(out, "kernel.emitters_{} = {}", a.name(), cfg.emitter_count(a.index()));
    }
    let _ = writeln!(out, "prediction.g2_zero = {:e}", p.g2_zero);
    let _ = writeln!(out, "prediction.sign = {}", p.sign);
    let _ = writeln!(out, "prediction.contrast = {:e}", p.contrast);
    for (i, name) in ["x", "y", "z"].iter().enumerate() {
        let _ = writeln!(out, "prediction.length_{name} = {:e}", p.lengths[i]);
        let _ = writeln!(out, "prediction.measured_length_{name} = {:e}", p.measured_lengths[i]);
    }
    let _ = writeln!(out, "events.file = {events_file}");
    let _ = writeln!(out, "events.count = {events}");
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}
