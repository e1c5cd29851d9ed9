//! Result emission: per-iteration CSV traces, the final JSON document,
//! and the human-readable summary. All numeric CSV fields use 17
//! significant digits so the files are byte-stable and round-trip exact.

use crate::config::matrix_to_rows;
use mflqr_core::model_free::PdmfTrace;
use mflqr_core::primal_dual::PdTrace;
use mflqr_core::riccati::PiTrace;
use mflqr_core::{GainPair64, Mat64};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn gain_header(n: usize, m: usize) -> String {
    let mut cols = String::new();
    for i in 0..m {
        for j in 0..n {
            cols.push_str(&format!(",f_{i}_{j}"));
        }
    }
    for i in 0..m {
        for j in 0..n {
            cols.push_str(&format!(",fbar_{i}_{j}"));
        }
    }
    cols
}

fn gain_fields(g: &GainPair64) -> String {
    let mut out = String::new();
    for x in g.f.transpose().iter() {
        out.push_str(&format!(",{}", fmt(*x)));
    }
    for x in g.f_bar.transpose().iter() {
        out.push_str(&format!(",{}", fmt(*x)));
    }
    out
}

pub fn write_pi_trace(path: &Path, trace: &PiTrace<f64>) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    let (m, n) = (trace.final_gains.f.nrows(), trace.final_gains.f.ncols());
    writeln!(out, "iter,gain_change,radius{}", gain_header(n, m))?;
    for it in &trace.iterates {
        writeln!(
            out,
            "{},{},{}{}",
            it.index,
            fmt(it.gain_change),
            fmt(it.radius),
            gain_fields(&it.gains)
        )?;
    }
    Ok(())
}

pub fn write_pd_trace(path: &Path, trace: &PdTrace<f64>) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    let (m, n) = (trace.final_gains.f.nrows(), trace.final_gains.f.ncols());
    writeln!(out, "iter,gain_change,radius{}", gain_header(n, m))?;
    for it in &trace.iterates {
        writeln!(
            out,
            "{},{},{}{}",
            it.index,
            fmt(it.gain_change),
            fmt(it.radius),
            gain_fields(&it.gains)
        )?;
    }
    Ok(())
}

pub fn write_pdmf_trace(path: &Path, trace: &PdmfTrace<f64>) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(
        out,
        "iter,gain_err_F,gain_err_Fbar,kkt33_residual,sm_min_eig,diverged_flag"
    )?;
    for it in &trace.iterates {
        writeln!(
            out,
            "{},{},{},{},{},0",
            it.index,
            fmt(it.gain_change_f),
            fmt(it.gain_change_f_bar),
            fmt(it.kkt_residual),
            fmt(it.sm_min_eig)
        )?;
    }
    if let Some(i) = trace.diverged_at {
        writeln!(out, "{i},,,,,1")?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct GainsDoc {
    pub f: Vec<Vec<f64>>,
    pub f_bar: Vec<Vec<f64>>,
    pub f_hat: Vec<Vec<f64>>,
}

impl GainsDoc {
    pub fn from(g: &GainPair64) -> Self {
        Self {
            f: matrix_to_rows(&g.f),
            f_bar: matrix_to_rows(&g.f_bar),
            f_hat: matrix_to_rows(&g.f_hat()),
        }
    }
}

#[derive(Serialize)]
pub struct ValuesDoc {
    pub p: Vec<Vec<f64>>,
    pub p_bar: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct DualityDoc {
    pub j_primal: f64,
    pub j_dual: f64,
    pub gap: f64,
}

/// Final document of `mflqr run`.
#[derive(Serialize)]
pub struct ResultDoc {
    pub algorithm: String,
    pub converged: bool,
    pub iterations: usize,
    pub gains: GainsDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<ValuesDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualityDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_loop_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign_convention: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<usize>,
    pub seed: u64,
    pub timing_ms: u128,
}

pub fn write_result(path: &Path, doc: &ResultDoc) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_summary(path: &Path, lines: &[String]) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// `compare.csv`: one row per method plus the ratio row, with notes
/// recording methodology choices.
pub fn write_compare(
    path: &Path,
    id_err: f64,
    learned_err: f64,
) -> std::io::Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "method,fhat_error,notes")?;
    writeln!(
        out,
        "identification,{},\"least squares on one batch at the initial gains; coupled Riccati equations of the estimated model solved by policy iteration\"",
        fmt(id_err)
    )?;
    writeln!(
        out,
        "learned,{},\"partially model-free primal-dual learner, fresh batch per iteration\"",
        fmt(learned_err)
    )?;
    writeln!(out, "ratio,{},\"learned / identification\"", fmt(learned_err / id_err))?;
    Ok(())
}

pub fn matrix_doc(m: &Mat64) -> Vec<Vec<f64>> {
    matrix_to_rows(m)
}
