//! Stable output schemas for curve and sweep files.
//!
//! Column order and JSON keys are versioned; golden tests pin them. Floats
//! are written with Rust's shortest round-trip formatting, so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;

use crate::harness::{LearningCurve, SweepResult};

pub const CURVE_SCHEMA_VERSION: u32 = 1;
pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// CSV with header `iter,<algo_1>,<algo_2>,...` and one trial-averaged MSE
/// column per algorithm.
pub fn curves_to_csv(curves: &[LearningCurve]) -> String {
    let mut out = String::from("iter");
    for c in curves {
        write!(out, ",{}", c.algorithm_id).expect("string write");
    }
    out.push('\n');
    let n_iters = curves.first().map_or(0, |c| c.mse.len());
    for n in 0..n_iters {
        write!(out, "{}", n + 1).expect("string write");
        for c in curves {
            write!(out, ",{:?}", c.mse[n]).expect("string write");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct CurveFile<'a> {
    schema_version: u32,
    n_iters: usize,
    n_trials: usize,
    curves: &'a [LearningCurve],
}

/// JSON mirror of the curve CSV, with schema metadata.
pub fn curves_to_json(curves: &[LearningCurve]) -> String {
    let file = CurveFile {
        schema_version: CURVE_SCHEMA_VERSION,
        n_iters: curves.first().map_or(0, |c| c.mse.len()),
        n_trials: curves.first().map_or(0, |c| c.trials),
        curves,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("curve serialization");
    text.push('\n');
    text
}

/// CSV table `gamma,steady_mse` plus a trailing `# best_gamma = <v>` line.
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut out = String::from("gamma,steady_mse\n");
    for (g, mse) in result.gamma_grid.iter().zip(&result.steady_mse) {
        writeln!(out, "{g:?},{mse:?}").expect("string write");
    }
    writeln!(out, "# best_gamma = {:?}", result.best_gamma).expect("string write");
    out
}

#[derive(Serialize)]
struct SweepFile<'a> {
    schema_version: u32,
    #[serde(flatten)]
    result: &'a SweepResult,
}

pub fn sweep_to_json(result: &SweepResult) -> String {
    let file = SweepFile {
        schema_version: SWEEP_SCHEMA_VERSION,
        result,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("sweep serialization");
    text.push('\n');
    text
}
