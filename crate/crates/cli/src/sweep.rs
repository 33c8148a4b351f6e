//! Per-strength rows for each subcommand. Sweep points run in parallel and
//! are collected back in grid order.

use rayon::prelude::*;
use uncollapse_core::montecarlo::{derive_seed, estimate_probabilities, uncollapse_probes_mc};
use uncollapse_core::protocol::{build_sequence, run_exact, SequenceKind};
use uncollapse_core::qpt::{cp_diagnostics, process_fidelity, qpt_reconstruct, uncollapse_chi_exact, ChiMatrix};
use uncollapse_core::tomography::{bloch_reconstruct, measure_exact, TomographyRecord};
use uncollapse_core::Result;

use crate::config::{ConfigFile, Mode};

/// Seed for one sweep point, keyed by the strength itself so a χ request at
/// a grid value reproduces that grid row.
fn point_seed(cfg: &ConfigFile, p: f64) -> u64 {
    derive_seed(cfg.sweep.seed, p.to_bits())
}

fn tomography_at(cfg: &ConfigFile, kind: SequenceKind, p: f64) -> Result<(TomographyRecord, f64)> {
    let exp = cfg.experiment.with_p(p);
    match cfg.sweep.mode {
        Mode::Exact => {
            let rec = measure_exact(kind, &exp)?;
            let success = run_exact(&build_sequence(kind, &exp), &exp)?.p_success;
            Ok((rec, success))
        }
        Mode::Mc => {
            let est = estimate_probabilities(kind, &exp, cfg.sweep.shots, point_seed(cfg, p))?;
            let success = est.p_success();
            Ok((est.record, success))
        }
    }
}

/// Columns: p, P_X, P_Y, P_Z, P_B, X, Y, Z, theta (+ p_success).
pub fn state_rows(cfg: &ConfigFile, kind: SequenceKind, with_success: bool) -> Result<Vec<Vec<f64>>> {
    cfg.sweep
        .p_grid
        .par_iter()
        .map(|&p| {
            let (rec, success) = tomography_at(cfg, kind, p)?;
            let b = bloch_reconstruct(&rec)?;
            let mut row = vec![p, rec.p_x, rec.p_y, rec.p_z, rec.p_b, b.x, b.y, b.z, b.polar_angle()];
            if with_success {
                row.push(success);
            }
            Ok(row)
        })
        .collect()
}

pub fn chi_at(cfg: &ConfigFile, p: f64) -> Result<ChiMatrix> {
    let exp = cfg.experiment.with_p(p);
    match cfg.sweep.mode {
        Mode::Exact => uncollapse_chi_exact(&exp),
        Mode::Mc => qpt_reconstruct(&uncollapse_probes_mc(&exp, cfg.sweep.shots, point_seed(cfg, p))?),
    }
}

/// Columns: p, fidelity, chi_trace, min_eigenvalue.
pub fn qpt_rows(cfg: &ConfigFile) -> Result<Vec<Vec<f64>>> {
    cfg.sweep
        .p_grid
        .par_iter()
        .map(|&p| {
            let chi = chi_at(cfg, p)?;
            let report = cp_diagnostics(&chi);
            Ok(vec![p, process_fidelity(&chi), report.trace, report.min_eigenvalue])
        })
        .collect()
}
