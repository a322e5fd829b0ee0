//! Output files: everything is written atomically (temp file + rename) and
//! all floats use Rust's shortest-round-trip formatting, so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tdnqs::integrate::TrajPoint;
use tdnqs::model::Grid;

use crate::error::CliError;

/// Write `bytes` to `path` via a temporary sibling and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// `step,energy` history of an imaginary-time relaxation.
pub fn energy_history_csv(energies: &[f64]) -> String {
    let mut out = String::from("step,energy\n");
    for (i, e) in energies.iter().enumerate() {
        let _ = writeln!(out, "{},{e}", i + 1);
    }
    out
}

/// `x,density` snapshot of a single state.
pub fn density_csv(grid: &Grid, density: &ndarray::Array1<f64>) -> String {
    let mut out = String::from("x,density\n");
    for (x, d) in grid.x().iter().zip(density.iter()) {
        let _ = writeln!(out, "{x},{d}");
    }
    out
}

/// The trajectory table: one row per recorded point.
pub fn trajectory_csv(points: &[TrajPoint]) -> String {
    let mut out = String::from("t,energy,norm,x_mean,x2_mean,variance,solve_residual,cond_estimate\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.t,
            p.energy.re,
            p.norm,
            p.x_mean,
            p.x2_mean,
            p.sigma2(),
            p.residual,
            p.cond
        );
    }
    out
}

/// Long-format density history: `t,x,density`, one row per time × grid point.
pub fn density_history_csv(grid: &Grid, points: &[TrajPoint]) -> String {
    let mut out = String::from("t,x,density\n");
    for p in points {
        for (x, d) in grid.x().iter().zip(p.density.iter()) {
            let _ = writeln!(out, "{},{x},{d}", p.t);
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct GroundStateSummary {
    pub command: &'static str,
    pub seed: u64,
    pub amplitude_map: &'static str,
    pub converged: bool,
    /// Last recorded Re⟨H⟩ (the converged energy when `converged`).
    pub energy: Option<f64>,
    pub steps: usize,
    pub max_rise: Option<f64>,
    /// Solver diagnostics; absent when the search failed before finishing.
    pub max_im_ratio: Option<f64>,
    pub max_residual: Option<f64>,
    pub max_cond: Option<f64>,
    pub cond_warnings: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct EvolveSummary {
    pub command: &'static str,
    pub seed: u64,
    pub amplitude_map: &'static str,
    pub completed: bool,
    pub recorded_points: usize,
    pub final_t: f64,
    pub final_energy: f64,
    pub energy_drift: f64,
    pub max_param_drift: f64,
    pub max_residual: f64,
    pub max_cond: f64,
    pub max_im_ratio: f64,
    pub cond_warnings: usize,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkSummary {
    pub command: &'static str,
    pub protocol: String,
    pub seed: u64,
    pub amplitude_map: &'static str,
    pub pass: bool,
    pub max_density_error: f64,
    pub density_threshold: f64,
    pub energy_drift: f64,
    pub drift_threshold: f64,
    pub tracking_error: f64,
    pub tracking_threshold: f64,
    pub max_param_drift: f64,
    pub param_drift_warning_at: f64,
    pub prepared_energy: f64,
    pub prepare_steps: usize,
    pub prepare_max_residual: f64,
    pub max_solve_residual: f64,
    pub boundary_density_max: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries always serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_complex::Complex64;

    fn point(t: f64) -> TrajPoint {
        TrajPoint {
            t,
            step: (t * 10.0) as usize,
            energy: Complex64::new(0.5, 1e-12),
            norm: 1.0,
            x_mean: 0.25,
            x2_mean: 0.5625,
            density: array![0.125, 0.25],
            theta: array![Complex64::ONE],
            residual: 1e-13,
            cond: 1e6,
            im_ratio: 1e-9,
            max_theta_dot: 0.1,
        }
    }

    #[test]
    fn csv_schemas_are_stable() {
        let grid = Grid::new(-1.0, 1.0, 2).unwrap();
        let points = [point(0.0), point(0.1)];
        let traj = trajectory_csv(&points);
        let mut lines = traj.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,energy,norm,x_mean,x2_mean,variance,solve_residual,cond_estimate"
        );
        assert_eq!(lines.next().unwrap(), "0,0.5,1,0.25,0.5625,0.5,0.0000000000001,1000000");

        let hist = density_history_csv(&grid, &points);
        let mut lines = hist.lines();
        assert_eq!(lines.next().unwrap(), "t,x,density");
        assert_eq!(lines.next().unwrap(), "0,-1,0.125");
        assert_eq!(lines.next().unwrap(), "0,1,0.25");
        assert_eq!(hist.lines().count(), 5);

        assert_eq!(energy_history_csv(&[0.75, 0.5]), "step,energy\n1,0.75\n2,0.5\n");
        assert_eq!(
            density_csv(&grid, &array![0.5, 0.25]),
            "x,density\n-1,0.5\n1,0.25\n"
        );
    }

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        // No stray temp file left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
