//! Run configuration: a flat, line-oriented `key = value` text format.
//!
//! Grammar, one setting per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! section.key = value     # e.g. grid.n = 100
//! key = value             # top-level settings: seed, amplitude_map, output_dir
//! ```
//!
//! Unknown keys and unparseable values are errors carrying the line number.
//! Every setting has a default matching the engine's documented operating
//! point, so the empty file is a complete, runnable configuration (the
//! coherent-quench protocol at the documented seed). Later lines override
//! earlier ones.

use std::fmt::Write as _;

use tdnqs::model::AmplitudeMap;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub grid_x_min: f64,
    pub grid_x_max: f64,
    pub grid_n: usize,
    pub net_hidden: usize,
    pub seed: u64,
    pub amplitude_map: AmplitudeMap,
    /// Where output files go; `None` defers to `TDNQS_OUTPUT_DIR` or `.`.
    pub output_dir: Option<String>,
    pub prepare_omega: f64,
    pub prepare_x0: f64,
    pub evolve_omega: f64,
    pub evolve_x0: f64,
    pub evolve_dt: f64,
    pub evolve_t_max: f64,
    pub evolve_lambda_re: f64,
    pub evolve_lambda_im: f64,
    pub evolve_record_every: usize,
    pub gs_tol: f64,
    pub gs_patience: usize,
    pub gs_max_steps: usize,
    pub gs_lambda: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid_x_min: -8.0,
            grid_x_max: 8.0,
            grid_n: 100,
            net_hidden: 5,
            seed: 174,
            amplitude_map: AmplitudeMap::ExpOfF,
            output_dir: None,
            prepare_omega: 1.0,
            prepare_x0: 1.0,
            evolve_omega: 1.0,
            evolve_x0: 0.0,
            evolve_dt: 0.1,
            evolve_t_max: 50.0,
            evolve_lambda_re: 0.0,
            evolve_lambda_im: 1e-6,
            evolve_record_every: 1,
            gs_tol: 1e-8,
            gs_patience: 10,
            gs_max_steps: 10_000,
            gs_lambda: 1e-4,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| (line_no, format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value)
                .map_err(|why| (line_no, format!("{key}: {why}")))?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("'{value}' is not a valid {what}"))
        }
        match key {
            "grid.x_min" => self.grid_x_min = num(value, "number")?,
            "grid.x_max" => self.grid_x_max = num(value, "number")?,
            "grid.n" => self.grid_n = num(value, "count")?,
            "net.hidden" => self.net_hidden = num(value, "count")?,
            "seed" => self.seed = num(value, "seed")?,
            "amplitude_map" => {
                self.amplitude_map = value.parse::<AmplitudeMap>().map_err(|e| e.to_string())?
            }
            "output_dir" => self.output_dir = Some(value.to_string()),
            "prepare.omega" => self.prepare_omega = num(value, "number")?,
            "prepare.x0" => self.prepare_x0 = num(value, "number")?,
            "evolve.omega" => self.evolve_omega = num(value, "number")?,
            "evolve.x0" => self.evolve_x0 = num(value, "number")?,
            "evolve.dt" => self.evolve_dt = num(value, "number")?,
            "evolve.t_max" => self.evolve_t_max = num(value, "number")?,
            "evolve.lambda_re" => self.evolve_lambda_re = num(value, "number")?,
            "evolve.lambda_im" => self.evolve_lambda_im = num(value, "number")?,
            "evolve.record_every" => self.evolve_record_every = num(value, "count")?,
            "gs.tol" => self.gs_tol = num(value, "number")?,
            "gs.patience" => self.gs_patience = num(value, "count")?,
            "gs.max_steps" => self.gs_max_steps = num(value, "count")?,
            "gs.lambda" => self.gs_lambda = num(value, "number")?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text).map_err(|(line, message)| CliError::Config {
            path: path.to_path_buf(),
            line: Some(line),
            message,
        })
    }

    /// The effective configuration as config-file text; parsing it back
    /// reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "grid.x_min = {}", self.grid_x_min);
        let _ = writeln!(out, "grid.x_max = {}", self.grid_x_max);
        let _ = writeln!(out, "grid.n = {}", self.grid_n);
        let _ = writeln!(out, "net.hidden = {}", self.net_hidden);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "amplitude_map = {}", self.amplitude_map.name());
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output_dir = {dir}");
        }
        let _ = writeln!(out, "prepare.omega = {}", self.prepare_omega);
        let _ = writeln!(out, "prepare.x0 = {}", self.prepare_x0);
        let _ = writeln!(out, "evolve.omega = {}", self.evolve_omega);
        let _ = writeln!(out, "evolve.x0 = {}", self.evolve_x0);
        let _ = writeln!(out, "evolve.dt = {}", self.evolve_dt);
        let _ = writeln!(out, "evolve.t_max = {}", self.evolve_t_max);
        let _ = writeln!(out, "evolve.lambda_re = {}", self.evolve_lambda_re);
        let _ = writeln!(out, "evolve.lambda_im = {}", self.evolve_lambda_im);
        let _ = writeln!(out, "evolve.record_every = {}", self.evolve_record_every);
        let _ = writeln!(out, "gs.tol = {}", self.gs_tol);
        let _ = writeln!(out, "gs.patience = {}", self.gs_patience);
        let _ = writeln!(out, "gs.max_steps = {}", self.gs_max_steps);
        let _ = writeln!(out, "gs.lambda = {}", self.gs_lambda);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.seed, 174);
        assert_eq!(cfg.grid_n, 100);
        assert_eq!(cfg.amplitude_map, AmplitudeMap::ExpOfF);
    }

    #[test]
    fn parses_overrides_comments_and_blank_lines() {
        let text = "\n# breathing protocol\nprepare.x0 = 0\nevolve.omega = 0.5 # quenched\n\nseed = 8\namplitude_map = f_direct\ngs.max_steps = 40000\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.prepare_x0, 0.0);
        assert_eq!(cfg.evolve_omega, 0.5);
        assert_eq!(cfg.seed, 8);
        assert_eq!(cfg.amplitude_map, AmplitudeMap::FDirect);
        assert_eq!(cfg.gs_max_steps, 40_000);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.evolve_dt, 0.1);
    }

    #[test]
    fn later_lines_override_earlier_ones() {
        let cfg = Config::parse("seed = 1\nseed = 2\n").unwrap();
        assert_eq!(cfg.seed, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match Config::parse("seed = 1\nbogus_key = 3\n") {
            Err((line, msg)) => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus_key"), "{msg}");
            }
            Ok(_) => panic!("unknown key accepted"),
        }
        match Config::parse("grid.n 100\n") {
            Err((line, msg)) => {
                assert_eq!(line, 1);
                assert!(msg.contains("key = value"), "{msg}");
            }
            Ok(_) => panic!("missing '=' accepted"),
        }
        match Config::parse("\n\nevolve.dt = fast\n") {
            Err((line, msg)) => {
                assert_eq!(line, 3);
                assert!(msg.contains("evolve.dt"), "{msg}");
            }
            Ok(_) => panic!("bad number accepted"),
        }
    }

    #[test]
    fn effective_text_round_trips() {
        let cfg = Config {
            seed: 99,
            evolve_t_max: 12.5,
            evolve_lambda_im: 1e-4,
            output_dir: Some("runs/demo".to_string()),
            amplitude_map: AmplitudeMap::FDirect,
            ..Config::default()
        };
        let reparsed = Config::parse(&cfg.to_text()).unwrap();
        assert_eq!(reparsed, cfg);
    }
}
