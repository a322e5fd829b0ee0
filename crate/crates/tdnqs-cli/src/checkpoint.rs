//! Parameter checkpoints: a small versioned text format holding the network
//! shape, the originating seed, and the complex parameters at 17 significant
//! digits — enough for f64 round trips to be bit-exact.
//!
//! ```text
//! tdnqs-checkpoint 1
//! hidden 5
//! seed 174
//! theta 16
//! 0 -4.8297090540084642e-1 3.413249628827917e-2
//! …
//! ```

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::CliError;
use crate::output::write_atomic;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub hidden: usize,
    pub seed: u64,
    pub theta: Array1<Complex64>,
}

impl Checkpoint {
    pub fn new(hidden: usize, seed: u64, theta: Array1<Complex64>) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            hidden,
            seed,
            theta,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tdnqs-checkpoint {}", self.format_version);
        let _ = writeln!(out, "hidden {}", self.hidden);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "theta {}", self.theta.len());
        for (i, v) in self.theta.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.16e} {:.16e}", v.re, v.im);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate();
        let mut expect = |tag: &str| -> Result<(usize, String), (usize, String)> {
            let (idx, line) = lines
                .next()
                .ok_or((0, format!("file ended before '{tag}' line")))?;
            let rest = line
                .strip_prefix(tag)
                .ok_or((idx + 1, format!("expected '{tag} …', got '{line}'")))?;
            Ok((idx + 1, rest.trim().to_string()))
        };

        let (line_no, version) = expect("tdnqs-checkpoint")?;
        let format_version: u32 = version
            .parse()
            .map_err(|_| (line_no, format!("bad version '{version}'")))?;
        if format_version != FORMAT_VERSION {
            return Err((
                line_no,
                format!("unsupported checkpoint version {format_version} (supported: {FORMAT_VERSION})"),
            ));
        }
        let (line_no, hidden) = expect("hidden")?;
        let hidden: usize = hidden
            .parse()
            .map_err(|_| (line_no, format!("bad hidden size '{hidden}'")))?;
        let (line_no, seed) = expect("seed")?;
        let seed: u64 = seed
            .parse()
            .map_err(|_| (line_no, format!("bad seed '{seed}'")))?;
        let (line_no, count) = expect("theta")?;
        let count: usize = count
            .parse()
            .map_err(|_| (line_no, format!("bad parameter count '{count}'")))?;
        if count != 3 * hidden + 1 {
            return Err((
                line_no,
                format!("theta count {count} does not match hidden {hidden} (expected {})", 3 * hidden + 1),
            ));
        }

        let mut theta = Array1::zeros(count);
        for expected_index in 0..count {
            let (idx, line) = lines
                .next()
                .ok_or((0, format!("file ended at parameter {expected_index} of {count}")))?;
            let line_no = idx + 1;
            let mut parts = line.split_whitespace();
            let index: usize = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or((line_no, format!("bad parameter line '{line}'")))?;
            if index != expected_index {
                return Err((line_no, format!("expected index {expected_index}, got {index}")));
            }
            let mut part = |what: &str| -> Result<f64, (usize, String)> {
                parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or((line_no, format!("bad {what} in '{line}'")))
            };
            let re = part("real part")?;
            let im = part("imaginary part")?;
            theta[expected_index] = Complex64::new(re, im);
        }
        Ok(Checkpoint {
            format_version,
            hidden,
            seed,
            theta,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Checkpoint::parse(&text).map_err(|(line, message)| CliError::Config {
            path: path.to_path_buf(),
            line: if line == 0 { None } else { Some(line) },
            message,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let theta = Array1::from_iter((0..16).map(|i| {
            // Awkward, fully general doubles: irrational-ish with both signs.
            Complex64::new(
                (i as f64 + 0.147).sin() * 1e3,
                (i as f64 - 11.9).cos() * 1e-7,
            )
        }));
        Checkpoint::new(5, 174, theta)
    }

    #[test]
    fn round_trip_is_bit_exact_and_byte_stable() {
        let ck = sample();
        let text = ck.to_text();
        let back = Checkpoint::parse(&text).unwrap();
        assert_eq!(back, ck);
        for (a, b) in ck.theta.iter().zip(back.theta.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // write → read → write reproduces the bytes.
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(Checkpoint::parse("").is_err());
        let ck = sample().to_text();
        let wrong_version = ck.replacen("tdnqs-checkpoint 1", "tdnqs-checkpoint 9", 1);
        match Checkpoint::parse(&wrong_version) {
            Err((1, msg)) => assert!(msg.contains("version"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let truncated: String = ck.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(Checkpoint::parse(&truncated).is_err());
        let wrong_count = ck.replacen("theta 16", "theta 12", 1);
        assert!(Checkpoint::parse(&wrong_count).is_err());
    }
}
