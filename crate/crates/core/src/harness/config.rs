//! Flat `key = value` run configuration with `--key value` overrides.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mms::MmsCase;
use crate::stepper::SolverConfig;

/// How the static manufactured source enters the field-line integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSampling {
    /// Evaluated exactly at the line samples.
    Lines,
    /// Interpolated from the nodal values like every other field.
    Nodes,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub delta: f64,
    pub b0: f64,
    /// Drop the perturbation: the steady state is `psi` alone.
    pub null_space: bool,
    /// Cells per direction for `run`.
    pub mesh: usize,
    /// Cells per direction for `study`, each twice the previous.
    pub meshes: Vec<usize>,
    pub output_dir: PathBuf,
    pub dump_beta: bool,
    /// Launch points whose field lines are written to `trace_<k>.csv`.
    pub trace_points: Vec<(f64, f64)>,
    pub source: SourceSampling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solver: SolverConfig::default(),
            delta: 0.1,
            b0: 0.0,
            null_space: false,
            mesh: 64,
            meshes: vec![32, 64, 128],
            output_dir: PathBuf::from("out"),
            dump_beta: false,
            trace_points: Vec::new(),
            source: SourceSampling::Nodes,
        }
    }
}

/// Every accepted key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "delta",
    "b0",
    "eps",
    "scheme",
    "null_space",
    "dt",
    "steps",
    "steady_tol",
    "mesh",
    "meshes",
    "output_dir",
    "dump_beta",
    "trace_points",
    "source",
    "gmres_tol",
    "gmres_restart",
    "gmres_max_iter",
    "beta_tol",
    "beta_max_iter",
    "spline_order",
    "c_trunc",
    "step_fraction",
    "closure_tol",
    "b_min",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    pub fn case(&self) -> MmsCase {
        if self.null_space {
            MmsCase::null_space(self.delta, self.b0, self.solver.eps)
        } else {
            MmsCase::new(self.delta, self.b0, self.solver.eps)
        }
    }

    /// Sets one key. Unknown keys are configuration errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let s = &mut self.solver;
        match key.trim().replace('-', "_").as_str() {
            "delta" => self.delta = parse(key, v)?,
            "b0" => self.b0 = parse(key, v)?,
            "eps" => s.eps = parse(key, v)?,
            "scheme" => s.scheme = v.parse()?,
            "null_space" => self.null_space = parse_bool(key, v)?,
            "dt" => s.dt = parse(key, v)?,
            "steps" => s.steps = parse(key, v)?,
            "steady_tol" => s.steady_tol = parse(key, v)?,
            "mesh" => self.mesh = parse(key, v)?,
            "meshes" => {
                self.meshes = v
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| parse(key, t.trim()))
                    .collect::<Result<_>>()?
            }
            "output_dir" => self.output_dir = PathBuf::from(v),
            "dump_beta" => self.dump_beta = parse_bool(key, v)?,
            "trace_points" => {
                self.trace_points = v
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|p| {
                        let (x, y) = p
                            .split_once(':')
                            .ok_or_else(|| Error::Config(format!("{key}: expected x:y, got {p:?}")))?;
                        Ok((parse(key, x.trim())?, parse(key, y.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "source" => {
                self.source = match v.to_ascii_lowercase().as_str() {
                    "lines" => SourceSampling::Lines,
                    "nodes" => SourceSampling::Nodes,
                    _ => return Err(Error::Config(format!("{key}: expected lines or nodes, got {v:?}"))),
                }
            }
            "gmres_tol" => s.gmres.tol = parse(key, v)?,
            "gmres_restart" => s.gmres.restart = parse(key, v)?,
            "gmres_max_iter" => s.gmres.max_iter = parse(key, v)?,
            "beta_tol" => s.beta_tol = parse(key, v)?,
            "beta_max_iter" => s.beta_max_iter = parse(key, v)?,
            "spline_order" => s.spline_order = parse(key, v)?,
            "c_trunc" => s.lines.c_trunc = parse(key, v)?,
            "step_fraction" => s.lines.step_fraction = parse(key, v)?,
            "closure_tol" => s.lines.closure_tol = parse(key, v)?,
            "b_min" => s.lines.b_min = parse(key, v)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; accepted keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    /// Applies `--key value` (or `--key=value`) pairs.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        let mut it = args.iter().map(|a| a.as_ref());
        while let Some(a) = it.next() {
            let key = a
                .strip_prefix("--")
                .ok_or_else(|| Error::Config(format!("expected --key, got {a:?}")))?;
            match key.split_once('=') {
                Some((k, v)) => self.set(k, v)?,
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
                    self.set(key, v)?;
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if !(self.solver.eps <= 1.0) {
            return bad(format!("eps must lie in (0, 1], got {}", self.solver.eps));
        }
        if !self.delta.is_finite() || !self.b0.is_finite() {
            return bad("delta and b0 must be finite".into());
        }
        if self.mesh < 8 {
            return bad(format!("mesh must be at least 8 cells, got {}", self.mesh));
        }
        if self.meshes.is_empty() {
            return bad("meshes must list at least one mesh".into());
        }
        if self.meshes[0] < 8 {
            return bad(format!("meshes must start at 8 cells or more, got {}", self.meshes[0]));
        }
        for w in self.meshes.windows(2) {
            if w[1] != 2 * w[0] {
                return bad(format!("meshes must double at every step, got {:?}", self.meshes));
            }
        }
        for &(x, y) in &self.trace_points {
            if !(0.0..=1.0).contains(&x) || !y.is_finite() {
                return bad(format!("trace point ({x}, {y}) is outside the domain"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::Scheme;

    #[test]
    fn parses_file_text_and_overrides() {
        let text = "# sample\ndelta = 0.5\nb0=1\neps = 1e-4 # anisotropy\nscheme = tokamak\nmeshes = 16, 32,64\ntrace_points = 0.3:0.2; 0.7:0.5\n\n";
        let mut c = RunConfig::parse_text(text).unwrap();
        assert_eq!(c.delta, 0.5);
        assert_eq!(c.b0, 1.0);
        assert_eq!(c.solver.eps, 1e-4);
        assert_eq!(c.solver.scheme, Scheme::Tokamak);
        assert_eq!(c.meshes, vec![16, 32, 64]);
        assert_eq!(c.trace_points, vec![(0.3, 0.2), (0.7, 0.5)]);
        c.apply_overrides(&["--scheme", "arbitrary-b", "--steps=7", "--null-space", "yes"])
            .unwrap();
        assert_eq!(c.solver.scheme, Scheme::ArbitraryB);
        assert_eq!(c.solver.steps, 7);
        assert!(c.null_space);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "colour = red",
            "scheme = implicit",
            "eps = abc",
            "dump_beta = maybe",
        ] {
            assert!(matches!(RunConfig::parse_text(text), Err(Error::Config(_))), "{text}");
        }
        let mut c = RunConfig::default();
        assert!(c.apply_overrides(&["--steps"]).is_err());
        assert!(c.apply_overrides(&["steps", "3"]).is_err());
        for (k, v) in [
            ("meshes", "32,48"),
            ("eps", "2"),
            ("mesh", "4"),
            ("dt", "-1"),
            ("gmres_restart", "0"),
        ] {
            let mut c = RunConfig::default();
            c.set(k, v).unwrap();
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{k} = {v}");
        }
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let sample = |k: &str| match k {
            "scheme" => "tokamak",
            "null_space" | "dump_beta" => "false",
            "meshes" => "16,32",
            "output_dir" => "somewhere",
            "trace_points" => "0.5:0.5",
            "source" => "nodes",
            "steps" | "mesh" | "gmres_restart" | "gmres_max_iter" | "beta_max_iter" | "spline_order" => "5",
            _ => "0.5",
        };
        for k in KEYS {
            RunConfig::default().set(k, sample(k)).unwrap();
        }
    }
}
