//! Sweep configuration: a single JSON document, optionally overridden from the command line.

use std::path::{Path, PathBuf};

use masersync_core::params::{CouplingKind, DEFAULT_HARD_CAP, DEFAULT_TAIL_THRESHOLD};
use masersync_core::phase::DEFAULT_GRID_SIZE;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Values of one swept axis: an explicit list or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Axis::Values(vec![v])
    }

    /// Range points are `start + i * step` so they do not accumulate rounding.
    pub fn points(&self) -> CliResult<Vec<f64>> {
        match self {
            Axis::Values(v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::Config(format!("bad range {start}..{stop} step {step}")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// Which columns to compute.
/// A `measures` object in a config file turns on only the fields it lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default = "Measures::none", deny_unknown_fields)]
pub struct Measures {
    pub s_quantum: bool,
    pub s_perturb: bool,
    pub s_semiclassical: bool,
    pub mean_n: bool,
    pub fano: bool,
    pub mutual_info: bool,
    pub log_negativity: bool,
}

impl Default for Measures {
    fn default() -> Self {
        Self {
            s_quantum: true,
            s_perturb: false,
            s_semiclassical: false,
            mean_n: true,
            fano: false,
            mutual_info: false,
            log_negativity: false,
        }
    }
}

impl Measures {
    pub fn none() -> Self {
        Self {
            s_quantum: false,
            s_perturb: false,
            s_semiclassical: false,
            mean_n: false,
            fano: false,
            mutual_info: false,
            log_negativity: false,
        }
    }

    /// Whether the exact steady state is needed.
    pub fn needs_solve(&self) -> bool {
        self.s_quantum || self.mean_n || self.fano || self.mutual_info || self.log_negativity
    }

    pub fn any(&self) -> bool {
        self.needs_solve() || self.s_perturb || self.s_semiclassical
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    /// Prefix for the SVG plots (`<prefix>_s_theta.svg`, ...).
    pub svg: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// Directory for per-point `(phi, P)` files.
    pub phase_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_atoms: Axis,
    /// Pump parameter grid; ignored when `phi` is given.
    pub theta: Axis,
    pub phi: Option<Axis>,
    pub eps: Axis,
    pub couplings: Vec<CouplingKind>,
    pub measures: Measures,
    pub threshold: f64,
    pub hard_cap: usize,
    pub n_max: Option<usize>,
    pub grid_size: usize,
    pub workers: usize,
    /// Adds the `wall_time_ms` column (breaks byte-identical reruns).
    pub include_wall_time: bool,
    pub output: Outputs,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_atoms: Axis::single(5.0),
            theta: Axis::single(2.0),
            phi: None,
            eps: Axis::single(0.1),
            couplings: vec![CouplingKind::Dissipative],
            measures: Measures::default(),
            threshold: DEFAULT_TAIL_THRESHOLD,
            hard_cap: DEFAULT_HARD_CAP,
            n_max: None,
            grid_size: DEFAULT_GRID_SIZE,
            workers: 1,
            include_wall_time: false,
            output: Outputs::default(),
        }
    }
}

/// One grid point, in emission order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub coupling: CouplingKind,
    pub n_atoms: f64,
    pub eps: f64,
    pub phi: f64,
    pub theta: f64,
}

impl SweepConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let n = self.n_atoms.points()?;
        let eps = self.eps.points()?;
        let angles = match &self.phi {
            Some(phi) => phi.points()?,
            None => self.theta.points()?,
        };
        if n.is_empty() || eps.is_empty() || angles.is_empty() || self.couplings.is_empty() {
            return bad("every grid axis needs at least one value".to_string());
        }
        if let Some(v) = n.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return bad(format!("N = {v} must be finite and >= 0"));
        }
        if let Some(v) = eps.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return bad(format!("eps = {v} must be finite and >= 0"));
        }
        if let Some(v) = angles.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return bad(format!("angle {v} must be finite and >= 0"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} outside (0, 1)", self.threshold));
        }
        if self.grid_size < 8 {
            return bad(format!("grid_size {} too small", self.grid_size));
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".to_string());
        }
        if matches!(self.n_max, Some(0)) {
            return bad("n_max must be >= 1".to_string());
        }
        Ok(())
    }

    /// Grid points ordered by coupling, then `N`, then `eps`, then angle.
    pub fn grid(&self) -> CliResult<Vec<GridPoint>> {
        self.validate()?;
        let n_axis = self.n_atoms.points()?;
        let eps_axis = self.eps.points()?;
        let (angles, is_phi) = match &self.phi {
            Some(phi) => (phi.points()?, true),
            None => (self.theta.points()?, false),
        };
        let mut out = Vec::with_capacity(self.couplings.len() * n_axis.len() * eps_axis.len() * angles.len());
        for &coupling in &self.couplings {
            for &n_atoms in &n_axis {
                for &eps in &eps_axis {
                    for &a in &angles {
                        let (phi, theta) = if is_phi {
                            (a, a * n_atoms.sqrt())
                        } else if n_atoms > 0.0 {
                            (a / n_atoms.sqrt(), a)
                        } else {
                            return Err(CliError::Config("a theta grid needs N > 0".to_string()));
                        };
                        out.push(GridPoint { index: out.len(), coupling, n_atoms, eps, phi, theta });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_has_no_drift() {
        let pts = Axis::Range { start: 1.2, stop: 6.0, step: 0.05 }.points().unwrap();
        assert_eq!(pts.len(), 97);
        assert_eq!(pts[0], 1.2);
        assert!((pts[96] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn parses_partial_document() {
        let c = SweepConfig::from_json(
            r#"{"n_atoms": [5], "theta": {"start": 1, "stop": 2, "step": 0.5},
                "eps": [0.01, 0.1], "couplings": ["coherent", "dissipative"],
                "measures": {"s_perturb": true}}"#,
        )
        .unwrap();
        assert_eq!(c.measures, Measures { s_perturb: true, ..Measures::none() });
        assert_eq!(SweepConfig::from_json("{}").unwrap().measures, Measures::default());
        let grid = c.grid().unwrap();
        assert_eq!(grid.len(), 2 * 2 * 3);
        assert_eq!(grid[0].coupling, CouplingKind::Coherent);
        assert_eq!(grid[3].eps, 0.1);
        assert!(grid.iter().enumerate().all(|(i, g)| g.index == i));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SweepConfig::from_json(r#"{"eps": [-0.1]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"couplings": []}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"unknown": 1}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"workers": 0}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"theta": {"start": 2, "stop": 1, "step": 0.1}}"#).is_err());
    }
}
