//! Evaluation of sweep grid points on a fixed-size worker pool.

use std::time::Instant;

use log::{info, warn};
use masersync_core::analytics::{fano_factor, NumberDistribution};
use masersync_core::correlations::{logarithmic_negativity, mutual_information};
use masersync_core::params::{
    choose_truncation_capped, CouplingKind, CouplingSpec, MaserParams, Truncation, TruncationPolicy,
};
use masersync_core::perturbation::{solve_first_order, solve_second_order_coherent};
use masersync_core::phase::{relative_phase_distribution, sync_strength, PhaseDistribution};
use masersync_core::semiclassical::semiclassical_linewidth;
use masersync_core::solver::{solve_steady_state, SectorState};
use rayon::prelude::*;

use crate::config::{GridPoint, SweepConfig};
use crate::error::{CliError, CliResult};

/// Results at one grid point. `None` marks a measure that was not requested or failed.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: GridPoint,
    pub n_max: Option<usize>,
    pub mean_n: Option<f64>,
    pub fano: Option<f64>,
    pub s_quantum: Option<f64>,
    pub s_perturb: Option<f64>,
    pub s_semiclassical: Option<f64>,
    pub peak_location: Option<f64>,
    pub mutual_info: Option<f64>,
    pub log_negativity: Option<f64>,
    pub residual: Option<f64>,
    pub wall_time_ms: f64,
    /// One message per failed measure.
    pub errors: Vec<String>,
    /// Relative-phase distribution, kept only when dumps are requested.
    pub phase: Option<PhaseDistribution>,
}

impl SweepRow {
    fn empty(point: GridPoint) -> Self {
        Self {
            point,
            n_max: None,
            mean_n: None,
            fano: None,
            s_quantum: None,
            s_perturb: None,
            s_semiclassical: None,
            peak_location: None,
            mutual_info: None,
            log_negativity: None,
            residual: None,
            wall_time_ms: 0.0,
            errors: Vec::new(),
            phase: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn record<T>(&mut self, what: &str, r: masersync_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{what}: {e}"));
                None
            }
        }
    }
}

fn policy(config: &SweepConfig) -> TruncationPolicy {
    TruncationPolicy {
        threshold: config.threshold,
        hard_cap: config.hard_cap,
        n_max_override: config.n_max,
        ..TruncationPolicy::default()
    }
}

fn truncation(params: &MaserParams, config: &SweepConfig) -> masersync_core::Result<Truncation> {
    match config.n_max {
        Some(n) => Truncation::fixed(n),
        None => choose_truncation_capped(params, config.threshold, config.hard_cap),
    }
}

/// Leading-order perturbative `S` at the point's coupling.
pub fn perturbative_strength(
    params: &MaserParams,
    coupling: &CouplingSpec,
    trunc: &Truncation,
) -> masersync_core::Result<f64> {
    let state = match coupling.kind {
        CouplingKind::Dissipative => solve_first_order(coupling, params, trunc)?,
        CouplingKind::Coherent => solve_second_order_coherent(params, trunc)?,
    };
    Ok(state.sync_strength(coupling.eps))
}

fn fano_of(state: &SectorState) -> masersync_core::Result<f64> {
    let dist = NumberDistribution { probs: state.marginal(), log_weights: Vec::new(), k: f64::NAN, log_k: f64::NAN };
    fano_factor(&dist)
}

/// Evaluates every requested measure at one point; failures are recorded, never raised.
pub fn evaluate_point(point: GridPoint, config: &SweepConfig, keep_phase: bool) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow::empty(point);
    let m = config.measures;
    let setup = MaserParams::new(point.n_atoms, point.phi)
        .and_then(|p| CouplingSpec::new(point.coupling, point.eps).map(|c| (p, c)));
    let Some((params, coupling)) = row.record("parameters", setup) else {
        return row;
    };

    if m.needs_solve() {
        if let Some(state) = row.record("steady state", solve_steady_state(&params, &coupling, &policy(config))) {
            row.n_max = Some(state.n_max());
            row.residual = Some(state.residual());
            if m.s_quantum || keep_phase {
                let dist = relative_phase_distribution(&state, config.grid_size);
                if m.s_quantum {
                    let s = sync_strength(&dist);
                    row.s_quantum = Some(s.s);
                    row.peak_location = Some(s.peak_location);
                }
                if keep_phase {
                    row.phase = Some(dist);
                }
            }
            if m.mean_n {
                row.mean_n = Some(state.mean_occupation());
            }
            if m.fano {
                row.fano = row.record("fano", fano_of(&state));
            }
            if m.mutual_info {
                row.mutual_info = row.record("mutual_info", mutual_information(&state));
            }
            if m.log_negativity {
                row.log_negativity = row.record("log_negativity", logarithmic_negativity(&state).map(|r| r.0));
            }
        }
    }
    if m.s_perturb {
        let r = truncation(&params, config).and_then(|t| perturbative_strength(&params, &coupling, &t));
        row.s_perturb = row.record("s_perturb", r);
    }
    if m.s_semiclassical && point.coupling == CouplingKind::Dissipative {
        let r = semiclassical_linewidth(&params, point.eps).map(|p| p.s_sc);
        row.s_semiclassical = row.record("s_semiclassical", r);
    }
    row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

/// Runs the whole grid on `config.workers` threads; rows come back in grid order.
pub fn run_sweep(config: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    let grid = config.grid()?;
    let keep_phase = config.output.phase_dir.is_some();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    info!("sweeping {} points on {} workers", grid.len(), config.workers);
    let rows: Vec<SweepRow> =
        pool.install(|| grid.par_iter().map(|&p| evaluate_point(p, config, keep_phase)).collect());
    for row in rows.iter().filter(|r| !r.ok()) {
        warn!("point {} failed: {}", row.point.index, row.errors.join("; "));
    }
    Ok(rows)
}
