//! Phase distributions and the synchronization strength `S = 2pi max P - 1`.

use std::f64::consts::PI;
use std::io::{self, Write};

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::SectorState;

pub const DEFAULT_GRID_SIZE: usize = 1024;

/// Analytic form behind a sampled distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSeries {
    /// `P = 1/2pi + (1/pi) Re sum_{p>=1} h_p e^{i p phi}`; entry `p - 1` holds `h_p`.
    Fourier(Vec<Complex64>),
    /// `P = e^{kappa cos phi} / (2pi I0(kappa))`.
    VonMises { kappa: f64, log_norm: f64 },
}

impl PhaseSeries {
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            PhaseSeries::Fourier(h) => {
                let mut acc = 0.0;
                for (k, c) in h.iter().enumerate() {
                    let a = (k + 1) as f64 * phi;
                    acc += c.re * a.cos() - c.im * a.sin();
                }
                0.5 / PI + acc / PI
            }
            PhaseSeries::VonMises { kappa, log_norm } => (kappa * phi.cos() - log_norm).exp(),
        }
    }
}

/// `P(phi)` sampled on `phi_j = -pi + 2 pi j / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub series: PhaseSeries,
}

/// Peak of a phase distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncStrength {
    pub s: f64,
    pub peak_location: f64,
}

pub fn uniform_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size).map(|j| -PI + 2.0 * PI * j as f64 / grid_size as f64).collect()
}

impl PhaseDistribution {
    pub fn from_series(series: PhaseSeries, grid_size: usize) -> Self {
        let grid = uniform_grid(grid_size.max(1));
        let values = grid.iter().map(|&phi| series.eval(phi)).collect();
        let dist = Self { grid, values, series };
        let low = dist.min_value();
        if low < -1e-8 {
            warn!("phase distribution dips to {low:e}; the underlying state is not positive");
        }
        dist
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.series.eval(phi)
    }

    /// Fourier coefficients `h_p`, empty for a von Mises distribution.
    pub fn fourier(&self) -> &[Complex64] {
        match &self.series {
            PhaseSeries::Fourier(h) => h,
            PhaseSeries::VonMises { .. } => &[],
        }
    }

    /// Trapezoid rule over the periodic grid.
    pub fn integral(&self) -> f64 {
        2.0 * PI / self.values.len() as f64 * self.values.iter().sum::<f64>()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Two-column CSV `phi,probability`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "phi,probability")?;
        for (phi, p) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{phi:.16e},{p:.16e}")?;
        }
        Ok(())
    }
}

/// Relative-phase distribution of a sector state.
pub fn relative_phase_distribution(state: &SectorState, grid_size: usize) -> PhaseDistribution {
    let h = (1..=state.n_max()).map(|p| state.harmonic_sum(p)).collect();
    PhaseDistribution::from_series(PhaseSeries::Fourier(h), grid_size)
}

/// Phase distribution of one mode from its row-major `dim x dim` density matrix.
pub fn single_phase_distribution(rho: &[Complex64], dim: usize, grid_size: usize) -> Result<PhaseDistribution> {
    if rho.len() != dim * dim || dim == 0 {
        return Err(Error::InvalidParameter(format!("expected a {dim}x{dim} matrix")));
    }
    let trace: Complex64 = (0..dim).map(|n| rho[n * dim + n]).sum();
    if (trace - 1.0).norm() > 1e-8 {
        return Err(Error::InvalidParameter(format!("trace {trace} is not 1")));
    }
    // sum_{n,m} rho_{n,m} e^{i(m-n)phi}: harmonic k collects rho_{n,n+k}.
    let h = (1..dim).map(|k| (0..dim - k).map(|n| rho[n * dim + n + k]).sum()).collect();
    Ok(PhaseDistribution::from_series(PhaseSeries::Fourier(h), grid_size))
}

/// `S = 2pi max P - 1`, from the grid maximum refined by golden-section search on the series.
pub fn sync_strength(dist: &PhaseDistribution) -> SyncStrength {
    let (j, _) = dist
        .values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best });
    let h = 2.0 * PI / dist.grid.len() as f64;
    let (mut a, mut b) = (dist.grid[j] - h, dist.grid[j] + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (dist.eval(x1), dist.eval(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = dist.eval(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = dist.eval(x1);
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let (mut peak, mut value) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    // The refinement can only improve on the grid point.
    if dist.values[j] >= value {
        peak = dist.grid[j];
        value = dist.values[j];
    }
    let peak_location = (peak + PI).rem_euclid(2.0 * PI) - PI;
    SyncStrength { s: 2.0 * PI * value - 1.0, peak_location }
}
