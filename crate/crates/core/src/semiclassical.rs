//! Large-occupation phase diffusion for dissipatively coupled masers.
//!
//! The relative phase follows a von Mises law `e^{kappa cos phi} / (2pi I0(kappa))`
//! with `kappa = eps~ / Delta~` and linewidth `Delta~ = (N~ phi^2 + 1) / (4 <n>)`,
//! where `<n>` is the exact uncoupled mean at the rescaled `N~`.

use log::warn;

use crate::analytics::{mean_occupation, steady_number_distribution};
use crate::error::{Error, Result};
use crate::generator::rescale_dissipative;
use crate::params::{choose_truncation, MaserParams};
use crate::phase::{PhaseDistribution, PhaseSeries};

/// Largest argument accepted by [`bessel_i0`].
pub const BESSEL_GUARD: f64 = 700.0;
/// Mean occupation below which the linewidth is not evaluated.
pub const MEAN_FLOOR: f64 = 0.01;
const SERIES_LIMIT: f64 = 30.0;

/// `e^{-x} I0(x)` for `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::InvalidParameter(format!("I0 argument {x}")));
    }
    if x <= SERIES_LIMIT {
        // sum (x^2/4)^k / (k!)^2
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        Ok(sum * (-x).exp())
    } else {
        // Asymptotic: (2 pi x)^{-1/2} sum ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
            if next > term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        Ok(sum / (2.0 * std::f64::consts::PI * x).sqrt())
    }
}

/// Modified Bessel function `I0(x)` for `0 <= x <= 700`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    if x > BESSEL_GUARD {
        return Err(Error::Overflow(x));
    }
    Ok(bessel_i0_scaled(x)? * x.exp())
}

/// `e^kappa / I0(kappa) - 1`.
pub fn von_mises_strength(kappa: f64) -> Result<f64> {
    Ok(1.0 / bessel_i0_scaled(kappa)? - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalPrediction {
    pub delta_tilde: f64,
    pub kappa: f64,
    pub s_sc: f64,
    /// Uncoupled mean occupation at the rescaled `N`.
    pub mean_n: f64,
    pub n_atoms_tilde: f64,
    pub eps_tilde: f64,
}

/// Linewidth, concentration and predicted strength at bare `(N, phi)` and `eps`.
pub fn semiclassical_linewidth(params: &MaserParams, eps: f64) -> Result<SemiclassicalPrediction> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling strength {eps} < 0")));
    }
    let (tilde, eps_tilde) = rescale_dissipative(params, eps);
    let trunc = choose_truncation(&tilde, 1e-14)?;
    let dist = steady_number_distribution(&tilde, &trunc)?;
    let mean_n = mean_occupation(&dist);
    if !(mean_n > MEAN_FLOOR) {
        return Err(Error::BelowThreshold(mean_n));
    }
    if tilde.theta() <= 1.0 || dist.argmax() == 0 {
        warn!(
            "semiclassical linewidth outside its validity range (Theta~={:.3}, peak at n={})",
            tilde.theta(),
            dist.argmax()
        );
    }
    let delta_tilde = (tilde.n_atoms * tilde.phi * tilde.phi + 1.0) / (4.0 * mean_n);
    let kappa = eps_tilde / delta_tilde;
    Ok(SemiclassicalPrediction {
        delta_tilde,
        kappa,
        s_sc: von_mises_strength(kappa)?,
        mean_n,
        n_atoms_tilde: tilde.n_atoms,
        eps_tilde,
    })
}

/// Von Mises relative-phase distribution of a prediction.
pub fn fp_phase_distribution(pred: &SemiclassicalPrediction, grid_size: usize) -> Result<PhaseDistribution> {
    von_mises_distribution(pred.kappa, grid_size)
}

pub fn von_mises_distribution(kappa: f64, grid_size: usize) -> Result<PhaseDistribution> {
    // ln(2 pi I0) = kappa + ln(2 pi e^{-kappa} I0)
    let log_norm = kappa + (2.0 * std::f64::consts::PI * bessel_i0_scaled(kappa)?).ln();
    Ok(PhaseDistribution::from_series(PhaseSeries::VonMises { kappa, log_norm }, grid_size))
}
