//! Closed-form properties of a single uncoupled micromaser.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{rabi_sin, MaserParams, Truncation};

/// Steady-state photon-number distribution of an uncoupled maser.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution {
    /// `P_n` for `n = 0..=n_max`.
    pub probs: Vec<f64>,
    /// Unnormalized `ln prod_{k<=n} N sin^2(phi sqrt k) / k`; `-inf` past a trapping cutoff.
    pub log_weights: Vec<f64>,
    /// Normalization constant `K` (may underflow for very large `N`; see `log_k`).
    pub k: f64,
    pub log_k: f64,
}

impl NumberDistribution {
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `P_n`, zero outside the stored range.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Occupation with the largest probability (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = n;
            }
        }
        best
    }
}

/// Log-space products `ln prod_{k=1}^{n} N sin^2(phi sqrt k)/k` for `n = 0..=n_max`.
pub(crate) fn log_weights(params: &MaserParams, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0f64;
    out.push(acc);
    for k in 1..=n_max {
        let s = rabi_sin(params.phi, k as f64);
        let ratio = params.n_atoms * s * s / k as f64;
        acc = if acc == f64::NEG_INFINITY || ratio == 0.0 { f64::NEG_INFINITY } else { acc + ratio.ln() };
        out.push(acc);
    }
    out
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    // Summed smallest-first for a stable result.
    let mut terms: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    max + terms.iter().sum::<f64>().ln()
}

/// The uncoupled steady state `P_n = K prod_{k=1}^{n} N sin^2(phi sqrt k)/k` on `0..=n_max`.
pub fn steady_number_distribution(params: &MaserParams, trunc: &Truncation) -> Result<NumberDistribution> {
    let log_weights = log_weights(params, trunc.n_max);
    let lse = log_sum_exp(&log_weights);
    if !lse.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let probs = log_weights.iter().map(|w| (w - lse).exp()).collect();
    Ok(NumberDistribution { probs, log_weights, k: (-lse).exp(), log_k: -lse })
}

pub fn mean_occupation(dist: &NumberDistribution) -> f64 {
    dist.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// Variance over mean of the photon number.
pub fn fano_factor(dist: &NumberDistribution) -> Result<f64> {
    let mean = mean_occupation(dist);
    if mean <= 0.0 {
        return Err(Error::VacuumFano);
    }
    let var: f64 = dist.probs.iter().enumerate().map(|(n, p)| (n as f64 - mean).powi(2) * p).sum();
    Ok(var / mean)
}

/// A Rabi angle at which the gain from `m` to `m + 1` photons vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingAngle {
    pub m: usize,
    pub k: usize,
    pub phi: f64,
}

impl TrappingAngle {
    /// Pump parameter at which this angle is reached for a given `N`.
    pub fn theta(&self, n_atoms: f64) -> f64 {
        self.phi * n_atoms.sqrt()
    }
}

/// All trapping angles `phi = k pi / sqrt(m + 1)` for `m <= m_upper`, `1 <= k <= k_upper`, sorted by `phi`.
pub fn trapping_angles(m_upper: usize, k_upper: usize) -> Vec<TrappingAngle> {
    let mut out: Vec<TrappingAngle> = (0..=m_upper)
        .flat_map(|m| (1..=k_upper).map(move |k| TrappingAngle { m, k, phi: k as f64 * PI / ((m + 1) as f64).sqrt() }))
        .collect();
    out.sort_by(|a, b| a.phi.partial_cmp(&b.phi).unwrap().then(a.m.cmp(&b.m)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::choose_truncation;

    fn dist(n: f64, theta: f64, n_max: usize) -> NumberDistribution {
        let params = MaserParams::from_theta(n, theta).unwrap();
        steady_number_distribution(&params, &Truncation::fixed(n_max).unwrap()).unwrap()
    }

    #[test]
    fn trapping_state_has_no_weight_above_cutoff() {
        let params = MaserParams::new(7.0, PI / 2f64.sqrt()).unwrap();
        let d = steady_number_distribution(&params, &Truncation::fixed(10).unwrap()).unwrap();
        assert!(d.probs[1] > 0.0);
        for n in 2..=10 {
            assert_eq!(d.probs[n], 0.0);
        }
    }

    #[test]
    fn vacuum_when_unpumped() {
        let params = MaserParams::new(0.0, 1.0).unwrap();
        let d = steady_number_distribution(&params, &Truncation::fixed(5).unwrap()).unwrap();
        assert_eq!(d.probs[0], 1.0);
        assert!(d.probs[1..].iter().all(|&p| p == 0.0));
        assert_eq!(mean_occupation(&d), 0.0);
        assert_eq!(fano_factor(&d), Err(Error::VacuumFano));
    }

    #[test]
    fn peak_moves_off_vacuum_above_threshold() {
        let below = dist(20.0, 0.8, 80);
        assert_eq!(below.argmax(), 0);
        for theta in [1.2, 2.0, 3.0, 3.5] {
            assert!(dist(20.0, theta, 80).argmax() > 0, "theta={theta}");
        }
    }

    #[test]
    fn fano_peaks_near_threshold_and_drops_below_one() {
        let n = 20.0;
        let f = |theta: f64| fano_factor(&dist(n, theta, 100)).unwrap();
        let near = f(1.0);
        assert!(near > f(0.5) && near > f(2.0));
        assert!(near > 1.0);
        assert!(f(3.0) < 1.0);
    }

    #[test]
    fn fano_of_number_state_and_poisson() {
        let number_state =
            NumberDistribution { probs: vec![0.0, 0.0, 1.0, 0.0], log_weights: vec![0.0; 4], k: 1.0, log_k: 0.0 };
        assert_eq!(fano_factor(&number_state).unwrap(), 0.0);

        let lambda: f64 = 3.0;
        let mut probs = vec![(-lambda).exp()];
        for n in 1..80 {
            let prev = probs[n - 1];
            probs.push(prev * lambda / n as f64);
        }
        let poisson = NumberDistribution { probs, log_weights: vec![], k: 1.0, log_k: 0.0 };
        assert!((fano_factor(&poisson).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trapping_state_approaches_single_photon_at_large_n() {
        let phi = PI / 2f64.sqrt();
        let mut last = 0.0;
        for n in [1.0, 10.0, 100.0, 1000.0] {
            let params = MaserParams::new(n, phi).unwrap();
            let d = steady_number_distribution(&params, &Truncation::fixed(4).unwrap()).unwrap();
            let mean = mean_occupation(&d);
            assert!(mean > last);
            last = mean;
        }
        assert!(1.0 - last < 1e-2);
    }

    #[test]
    fn trapping_angle_list() {
        let list = trapping_angles(3, 2);
        assert_eq!(list.len(), 8);
        assert!(list.windows(2).all(|w| w[0].phi <= w[1].phi));
        let m1 = list.iter().find(|t| t.m == 1 && t.k == 1).unwrap();
        assert!((m1.phi - PI / 2f64.sqrt()).abs() < 1e-15);
        assert!((m1.theta(5.0) - 4.97).abs() < 5e-3);
        let m0 = list.iter().find(|t| t.m == 0 && t.k == 1).unwrap();
        assert!((m0.phi - PI).abs() < 1e-15);
    }

    #[test]
    fn chosen_truncation_covers_the_distribution() {
        let params = MaserParams::from_theta(5.0, 2.0).unwrap();
        let t = choose_truncation(&params, 1e-10).unwrap();
        let d = steady_number_distribution(&params, &t).unwrap();
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.tail_mass < 1e-10);
    }
}
