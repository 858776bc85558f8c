//! Parameter records, Fock truncation and the sector index map.
//!
//! Units: time is measured in units of the cavity decay rate, so `gamma = 1`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::error::{Error, Result};

/// Default tail-mass threshold used when picking `n_max`.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;
/// Default hard cap on `n_max`.
pub const DEFAULT_HARD_CAP: usize = 400;

/// Physical parameters of one micromaser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaserParams {
    /// Atom injection rate `N`.
    pub n_atoms: f64,
    /// Rabi angle `phi` (radians).
    pub phi: f64,
}

impl MaserParams {
    pub fn new(n_atoms: f64, phi: f64) -> Result<Self> {
        if !(n_atoms.is_finite() && n_atoms >= 0.0) {
            return Err(Error::InvalidParameter(format!("N must be >= 0, got {n_atoms}")));
        }
        if !(phi.is_finite() && phi >= 0.0) {
            return Err(Error::InvalidParameter(format!("phi must be >= 0, got {phi}")));
        }
        Ok(Self { n_atoms, phi })
    }

    /// Builds parameters from the pump parameter `theta = phi * sqrt(N)` at fixed `N`.
    pub fn from_theta(n_atoms: f64, theta: f64) -> Result<Self> {
        if !(n_atoms > 0.0) {
            return Err(Error::InvalidParameter("theta parameterization needs N > 0".to_string()));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be >= 0, got {theta}")));
        }
        Self::new(n_atoms, theta / n_atoms.sqrt())
    }

    /// Pump parameter `theta = phi * sqrt(N)`.
    pub fn theta(&self) -> f64 {
        self.phi * self.n_atoms.sqrt()
    }

    pub fn with_n_atoms(&self, n_atoms: f64) -> Self {
        Self { n_atoms, ..*self }
    }
}

/// `sin(phi * sqrt(k))`, snapped to exactly zero at trapping angles.
///
/// The argument of a trapping zero is an integer multiple of pi up to a few
/// ulps of rounding in `phi * sqrt(k)`; those are returned as `0.0`.
pub fn rabi_sin(phi: f64, k: f64) -> f64 {
    let x = phi * k.sqrt();
    let s = x.sin();
    if s.abs() < 1e-300 {
        return 0.0;
    }
    let turns = (x / PI).round();
    if turns >= 1.0 && (x - turns * PI).abs() <= 8.0 * f64::EPSILON * x {
        return 0.0;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Coherent,
    Dissipative,
}

impl CouplingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingKind::Coherent => "coherent",
            CouplingKind::Dissipative => "dissipative",
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coherent" | "coh" => Ok(CouplingKind::Coherent),
            "dissipative" | "diss" => Ok(CouplingKind::Dissipative),
            other => Err(Error::InvalidParameter(format!("unknown coupling kind {other:?}"))),
        }
    }
}

/// Coupling between the two masers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub kind: CouplingKind,
    pub eps: f64,
}

impl CouplingSpec {
    pub fn new(kind: CouplingKind, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("coupling strength must be >= 0, got {eps}")));
        }
        Ok(Self { kind, eps })
    }

    pub fn coherent(eps: f64) -> Result<Self> {
        Self::new(CouplingKind::Coherent, eps)
    }

    pub fn dissipative(eps: f64) -> Result<Self> {
        Self::new(CouplingKind::Dissipative, eps)
    }

    pub fn uncoupled(kind: CouplingKind) -> Self {
        Self { kind, eps: 0.0 }
    }
}

/// Per-mode Fock truncation shared by both masers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_max: usize,
    /// Uncoupled probability mass discarded above `n_max`.
    pub tail_mass: f64,
}

impl Truncation {
    /// A truncation fixed by hand; the tail mass is unknown and recorded as NaN.
    pub fn fixed(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be >= 1".to_string()));
        }
        Ok(Self { n_max, tail_mass: f64::NAN })
    }

    pub fn layout(&self) -> SectorLayout {
        SectorLayout::new(self.n_max)
    }
}

/// How truncations are picked and validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub threshold: f64,
    pub hard_cap: usize,
    /// Forces a specific `n_max`, bypassing the tail-mass search.
    pub n_max_override: Option<usize>,
    /// Maximum occupation allowed in the top two Fock levels of the coupled state.
    pub top_occupation_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_TAIL_THRESHOLD,
            hard_cap: DEFAULT_HARD_CAP,
            n_max_override: None,
            top_occupation_tol: 1e-8,
        }
    }
}

/// Smallest `n_max` whose uncoupled tail mass is below `threshold`, using the default cap.
pub fn choose_truncation(params: &MaserParams, threshold: f64) -> Result<Truncation> {
    choose_truncation_capped(params, threshold, DEFAULT_HARD_CAP)
}

pub fn choose_truncation_capped(params: &MaserParams, threshold: f64, hard_cap: usize) -> Result<Truncation> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    // Weights well past the cap so that the tail beyond the cap is itself resolved.
    let horizon = hard_cap + 64.max(hard_cap / 2);
    let log_w = analytics::log_weights(params, horizon);
    let last_nonzero = log_w.iter().rposition(|w| w.is_finite()).unwrap_or(0);
    let lse = analytics::log_sum_exp(&log_w);

    // Tail masses accumulated from the top down, smallest terms first.
    let mut tail = vec![0.0; log_w.len() + 1];
    for n in (0..log_w.len()).rev() {
        tail[n] = tail[n + 1] + (log_w[n] - lse).exp();
    }

    if last_nonzero < horizon {
        // Exact cutoff (trapping or N = 0): everything above is identically zero.
        return checked(last_nonzero.max(1), 0.0, hard_cap);
    }
    for n_max in 1..horizon {
        if tail[n_max + 1] < threshold {
            return checked(n_max, tail[n_max + 1], hard_cap);
        }
    }
    Err(Error::TruncationCapExceeded { requested: horizon, cap: hard_cap })
}

fn checked(n_max: usize, tail_mass: f64, cap: usize) -> Result<Truncation> {
    if n_max > cap {
        return Err(Error::TruncationCapExceeded { requested: n_max, cap });
    }
    Ok(Truncation { n_max, tail_mass })
}

/// One element `rho^(p)_{n,m} = <n, m+p| rho |n+p, m>` of the conserved sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorIndex {
    pub p: usize,
    pub n: usize,
    pub m: usize,
}

impl SectorIndex {
    pub fn new(p: usize, n: usize, m: usize) -> Self {
        Self { p, n, m }
    }
}

/// Flat indexing of all sector elements: ordered by `p`, then row `n`, then column `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorLayout {
    n_max: usize,
    offsets: Vec<usize>,
}

impl SectorLayout {
    pub fn new(n_max: usize) -> Self {
        let mut offsets = Vec::with_capacity(n_max + 2);
        let mut acc = 0;
        for p in 0..=n_max {
            offsets.push(acc);
            let w = n_max + 1 - p;
            acc += w * w;
        }
        offsets.push(acc);
        Self { n_max, offsets }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Total number of sector elements `D`.
    pub fn dim(&self) -> usize {
        self.offsets[self.n_max + 1]
    }

    /// Side length of the `p` block.
    pub fn width(&self, p: usize) -> usize {
        self.n_max + 1 - p
    }

    pub fn block_range(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn contains(&self, idx: SectorIndex) -> bool {
        idx.p <= self.n_max && idx.n + idx.p <= self.n_max && idx.m + idx.p <= self.n_max
    }

    pub fn flat_index(&self, idx: SectorIndex) -> Result<usize> {
        if !self.contains(idx) {
            return Err(Error::IndexOutOfRange(format!("{idx:?} with n_max={}", self.n_max)));
        }
        Ok(self.flat_unchecked(idx.p, idx.n, idx.m))
    }

    #[inline]
    pub(crate) fn flat_unchecked(&self, p: usize, n: usize, m: usize) -> usize {
        self.offsets[p] + n * self.width(p) + m
    }

    pub fn sector_index(&self, flat: usize) -> Result<SectorIndex> {
        if flat >= self.dim() {
            return Err(Error::IndexOutOfRange(format!("flat index {flat} >= {}", self.dim())));
        }
        let p = self.offsets.partition_point(|&o| o <= flat) - 1;
        let local = flat - self.offsets[p];
        let w = self.width(p);
        Ok(SectorIndex { p, n: local / w, m: local % w })
    }

    /// Resolves a possibly negative-sector reference `rho^(p)_{n,m}`.
    ///
    /// Returns the flat index of the stored element and whether it enters conjugated:
    /// `rho^(-q)_{n,m} = conj(rho^(q)_{n-q,m-q})`.
    pub(crate) fn resolve(&self, p: i64, n: i64, m: i64) -> Option<(usize, bool)> {
        let nm = self.n_max as i64;
        if p >= 0 {
            if n < 0 || m < 0 || n + p > nm || m + p > nm {
                return None;
            }
            Some((self.flat_unchecked(p as usize, n as usize, m as usize), false))
        } else {
            let q = -p;
            if n < q || m < q || n > nm || m > nm {
                return None;
            }
            Some((self.flat_unchecked(q as usize, (n - q) as usize, (m - q) as usize), true))
        }
    }
}
