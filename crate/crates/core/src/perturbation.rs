//! Perturbative steady states in the coupling strength.
//!
//! At zeroth order the state is `P_n P_m` in the `p = 0` block. The coupling feeds
//! that product into the `p = 1` equations; solving the uncoupled `p = 1` block
//! against this source gives `rho1`. For coherent coupling `rho1` sums to zero, so
//! the first visible harmonic comes from `rho2` in the `p = 2` block.
//!
//! Dissipative coupling is handled in the rescaled frame `(N/(1+eps), eps/(1+eps))`.
//! The rescaling is evaluated at the `eps` carried by the [`CouplingSpec`]; at
//! `eps = 0` the bare frame is used. Returned quantities are per unit bare `eps`.

use num_complex::Complex64;

use crate::analytics::{steady_number_distribution, NumberDistribution};
use crate::error::{Error, Result};
use crate::generator::{coupling_terms, rescale_dissipative, uncoupled_block};
use crate::linalg::solve_real_sparse;
use crate::params::{CouplingKind, CouplingSpec, MaserParams, SectorLayout, Truncation};
use crate::solver::SectorState;

/// Relative tolerance of the structural checks on `rho1` and `rho2`.
const STRUCTURE_TOLERANCE: f64 = 1e-10;

/// Low-order corrections to the uncoupled product state.
#[derive(Debug, Clone)]
pub struct PerturbativeState {
    pub kind: CouplingKind,
    /// Bare coupling at which the dissipative rescaling was evaluated.
    pub eps: f64,
    /// Bare parameters.
    pub params: MaserParams,
    /// Zeroth-order distribution (with the rescaled `N` for dissipative coupling).
    pub dist: NumberDistribution,
    /// `p = 1` block per unit `eps`, row-major with side `n_max`.
    pub rho1: Vec<Complex64>,
    /// `p = 2` block per unit `eps^2`, side `n_max - 1` (coherent only).
    pub rho2: Option<Vec<Complex64>>,
    /// `P = (1 + eps^2 C0 cos 2phi) / 2pi` (coherent).
    pub c0: Option<f64>,
    /// `P = (1 + eps C1 cos phi) / 2pi` (dissipative).
    pub c1: Option<f64>,
}

impl PerturbativeState {
    pub fn n_max(&self) -> usize {
        self.dist.n_max()
    }

    pub fn rho1_at(&self, n: usize, m: usize) -> Complex64 {
        self.rho1[n * self.n_max() + m]
    }

    pub fn rho1_sum(&self) -> Complex64 {
        self.rho1.iter().sum()
    }

    /// Peak height `2pi max P - 1` of the leading-order distribution at coupling `eps`.
    pub fn sync_strength(&self, eps: f64) -> f64 {
        match self.kind {
            CouplingKind::Dissipative => eps * self.c1.unwrap_or(0.0).abs(),
            CouplingKind::Coherent => eps * eps * self.c0.unwrap_or(0.0).abs(),
        }
    }

    /// Sector state `P_n P_m + eps rho1 + eps^2 rho2` (for phase measures).
    pub fn to_sector_state(&self, eps: f64) -> Result<SectorState> {
        let n_max = self.n_max();
        let layout = SectorLayout::new(n_max);
        let mut values = vec![Complex64::new(0.0, 0.0); layout.dim()];
        let w0 = n_max + 1;
        for n in 0..w0 {
            for m in 0..w0 {
                values[n * w0 + m] = Complex64::new(self.dist.probs[n] * self.dist.probs[m], 0.0);
            }
        }
        let r1 = layout.block_range(1);
        for (v, r) in values[r1].iter_mut().zip(&self.rho1) {
            *v = r * eps;
        }
        if let Some(rho2) = &self.rho2 {
            if n_max >= 2 {
                let r2 = layout.block_range(2);
                for (v, r) in values[r2].iter_mut().zip(rho2) {
                    *v = r * (eps * eps);
                }
            }
        }
        SectorState::from_values(layout, values, self.params, CouplingSpec::new(self.kind, eps)?)
    }
}

/// Source of the `p = 1` equations from the product state, per unit (effective) coupling.
///
/// Coherent: `-i sqrt((n+1)(m+1)) (P_{n+1} P_m - P_n P_{m+1})`.
/// Dissipative: `(1/2) sqrt((n+1)(m+1)) (P_{n+1} P_m + P_n P_{m+1} - 2 P_{n+1} P_{m+1})`.
/// Row-major with side `n_max` of the distribution.
pub fn first_order_source(kind: CouplingKind, dist: &NumberDistribution) -> Vec<Complex64> {
    let w = dist.n_max();
    let p = &dist.probs;
    let mut out = Vec::with_capacity(w * w);
    for n in 0..w {
        for m in 0..w {
            let root = (((n + 1) * (m + 1)) as f64).sqrt();
            out.push(match kind {
                CouplingKind::Coherent => Complex64::new(0.0, -root * (p[n + 1] * p[m] - p[n] * p[m + 1])),
                CouplingKind::Dissipative => {
                    Complex64::new(0.5 * root * (p[n + 1] * p[m] + p[n] * p[m + 1] - 2.0 * p[n + 1] * p[m + 1]), 0.0)
                }
            });
        }
    }
    out
}

/// Solves `block x = -source` for one uncoupled `p` block.
fn solve_block(params: &MaserParams, n_max: usize, p: usize, source: &[Complex64]) -> Result<Vec<Complex64>> {
    let w = n_max + 1 - p;
    if w == 0 {
        return Ok(Vec::new());
    }
    let block = uncoupled_block(params, n_max, p);
    let re: Vec<f64> = source.iter().map(|s| -s.re).collect();
    let im: Vec<f64> = source.iter().map(|s| -s.im).collect();
    let sol = solve_real_sparse(w * w, &block, &[re, im])?;
    Ok(sol[0].iter().zip(&sol[1]).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest `|x[n,m] - sign * x[m,n]|`.
fn transpose_defect(x: &[Complex64], w: usize, sign: f64) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..w {
        for m in 0..w {
            worst = worst.max((x[n * w + m] - x[m * w + n] * sign).norm());
        }
    }
    worst
}

fn check_first_order(kind: CouplingKind, rho1: &[Complex64], w: usize) -> Result<()> {
    let scale = max_norm(rho1).max(f64::MIN_POSITIVE);
    let tol = STRUCTURE_TOLERANCE * scale;
    let (stray, sign) = match kind {
        CouplingKind::Coherent => (rho1.iter().map(|z| z.re.abs()).fold(0.0, f64::max), -1.0),
        CouplingKind::Dissipative => (rho1.iter().map(|z| z.im.abs()).fold(0.0, f64::max), 1.0),
    };
    if stray > tol {
        return Err(Error::Structure(format!("{kind} rho1 has a stray component {stray:e}")));
    }
    let defect = transpose_defect(rho1, w, sign);
    if defect > tol {
        return Err(Error::Structure(format!("{kind} rho1 transpose symmetry broken by {defect:e}")));
    }
    if kind == CouplingKind::Coherent {
        let sum = rho1.iter().sum::<Complex64>().norm();
        if sum > tol {
            return Err(Error::Structure(format!("coherent rho1 sums to {sum:e}")));
        }
    }
    Ok(())
}

/// First-order `p = 1` correction.
pub fn solve_first_order(
    coupling: &CouplingSpec,
    params: &MaserParams,
    trunc: &Truncation,
) -> Result<PerturbativeState> {
    if !(coupling.eps >= 0.0 && coupling.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling strength {} < 0", coupling.eps)));
    }
    let n_max = trunc.n_max;
    // Effective parameters and d(eps_effective)/d(eps) per unit bare eps.
    let (params_eff, ratio) = match coupling.kind {
        CouplingKind::Dissipative if coupling.eps > 0.0 => {
            let (p, e) = rescale_dissipative(params, coupling.eps);
            (p, e / coupling.eps)
        }
        _ => (*params, 1.0),
    };
    let dist = steady_number_distribution(&params_eff, trunc)?;
    let source: Vec<Complex64> = first_order_source(coupling.kind, &dist).into_iter().map(|s| s * ratio).collect();
    let rho1 = solve_block(&params_eff, n_max, 1, &source)?;
    check_first_order(coupling.kind, &rho1, n_max)?;
    let c1 = match coupling.kind {
        CouplingKind::Dissipative => Some(2.0 * rho1.iter().map(|z| z.re).sum::<f64>()),
        CouplingKind::Coherent => None,
    };
    Ok(PerturbativeState {
        kind: coupling.kind,
        eps: coupling.eps,
        params: *params,
        dist,
        rho1,
        rho2: None,
        c0: None,
        c1,
    })
}

/// Second-order `p = 2` correction for coherent coupling, with `C0`.
pub fn solve_second_order_coherent(params: &MaserParams, trunc: &Truncation) -> Result<PerturbativeState> {
    let mut state = solve_first_order(&CouplingSpec::uncoupled(CouplingKind::Coherent), params, trunc)?;
    let n_max = trunc.n_max;
    if n_max < 2 {
        state.rho2 = Some(Vec::new());
        state.c0 = Some(0.0);
        return Ok(state);
    }
    let w1 = n_max;
    let w2 = n_max - 1;
    let mut source = vec![Complex64::new(0.0, 0.0); w2 * w2];
    for n in 0..w2 {
        for m in 0..w2 {
            for (coef, pp, nn, mm) in coupling_terms(CouplingKind::Coherent, 1.0, 2, n as i64, m as i64) {
                // p = 3 is zero at this order.
                if pp != 1 || nn < 0 || mm < 0 || nn as usize >= w1 || mm as usize >= w1 {
                    continue;
                }
                source[n * w2 + m] += coef * state.rho1[nn as usize * w1 + mm as usize];
            }
        }
    }
    let rho2 = solve_block(params, n_max, 2, &source)?;
    let scale = max_norm(&rho2).max(f64::MIN_POSITIVE);
    let stray = rho2.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if stray > STRUCTURE_TOLERANCE * scale {
        return Err(Error::Structure(format!("coherent rho2 has imaginary part {stray:e}")));
    }
    state.c0 = Some(2.0 * rho2.iter().map(|z| z.re).sum::<f64>());
    state.rho2 = Some(rho2);
    Ok(state)
}
