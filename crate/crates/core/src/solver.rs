//! Steady states of the coupled masers.
//!
//! The production path solves in the conserved sector. The sector map contains
//! complex conjugation, so it is linear over the reals only: the solve works on
//! the real embedding where `p = 0` unknowns are populations (real) and every
//! `p >= 1` element contributes a real and an imaginary part. The `(p=0, n=0, m=0)`
//! equation is replaced by the trace condition and the square system is factorized
//! directly.
//!
//! The validation path solves the full two-mode superoperator.

use log::{debug, warn};
use num_complex::Complex64;

use crate::analytics::steady_number_distribution;
use crate::error::{Error, Result};
use crate::generator::{assemble_sector_generator, FullGenerator, SectorGenerator};
use crate::linalg::{hermitian_eigenvalues, solve_complex_sparse, solve_real_sparse};
use crate::params::{
    choose_truncation_capped, CouplingSpec, MaserParams, SectorIndex, SectorLayout, Truncation, TruncationPolicy,
};

/// Residual above which a solve is rejected.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Allowed movement of the solution under a `1e-12` right-hand-side perturbation.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
const PERTURBATION_SIZE: f64 = 1e-12;

/// Steady state restricted to the conserved sector.
#[derive(Debug, Clone)]
pub struct SectorState {
    layout: SectorLayout,
    values: Vec<Complex64>,
    params: MaserParams,
    coupling: CouplingSpec,
    residual: f64,
}

impl SectorState {
    /// Wraps raw sector values (e.g. from a perturbative or full-space calculation).
    pub fn from_values(
        layout: SectorLayout,
        values: Vec<Complex64>,
        params: MaserParams,
        coupling: CouplingSpec,
    ) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} sector values, got {}",
                layout.dim(),
                values.len()
            )));
        }
        Ok(Self { layout, values, params, coupling, residual: f64::NAN })
    }

    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    pub fn n_max(&self) -> usize {
        self.layout.n_max()
    }

    pub fn params(&self) -> &MaserParams {
        &self.params
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// `||L x||_inf / ||x||_inf` on the unmodified generator.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, p: usize, n: usize, m: usize) -> Complex64 {
        self.values[self.layout.flat_unchecked(p, n, m)]
    }

    /// Row-major `p` block, side `n_max + 1 - p`.
    pub fn block(&self, p: usize) -> &[Complex64] {
        &self.values[self.layout.block_range(p)]
    }

    /// `sum_{n,m} rho^(p)_{n,m}`, the `p`-th harmonic of the relative phase.
    pub fn harmonic_sum(&self, p: usize) -> Complex64 {
        self.block(p).iter().sum()
    }

    /// Total population: `p = 0` elements are the diagonal of the two-mode density matrix.
    pub fn trace(&self) -> f64 {
        self.block(0).iter().map(|v| v.re).sum()
    }

    /// Photon-number distribution of maser 1.
    pub fn marginal(&self) -> Vec<f64> {
        let w = self.layout.width(0);
        (0..w).map(|n| (0..w).map(|m| self.values[n * w + m].re).sum()).collect()
    }

    pub fn mean_occupation(&self) -> f64 {
        self.marginal().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Probability that either maser occupies one of its top `levels` Fock states.
    pub fn top_occupation(&self, levels: usize) -> f64 {
        let marg = self.marginal();
        let start = marg.len().saturating_sub(levels);
        let p1: f64 = marg[start..].iter().sum();
        let w = self.layout.width(0);
        let p2: f64 =
            (0..w).flat_map(|n| (start..w).map(move |m| (n, m))).map(|(n, m)| self.values[n * w + m].re).sum();
        p1.max(p2)
    }

    /// Largest deviation from `rho^(p)_{n,m} = conj(rho^(p)_{m,n})`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..=self.n_max() {
            let w = self.layout.width(p);
            let b = self.block(p);
            for n in 0..w {
                for m in 0..w {
                    worst = worst.max((b[n * w + m] - b[m * w + n].conj()).norm());
                }
            }
        }
        worst
    }

    /// Imaginary parts of the populations (must vanish).
    pub fn population_imaginary(&self) -> f64 {
        self.block(0).iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_population(&self) -> f64 {
        self.block(0).iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    /// Same state embedded into a larger truncation (new elements are zero).
    pub fn embed(&self, n_max: usize) -> Result<SectorState> {
        if n_max < self.n_max() {
            return Err(Error::InvalidParameter("cannot embed into a smaller truncation".to_string()));
        }
        let layout = SectorLayout::new(n_max);
        let mut values = vec![Complex64::new(0.0, 0.0); layout.dim()];
        for p in 0..=self.n_max() {
            let w = self.layout.width(p);
            for n in 0..w {
                for m in 0..w {
                    values[layout.flat_unchecked(p, n, m)] = self.get(p, n, m);
                }
            }
        }
        Ok(SectorState { layout, values, params: self.params, coupling: self.coupling, residual: self.residual })
    }
}

/// Position of each sector unknown in the real embedding.
struct RealMap {
    d0: usize,
    /// Sector elements included (blocks `0..=p_hi`).
    active: usize,
}

impl RealMap {
    fn new(layout: &SectorLayout, p_hi: usize) -> Self {
        Self { d0: layout.width(0).pow(2), active: layout.block_range(p_hi).end }
    }

    fn dim(&self) -> usize {
        self.d0 + 2 * (self.active - self.d0)
    }

    fn re(&self, i: usize) -> usize {
        if i < self.d0 {
            i
        } else {
            self.d0 + 2 * (i - self.d0)
        }
    }

    fn im(&self, i: usize) -> Option<usize> {
        (i >= self.d0).then(|| self.d0 + 2 * (i - self.d0) + 1)
    }
}

fn real_system(gen: &SectorGenerator, map: &RealMap) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(4 * (gen.linear_part().nnz() + gen.conjugate_part().nnz()));
    let mut push = |rows: (usize, Option<usize>), col: usize, re_re: f64, re_im: f64, im_re: f64, im_im: f64| {
        let (r_re, r_im) = rows;
        let c_re = map.re(col);
        let c_im = map.im(col);
        t.push((r_re, c_re, re_re));
        if let Some(ci) = c_im {
            t.push((r_re, ci, re_im));
        }
        if let Some(ri) = r_im {
            t.push((ri, c_re, im_re));
            if let Some(ci) = c_im {
                t.push((ri, ci, im_im));
            }
        }
    };
    for row in 0..map.active {
        let rows = (map.re(row), map.im(row));
        for (col, a) in gen.linear_part().row(row) {
            if col < map.active {
                // a (u + i v)
                push(rows, col, a.re, -a.im, a.im, a.re);
            }
        }
        for (col, b) in gen.conjugate_part().row(row) {
            if col < map.active {
                // b (u - i v)
                push(rows, col, b.re, b.im, b.im, -b.re);
            }
        }
    }
    t.retain(|e| e.2 != 0.0);
    t
}

/// Most probable single-mode occupation of the uncoupled problem, a safe pivot.
fn likely_population(gen: &SectorGenerator) -> usize {
    Truncation::fixed(gen.n_max())
        .and_then(|t| steady_number_distribution(gen.params_effective(), &t))
        .map(|d| d.probs.iter().enumerate().fold((0, -1.0), |a, (i, &p)| if p > a.1 { (i, p) } else { a }).0)
        .unwrap_or(0)
}

/// Solves the system whose row 0 is the trace functional over columns `0..d0`.
///
/// A dense row defeats the fill-reducing ordering of the sparse LU, so row 0 is
/// factorized as the unit row `e_pin` and the trace row is restored exactly by a
/// Sherman-Morrison correction. `pin` must index a nonzero population.
fn solve_trace_row_system(
    n: usize,
    mut triplets: Vec<(usize, usize, f64)>,
    d0: usize,
    pin: usize,
    rhs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    triplets.push((0, pin, 1.0));
    let mut unit = vec![0.0; n];
    unit[0] = 1.0;
    let mut all = vec![unit];
    all.extend(rhs.iter().cloned());
    let mut sol = solve_real_sparse(n, &triplets, &all)?;
    // trace row = e_pin + v with v = (1 on 0..d0) - e_pin.
    let v_dot = |x: &[f64]| x[..d0].iter().sum::<f64>() - x[pin];
    let z = sol.remove(0);
    let denom = 1.0 + v_dot(&z);
    if !(denom.is_finite() && denom.abs() > 0.0) {
        return Err(Error::Singular(format!("trace correction denominator {denom:e}")));
    }
    Ok(sol
        .into_iter()
        .map(|y| {
            let f = v_dot(&y) / denom;
            y.iter().zip(&z).map(|(a, b)| a - f * b).collect()
        })
        .collect())
}

/// Solves `L x = 0` with unit trace in the conserved sector.
pub fn solve_sector_steady_state(gen: &SectorGenerator) -> Result<SectorState> {
    let layout = gen.layout().clone();
    // Without coupling the p > 0 blocks are homogeneous and decoupled: their solution is zero.
    let p_hi = if gen.eps_effective() == 0.0 { 0 } else { layout.n_max() };
    let map = RealMap::new(&layout, p_hi);
    let n = map.dim();
    let d0 = layout.width(0).pow(2);

    let mut triplets = real_system(gen, &map);
    // Replace the (p=0, n=0, m=0) equation by the trace condition.
    triplets.retain(|e| e.0 != 0);

    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    let mut perturbed = rhs.clone();
    for (k, v) in perturbed.iter_mut().enumerate().skip(1) {
        *v += PERTURBATION_SIZE * (((k * 7919) % 13) as f64 - 6.0) / 6.0;
    }
    let top = likely_population(gen);
    let pin = map.re(layout.flat_index(SectorIndex::new(0, top, top))?);
    let sol = solve_trace_row_system(n, triplets, d0, pin, &[rhs, perturbed])?;
    let deviation = sol[0].iter().zip(&sol[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(deviation <= DEGENERACY_TOLERANCE) {
        return Err(Error::Degenerate { deviation });
    }

    let x = &sol[0];
    let mut values = vec![Complex64::new(0.0, 0.0); layout.dim()];
    for (i, v) in values.iter_mut().enumerate().take(map.active) {
        let im = map.im(i).map_or(0.0, |k| x[k]);
        *v = Complex64::new(x[map.re(i)], im);
    }

    let residual = relative_residual(&gen.apply(&values), &values);
    debug!("sector solve n_max={} dim={} residual={residual:e}", layout.n_max(), n);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual { residual, tolerance: RESIDUAL_TOLERANCE });
    }
    Ok(SectorState { layout, values, params: *gen.params(), coupling: *gen.coupling(), residual })
}

fn relative_residual(lx: &[Complex64], x: &[Complex64]) -> f64 {
    let num = lx.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let den = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    num / den
}

/// Picks a truncation, solves, and grows `n_max` until the top Fock levels are empty.
pub fn solve_steady_state(
    params: &MaserParams,
    coupling: &CouplingSpec,
    policy: &TruncationPolicy,
) -> Result<SectorState> {
    let mut trunc = match policy.n_max_override {
        Some(n_max) => Truncation::fixed(n_max)?,
        None => choose_truncation_capped(params, policy.threshold, policy.hard_cap)?,
    };
    loop {
        let gen = assemble_sector_generator(params, coupling, &trunc)?;
        let state = solve_sector_steady_state(&gen)?;
        let exact = coupling.eps == 0.0 && trunc.tail_mass == 0.0;
        let occupation = state.top_occupation(2);
        if exact || (trunc.n_max >= 2 && occupation < policy.top_occupation_tol) {
            return Ok(state);
        }
        if policy.n_max_override.is_some() {
            warn!("n_max={} forced; top-level occupation {occupation:e}", trunc.n_max);
            return Ok(state);
        }
        let next = trunc.n_max + (trunc.n_max / 2).max(2);
        if next > policy.hard_cap {
            return Err(Error::TruncationInadequate { occupation, n_max: trunc.n_max });
        }
        debug!("growing truncation {} -> {next} (top occupation {occupation:e})", trunc.n_max);
        trunc = Truncation { n_max: next, tail_mass: trunc.tail_mass };
    }
}

/// Steady state of the full two-mode superoperator.
#[derive(Debug, Clone)]
pub struct FullState {
    n_max: usize,
    /// Row-major density matrix of side `(n_max + 1)^2`.
    rho: Vec<Complex64>,
    residual: f64,
}

impl FullState {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(2)
    }

    pub fn rho(&self) -> &[Complex64] {
        &self.rho
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `<n1, n2| rho |m1, m2>`.
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        let d1 = self.n_max + 1;
        self.rho[(bra.0 * d1 + bra.1) * self.dim() + ket.0 * d1 + ket.1]
    }

    /// Largest element between states of different total photon number.
    pub fn max_charged_element(&self) -> f64 {
        let d1 = self.n_max + 1;
        let d = self.dim();
        let total = |s: usize| s / d1 + s % d1;
        (0..d * d).filter(|k| total(k / d) != total(k % d)).map(|k| self.rho[k].norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.rho[i * d + j] - self.rho[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(self.dim(), &self.rho)
    }

    /// The `q = 0` elements in sector form.
    pub fn to_sector(&self, params: MaserParams, coupling: CouplingSpec) -> SectorState {
        let layout = SectorLayout::new(self.n_max);
        let mut values = vec![Complex64::new(0.0, 0.0); layout.dim()];
        for p in 0..=self.n_max {
            let w = layout.width(p);
            for n in 0..w {
                for m in 0..w {
                    values[layout.flat_unchecked(p, n, m)] = self.element((n, m + p), (n + p, m));
                }
            }
        }
        SectorState { layout, values, params, coupling, residual: self.residual }
    }
}

/// Null vector of the full superoperator with unit trace.
pub fn solve_full_steady_state(gen: &FullGenerator) -> Result<FullState> {
    let d = gen.state_dim();
    let n = d * d;
    let mut triplets: Vec<(usize, usize, Complex64)> = gen.matrix().iter().filter(|e| e.0 != 0).collect();
    triplets.extend((0..d).map(|k| (0, k * d + k, Complex64::new(1.0, 0.0))));
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    rhs[0] = Complex64::new(1.0, 0.0);
    let rho = solve_complex_sparse(n, &triplets, &rhs)?;
    let residual = relative_residual(&gen.apply(&rho), &rho);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Residual { residual, tolerance: RESIDUAL_TOLERANCE });
    }
    let state = FullState { n_max: gen.n_max(), rho, residual };
    let min_ev = state.eigenvalues()?.first().copied().unwrap_or(0.0);
    if min_ev < -1e-8 {
        return Err(Error::InvalidState(min_ev));
    }
    Ok(state)
}
