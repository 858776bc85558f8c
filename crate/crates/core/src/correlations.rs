//! Entropies, mutual information and logarithmic negativity.
//!
//! A sector state only holds elements between states of equal total photon number
//! `K = n1 + n2`, so the two-mode density matrix is block diagonal in `K` and its
//! partial transpose over mode 2 is block diagonal in `n1 - n2`. Both spectra are
//! computed block by block. A dense route on explicit matrices is kept for small
//! dimensions and for cross-checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::solver::SectorState;

/// Eigenvalues below this (in magnitude) are treated as zero.
pub const CLIP_TOLERANCE: f64 = 1e-12;
/// Eigenvalues below `-NEGATIVITY_FLOOR` make a state invalid for entropies.
pub const NEGATIVITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    /// Single-mode entropies (nats).
    pub s1: f64,
    pub s2: f64,
    /// Joint entropy (nats).
    pub s12: f64,
    /// `s1 + s2 - s12` (nats).
    pub mi: f64,
    /// `log2(2 N + 1)` with `N` the sum of negative partial-transpose eigenvalue magnitudes.
    pub log_neg: f64,
    pub min_ev_pt: f64,
}

/// `-sum l ln l` over a spectrum, clipping to `[0, 1]`.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -NEGATIVITY_FLOOR {
            return Err(Error::InvalidState(l));
        }
        let l = l.clamp(0.0, 1.0);
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Von Neumann entropy of a row-major Hermitian matrix.
pub fn von_neumann_entropy(rho: &[Complex64], dim: usize) -> Result<f64> {
    entropy_from_eigenvalues(&hermitian_eigenvalues(dim, rho)?)
}

fn log_negativity_from(eigenvalues: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let mut negativity = 0.0;
    let mut min_ev = f64::INFINITY;
    for l in eigenvalues {
        min_ev = min_ev.min(l);
        if l < -CLIP_TOLERANCE {
            negativity -= l;
        }
    }
    ((2.0 * negativity + 1.0).log2(), min_ev)
}

/// Two-mode density matrix `<n1,n2| rho |m1,m2>` with index `n1 * d2 + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeMatrix {
    pub d1: usize,
    pub d2: usize,
    pub data: Vec<Complex64>,
}

impl TwoModeMatrix {
    pub fn new(d1: usize, d2: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != (d1 * d2).pow(2) {
            return Err(Error::InvalidParameter(format!("expected a {0}x{0} matrix", d1 * d2)));
        }
        Ok(Self { d1, d2, data })
    }

    pub fn dim(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn get(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        self.data[(bra.0 * self.d2 + bra.1) * self.dim() + ket.0 * self.d2 + ket.1]
    }

    /// Reduced state of mode 1 (`mode = 0`) or mode 2 (`mode = 1`).
    pub fn partial_trace(&self, keep: usize) -> Vec<Complex64> {
        let (dk, dt) = if keep == 0 { (self.d1, self.d2) } else { (self.d2, self.d1) };
        let mut out = vec![Complex64::new(0.0, 0.0); dk * dk];
        for a in 0..dk {
            for b in 0..dk {
                out[a * dk + b] =
                    (0..dt).map(|t| if keep == 0 { self.get((a, t), (b, t)) } else { self.get((t, a), (t, b)) }).sum();
            }
        }
        out
    }

    /// Transpose over mode 2.
    pub fn partial_transpose(&self) -> TwoModeMatrix {
        let d = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for n1 in 0..self.d1 {
            for n2 in 0..self.d2 {
                for m1 in 0..self.d1 {
                    for m2 in 0..self.d2 {
                        data[(n1 * self.d2 + n2) * d + m1 * self.d2 + m2] = self.get((n1, m2), (m1, n2));
                    }
                }
            }
        }
        TwoModeMatrix { d1: self.d1, d2: self.d2, data }
    }

    /// Exchanges the two modes.
    pub fn swap(&self) -> TwoModeMatrix {
        let d = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for n1 in 0..self.d1 {
            for n2 in 0..self.d2 {
                for m1 in 0..self.d1 {
                    for m2 in 0..self.d2 {
                        data[(n2 * self.d1 + n1) * d + m2 * self.d1 + m1] = self.get((n1, n2), (m1, m2));
                    }
                }
            }
        }
        TwoModeMatrix { d1: self.d2, d2: self.d1, data }
    }

    pub fn correlations(&self) -> Result<CorrelationReport> {
        let s1 = von_neumann_entropy(&self.partial_trace(0), self.d1)?;
        let s2 = von_neumann_entropy(&self.partial_trace(1), self.d2)?;
        let s12 = von_neumann_entropy(&self.data, self.dim())?;
        let pt = self.partial_transpose();
        let (log_neg, min_ev_pt) = log_negativity_from(hermitian_eigenvalues(pt.dim(), &pt.data)?);
        Ok(CorrelationReport { s1, s2, s12, mi: s1 + s2 - s12, log_neg, min_ev_pt })
    }
}

/// `<n1,n2| rho |m1,m2>` for `n1 + n2 = m1 + m2`, from the sector values.
fn sector_element(state: &SectorState, n1: usize, n2: usize, m1: usize, m2: usize) -> Complex64 {
    if m1 >= n1 {
        state.get(m1 - n1, n1, m2)
    } else {
        state.get(n1 - m1, m1, n2).conj()
    }
}

/// Dense two-mode density matrix with the `q = 0` elements filled in.
pub fn reconstruct_two_mode(state: &SectorState) -> TwoModeMatrix {
    let d1 = state.n_max() + 1;
    let d = d1 * d1;
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for n1 in 0..d1 {
        for n2 in 0..d1 {
            for m1 in 0..d1 {
                let k = n1 + n2;
                if k < m1 || k - m1 >= d1 {
                    continue;
                }
                let m2 = k - m1;
                data[(n1 * d1 + n2) * d + m1 * d1 + m2] = sector_element(state, n1, n2, m1, m2);
            }
        }
    }
    TwoModeMatrix { d1, d2: d1, data }
}

/// Joint spectrum, one block per total photon number.
fn joint_eigenvalues(state: &SectorState) -> Result<Vec<f64>> {
    let n_max = state.n_max();
    let mut out = Vec::with_capacity((n_max + 1).pow(2));
    for k in 0..=2 * n_max {
        let lo = k.saturating_sub(n_max);
        let hi = k.min(n_max);
        let states: Vec<usize> = (lo..=hi).collect();
        let b = states.len();
        let mut block = vec![Complex64::new(0.0, 0.0); b * b];
        for (i, &n1) in states.iter().enumerate() {
            for (j, &m1) in states.iter().enumerate() {
                block[i * b + j] = sector_element(state, n1, k - n1, m1, k - m1);
            }
        }
        out.extend(hermitian_eigenvalues(b, &block)?);
    }
    Ok(out)
}

/// Partial-transpose spectrum, one block per `delta = n1 - n2`.
fn partial_transpose_eigenvalues(state: &SectorState) -> Result<Vec<f64>> {
    let n_max = state.n_max() as i64;
    let mut out = Vec::with_capacity(((n_max + 1) * (n_max + 1)) as usize);
    for delta in -n_max..=n_max {
        // States (a, a - delta) with both occupations in range.
        let states: Vec<i64> = (delta.max(0)..=(n_max + delta).min(n_max)).collect();
        let b = states.len();
        let mut block = vec![Complex64::new(0.0, 0.0); b * b];
        for (i, &a) in states.iter().enumerate() {
            for (j, &c) in states.iter().enumerate() {
                // <a, a-delta| rho^T2 |c, c-delta> = <a, c-delta| rho |c, a-delta>
                block[i * b + j] =
                    sector_element(state, a as usize, (c - delta) as usize, c as usize, (a - delta) as usize);
            }
        }
        out.extend(hermitian_eigenvalues(b, &block)?);
    }
    Ok(out)
}

/// Marginal photon-number distributions of both modes.
fn marginals(state: &SectorState) -> (Vec<f64>, Vec<f64>) {
    let w = state.n_max() + 1;
    let block = state.block(0);
    let first = (0..w).map(|n| (0..w).map(|m| block[n * w + m].re).sum()).collect();
    let second = (0..w).map(|m| (0..w).map(|n| block[n * w + m].re).sum()).collect();
    (first, second)
}

/// `I = S(rho1) + S(rho2) - S(rho)` in nats.
pub fn mutual_information(state: &SectorState) -> Result<f64> {
    let (p1, p2) = marginals(state);
    let s12 = entropy_from_eigenvalues(&joint_eigenvalues(state)?)?;
    Ok(entropy_from_eigenvalues(&p1)? + entropy_from_eigenvalues(&p2)? - s12)
}

/// `(E_N, min eigenvalue of the partial transpose)`.
pub fn logarithmic_negativity(state: &SectorState) -> Result<(f64, f64)> {
    Ok(log_negativity_from(partial_transpose_eigenvalues(state)?))
}

pub fn correlation_report(state: &SectorState) -> Result<CorrelationReport> {
    let (p1, p2) = marginals(state);
    let s1 = entropy_from_eigenvalues(&p1)?;
    let s2 = entropy_from_eigenvalues(&p2)?;
    let s12 = entropy_from_eigenvalues(&joint_eigenvalues(state)?)?;
    let (log_neg, min_ev_pt) = logarithmic_negativity(state)?;
    Ok(CorrelationReport { s1, s2, s12, mi: s1 + s2 - s12, log_neg, min_ev_pt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::steady_number_distribution;
    use crate::generator::assemble_sector_generator;
    use crate::params::{CouplingSpec, MaserParams, Truncation};
    use crate::solver::solve_sector_steady_state;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn solved(coupling: CouplingSpec, n_max: usize) -> SectorState {
        let prm = MaserParams::from_theta(2.0, 1.5).unwrap();
        let gen = assemble_sector_generator(&prm, &coupling, &Truncation::fixed(n_max).unwrap()).unwrap();
        solve_sector_steady_state(&gen).unwrap()
    }

    #[test]
    fn entropy_of_pure_and_maximally_mixed() {
        let pure = [c(0.5), c(0.5), c(0.5), c(0.5)];
        assert!(von_neumann_entropy(&pure, 2).unwrap().abs() < 1e-14);
        let d = 5;
        let mixed: Vec<Complex64> =
            (0..d * d).map(|k| if k / d == k % d { c(1.0 / d as f64) } else { c(0.0) }).collect();
        assert!((von_neumann_entropy(&mixed, d).unwrap() - (d as f64).ln()).abs() < 1e-14);
        assert_eq!(entropy_from_eigenvalues(&[1.0, -1e-6]), Err(Error::InvalidState(-1e-6)));
    }

    #[test]
    fn bell_state_has_one_ebit() {
        // (|0,1> + |1,0>)/sqrt 2 in a 3x3 Fock space.
        let d1 = 3;
        let d = d1 * d1;
        let mut psi = vec![c(0.0); d];
        psi[1] = c(0.5f64.sqrt());
        psi[d1] = c(0.5f64.sqrt());
        let data = (0..d * d).map(|k| psi[k / d] * psi[k % d].conj()).collect();
        let r = TwoModeMatrix::new(d1, d1, data).unwrap().correlations().unwrap();
        assert!((r.log_neg - 1.0).abs() < 1e-12);
        assert!((r.mi - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((r.min_ev_pt + 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_states_are_uncorrelated() {
        let prm = MaserParams::from_theta(5.0, 2.0).unwrap();
        let trunc = Truncation::fixed(12).unwrap();
        let dist = steady_number_distribution(&prm, &trunc).unwrap();
        for coupling in [CouplingSpec::coherent(0.0).unwrap(), CouplingSpec::dissipative(0.0).unwrap()] {
            let gen = assemble_sector_generator(&prm, &coupling, &trunc).unwrap();
            let st = solve_sector_steady_state(&gen).unwrap();
            let r = correlation_report(&st).unwrap();
            assert!(r.mi.abs() < 1e-10);
            assert_eq!(r.log_neg, 0.0);
            let direct: f64 = dist.probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum();
            assert!((r.s1 - direct).abs() < 1e-12 && (r.s2 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn block_route_matches_dense_route() {
        for coupling in [CouplingSpec::coherent(0.3).unwrap(), CouplingSpec::dissipative(0.3).unwrap()] {
            let st = solved(coupling, 5);
            let fast = correlation_report(&st).unwrap();
            let dense = reconstruct_two_mode(&st).correlations().unwrap();
            for (a, b) in [
                (fast.s1, dense.s1),
                (fast.s2, dense.s2),
                (fast.s12, dense.s12),
                (fast.mi, dense.mi),
                (fast.log_neg, dense.log_neg),
                (fast.min_ev_pt, dense.min_ev_pt),
            ] {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            assert!(fast.mi > 0.0);
        }
    }

    #[test]
    fn mutual_information_is_swap_invariant() {
        let st = solved(CouplingSpec::dissipative(0.2).unwrap(), 4);
        let rho = reconstruct_two_mode(&st);
        let a = rho.correlations().unwrap();
        let b = rho.swap().correlations().unwrap();
        assert!((a.mi - b.mi).abs() < 1e-10);
        assert!((a.log_neg - b.log_neg).abs() < 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let st = solved(CouplingSpec::coherent(0.2).unwrap(), 3);
        let rho = reconstruct_two_mode(&st);
        assert_eq!(rho.partial_transpose().partial_transpose(), rho);
    }
}
