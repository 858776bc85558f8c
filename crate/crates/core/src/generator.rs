//! Equation-of-motion coefficients and the coupled-maser generator.
//!
//! Two representations are built:
//!
//! * [`SectorGenerator`] acts on the conserved sector `rho^(p)_{n,m}`, `p >= 0`,
//!   which holds the steady state. Coupling terms that reference `p = -1` are
//!   folded back through Hermiticity, `rho^(-1)_{n,m} = conj(rho^(1)_{n-1,m-1})`,
//!   so the map has the form `x -> A x + B conj(x)`.
//! * [`FullGenerator`] is the Lindblad superoperator on the whole truncated
//!   two-mode space, built from operators. It is only meant for small truncations
//!   and serves as the reference for the sector form.
//!
//! Truncation: every operator is restricted to `0..=n_max` per mode. The atomic
//! gain out of the top level is removed (its "no emission" amplitude is set to 1)
//! so the truncated map stays trace preserving.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::params::{rabi_sin, CouplingKind, CouplingSpec, MaserParams, SectorLayout, Truncation};

/// Largest `n_max` accepted by [`assemble_full_generator`].
pub const FULL_GENERATOR_CAP: usize = 8;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `mu_n^(p) = 4N sin^2[(phi/2)(sqrt(n+p+1) - sqrt(n+1))] + 2[n + p/2 - sqrt(n(n+p))]`.
pub fn coeff_mu(n: usize, p: usize, params: &MaserParams) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    let half_angle = 0.5 * params.phi * ((nf + pf + 1.0).sqrt() - (nf + 1.0).sqrt());
    4.0 * params.n_atoms * half_angle.sin().powi(2) + 2.0 * (nf + 0.5 * pf - (nf * (nf + pf)).sqrt())
}

/// `c_n^(p) = N sin(phi sqrt(n+1)) sin(phi sqrt(n+1+p))`; exactly zero at trapping angles.
pub fn coeff_c(n: usize, p: usize, params: &MaserParams) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    params.n_atoms * rabi_sin(params.phi, nf + 1.0) * rabi_sin(params.phi, nf + 1.0 + pf)
}

/// `d_n^(p) = sqrt(n(n+p))`.
pub fn coeff_d(n: usize, p: usize) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    (nf * (nf + pf)).sqrt()
}

/// Absorbs the local part of the dissipative coupling: `N -> N/(1+eps)`, `eps -> eps/(1+eps)`.
pub fn rescale_dissipative(params: &MaserParams, eps: f64) -> (MaserParams, f64) {
    let scale = 1.0 + eps;
    (params.with_n_atoms(params.n_atoms / scale), eps / scale)
}

/// `cos(phi sqrt(k+1))` on the truncated space; the top level cannot emit.
fn no_emission_amplitude(k: usize, n_max: usize, phi: f64) -> f64 {
    if k >= n_max {
        1.0
    } else {
        (phi * ((k + 1) as f64).sqrt()).cos()
    }
}

/// Decay rate of the single-mode coherence `<a| . |b>` with `a <= b`.
fn mode_loss(a: usize, b: usize, params: &MaserParams, n_max: usize) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi < n_max {
        let p = hi - lo;
        0.5 * coeff_mu(lo, p, params) + coeff_c(lo, p, params) + coeff_d(lo, p)
    } else {
        let c = no_emission_amplitude(lo, n_max, params.phi) * no_emission_amplitude(hi, n_max, params.phi);
        params.n_atoms * (1.0 - c) + 0.5 * (lo + hi) as f64
    }
}

/// Uncoupled equations for one `p` block, as local `(row, col, value)` entries.
///
/// Local index of `(n, m)` is `n * width + m` with `width = n_max + 1 - p`.
pub fn uncoupled_block(params: &MaserParams, n_max: usize, p: usize) -> Vec<(usize, usize, f64)> {
    let w = n_max + 1 - p;
    let mut out = Vec::with_capacity(5 * w * w);
    for n in 0..w {
        for m in 0..w {
            let row = n * w + m;
            let loss = mode_loss(n, n + p, params, n_max) + mode_loss(m + p, m, params, n_max);
            out.push((row, row, -loss));
            if n >= 1 {
                out.push((row, (n - 1) * w + m, coeff_c(n - 1, p, params)));
            }
            if m >= 1 {
                out.push((row, n * w + m - 1, coeff_c(m - 1, p, params)));
            }
            if n + 1 < w {
                out.push((row, (n + 1) * w + m, coeff_d(n + 1, p)));
            }
            if m + 1 < w {
                out.push((row, n * w + m + 1, coeff_d(m + 1, p)));
            }
        }
    }
    out.retain(|e| e.2 != 0.0);
    out
}

/// Coupling references of the equation for `rho^(p)_{n,m}`: `(coefficient, p', n', m')`.
///
/// The coefficient multiplies `rho^(p')_{n',m'}` and already contains the coupling strength.
pub(crate) fn coupling_terms(kind: CouplingKind, eps: f64, p: i64, n: i64, m: i64) -> Vec<(Complex64, i64, i64, i64)> {
    let s = |a: i64, b: i64| ((a * b) as f64).sqrt();
    match kind {
        CouplingKind::Coherent => {
            let f = -I * eps;
            vec![
                (f * s(n, m + p + 1), p + 1, n - 1, m),
                (f * s(n + 1, m + p), p - 1, n + 1, m),
                (-f * s(m, n + p + 1), p + 1, n, m - 1),
                (-f * s(n + p, m + 1), p - 1, n, m + 1),
            ]
        }
        CouplingKind::Dissipative => {
            let f = re(-eps);
            vec![
                (f * s(n + 1, m + 1), p - 1, n + 1, m + 1),
                (f * s(n + p + 1, m + p + 1), p + 1, n, m),
                (-0.5 * f * s(n, m + p + 1), p + 1, n - 1, m),
                (-0.5 * f * s(n + p + 1, m), p + 1, n, m - 1),
                (-0.5 * f * s(n + 1, m + p), p - 1, n + 1, m),
                (-0.5 * f * s(n + p, m + 1), p - 1, n, m + 1),
            ]
        }
    }
}

/// Generator restricted to the conserved sector, `x -> linear x + conjugate conj(x)`.
#[derive(Debug, Clone)]
pub struct SectorGenerator {
    layout: SectorLayout,
    params: MaserParams,
    coupling: CouplingSpec,
    params_effective: MaserParams,
    eps_effective: f64,
    linear: CsrMatrix<Complex64>,
    conjugate: CsrMatrix<Complex64>,
}

impl SectorGenerator {
    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    pub fn n_max(&self) -> usize {
        self.layout.n_max()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Bare parameters as passed in.
    pub fn params(&self) -> &MaserParams {
        &self.params
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// Parameters after the dissipative rescaling (identical to the bare ones for coherent coupling).
    pub fn params_effective(&self) -> &MaserParams {
        &self.params_effective
    }

    pub fn eps_effective(&self) -> f64 {
        self.eps_effective
    }

    /// Factor between the bare generator and this one: `L_bare = rate_scale * L_sector`.
    pub fn rate_scale(&self) -> f64 {
        match self.coupling.kind {
            CouplingKind::Coherent => 1.0,
            CouplingKind::Dissipative => 1.0 + self.coupling.eps,
        }
    }

    pub fn linear_part(&self) -> &CsrMatrix<Complex64> {
        &self.linear
    }

    pub fn conjugate_part(&self) -> &CsrMatrix<Complex64> {
        &self.conjugate
    }

    /// `d/dt` of the sector vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
        let mut y = self.linear.mul_vec(x);
        for (yi, zi) in y.iter_mut().zip(self.conjugate.mul_vec(&conj)) {
            *yi += zi;
        }
        y
    }

    /// Coordinate dump of both parts; conjugate entries are tagged with `*`.
    pub fn write_coordinate<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "% sector generator dim={} n_max={}", self.dim(), self.n_max())?;
        for (r, c, v) in self.linear.iter() {
            writeln!(out, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        for (r, c, v) in self.conjugate.iter() {
            writeln!(out, "{r} {c}* {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Assembles the sector generator from bare `(N, phi)` and `(kind, eps)`.
pub fn assemble_sector_generator(
    params: &MaserParams,
    coupling: &CouplingSpec,
    trunc: &Truncation,
) -> Result<SectorGenerator> {
    if !(coupling.eps >= 0.0 && coupling.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling strength {} < 0", coupling.eps)));
    }
    if trunc.n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".to_string()));
    }
    let (params_effective, eps_effective) = match coupling.kind {
        CouplingKind::Coherent => (*params, coupling.eps),
        CouplingKind::Dissipative => rescale_dissipative(params, coupling.eps),
    };
    let layout = trunc.layout();
    let n_max = layout.n_max();
    let dim = layout.dim();

    let mut linear = Vec::new();
    let mut conjugate = Vec::new();
    for p in 0..=n_max {
        let offset = layout.block_range(p).start;
        linear.extend(
            uncoupled_block(&params_effective, n_max, p).into_iter().map(|(r, c, v)| (offset + r, offset + c, re(v))),
        );
        if eps_effective == 0.0 {
            continue;
        }
        let w = layout.width(p);
        for n in 0..w {
            for m in 0..w {
                let row = offset + n * w + m;
                let terms = coupling_terms(coupling.kind, eps_effective, p as i64, n as i64, m as i64);
                for (coef, pp, nn, mm) in terms {
                    if coef == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    match layout.resolve(pp, nn, mm) {
                        Some((col, false)) => linear.push((row, col, coef)),
                        Some((col, true)) => conjugate.push((row, col, coef)),
                        None => {}
                    }
                }
            }
        }
    }

    Ok(SectorGenerator {
        linear: CsrMatrix::from_triplets(dim, dim, linear),
        conjugate: CsrMatrix::from_triplets(dim, dim, conjugate),
        layout,
        params: *params,
        coupling: *coupling,
        params_effective,
        eps_effective,
    })
}

/// Dense operator on the truncated two-mode space, row-major.
#[derive(Clone)]
struct Op {
    dim: usize,
    data: Vec<Complex64>,
}

impl Op {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = re(1.0);
        }
        op
    }

    fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    fn mul(&self, other: &Op) -> Op {
        let d = self.dim;
        let mut out = Op::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    fn add(&self, other: &Op, scale: Complex64) -> Op {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + scale * b).collect();
        Op { dim: self.dim, data }
    }

    fn adjoint(&self) -> Op {
        let d = self.dim;
        let mut out = Op::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    fn entries(&self) -> Vec<(usize, usize, Complex64)> {
        let d = self.dim;
        (0..d * d).filter(|&k| self.data[k] != Complex64::new(0.0, 0.0)).map(|k| (k / d, k % d, self.data[k])).collect()
    }

    /// Lifts a single-mode operator onto mode 1 or mode 2.
    fn lift(single: &Op, mode: usize) -> Op {
        let d = single.dim;
        let mut out = Op::zeros(d * d);
        for a in 0..d {
            for b in 0..d {
                let v = single.data[a * d + b];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for s in 0..d {
                    let (r, c) = if mode == 1 { (a * d + s, b * d + s) } else { (s * d + a, s * d + b) };
                    out.set(r, c, v);
                }
            }
        }
        out
    }
}

/// Lindblad superoperator on full two-mode density matrices.
///
/// `rho` is flattened row-major: element `<i| rho |j>` sits at `i * dim + j`, and
/// the two-mode state `|n1, n2>` has index `n1 * (n_max + 1) + n2`.
#[derive(Debug, Clone)]
pub struct FullGenerator {
    n_max: usize,
    params: MaserParams,
    coupling: CouplingSpec,
    matrix: CsrMatrix<Complex64>,
}

impl FullGenerator {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Hilbert-space dimension `(n_max + 1)^2`.
    pub fn state_dim(&self) -> usize {
        (self.n_max + 1).pow(2)
    }

    pub fn params(&self) -> &MaserParams {
        &self.params
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    pub fn matrix(&self) -> &CsrMatrix<Complex64> {
        &self.matrix
    }

    pub fn state_index(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.n_max + 1) + n2
    }

    pub fn state_of(&self, index: usize) -> (usize, usize) {
        (index / (self.n_max + 1), index % (self.n_max + 1))
    }

    /// Flat index of `<bra| rho |ket>`.
    pub fn element_index(&self, bra: (usize, usize), ket: (usize, usize)) -> usize {
        self.state_index(bra.0, bra.1) * self.state_dim() + self.state_index(ket.0, ket.1)
    }

    pub fn apply(&self, rho: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(rho)
    }

    /// Largest entry connecting elements of different charge `(n1+n2) - (m1+m2)`.
    pub fn max_charge_violation(&self) -> f64 {
        let d = self.state_dim();
        let charge = |flat: usize| {
            let (b1, b2) = self.state_of(flat / d);
            let (k1, k2) = self.state_of(flat % d);
            (b1 + b2) as i64 - (k1 + k2) as i64
        };
        self.matrix.iter().filter(|&(r, c, _)| charge(r) != charge(c)).map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }
}

pub fn assemble_full_generator(
    params: &MaserParams,
    coupling: &CouplingSpec,
    trunc: &Truncation,
) -> Result<FullGenerator> {
    assemble_full_generator_capped(params, coupling, trunc, FULL_GENERATOR_CAP)
}

pub fn assemble_full_generator_capped(
    params: &MaserParams,
    coupling: &CouplingSpec,
    trunc: &Truncation,
    cap: usize,
) -> Result<FullGenerator> {
    let n_max = trunc.n_max;
    if n_max > cap {
        return Err(Error::TruncationCapExceeded { requested: n_max, cap });
    }
    if !(coupling.eps >= 0.0 && coupling.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling strength {} < 0", coupling.eps)));
    }
    let d1 = n_max + 1;
    let dim = d1 * d1;

    let mut lower = Op::zeros(d1);
    let mut no_emission = Op::zeros(d1);
    let mut gain = Op::zeros(d1);
    for k in 0..d1 {
        no_emission.set(k, k, re(no_emission_amplitude(k, n_max, params.phi)));
        if k + 1 < d1 {
            lower.set(k, k + 1, re(((k + 1) as f64).sqrt()));
            gain.set(k + 1, k, re(rabi_sin(params.phi, (k + 1) as f64)));
        }
    }

    let id = Op::identity(dim);
    let mut terms: Vec<(Complex64, Op, Op)> = Vec::new();
    let lindblad = |rate: Complex64, jump: &Op, terms: &mut Vec<(Complex64, Op, Op)>| {
        let jd = jump.adjoint();
        let jdj = jd.mul(jump);
        terms.push((rate, jump.clone(), jd));
        terms.push((-0.5 * rate, jdj.clone(), id.clone()));
        terms.push((-0.5 * rate, id.clone(), jdj));
    };

    let mut modes = Vec::new();
    for mode in [1, 2] {
        let a = Op::lift(&lower, mode);
        let c = Op::lift(&no_emission, mode);
        let g = Op::lift(&gain, mode);
        // Atom passage: N (C rho C + G rho G^dag - rho).
        terms.push((re(params.n_atoms), c.clone(), c));
        terms.push((re(params.n_atoms), g.clone(), g.adjoint()));
        terms.push((re(-params.n_atoms), id.clone(), id.clone()));
        lindblad(re(1.0), &a, &mut terms);
        modes.push(a);
    }
    let (a1, a2) = (&modes[0], &modes[1]);
    if coupling.eps > 0.0 {
        match coupling.kind {
            CouplingKind::Coherent => {
                let h = a1.mul(&a2.adjoint()).add(&a1.adjoint().mul(a2), re(1.0));
                terms.push((-I * coupling.eps, h.clone(), id.clone()));
                terms.push((I * coupling.eps, id.clone(), h));
            }
            CouplingKind::Dissipative => {
                let jump = a1.add(a2, re(-1.0));
                lindblad(re(coupling.eps), &jump, &mut terms);
            }
        }
    }

    let mut triplets = Vec::new();
    for (coef, left, right) in &terms {
        let l = left.entries();
        let r = right.entries();
        for &(i, k, a) in &l {
            for &(ll, j, b) in &r {
                triplets.push((i * dim + j, k * dim + ll, coef * a * b));
            }
        }
    }
    Ok(FullGenerator {
        n_max,
        params: *params,
        coupling: *coupling,
        matrix: CsrMatrix::from_triplets(dim * dim, dim * dim, triplets),
    })
}

/// Largest entry-wise difference between the sector generator and the `q = 0`
/// rows of the full generator (rescaled by [`SectorGenerator::rate_scale`]).
///
/// Entries of the full generator that leave the `q = 0` subspace count as differences.
pub fn sector_full_discrepancy(sector: &SectorGenerator, full: &FullGenerator) -> Result<f64> {
    if sector.n_max() != full.n_max() {
        return Err(Error::InvalidParameter("truncations differ".to_string()));
    }
    let layout = sector.layout();
    let d = full.state_dim();
    let scale = 1.0 / sector.rate_scale();
    let mut worst = 0.0f64;
    for row in 0..layout.dim() {
        let idx = layout.sector_index(row)?;
        let (p, n, m) = (idx.p, idx.n, idx.m);
        let full_row = full.element_index((n, m + p), (n + p, m));

        // (sector column, conjugated) -> value
        let mut expected: HashMap<(usize, bool), Complex64> = HashMap::new();
        for (col, v) in full.matrix().row(full_row) {
            let (n1, n2) = full.state_of(col / d);
            let (m1, m2) = full.state_of(col % d);
            if n1 + n2 != m1 + m2 {
                worst = worst.max(v.norm());
                continue;
            }
            let shift = m1 as i64 - n1 as i64;
            let key = if shift >= 0 {
                (layout.flat_unchecked(shift as usize, n1, m2), false)
            } else {
                (layout.flat_unchecked((-shift) as usize, m1, n2), true)
            };
            *expected.entry(key).or_default() += v * scale;
        }
        for (col, v) in sector.linear_part().row(row) {
            *expected.entry((col, false)).or_default() -= v;
        }
        for (col, v) in sector.conjugate_part().row(row) {
            *expected.entry((col, true)).or_default() -= v;
        }
        for v in expected.values() {
            worst = worst.max(v.norm());
        }
    }
    Ok(worst)
}
