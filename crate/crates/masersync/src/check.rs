//! Invariant suite behind `masersync check`, run at small truncations.

use masersync_core::analytics::steady_number_distribution;
use masersync_core::generator::{assemble_full_generator, assemble_sector_generator, sector_full_discrepancy};
use masersync_core::params::{CouplingKind, CouplingSpec, MaserParams, Truncation};
use masersync_core::solver::{solve_full_steady_state, solve_sector_steady_state};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest truncation exercised.
pub const CHECK_N_MAX: usize = 6;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, worst: Result<f64, String>, tol: f64) -> CheckResult {
    match worst {
        Ok(w) => CheckResult {
            name: name.to_string(),
            passed: w < tol,
            detail: format!("worst {w:.3e} (tolerance {tol:.0e})"),
        },
        Err(e) => CheckResult { name: name.to_string(), passed: false, detail: e },
    }
}

fn couplings(eps: f64) -> [CouplingSpec; 2] {
    [CouplingSpec { kind: CouplingKind::Coherent, eps }, CouplingSpec { kind: CouplingKind::Dissipative, eps }]
}

/// Random Hermitian, unit-trace matrix of side `d`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        m[i * d + i] = Complex64::new(rng.gen_range(0.0..1.0), 0.0);
        for j in 0..i {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[i * d + j] = z;
            m[j * d + i] = z.conj();
        }
    }
    let tr: f64 = (0..d).map(|i| m[i * d + i].re).sum();
    m.iter().map(|z| z / tr).collect()
}

fn generator_agreement(params: &MaserParams) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for n_max in 1..=CHECK_N_MAX {
        let trunc = Truncation::fixed(n_max).map_err(|e| e.to_string())?;
        for c in couplings(0.1) {
            let sector = assemble_sector_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
            let full = assemble_full_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
            worst = worst.max(sector_full_discrepancy(&sector, &full).map_err(|e| e.to_string())?);
        }
    }
    Ok(worst)
}

fn charge_conservation(params: &MaserParams) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for n_max in 1..=CHECK_N_MAX {
        let trunc = Truncation::fixed(n_max).map_err(|e| e.to_string())?;
        for c in couplings(0.2) {
            let full = assemble_full_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
            worst = worst.max(full.max_charge_violation());
        }
    }
    Ok(worst)
}

/// `(|Tr L rho|, ||L[rho]^dagger - L[rho]||)` maxima over random Hermitian inputs.
fn lindblad_preservation(params: &MaserParams, samples: usize) -> Result<(f64, f64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let trunc = Truncation::fixed(3).map_err(|e| e.to_string())?;
    let (mut trace, mut herm) = (0.0f64, 0.0f64);
    for c in couplings(0.3) {
        let full = assemble_full_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
        let d = full.state_dim();
        for _ in 0..samples {
            let rho = random_hermitian(&mut rng, d);
            let out = full.apply(&rho);
            let tr: Complex64 = (0..d).map(|i| out[i * d + i]).sum();
            trace = trace.max(tr.norm());
            for i in 0..d {
                for j in 0..d {
                    herm = herm.max((out[i * d + j] - out[j * d + i].conj()).norm());
                }
            }
        }
    }
    Ok((trace, herm))
}

/// `(max |sector - full|, max q != 0 element)` of the steady states.
fn steady_state_agreement(params: &MaserParams) -> Result<(f64, f64), String> {
    let (mut diff, mut charged) = (0.0f64, 0.0f64);
    for n_max in 3..=5 {
        let trunc = Truncation::fixed(n_max).map_err(|e| e.to_string())?;
        for eps in [0.01, 0.1] {
            for c in couplings(eps) {
                let gen = assemble_full_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
                let full = solve_full_steady_state(&gen).map_err(|e| e.to_string())?;
                let sector_gen = assemble_sector_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
                let sector = solve_sector_steady_state(&sector_gen).map_err(|e| e.to_string())?;
                let reference = full.to_sector(*params, c);
                for (a, b) in sector.values().iter().zip(reference.values()) {
                    diff = diff.max((a - b).norm());
                }
                charged = charged.max(full.max_charged_element());
            }
        }
    }
    Ok((diff, charged))
}

fn uncoupled_product(params: &MaserParams) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for n_max in 1..=CHECK_N_MAX {
        let trunc = Truncation::fixed(n_max).map_err(|e| e.to_string())?;
        let p = steady_number_distribution(params, &trunc).map_err(|e| e.to_string())?.probs;
        for c in couplings(0.0) {
            let gen = assemble_full_generator(params, &c, &trunc).map_err(|e| e.to_string())?;
            let full = solve_full_steady_state(&gen).map_err(|e| e.to_string())?;
            let d1 = n_max + 1;
            for n1 in 0..d1 {
                for n2 in 0..d1 {
                    for m1 in 0..d1 {
                        for m2 in 0..d1 {
                            let expect = if (n1, n2) == (m1, m2) { p[n1] * p[n2] } else { 0.0 };
                            worst = worst.max((full.element((n1, n2), (m1, m2)) - expect).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Runs every check at `(N, theta)`.
pub fn run_checks(n_atoms: f64, theta: f64) -> Vec<CheckResult> {
    let params = match MaserParams::from_theta(n_atoms, theta) {
        Ok(p) => p,
        Err(e) => return vec![CheckResult { name: "parameters".into(), passed: false, detail: e.to_string() }],
    };
    let mut out = vec![
        outcome("sector generator equals q=0 block of full generator", generator_agreement(&params), 1e-13),
        outcome("full generator conserves charge", charge_conservation(&params), 1e-300),
    ];
    match lindblad_preservation(&params, 50) {
        Ok((t, h)) => {
            out.push(outcome("trace preservation on random states", Ok(t), 1e-12));
            out.push(outcome("Hermiticity preservation on random states", Ok(h), 1e-12));
        }
        Err(e) => out.push(outcome("trace/Hermiticity preservation", Err(e), 0.0)),
    }
    match steady_state_agreement(&params) {
        Ok((d, q)) => {
            out.push(outcome("sector steady state equals full steady state", Ok(d), 1e-9));
            out.push(outcome("charged coherences of the full steady state vanish", Ok(q), 1e-10));
        }
        Err(e) => out.push(outcome("steady-state agreement", Err(e), 0.0)),
    }
    out.push(outcome("uncoupled full steady state is diag(P) x diag(P)", uncoupled_product(&params), 1e-10));
    out
}
