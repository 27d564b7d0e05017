//! Two-emitter poles, residues and the many-emitter exchange matrix.
//!
//! Emitter 1 sits at `n1`, emitter 2 at `n2 = n1 + n12`; for
//! [`SublatticePair::AB`] emitter 1 couples to sublattice A and emitter 2 to
//! sublattice B. The symmetric/antisymmetric amplitudes
//! `C_+- = (C_1 +- C_2)/sqrt 2` see `Sigma_+- = Sigma_e +- Sigma_12`.

use std::thread;

use rustfft::FftPlanner;

use crate::lattice::{BathModel, Site};
use crate::selfenergy::{collective_sums, g_of_n, residue_r0_approx, CollectiveIndex, CollectiveSums, SublatticePair};
use crate::{Error, Result, C64};

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_REL_TOL: f64 = 1e-14;
const DEFECT_TOL: f64 = 1e-8;
/// Above this many A-B pairs the exchange matrix uses the `R_0 J_AB,M` approximation.
pub const FAST_PAIR_THRESHOLD: usize = 50;
/// Largest `N` for which the Markov couplings are tabulated with one FFT.
const FFT_TABLE_MAX_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectivePoleResult {
    pub z_plus: C64,
    pub z_minus: C64,
    pub r_plus: C64,
    pub r_minus: C64,
    pub n12: Site,
    pub beta: SublatticePair,
    pub n: usize,
}

fn newton(model: &BathModel, idx: CollectiveIndex, g: f64, sign: f64, seed: C64) -> Result<(C64, CollectiveSums)> {
    let mut z = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let sums = collective_sums(z, g, model, idx)?;
        let (s, ds) = sums.combined(sign);
        let f = z - s;
        let df = C64::new(1.0, 0.0) - ds;
        if f == C64::new(0.0, 0.0) {
            return Ok((z, sums));
        }
        let step = f / df;
        z -= step;
        if !z.is_finite() {
            break;
        }
        if step.norm() <= NEWTON_REL_TOL * z.norm() + f64::MIN_POSITIVE {
            // the derivative moved by O(step); not worth another sweep
            return Ok((z, sums));
        }
    }
    Err(Error::NoConvergence { seed })
}

fn residue_from(z: C64, d_sigma: C64) -> Result<C64> {
    let denom = C64::new(1.0, 0.0) - d_sigma;
    if denom.norm() < DEFECT_TOL {
        return Err(Error::DefectivePole { z, denom: denom.norm() });
    }
    Ok(denom.inv())
}

/// Real poles `z_+-` of `G_+-` at `Delta = 0` from the exact finite-`N` sums.
///
/// Newton iteration on `z = Sigma_e(z) +- Sigma_12(z)` seeded at
/// `+-R_0 Sigma_12(0)` (with the logarithmic `R_0`); the residues use the analytic derivatives of the sums.
pub fn solve_collective_pole(model: &BathModel, n12: Site, beta: SublatticePair, g: f64) -> Result<CollectivePoleResult> {
    model.require_gapless_free()?;
    if !g.is_finite() || g < 0.0 {
        return Err(Error::InvalidParameter(format!("coupling g = {g} must be finite and non-negative")));
    }
    let idx = CollectiveIndex { beta, n12 };
    let r0 = residue_r0_approx(g, model.n());
    let at_zero = collective_sums(C64::new(0.0, 0.0), g, model, idx)?;
    let seed = at_zero.sigma_12 * r0;

    let (z_plus, sums_plus) = newton(model, idx, g, 1.0, seed)?;
    let (z_minus, sums_minus) = newton(model, idx, g, -1.0, -seed)?;
    Ok(CollectivePoleResult {
        z_plus,
        z_minus,
        r_plus: residue_from(z_plus, sums_plus.combined(1.0).1)?,
        r_minus: residue_from(z_minus, sums_minus.combined(-1.0).1)?,
        n12,
        beta,
        n: model.n(),
    })
}

/// `R_+- = 1 / (1 - dSigma_+-/dz)` at the given roots.
pub fn residues_pm(model: &BathModel, n12: Site, beta: SublatticePair, g: f64, z_pm: (C64, C64)) -> Result<(C64, C64)> {
    model.require_gapless_free()?;
    let idx = CollectiveIndex { beta, n12 };
    let plus = collective_sums(z_pm.0, g, model, idx)?;
    let minus = collective_sums(z_pm.1, g, model, idx)?;
    Ok((
        residue_from(z_pm.0, plus.combined(1.0).1)?,
        residue_from(z_pm.1, minus.combined(-1.0).1)?,
    ))
}

/// Exchange coupling in the continuum: the quasi-bound state that mediates it
/// has zero overlap with the emitters, so the pole sits at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumExchange {
    pub value: f64,
    pub note: &'static str,
}

pub fn continuum_exchange() -> ContinuumExchange {
    ContinuumExchange { value: 0.0, note: "thermodynamic limit" }
}

/// Markov populations `(|C_1|^2, |C_2|^2)` for emitter 1 initially excited,
/// with `z_+- = J_+- - i Gamma_+- / 2`.
pub fn markov_populations(times: &[f64], j_pm: (f64, f64), gamma_pm: (f64, f64)) -> Vec<(f64, f64)> {
    let (jp, jm) = j_pm;
    let (gp, gm) = gamma_pm;
    times
        .iter()
        .map(|&t| {
            let ep = (-gp * t).exp();
            let em = (-gm * t).exp();
            let cross = 2.0 * (-(gp + gm) * t / 2.0).exp() * ((jp - jm) * t).cos();
            ((ep + em + cross) / 4.0, (ep + em - cross) / 4.0)
        })
        .collect()
}

/// How the entries of [`effective_coupling_matrix`] are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMethod {
    /// Full Newton solve per pair.
    Exact,
    /// `J_AB ~ R_0(N) Sigma_12^AB(0; n12)`.
    SelfConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingOptions {
    /// `None` picks [`CouplingMethod::SelfConsistent`] above
    /// [`FAST_PAIR_THRESHOLD`] pairs.
    pub method: Option<CouplingMethod>,
    pub workers: usize,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        Self { method: None, workers }
    }
}

/// Symmetric exchange matrix over the emitters `positions_a ++ positions_b`.
///
/// The entry for A-emitter `i` and B-emitter `j` is the symmetric pole
/// `z_+` of the pair with `n12 = m_j - n_i`; same-sublattice entries are zero.
pub fn effective_coupling_matrix(
    model: &BathModel,
    positions_a: &[Site],
    positions_b: &[Site],
    g: f64,
    options: CouplingOptions,
) -> Result<Vec<Vec<f64>>> {
    model.require_gapless_free()?;
    let na = positions_a.len();
    let nb = positions_b.len();
    let pairs: Vec<(usize, usize, Site)> = (0..na)
        .flat_map(|i| (0..nb).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (a, b) = (positions_a[i], positions_b[j]);
            (i, j, [b[0] - a[0], b[1] - a[1]])
        })
        .collect();
    let method = options.method.unwrap_or(if pairs.len() > FAST_PAIR_THRESHOLD {
        CouplingMethod::SelfConsistent
    } else {
        CouplingMethod::Exact
    });

    let values: Vec<f64> = match method {
        CouplingMethod::SelfConsistent if model.n() <= FFT_TABLE_MAX_N => {
            let r0 = 1.0 / (1.0 + g * g * g_of_n(model)?);
            let table = markov_ab_table(model, g);
            let n = model.n() as i64;
            pairs
                .iter()
                .map(|&(_, _, d)| r0 * table[(d[0].rem_euclid(n) * n + d[1].rem_euclid(n)) as usize])
                .collect()
        }
        _ => {
            let r0 = if method == CouplingMethod::SelfConsistent {
                Some(1.0 / (1.0 + g * g * g_of_n(model)?))
            } else {
                None
            };
            parallel_map(&pairs, options.workers.max(1), |&(_, _, d)| match r0 {
                Some(r0) => {
                    let idx = CollectiveIndex { beta: SublatticePair::AB, n12: d };
                    Ok(r0 * collective_sums(C64::new(0.0, 0.0), g, model, idx)?.sigma_12.re)
                }
                None => Ok(solve_collective_pole(model, d, SublatticePair::AB, g)?.z_plus.re),
            })?
        }
    };

    let size = na + nb;
    let mut out = vec![vec![0.0; size]; size];
    for (&(i, j, _), v) in pairs.iter().zip(values) {
        out[i][na + j] = v;
        out[na + j][i] = v;
    }
    Ok(out)
}

fn parallel_map<T: Sync, F>(items: &[T], workers: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&T) -> Result<f64> + Sync,
{
    if workers == 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let results: Vec<Result<Vec<f64>>> = thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(&f).collect::<Result<Vec<f64>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// `Sigma_12^AB(0; n)` for every separation `n` on the `N x N` torus, from
/// one inverse FFT of `-g^2 conj(f(k)) / |f(k)|^2`. Index `n1 * N + n2`.
fn markov_ab_table(model: &BathModel, g: f64) -> Vec<f64> {
    let n = model.n();
    let step = model.momentum_step();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for m1 in model.momentum_indices() {
        for m2 in model.momentum_indices() {
            let f = crate::lattice::dispersion([step * m1 as f64, step * m2 as f64]);
            let i = m1.rem_euclid(n as i64) as usize * n + m2.rem_euclid(n as i64) as usize;
            data[i] = -f.conj() / f.norm_sqr();
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut data, &mut scratch);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = data[r * n + c];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for r in 0..n {
            data[r * n + c] = col[r];
        }
    }
    let scale = g * g / (n * n) as f64;
    data.iter().map(|v| v.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfenergy::{g_pm, jab_markov_asymptotic, sigma12_finite, Parity};

    fn model(n: usize) -> BathModel {
        BathModel::new(n).unwrap()
    }

    #[test]
    fn ab_poles_are_real_and_symmetric() {
        let m = model(64);
        let p = solve_collective_pole(&m, [1, 1], SublatticePair::AB, 0.1).unwrap();
        assert!(p.z_plus.im.abs() < 1e-10 && p.z_minus.im.abs() < 1e-10);
        assert!((p.z_plus + p.z_minus).norm() < 1e-10);
        assert!((p.r_plus - p.r_minus).norm() < 1e-10);
        assert!(p.z_plus.re > 0.0);
    }

    #[test]
    fn pole_satisfies_its_equation() {
        let m = model(50);
        let g = 0.2;
        let p = solve_collective_pole(&m, [2, -1], SublatticePair::AB, g).unwrap();
        let idx = CollectiveIndex { beta: SublatticePair::AB, n12: [2, -1] };
        let s = collective_sums(p.z_plus, g, &m, idx).unwrap().combined(1.0).0;
        assert!((p.z_plus - s).norm() < 1e-14);
    }

    #[test]
    fn aa_pole_sits_at_zero() {
        let m = model(32);
        for n12 in [[1, 1], [3, 0], [2, -5]] {
            let p = solve_collective_pole(&m, n12, SublatticePair::AA, 0.3).unwrap();
            assert_eq!(p.z_plus, C64::new(0.0, 0.0));
            assert_eq!(p.z_minus, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn aa_residue_matches_g_minus() {
        let m = model(40);
        let g = 0.3;
        for n12 in [[1, 1], [3, 0], [2, -1]] {
            let p = solve_collective_pole(&m, n12, SublatticePair::AA, g).unwrap();
            let gm = g_pm(&m, n12, Parity::Antisymmetric).unwrap();
            let gp = g_pm(&m, n12, Parity::Symmetric).unwrap();
            assert!((p.r_minus.re - 1.0 / (1.0 + g * g * gm)).abs() < 1e-8);
            assert!((p.r_plus.re - 1.0 / (1.0 + g * g * gp)).abs() < 1e-8);
        }
    }

    #[test]
    fn label_swap_leaves_poles_unchanged() {
        // emitter 1 on B at n1 + n12, emitter 2 on A at n1
        let m = model(64);
        let ab = solve_collective_pole(&m, [2, 1], SublatticePair::AB, 0.15).unwrap();
        let ba = solve_collective_pole(&m, [-2, -1], SublatticePair::BA, 0.15).unwrap();
        assert!((ab.z_plus - ba.z_plus).norm() < 1e-12);
        assert!((ab.z_minus - ba.z_minus).norm() < 1e-12);
        assert!((ab.r_plus - ba.r_plus).norm() < 1e-10);
    }

    #[test]
    fn weak_coupling_limits() {
        let m = model(64);
        let g = 1e-4;
        let p = solve_collective_pole(&m, [1, 1], SublatticePair::AB, g).unwrap();
        let markov = sigma12_finite(C64::new(0.0, 0.0), g, &m, CollectiveIndex { beta: SublatticePair::AB, n12: [1, 1] })
            .unwrap()
            .value;
        assert!((p.z_plus - markov).norm() < 1e-6 * markov.norm());
        assert!((p.r_plus.re - 1.0).abs() < 1e-6);

        let zero = solve_collective_pole(&m, [1, 1], SublatticePair::AB, 0.0).unwrap();
        assert_eq!(zero.z_plus, C64::new(0.0, 0.0));
        assert_eq!(zero.r_plus, C64::new(1.0, 0.0));
        assert_eq!(zero.r_minus, C64::new(1.0, 0.0));
    }

    #[test]
    fn exact_pole_follows_self_consistent_estimate() {
        let g = 0.1;
        for n in [64, 256] {
            let m = model(n);
            let r0 = 1.0 / (1.0 + g * g * g_of_n(&m).unwrap());
            for k in 1..=3 {
                let p = solve_collective_pole(&m, [k, k], SublatticePair::AB, g).unwrap();
                let idx = CollectiveIndex { beta: SublatticePair::AB, n12: [k, k] };
                let markov = sigma12_finite(C64::new(0.0, 0.0), g, &m, idx).unwrap().value.re;
                let rel = (p.z_plus.re / (r0 * markov) - 1.0).abs();
                assert!(rel < g * g + 0.05, "N = {n}, n = {k}: {rel}");
                assert!((p.r_plus.re / r0 - 1.0).abs() < 0.1);
            }
        }
    }

    #[test]
    fn residues_pm_reproduces_solver() {
        let m = model(32);
        let p = solve_collective_pole(&m, [1, 2], SublatticePair::AB, 0.2).unwrap();
        let (rp, rm) = residues_pm(&m, [1, 2], SublatticePair::AB, 0.2, (p.z_plus, p.z_minus)).unwrap();
        assert!((rp - p.r_plus).norm() < 1e-13);
        assert!((rm - p.r_minus).norm() < 1e-13);
    }

    #[test]
    fn rejects_dirac_grid() {
        assert!(matches!(
            solve_collective_pole(&model(48), [1, 1], SublatticePair::AB, 0.1),
            Err(Error::DiracPointOnGrid(48))
        ));
    }

    #[test]
    fn markov_populations_reduce_to_rabi() {
        let j = 0.03;
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 7.3).collect();
        for (&t, (c1, c2)) in times.iter().zip(markov_populations(&times, (j, -j), (0.0, 0.0))) {
            assert!((c1 - (j * t).cos().powi(2)).abs() < 1e-14);
            assert!((c2 - (j * t).sin().powi(2)).abs() < 1e-14);
        }
        assert_eq!(markov_populations(&[0.0], (0.2, 0.1), (0.3, 0.05))[0], (1.0, 0.0));
        for (_, c2) in markov_populations(&times, (0.1, 0.1), (0.02, 0.02)) {
            assert!(c2.abs() < 1e-16);
        }
    }

    #[test]
    fn fft_table_matches_direct_sums() {
        let m = model(20);
        let g = 0.3;
        let table = markov_ab_table(&m, g);
        for d in [[0, 0], [1, 1], [-3, 2], [7, -9]] {
            let idx = CollectiveIndex { beta: SublatticePair::AB, n12: d };
            let direct = sigma12_finite(C64::new(0.0, 0.0), g, &m, idx).unwrap().value.re;
            let i = (d[0].rem_euclid(20) * 20 + d[1].rem_euclid(20)) as usize;
            assert!((table[i] - direct).abs() < 1e-13, "{d:?}");
        }
    }

    #[test]
    fn coupling_matrix_structure() {
        let m = model(64);
        let g = 0.1;
        let a = [[10, 10]];
        let b = [[11, 11]];
        let mat = effective_coupling_matrix(&m, &a, &b, g, CouplingOptions::default()).unwrap();
        let p = solve_collective_pole(&m, [1, 1], SublatticePair::AB, g).unwrap();
        assert_eq!(mat[0][1], p.z_plus.re);
        assert_eq!(mat[1][0], mat[0][1]);
        assert_eq!(mat[0][0], 0.0);

        // zigzag line: sign pattern of the asymptotic coupling, near-zero at n = 3m
        let a = [[20, 20], [21, 20]];
        let b: Vec<Site> = (1..=6).map(|n| [20 + n, 20 - n]).collect();
        for method in [CouplingMethod::Exact, CouplingMethod::SelfConsistent] {
            let opts = CouplingOptions { method: Some(method), workers: 3 };
            let mat = effective_coupling_matrix(&m, &a, &b, g, opts).unwrap();
            assert_eq!(mat[0][1], 0.0);
            assert_eq!(mat[2][3], 0.0);
            for n in 1..=6i64 {
                let v = mat[0][1 + n as usize];
                let asym = jab_markov_asymptotic([n, -n], g).unwrap();
                if n % 3 == 0 {
                    assert!(v.abs() < 0.01 * mat[0][2].abs(), "n = {n}: {v}");
                } else {
                    assert_eq!(v.signum(), asym.signum(), "n = {n}");
                }
            }
        }
    }

    #[test]
    fn coupling_matrix_shrinks_with_system_size() {
        use crate::selfenergy::g_of_n_approx;
        let g = 0.3;
        let a = [[0, 0], [5, 2]];
        let b = [[1, 1], [3, -3], [2, 0]];
        let opts = CouplingOptions { method: Some(CouplingMethod::SelfConsistent), workers: 2 };
        let small = effective_coupling_matrix(&model(128), &a, &b, g, opts).unwrap();
        let large = effective_coupling_matrix(&model(256), &a, &b, g, opts).unwrap();
        let predicted = (1.0 + g * g * g_of_n_approx(128)) / (1.0 + g * g * g_of_n_approx(256));
        for i in 0..2 {
            for j in 2..5 {
                if small[i][j].abs() > 1e-3 * g * g {
                    let ratio = large[i][j] / small[i][j];
                    assert!((ratio / predicted - 1.0).abs() < 0.05, "{i},{j}: {ratio} vs {predicted}");
                }
            }
        }

        // strong coupling: R_0 ~ 1 / (g^2 g(N)), so entries scale like 1 / g(N)
        let g = 3.0;
        let small = effective_coupling_matrix(&model(128), &a, &b, g, opts).unwrap();
        let large = effective_coupling_matrix(&model(256), &a, &b, g, opts).unwrap();
        let predicted = g_of_n_approx(128) / g_of_n_approx(256);
        for i in 0..2 {
            for j in 2..5 {
                if small[i][j].abs() > 1e-3 * g * g {
                    let ratio = large[i][j] / small[i][j];
                    assert!((ratio / predicted - 1.0).abs() < 0.05, "{i},{j}: {ratio} vs {predicted}");
                }
            }
        }
    }

    #[test]
    fn continuum_exchange_vanishes() {
        let c = continuum_exchange();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.note, "thermodynamic limit");
    }
}
