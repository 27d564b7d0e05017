//! Exact propagation of the single-excitation sector.
//!
//! The bath is kept in momentum space, where `H_B` is a 2x2 block
//! `(0, f(k); f*(k), 0)` per momentum, so applying `H` costs `O(N^2)` per
//! emitter. The default propagator is a Chebyshev expansion of `e^{-iHt}`;
//! a fixed-step RK4 integrator is available for comparison.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::lattice::{BathModel, Site};
use crate::selfenergy::AxisTables;
use crate::{Error, Result, C64};

/// Norm drift above which propagation is aborted.
pub const NORM_ABORT: f64 = 1e-6;
/// Largest `||H|| * dt` covered by a single Chebyshev expansion.
const CHUNK_PHASE: f64 = 1000.0;
/// Chebyshev coefficients below this magnitude are dropped.
pub const COEFF_CUTOFF: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSpec {
    pub site: Site,
    pub sublattice: Sublattice,
    /// Detuning from the Dirac energy, units of `J`.
    pub delta: f64,
    /// Coupling, units of `J`.
    pub g: f64,
}

impl EmitterSpec {
    pub fn new(site: Site, sublattice: Sublattice, delta: f64, g: f64) -> Self {
        Self { site, sublattice, delta, g }
    }
}

/// Cell where a lone emitter is placed by default.
pub fn default_emitter_site(model: &BathModel) -> Site {
    let h = (model.n() / 2) as i64;
    [h, h]
}

/// Wraps a site displacement back into `[0, N)^2`.
pub fn wrap_site(model: &BathModel, site: Site) -> Site {
    let n = model.n() as i64;
    [site[0].rem_euclid(n), site[1].rem_euclid(n)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub gamma_loss: f64,
}

impl LossModel {
    pub fn new(gamma_loss: f64) -> Result<Self> {
        if !(gamma_loss >= 0.0 && gamma_loss.is_finite()) {
            return Err(Error::InvalidParameter(format!("loss rate {gamma_loss} must be >= 0")));
        }
        Ok(Self { gamma_loss })
    }
}

/// Amplitudes of `|e_j> ` and of the bath modes `a_k`, `b_k`.
///
/// `bath_amps_k` holds `N^2` A-band amplitudes followed by `N^2` B-band
/// amplitudes, each row-major over the momentum indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    pub emitter_amps: Vec<C64>,
    pub bath_amps_k: Vec<C64>,
    pub time: f64,
}

impl SingleExcitationState {
    /// Emitters in the given superposition, bath in vacuum, at `t = 0`.
    pub fn with_emitter_amplitudes(model: &BathModel, amps: &[C64]) -> Self {
        Self {
            emitter_amps: amps.to_vec(),
            bath_amps_k: vec![C64::new(0.0, 0.0); 2 * model.num_cells()],
            time: 0.0,
        }
    }

    /// Emitter `which` excited, all others and the bath empty.
    pub fn excited(model: &BathModel, n_emitters: usize, which: usize) -> Result<Self> {
        if which >= n_emitters {
            return Err(Error::InvalidParameter(format!("emitter {which} of {n_emitters}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n_emitters];
        amps[which] = C64::new(1.0, 0.0);
        Ok(Self::with_emitter_amplitudes(model, &amps))
    }

    fn zeros_like(&self) -> Self {
        Self {
            emitter_amps: vec![C64::new(0.0, 0.0); self.emitter_amps.len()],
            bath_amps_k: vec![C64::new(0.0, 0.0); self.bath_amps_k.len()],
            time: self.time,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.emitter_weight() + self.bath_weight()
    }

    pub fn emitter_weight(&self) -> f64 {
        self.emitter_amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn bath_weight(&self) -> f64 {
        self.bath_amps_k.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        let e: C64 = self.emitter_amps.iter().zip(&other.emitter_amps).map(|(a, b)| a.conj() * b).sum();
        let k: C64 = self.bath_amps_k.iter().zip(&other.bath_amps_k).map(|(a, b)| a.conj() * b).sum();
        e + k
    }

    fn axpy(&mut self, alpha: C64, x: &Self) {
        for (y, x) in self.emitter_amps.iter_mut().zip(&x.emitter_amps) {
            *y += alpha * x;
        }
        for (y, x) in self.bath_amps_k.iter_mut().zip(&x.bath_amps_k) {
            *y += alpha * x;
        }
    }

    fn scale(&mut self, alpha: C64) {
        self.emitter_amps.iter_mut().for_each(|y| *y *= alpha);
        self.bath_amps_k.iter_mut().for_each(|y| *y *= alpha);
    }
}

struct Coupling {
    sublattice: Sublattice,
    delta: f64,
    weight: f64,
    p1: Vec<C64>,
    p2: Vec<C64>,
}

/// Matrix-free action of `H = H_S + H_B + H_int` on a state.
pub struct HamiltonianAction {
    model: BathModel,
    emitters: Vec<EmitterSpec>,
    f: Vec<C64>,
    couplings: Vec<Coupling>,
}

impl HamiltonianAction {
    pub fn new(model: &BathModel, emitters: &[EmitterSpec]) -> Result<Self> {
        if emitters.is_empty() {
            return Err(Error::InvalidParameter("at least one emitter is required".into()));
        }
        let n = model.n() as i64;
        for (i, e) in emitters.iter().enumerate() {
            if e.site.iter().any(|&c| c < 0 || c >= n) {
                return Err(Error::InvalidParameter(format!("emitter {i} site {:?} outside [0, {n})^2", e.site)));
            }
            if !(e.delta.is_finite() && e.g.is_finite() && e.g >= 0.0) {
                return Err(Error::InvalidParameter(format!("emitter {i}: delta = {}, g = {}", e.delta, e.g)));
            }
            for other in &emitters[..i] {
                if other.site == e.site && other.sublattice == e.sublattice {
                    return Err(Error::InvalidParameter(format!("two emitters on site {:?}", e.site)));
                }
            }
        }
        let tables = AxisTables::new(model);
        let mut f = Vec::with_capacity(model.num_cells());
        for i in 0..model.n() {
            for l in 0..model.n() {
                f.push(C64::new(1.0 + tables.cos[i] + tables.cos[l], tables.sin[i] + tables.sin[l]));
            }
        }
        let couplings = emitters
            .iter()
            .map(|e| Coupling {
                sublattice: e.sublattice,
                delta: e.delta,
                weight: e.g / model.n() as f64,
                p1: tables.phases(model, e.site[0]),
                p2: tables.phases(model, e.site[1]),
            })
            .collect();
        Ok(Self { model: *model, emitters: emitters.to_vec(), f, couplings })
    }

    pub fn model(&self) -> &BathModel {
        &self.model
    }

    pub fn emitters(&self) -> &[EmitterSpec] {
        &self.emitters
    }

    /// Hilbert-space dimension `2 N^2 + M`.
    pub fn dimension(&self) -> usize {
        2 * self.model.num_cells() + self.emitters.len()
    }

    /// Upper bound on the spectral radius: `3 + max|Delta| + sum g`.
    pub fn spectral_bound(&self) -> f64 {
        let dmax = self.emitters.iter().map(|e| e.delta.abs()).fold(0.0, f64::max);
        let gsum: f64 = self.emitters.iter().map(|e| e.g).sum();
        3.0 + dmax + gsum
    }

    /// `y <- alpha H x + beta y`.
    pub fn apply_into(&self, x: &SingleExcitationState, y: &mut SingleExcitationState, alpha: f64, beta: f64) {
        let nc = self.model.num_cells();
        let n = self.model.n();
        let (xa, xb) = x.bath_amps_k.split_at(nc);
        let (ya, yb) = y.bath_amps_k.split_at_mut(nc);
        for k in 0..nc {
            let f = self.f[k];
            ya[k] = ya[k] * beta + f * xb[k] * alpha;
            yb[k] = yb[k] * beta + f.conj() * xa[k] * alpha;
        }
        for (j, c) in self.couplings.iter().enumerate() {
            let (xs, ys) = match c.sublattice {
                Sublattice::A => (xa, &mut *ya),
                Sublattice::B => (xb, &mut *yb),
            };
            let ce = x.emitter_amps[j] * (c.weight * alpha);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let p1 = c.p1[i];
                let row = i * n;
                let mut racc = C64::new(0.0, 0.0);
                for l in 0..n {
                    let ph = p1 * c.p2[l];
                    racc += ph * xs[row + l];
                    ys[row + l] += ph.conj() * ce;
                }
                acc += racc;
            }
            y.emitter_amps[j] = y.emitter_amps[j] * beta + (x.emitter_amps[j] * c.delta + acc * c.weight) * alpha;
        }
    }

    pub fn apply(&self, x: &SingleExcitationState) -> SingleExcitationState {
        let mut y = x.zeros_like();
        self.apply_into(x, &mut y, 1.0, 0.0);
        y
    }

    /// `<psi|H|psi>`.
    pub fn energy(&self, state: &SingleExcitationState) -> f64 {
        state.inner(&self.apply(state)).re
    }
}

/// `J_0(x) .. J_kmax(x)` by Miller's backward recurrence.
pub fn bessel_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = kmax.max(x.ceil() as usize) + 50 + (10.0 * x.cbrt()).ceil() as usize;
    let start = start + start % 2;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds order k - 1
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Number of Chebyshev terms needed for a step of phase `x = ||H|| dt`.
fn chebyshev_order(x: f64) -> usize {
    let guess = x.ceil() as usize + 30 + (12.0 * x.cbrt()).ceil() as usize;
    let j = bessel_sequence(x, guess);
    let last = j.iter().rposition(|v| v.abs() > COEFF_CUTOFF).unwrap_or(0);
    (last + 2).min(guess)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Chebyshev expansion of the propagator (default).
    Chebyshev,
    /// Classical RK4 with the given maximum step.
    Rk4 { dt: f64 },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Chebyshev
    }
}

/// Real-space bath populations, row-major over `(n1, n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathPopulation {
    pub n: usize,
    pub time: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl BathPopulation {
    pub fn total(&self) -> f64 {
        self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Emitter amplitudes at each recorded time.
    pub amplitudes: Vec<Vec<C64>>,
    pub snapshots: Vec<BathPopulation>,
    pub max_norm_drift: f64,
}

impl Trajectory {
    /// Amplitude of emitter `j` over time.
    pub fn emitter(&self, j: usize) -> Vec<C64> {
        self.amplitudes.iter().map(|a| a[j]).collect()
    }
}

/// Inverse transform of the bath amplitudes to real space:
/// `a_n = (1/N) sum_k e^{i k . n} a_k`, same for `b`.
pub struct RealSpaceTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    shift: Vec<C64>,
}

impl RealSpaceTransform {
    pub fn new(model: &BathModel) -> Self {
        let n = model.n();
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let lo = model.momentum_indices().start;
        let dk = model.momentum_step();
        let shift = (0..n).map(|x| C64::from_polar(1.0, dk * (lo * x as i64) as f64)).collect();
        Self { n, fft, shift }
    }

    fn transform(&self, k: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut data = k.to_vec();
        let mut scratch = vec![C64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        // rows (second index)
        self.fft.process_with_scratch(&mut data, &mut scratch);
        // columns (first index)
        let mut col = vec![C64::new(0.0, 0.0); n];
        for l in 0..n {
            for i in 0..n {
                col[i] = data[i * n + l];
            }
            self.fft.process_with_scratch(&mut col, &mut scratch);
            for i in 0..n {
                data[i * n + l] = col[i];
            }
        }
        let inv = 1.0 / n as f64;
        for x1 in 0..n {
            for x2 in 0..n {
                data[x1 * n + x2] *= self.shift[x1] * self.shift[x2] * inv;
            }
        }
        data
    }

    /// Real-space amplitudes `(a_n, b_n)`.
    pub fn amplitudes(&self, state: &SingleExcitationState) -> (Vec<C64>, Vec<C64>) {
        let nc = self.n * self.n;
        (self.transform(&state.bath_amps_k[..nc]), self.transform(&state.bath_amps_k[nc..]))
    }

    pub fn populations(&self, state: &SingleExcitationState) -> BathPopulation {
        let (a, b) = self.amplitudes(state);
        BathPopulation {
            n: self.n,
            time: state.time,
            a: a.iter().map(|c| c.norm_sqr()).collect(),
            b: b.iter().map(|c| c.norm_sqr()).collect(),
        }
    }
}

pub fn bath_population_map(state: &SingleExcitationState, model: &BathModel) -> BathPopulation {
    RealSpaceTransform::new(model).populations(state)
}

fn check_times(start: f64, t_target: f64, times: &[f64], what: &str) -> Result<()> {
    if !(t_target >= start) || !t_target.is_finite() {
        return Err(Error::InvalidParameter(format!("target time {t_target} precedes state time {start}")));
    }
    if times.iter().any(|&t| !(t >= start && t <= t_target)) {
        return Err(Error::InvalidParameter(format!("{what} outside [{start}, {t_target}]")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(format!("{what} must be sorted")));
    }
    Ok(())
}

/// Propagates `state` to `t_target` under `e^{-iHt}`, recording emitter
/// amplitudes at `record_times` and bath populations at `snapshot_times`
/// (both sorted, within `[state.time, t_target]`).
pub fn evolve(
    state: &mut SingleExcitationState,
    h: &HamiltonianAction,
    t_target: f64,
    record_times: &[f64],
    snapshot_times: &[f64],
    integrator: Integrator,
) -> Result<Trajectory> {
    if state.emitter_amps.len() != h.emitters.len() || state.bath_amps_k.len() != 2 * h.model.num_cells() {
        return Err(Error::InvalidParameter("state does not match the Hamiltonian".into()));
    }
    check_times(state.time, t_target, record_times, "record times")?;
    check_times(state.time, t_target, snapshot_times, "snapshot times")?;
    let transform = if snapshot_times.is_empty() { None } else { Some(RealSpaceTransform::new(&h.model)) };
    let norm0 = state.norm_sqr();
    let mut traj = Trajectory {
        times: Vec::with_capacity(record_times.len()),
        amplitudes: Vec::with_capacity(record_times.len()),
        snapshots: Vec::new(),
        max_norm_drift: 0.0,
    };
    let mut rec = 0;
    let mut snap = 0;
    loop {
        while rec < record_times.len() && record_times[rec] <= state.time {
            traj.times.push(record_times[rec]);
            traj.amplitudes.push(state.emitter_amps.clone());
            rec += 1;
        }
        while snap < snapshot_times.len() && snapshot_times[snap] <= state.time {
            if let Some(tr) = &transform {
                let mut p = tr.populations(state);
                p.time = snapshot_times[snap];
                traj.snapshots.push(p);
            }
            snap += 1;
        }
        if state.time >= t_target {
            break;
        }
        let mut end = t_target;
        if snap < snapshot_times.len() {
            end = end.min(snapshot_times[snap]);
        }
        let recs_end = record_times[rec..].partition_point(|&t| t <= end);
        let window = &record_times[rec..rec + recs_end];
        match integrator {
            Integrator::Chebyshev => {
                let amps = chebyshev_segment(state, h, end, window)?;
                for (t, a) in window.iter().zip(amps) {
                    traj.times.push(*t);
                    traj.amplitudes.push(a);
                }
                rec += window.len();
            }
            Integrator::Rk4 { dt } => {
                let stop = if rec < record_times.len() { record_times[rec].min(end) } else { end };
                rk4_segment(state, h, stop, dt, norm0)?;
            }
        }
        let drift = (state.norm_sqr() - norm0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > NORM_ABORT {
            return Err(Error::NormDrift { drift, bound: NORM_ABORT });
        }
    }
    Ok(traj)
}

/// Advances to `end` in chunks of bounded phase, returning the emitter
/// amplitudes at the (sorted) times in `window`.
fn chebyshev_segment(
    state: &mut SingleExcitationState,
    h: &HamiltonianAction,
    end: f64,
    window: &[f64],
) -> Result<Vec<Vec<C64>>> {
    let a = h.spectral_bound();
    let mut out = Vec::with_capacity(window.len());
    let mut w = 0;
    while state.time < end {
        let t0 = state.time;
        let t1 = (t0 + CHUNK_PHASE / a).min(end);
        let tau = t1 - t0;
        let order = chebyshev_order(a * tau);
        let k_end = window[w..].partition_point(|&t| t <= t1);
        let inner = &window[w..w + k_end];
        // emitter components of T_k(H/a) psi for every order
        let mut moments: Vec<Vec<C64>> = Vec::with_capacity(order);
        let coeffs = bessel_sequence(a * tau, order);
        let mut result = state.clone();
        result.scale(C64::new(coeffs[0], 0.0));
        let mut prev = state.clone();
        moments.push(prev.emitter_amps.clone());
        let mut cur = h.apply(&prev);
        cur.scale(C64::new(1.0 / a, 0.0));
        let mut phase = -C64::i();
        for k in 1..order {
            moments.push(cur.emitter_amps.clone());
            result.axpy(phase * (2.0 * coeffs[k]), &cur);
            if k + 1 < order {
                // prev <- 2 (H/a) cur - prev, then swap
                h.apply_into(&cur, &mut prev, 2.0 / a, -1.0);
                std::mem::swap(&mut prev, &mut cur);
            }
            phase *= -C64::i();
        }
        for &t in inner {
            let c = bessel_sequence(a * (t - t0), order);
            let mut amp = vec![C64::new(0.0, 0.0); state.emitter_amps.len()];
            let mut ph = C64::new(1.0, 0.0);
            for (k, m) in moments.iter().enumerate() {
                let w = if k == 0 { 1.0 } else { 2.0 };
                for (x, y) in amp.iter_mut().zip(m) {
                    *x += ph * (w * c[k]) * y;
                }
                ph *= -C64::i();
            }
            out.push(amp);
        }
        w += k_end;
        result.time = t1;
        *state = result;
    }
    Ok(out)
}

fn rk4_segment(state: &mut SingleExcitationState, h: &HamiltonianAction, end: f64, dt_max: f64, norm0: f64) -> Result<()> {
    if !(dt_max > 0.0) {
        return Err(Error::InvalidParameter(format!("RK4 step {dt_max}")));
    }
    let mut steps = 0usize;
    let minus_i = -C64::i();
    while state.time < end {
        let dt = dt_max.min(end - state.time);
        let mut k1 = h.apply(state);
        k1.scale(minus_i);
        let mut tmp = state.clone();
        tmp.axpy(C64::new(dt / 2.0, 0.0), &k1);
        let mut k2 = h.apply(&tmp);
        k2.scale(minus_i);
        let mut tmp = state.clone();
        tmp.axpy(C64::new(dt / 2.0, 0.0), &k2);
        let mut k3 = h.apply(&tmp);
        k3.scale(minus_i);
        let mut tmp = state.clone();
        tmp.axpy(C64::new(dt, 0.0), &k3);
        let mut k4 = h.apply(&tmp);
        k4.scale(minus_i);
        state.axpy(C64::new(dt / 6.0, 0.0), &k1);
        state.axpy(C64::new(dt / 3.0, 0.0), &k2);
        state.axpy(C64::new(dt / 3.0, 0.0), &k3);
        state.axpy(C64::new(dt / 6.0, 0.0), &k4);
        state.time = if end - state.time <= dt { end } else { state.time + dt };
        steps += 1;
        if steps % 100 == 0 {
            let drift = (state.norm_sqr() - norm0).abs();
            if drift > NORM_ABORT {
                return Err(Error::NormDrift { drift, bound: NORM_ABORT });
            }
        }
    }
    Ok(())
}

/// `C_e(t)` for one emitter initially excited, bath in vacuum.
pub fn evolve_single(model: &BathModel, emitter: EmitterSpec, times: &[f64]) -> Result<Vec<C64>> {
    let h = HamiltonianAction::new(model, &[emitter])?;
    let mut state = SingleExcitationState::excited(model, 1, 0)?;
    let t_end = times.last().copied().unwrap_or(0.0);
    let traj = evolve(&mut state, &h, t_end, times, &[], Integrator::Chebyshev)?;
    Ok(traj.emitter(0))
}

/// `(C_1(t), C_2(t))` for two emitters starting in the given superposition.
pub fn evolve_two_emitters(
    model: &BathModel,
    e1: EmitterSpec,
    e2: EmitterSpec,
    initial: [C64; 2],
    times: &[f64],
) -> Result<(Vec<C64>, Vec<C64>)> {
    let h = HamiltonianAction::new(model, &[e1, e2])?;
    let mut state = SingleExcitationState::with_emitter_amplitudes(model, &initial);
    let t_end = times.last().copied().unwrap_or(0.0);
    let traj = evolve(&mut state, &h, t_end, times, &[], Integrator::Chebyshev)?;
    Ok((traj.emitter(0), traj.emitter(1)))
}

/// Populations weighted by pure loss at rate `Gamma_loss` on emitters and
/// bath alike.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeighted {
    pub time: f64,
    pub emitters: Vec<f64>,
    pub bath: f64,
    pub ground: f64,
}

impl LossWeighted {
    pub fn trace(&self) -> f64 {
        self.emitters.iter().sum::<f64>() + self.bath + self.ground
    }
}

/// `rho(t) = e^{-Gamma t} |Psi(t)><Psi(t)| + (1 - e^{-Gamma t}) |g><g|`,
/// reported through its diagonal weights. The pure state is assumed
/// normalized, so the bath weight is `1 - sum |C_j|^2`.
pub fn apply_losses(times: &[f64], amplitudes: &[Vec<C64>], loss: LossModel) -> Result<Vec<LossWeighted>> {
    if times.len() != amplitudes.len() {
        return Err(Error::InvalidParameter("times and amplitudes differ in length".into()));
    }
    Ok(times
        .iter()
        .zip(amplitudes)
        .map(|(&t, amps)| {
            let w = (-loss.gamma_loss * t).exp();
            let pops: Vec<f64> = amps.iter().map(|c| c.norm_sqr()).collect();
            let excited: f64 = pops.iter().sum();
            LossWeighted {
                time: t,
                emitters: pops.iter().map(|p| w * p).collect(),
                bath: w * (1.0 - excited).max(0.0),
                ground: 1.0 - w,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_j, BesselOrder};
    use proptest::prelude::*;

    fn model(n: usize) -> BathModel {
        BathModel::new(n).unwrap()
    }

    #[test]
    fn bessel_sequence_matches_direct_evaluation() {
        for &x in &[0.3, 1.0, 7.5, 20.0, 150.0, 999.0] {
            let j = bessel_sequence(x, x as usize + 40);
            let j0 = bessel_j(BesselOrder::Zero, x).unwrap();
            let j1 = bessel_j(BesselOrder::One, x).unwrap();
            assert!((j[0] - j0).abs() < 1e-13, "x = {x}: {} vs {j0}", j[0]);
            assert!((j[1] - j1).abs() < 1e-13, "x = {x}: {} vs {j1}", j[1]);
            // three-term recurrence away from the start
            for k in 1..j.len() - 1 {
                let r = j[k - 1] + j[k + 1] - 2.0 * k as f64 / x * j[k];
                assert!(r.abs() < 1e-12, "x = {x}, k = {k}");
            }
        }
        assert_eq!(bessel_sequence(0.0, 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn decoupled_emitter_rotates() {
        let m = model(4);
        let e = EmitterSpec::new([1, 2], Sublattice::A, 0.7, 0.0);
        let times = [0.0, 1.0, 10.0, 123.4];
        let c = evolve_single(&m, e, &times).unwrap();
        for (t, c) in times.iter().zip(c) {
            assert!((c - (-C64::i() * 0.7 * t).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_emitters() {
        let m = model(4);
        assert!(HamiltonianAction::new(&m, &[]).is_err());
        assert!(HamiltonianAction::new(&m, &[EmitterSpec::new([4, 0], Sublattice::A, 0.0, 0.1)]).is_err());
        let e = EmitterSpec::new([1, 1], Sublattice::B, 0.0, 0.1);
        assert!(HamiltonianAction::new(&m, &[e, e]).is_err());
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let m = model(5);
        let h = HamiltonianAction::new(
            &m,
            &[EmitterSpec::new([1, 3], Sublattice::A, 0.4, 0.3), EmitterSpec::new([2, 0], Sublattice::B, -0.2, 0.5)],
        )
        .unwrap();
        let rand_state = |seed: u64| {
            let mut s = SingleExcitationState::with_emitter_amplitudes(&m, &[C64::new(0.0, 0.0); 2]);
            let mut x = seed;
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            for v in s.emitter_amps.iter_mut().chain(s.bath_amps_k.iter_mut()) {
                *v = C64::new(next(), next());
            }
            s
        };
        let (phi, psi) = (rand_state(1), rand_state(2));
        let a = phi.inner(&h.apply(&psi));
        let b = psi.inner(&h.apply(&phi)).conj();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn chebyshev_and_rk4_agree() {
        let m = model(6);
        let e = EmitterSpec::new([3, 3], Sublattice::A, 0.5, 0.4);
        let h = HamiltonianAction::new(&m, &[e]).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let mut s1 = SingleExcitationState::excited(&m, 1, 0).unwrap();
        let a = evolve(&mut s1, &h, 10.0, &times, &[], Integrator::Chebyshev).unwrap();
        let mut s2 = SingleExcitationState::excited(&m, 1, 0).unwrap();
        let b = evolve(&mut s2, &h, 10.0, &times, &[], Integrator::Rk4 { dt: 0.002 }).unwrap();
        for (x, y) in a.emitter(0).iter().zip(b.emitter(0)) {
            assert!((x - y).norm() < 1e-9);
        }
        assert!(a.max_norm_drift < 1e-12);
    }

    #[test]
    fn records_inside_and_across_chunks() {
        // a long horizon spans several expansions; records must not depend on chunking
        let m = model(4);
        let e = EmitterSpec::new([0, 0], Sublattice::B, -1.0, 0.6);
        let h = HamiltonianAction::new(&m, &[e]).unwrap();
        let times: Vec<f64> = (0..=30).map(|i| i as f64 * 37.0).collect();
        let mut s = SingleExcitationState::excited(&m, 1, 0).unwrap();
        let full = evolve(&mut s, &h, 1110.0, &times, &[], Integrator::Chebyshev).unwrap();
        for (i, &t) in times.iter().enumerate().skip(1) {
            let mut s = SingleExcitationState::excited(&m, 1, 0).unwrap();
            let one = evolve(&mut s, &h, t, &[t], &[], Integrator::Chebyshev).unwrap();
            assert!((one.amplitudes[0][0] - full.amplitudes[i][0]).norm() < 1e-10);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn population_map_conserves_weight() {
        let m = model(7);
        let e = EmitterSpec::new([3, 3], Sublattice::A, 0.0, 0.5);
        let h = HamiltonianAction::new(&m, &[e]).unwrap();
        let mut s = SingleExcitationState::excited(&m, 1, 0).unwrap();
        let zero = bath_population_map(&s, &m);
        assert_eq!(zero.total(), 0.0);
        let tr = evolve(&mut s, &h, 5.0, &[5.0], &[2.0, 5.0], Integrator::Chebyshev).unwrap();
        assert_eq!(tr.snapshots.len(), 2);
        let last = &tr.snapshots[1];
        assert!((last.total() - (1.0 - s.emitter_weight())).abs() < 1e-12);
    }

    #[test]
    fn energy_is_conserved() {
        let m = model(8);
        let e = EmitterSpec::new([4, 4], Sublattice::A, 1.0, 0.6);
        let h = HamiltonianAction::new(&m, &[e]).unwrap();
        let mut s = SingleExcitationState::excited(&m, 1, 0).unwrap();
        let e0 = h.energy(&s);
        evolve(&mut s, &h, 400.0, &[], &[], Integrator::Chebyshev).unwrap();
        assert!((h.energy(&s) - e0).abs() < 1e-8 * e0.abs());
    }

    #[test]
    fn losses_preserve_trace() {
        let times = [0.0, 1.0, 5.0];
        let amps = vec![
            vec![C64::new(1.0, 0.0)],
            vec![C64::new(0.6, 0.2)],
            vec![C64::new(0.1, -0.3)],
        ];
        let w = apply_losses(&times, &amps, LossModel::new(0.3).unwrap()).unwrap();
        for x in &w {
            assert!((x.trace() - 1.0).abs() < 1e-15);
        }
        let id = apply_losses(&times, &amps, LossModel::new(0.0).unwrap()).unwrap();
        assert!((id[1].emitters[0] - 0.4).abs() < 1e-15);
        assert!(LossModel::new(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn bessel_sequence_is_normalized(x in 0.01f64..500.0) {
            let j = bessel_sequence(x, chebyshev_order(x));
            let s: f64 = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
