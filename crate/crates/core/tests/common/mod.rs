//! Dense real-space oracle shared by the integration tests.

#![allow(dead_code)]

use honeycomb_bath::dynamics::{EmitterSpec, Sublattice};
use honeycomb_bath::lattice::BathModel;
use honeycomb_bath::C64;

pub struct Dense {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] += v;
    }

    pub fn matmul(&self, o: &Dense) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * o.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: C64) -> Dense {
        Dense { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn norm1(&self) -> f64 {
        (0..self.dim).map(|c| (0..self.dim).map(|r| self.at(r, c).norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `e^{A}` by scaling and squaring with a Taylor series.
    pub fn expm(&self) -> Dense {
        let norm = self.norm1();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = self.scaled(C64::new(0.5f64.powi(squarings as i32), 0.0));
        let mut term = Dense::identity(self.dim);
        let mut sum = Dense::identity(self.dim);
        for k in 1..30 {
            term = term.matmul(&a).scaled(C64::new(1.0 / k as f64, 0.0));
            for (s, t) in sum.data.iter_mut().zip(&term.data) {
                *s += t;
            }
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim).map(|r| (0..self.dim).map(|c| self.at(r, c) * v[c]).sum()).collect()
    }
}

/// Real-space Hamiltonian in the basis (emitters, A sites, B sites), sites
/// row-major over `(n1, n2)`: each A site hops to the B sites at
/// `n`, `n + (1, 0)`, `n + (0, 1)` with amplitude `J = 1`.
pub fn real_space_hamiltonian(n: usize, emitters: &[EmitterSpec]) -> Dense {
    let m = emitters.len();
    let cells = n * n;
    let mut h = Dense::zeros(m + 2 * cells);
    let a = |x: usize, y: usize| m + (x % n) * n + (y % n);
    let b = |x: usize, y: usize| m + cells + (x % n) * n + (y % n);
    let one = C64::new(1.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            for (bx, by) in [(x, y), (x + 1, y), (x, y + 1)] {
                h.add_to(a(x, y), b(bx, by), one);
                h.add_to(b(bx, by), a(x, y), one);
            }
        }
    }
    for (j, e) in emitters.iter().enumerate() {
        let (x, y) = (e.site[0] as usize, e.site[1] as usize);
        let site = match e.sublattice {
            Sublattice::A => a(x, y),
            Sublattice::B => b(x, y),
        };
        h.add_to(j, j, C64::new(e.delta, 0.0));
        h.add_to(j, site, C64::new(e.g, 0.0));
        h.add_to(site, j, C64::new(e.g, 0.0));
    }
    h
}

/// `e^{-iHt} psi0` for the dense real-space Hamiltonian.
pub fn propagate_dense(h: &Dense, psi0: &[C64], t: f64) -> Vec<C64> {
    h.scaled(C64::new(0.0, -t)).expm().apply(psi0)
}

/// Window average of `|C_e(t)|^2` for an emitter at `Delta = 0`, built from
/// the discrete eigenstates of the finite lattice. Degenerate `|f(k)|` shells
/// couple through a single bright mode, so the emitter weights follow from
/// the roots of `z = (g^2/N^2) sum_s mu_s z / (z^2 - eps_s^2)`; only the
/// lowest shells carry appreciable weight.
pub fn spectral_window_average(model: &BathModel, g: f64, times: &[f64]) -> f64 {
    let n = model.n();
    let dk = 2.0 * std::f64::consts::PI / n as f64;
    let lo = -((n / 2) as i64);
    let mut eps = Vec::with_capacity(n * n);
    for m1 in lo..lo + n as i64 {
        for m2 in lo..lo + n as i64 {
            let (k1, k2) = (dk * m1 as f64, dk * m2 as f64);
            eps.push(C64::new(1.0 + k1.cos() + k2.cos(), k1.sin() + k2.sin()).norm());
        }
    }
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut shells: Vec<(f64, f64)> = Vec::new();
    for e in eps {
        match shells.last_mut() {
            Some(s) if e - s.0 < 1e-11 => s.1 += 1.0,
            _ => shells.push((e, 1.0)),
        }
    }
    let c = g * g / (n * n) as f64;
    let sigma = |z: f64| -> (f64, f64) {
        let (mut s, mut d) = (0.0, 0.0);
        for &(e, mu) in &shells {
            let den = z * z - e * e;
            s += mu * z / den;
            d -= mu * (z * z + e * e) / (den * den);
        }
        (c * s, c * d)
    };
    let mut roots = vec![(0.0, 1.0 / (1.0 - sigma(0.0).1))];
    for w in shells.windows(2).take(400) {
        let (mut a, mut b) = (w[0].0 * (1.0 + 1e-13), w[1].0 * (1.0 - 1e-13));
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid - sigma(mid).0 > 0.0 { b = mid } else { a = mid }
        }
        let z = 0.5 * (a + b);
        roots.push((z, 1.0 / (1.0 - sigma(z).1)));
    }
    let total: f64 = times
        .iter()
        .map(|&t| {
            let amp = roots[0].1 + roots[1..].iter().map(|&(z, w)| 2.0 * w * (z * t).cos()).sum::<f64>();
            amp * amp
        })
        .sum();
    total / times.len() as f64
}
