//! Free-form runs: one function per command, each returning its tables.
//! Inputs are converted to units of `J` on the way in and back on the way out.

use std::f64::consts::FRAC_1_SQRT_2;
use std::thread;

use honeycomb_bath::collective::solve_collective_pole;
use honeycomb_bath::dynamics::{
    apply_losses, default_emitter_site, evolve, wrap_site, BathPopulation, EmitterSpec, HamiltonianAction, Integrator,
    LossModel, SingleExcitationState, Sublattice, Trajectory, COEFF_CUTOFF, NORM_ABORT,
};
use honeycomb_bath::lattice::BathModel;
use honeycomb_bath::resolvent::{find_poles, PoleKind};
use honeycomb_bath::selfenergy::{lamb_shift_and_rate, markov_pole, SublatticePair};
use honeycomb_bath::{Error, C64};

use crate::config::{Command, Initial, RunConfig, Sublattices, SweepParam, Task};
use crate::error::CliError;
use crate::table::{format_float, ResultTable};
use crate::Output;

pub type Tables = Result<Vec<ResultTable>, CliError>;

/// Conversion between the caller's energy unit and units of `J`.
#[derive(Debug, Clone, Copy)]
pub struct Units {
    pub j: f64,
}

impl Units {
    pub fn energy_in(&self, e: f64) -> f64 {
        e / self.j
    }

    pub fn energy_out(&self, e: f64) -> f64 {
        e * self.j
    }

    pub fn time_in(&self, t: f64) -> f64 {
        t * self.j
    }

    pub fn time_out(&self, t: f64) -> f64 {
        t / self.j
    }
}

/// `0, dt, 2 dt, ...` up to and including `t_max` (within rounding).
pub fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let count = (t_max / dt + 1e-9).floor() as usize;
    (0..=count).map(|i| dt * i as f64).collect()
}

pub fn base_metadata(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut meta = cfg.echo();
    meta.push(("version".into(), env!("CARGO_PKG_VERSION").into()));
    meta
}

fn dynamics_metadata(cfg: &RunConfig, traj: &Trajectory) -> Vec<(String, String)> {
    let mut meta = base_metadata(cfg);
    meta.push(("integrator".into(), "chebyshev".into()));
    meta.push(("chebyshev_coefficient_cutoff".into(), format_float(COEFF_CUTOFF)));
    meta.push(("norm_abort".into(), format_float(NORM_ABORT)));
    meta.push(("max_norm_drift".into(), format_float(traj.max_norm_drift)));
    meta
}

pub fn sublattice_pair(s: Sublattices) -> (Sublattice, Sublattice) {
    match s {
        Sublattices::Aa => (Sublattice::A, Sublattice::A),
        Sublattices::Ab => (Sublattice::A, Sublattice::B),
        Sublattices::Bb => (Sublattice::B, Sublattice::B),
    }
}

pub fn beta(s: Sublattices) -> SublatticePair {
    match s {
        Sublattices::Aa => SublatticePair::AA,
        Sublattices::Ab => SublatticePair::AB,
        Sublattices::Bb => SublatticePair::BB,
    }
}

/// Runs the emitters from the given initial amplitudes, recording on the
/// configured time grid.
fn propagate(
    cfg: &RunConfig,
    emitters: &[EmitterSpec],
    initial: &[C64],
) -> Result<(Vec<f64>, Trajectory), CliError> {
    let u = Units { j: cfg.j };
    let model = BathModel::new(cfg.n)?;
    let h = HamiltonianAction::new(&model, emitters)?;
    let mut state = SingleExcitationState::with_emitter_amplitudes(&model, initial);
    let times = time_grid(cfg.t_max, cfg.dt_record);
    let internal: Vec<f64> = times.iter().map(|&t| u.time_in(t)).collect();
    let snaps: Vec<f64> = cfg.snapshots.iter().map(|&t| u.time_in(t)).collect();
    let traj = evolve(&mut state, &h, u.time_in(cfg.t_max), &internal, &snaps, Integrator::Chebyshev)?;
    Ok((times, traj))
}

fn snapshot_tables(cfg: &RunConfig, traj: &Trajectory) -> Vec<ResultTable> {
    let u = Units { j: cfg.j };
    traj.snapshots
        .iter()
        .enumerate()
        .map(|(i, p): (usize, &BathPopulation)| {
            let n = p.n;
            let n1: Vec<f64> = (0..n * n).map(|c| (c / n) as f64).collect();
            let n2: Vec<f64> = (0..n * n).map(|c| (c % n) as f64).collect();
            ResultTable::new(format!("snapshot{i}"), base_metadata(cfg))
                .meta("snapshot_time", format_float(u.time_out(p.time)))
                .num("n1", n1)
                .num("n2", n2)
                .num("pop_A", p.a.clone())
                .num("pop_B", p.b.clone())
        })
        .collect()
}

pub fn single_emitter(cfg: &RunConfig) -> Result<EmitterSpec, CliError> {
    let u = Units { j: cfg.j };
    let model = BathModel::new(cfg.n)?;
    let (sub, _) = sublattice_pair(cfg.sublattices);
    Ok(EmitterSpec::new(default_emitter_site(&model), sub, u.energy_in(cfg.delta), u.energy_in(cfg.g)))
}

pub fn emitter_pair(cfg: &RunConfig) -> Result<[EmitterSpec; 2], CliError> {
    let u = Units { j: cfg.j };
    let model = BathModel::new(cfg.n)?;
    let (s1, s2) = sublattice_pair(cfg.sublattices);
    let site = default_emitter_site(&model);
    let other = wrap_site(&model, [site[0] + cfg.n12[0], site[1] + cfg.n12[1]]);
    let (delta, g) = (u.energy_in(cfg.delta), u.energy_in(cfg.g));
    Ok([EmitterSpec::new(site, s1, delta, g), EmitterSpec::new(other, s2, delta, g)])
}

fn initial_pair(initial: Initial) -> [C64; 2] {
    let s = FRAC_1_SQRT_2;
    match initial {
        Initial::First => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        Initial::Symmetric => [C64::new(s, 0.0), C64::new(s, 0.0)],
        Initial::Antisymmetric => [C64::new(s, 0.0), C64::new(-s, 0.0)],
    }
}

pub fn dynamics(cfg: &RunConfig) -> Tables {
    let e = single_emitter(cfg)?;
    let (times, traj) = propagate(cfg, &[e], &[C64::new(1.0, 0.0)])?;
    let ce = traj.emitter(0);
    let mut tables = vec![ResultTable::new("dynamics", dynamics_metadata(cfg, &traj))
        .meta("emitter_site", format!("{},{}", e.site[0], e.site[1]))
        .num("t", times)
        .num("re_Ce", ce.iter().map(|c| c.re).collect())
        .num("im_Ce", ce.iter().map(|c| c.im).collect())
        .num("pop_e", ce.iter().map(|c| c.norm_sqr()).collect())];
    tables.extend(snapshot_tables(cfg, &traj));
    Ok(tables)
}

/// Lamb shift and decay rate from `Sigma_e(E + i0+)` along the scan;
/// non-analytic energies give NaN.
pub fn self_energy_columns(energies: &[f64], g: f64, u: Units) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut shift = Vec::with_capacity(energies.len());
    let mut gamma = Vec::with_capacity(energies.len());
    for &e in energies {
        match lamb_shift_and_rate(u.energy_in(e), u.energy_in(g)) {
            Ok((s, r)) => {
                shift.push(u.energy_out(s));
                gamma.push(u.energy_out(r));
            }
            Err(Error::NonAnalytic { .. }) => {
                shift.push(f64::NAN);
                gamma.push(f64::NAN);
            }
            Err(err) => return Err(err.into()),
        }
    }
    Ok((shift, gamma))
}

pub fn self_energy(cfg: &RunConfig) -> Tables {
    let u = Units { j: cfg.j };
    let energies = cfg.scan.points();
    let (shift, gamma) = self_energy_columns(&energies, cfg.g, u)?;
    Ok(vec![ResultTable::new("self_energy", base_metadata(cfg))
        .meta("boundary", "exact E + i0+ on the physical sheet")
        .num("E", energies)
        .num("lamb_shift", shift)
        .num("gamma", gamma)])
}

pub fn poles(cfg: &RunConfig) -> Tables {
    let u = Units { j: cfg.j };
    let (delta, g) = (u.energy_in(cfg.delta), u.energy_in(cfg.g));
    let found = find_poles(delta, g)?;
    let mut meta = base_metadata(cfg);
    match markov_pole(delta, g) {
        Ok(markov) => {
            meta.push(("markov_status".into(), format!("{:?}", markov.status)));
            meta.push(("markov_re_z".into(), format_float(u.energy_out(markov.z.re))));
            meta.push(("markov_im_z".into(), format_float(u.energy_out(markov.z.im))));
        }
        Err(Error::NonAnalytic { .. }) => meta.push(("markov_status".into(), "NonAnalytic".into())),
        Err(e) => return Err(e.into()),
    }
    let kind = |k: PoleKind| match k {
        PoleKind::UpperBoundState => "upper_bound_state",
        PoleKind::LowerBoundState => "lower_bound_state",
        PoleKind::Unstable => "unstable",
    };
    Ok(vec![ResultTable::new("poles", meta)
        .text("kind", found.iter().map(|p| kind(p.kind).to_string()).collect())
        .text("sheet", found.iter().map(|p| p.sheet.to_string()).collect())
        .num("re_z", found.iter().map(|p| u.energy_out(p.z.re)).collect())
        .num("im_z", found.iter().map(|p| u.energy_out(p.z.im)).collect())
        .num("re_residue", found.iter().map(|p| p.residue.re).collect())
        .num("im_residue", found.iter().map(|p| p.residue.im).collect())])
}

fn collective_metadata(cfg: &RunConfig, meta: &mut Vec<(String, String)>) -> Result<(), CliError> {
    let model = BathModel::new(cfg.n)?;
    if cfg.delta != 0.0 || model.has_dirac_on_grid() {
        meta.push(("collective_pole".into(), "not computed (needs delta = 0 and N not a multiple of 3)".into()));
        return Ok(());
    }
    let u = Units { j: cfg.j };
    let p = solve_collective_pole(&model, cfg.n12, beta(cfg.sublattices), u.energy_in(cfg.g))?;
    meta.push(("z_plus".into(), format_float(u.energy_out(p.z_plus.re))));
    meta.push(("z_minus".into(), format_float(u.energy_out(p.z_minus.re))));
    meta.push(("r_plus".into(), format_float(p.r_plus.re)));
    meta.push(("r_minus".into(), format_float(p.r_minus.re)));
    Ok(())
}

fn two_emitter_run(cfg: &RunConfig) -> Result<(Vec<f64>, Trajectory, Vec<(String, String)>), CliError> {
    let pair = emitter_pair(cfg)?;
    let (times, traj) = propagate(cfg, &pair, &initial_pair(cfg.initial))?;
    let mut meta = dynamics_metadata(cfg, &traj);
    meta.push(("emitter_sites".into(), format!(
        "{},{};{},{}",
        pair[0].site[0], pair[0].site[1], pair[1].site[0], pair[1].site[1]
    )));
    collective_metadata(cfg, &mut meta)?;
    Ok((times, traj, meta))
}

pub fn two_emitter(cfg: &RunConfig) -> Tables {
    let (times, traj, meta) = two_emitter_run(cfg)?;
    let (c1, c2) = (traj.emitter(0), traj.emitter(1));
    let mut tables = vec![ResultTable::new("two_emitter", meta)
        .num("t", times)
        .num("re_C1", c1.iter().map(|c| c.re).collect())
        .num("im_C1", c1.iter().map(|c| c.im).collect())
        .num("re_C2", c2.iter().map(|c| c.re).collect())
        .num("im_C2", c2.iter().map(|c| c.im).collect())
        .num("pop_1", c1.iter().map(|c| c.norm_sqr()).collect())
        .num("pop_2", c2.iter().map(|c| c.norm_sqr()).collect())];
    tables.extend(snapshot_tables(cfg, &traj));
    Ok(tables)
}

pub fn losses(cfg: &RunConfig) -> Tables {
    let u = Units { j: cfg.j };
    let (times, traj, meta) = two_emitter_run(cfg)?;
    let internal: Vec<f64> = times.iter().map(|&t| u.time_in(t)).collect();
    let weighted = apply_losses(&internal, &traj.amplitudes, LossModel::new(u.energy_in(cfg.gamma_loss))?)?;
    Ok(vec![ResultTable::new("losses", meta)
        .num("t", times)
        .num("pop_1", weighted.iter().map(|w| w.emitters[0]).collect())
        .num("pop_2", weighted.iter().map(|w| w.emitters[1]).collect())
        .num("bath", weighted.iter().map(|w| w.bath).collect())
        .num("ground", weighted.iter().map(|w| w.ground).collect())
        .num("trace", weighted.iter().map(|w| w.trace()).collect())])
}

/// Order-preserving parallel map over a fixed number of workers.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    if workers <= 1 || items.len() < 2 {
        return items.iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let chunk = items.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                let f = &f;
                s.spawn(move || part.iter().enumerate().map(|(i, x)| f(c * chunk + i, x)).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Independent single-emitter runs, one file each, indexed by a manifest.
pub fn sweep(cfg: &RunConfig, out: &Output) -> Tables {
    let runs: Vec<RunConfig> = cfg
        .values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.task = Task::Command(Command::Dynamics);
            match cfg.sweep_param {
                SweepParam::G => c.g = v,
                SweepParam::Delta => c.delta = v,
                SweepParam::N => c.n = v as usize,
            }
            c
        })
        .collect();
    let results = parallel_map(&runs, cfg.workers, |i, run| -> Result<String, CliError> {
        let tables = dynamics(run)?;
        let mut first = tables.into_iter().next().expect("dynamics table");
        first.name = format!("run{i}");
        out.write_secondary(&first, cfg.format)
    });
    let mut files = Vec::new();
    for r in results {
        files.push(r?);
    }
    Ok(vec![ResultTable::new("manifest", base_metadata(cfg))
        .num("index", (0..runs.len()).map(|i| i as f64).collect())
        .num("value", cfg.values.clone())
        .text("file", files)])
}
