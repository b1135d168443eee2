//! Executes a resolved [`Scenario`]: builds every grid point, evaluates the
//! points on a rayon pool, and merges rows in grid order.

use std::f64::consts::PI;
use std::fmt;

use anyhow::{bail, Context, Result};
use autostab_core::dynamics::{
    evolve_schedule_with, evolve_with, fit_time_constant, steady_state, DriveSchedule, FitDirection, IntegratorConfig,
    Liouvillian, Trajectory,
};
use autostab_core::hilbert::{partial_trace, ComplexOperator, DensityMatrix, SpaceLayout, Subsystem};
use autostab_core::model::{
    build_lindblad, build_qubit_block, even_parity_drives, odd_parity_drives, plan_stabilization, DriveSet,
    GapAssignment, NoiseSpec, SidebandColor,
};
use autostab_core::targets::{
    detuning_for_angle, dressed_parity_state, dressing_angle, phi_theta, psi_theta, rabi_dressed_state,
    state_metrics, StabilizationTarget, StateMetrics,
};
use autostab_core::tomography::{default_settings, reconstruct, simulate_tomography_with, trial_rng, TomographySettings};
use autostab_core::units::{deg_to_rad, mhz_to_angular, rad_to_deg};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytic::psi_rate_model_fidelity;
use crate::config::{BellDrives, Evaluation, Parity, QqColor, QrColors, Scenario, ScenarioKind};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            // Shortest round-trip form, switching to exponent notation for
            // very small or large magnitudes.
            Cell::Num(v) => write!(f, "{v:?}"),
        }
    }
}

type Row = Vec<Cell>;

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column; text cells are skipped.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name).with_context(|| format!("no column {name}"))?;
        Ok(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn texts(&self, name: &str) -> Result<Vec<String>> {
        let i = self.column_index(name).with_context(|| format!("no column {name}"))?;
        Ok(self.rows.iter().map(|r| r[i].to_string()).collect())
    }
}

/// Worst-case numerical hygiene over every state a run produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evolutions: usize,
    pub steady_states: usize,
    pub max_trace_error: f64,
    pub min_eigenvalue: Option<f64>,
    pub max_generator_residual: Option<f64>,
    pub max_step_halving_drift: Option<f64>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Diagnostics {
    pub fn merge(&mut self, o: &Diagnostics) {
        self.evolutions += o.evolutions;
        self.steady_states += o.steady_states;
        self.max_trace_error = self.max_trace_error.max(o.max_trace_error);
        self.min_eigenvalue = match (self.min_eigenvalue, o.min_eigenvalue) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        self.max_generator_residual = max_opt(self.max_generator_residual, o.max_generator_residual);
        self.max_step_halving_drift = max_opt(self.max_step_halving_drift, o.max_step_halving_drift);
    }

    fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            evolutions: 1,
            max_trace_error: t.max_trace_error(),
            min_eigenvalue: Some(t.min_eigenvalue()),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub point: String,
    pub message: String,
}

/// An x/y series written as a plot-data file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub scenario: Scenario,
    pub table: Table,
    pub plots: Vec<PlotSeries>,
    /// Additional CSV files as (file name, contents).
    pub files: Vec<(String, String)>,
    pub metrics: Map<String, Value>,
    pub diagnostics: Diagnostics,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

const QUBITS: [Subsystem; 2] = [Subsystem::Q1, Subsystem::Q2];

pub fn run(scenario: &Scenario, opts: RunOptions) -> Result<RunResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.workers {
        if k == 0 {
            bail!("--workers must be at least 1");
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().context("starting the worker pool")?;
    let ctx = Ctx {
        layout: SpaceLayout::with_resonator_dim(scenario.resonator_dim)?,
        halving: scenario.numerics.step_halving_check,
        s: scenario,
    };
    pool.install(|| match scenario.kind {
        ScenarioKind::TimeDomain => time_domain(&ctx),
        ScenarioKind::ThetaSpectroscopy => theta_spectroscopy(&ctx),
        ScenarioKind::ParitySwitch => parity_switch(&ctx),
        ScenarioKind::TphiSweep => tphi_sweep(&ctx),
        ScenarioKind::KappaSweep => kappa_sweep(&ctx),
        ScenarioKind::OmegaKappaMap => omega_kappa_map(&ctx),
        ScenarioKind::DressedParitySweep => dressed_parity_sweep(&ctx),
        ScenarioKind::RabiDressedMap => rabi_dressed_map(&ctx),
        ScenarioKind::RateModelCompare => rate_model_compare(&ctx),
    })
}

struct Ctx<'a> {
    s: &'a Scenario,
    layout: SpaceLayout,
    halving: bool,
}

/// Qubit-pair state reached under one Hamiltonian, with hygiene numbers.
struct Evaluated {
    qubits: DensityMatrix,
    diag: Diagnostics,
}

fn trajectory_drift(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states.iter().zip(&b.states).map(|(x, y)| x.matrix().max_abs_diff(y.matrix())).fold(0.0, f64::max)
}

impl Ctx<'_> {
    fn evaluate(&self, h: &ComplexOperator, noise: &NoiseSpec, eval: Evaluation) -> Result<Evaluated> {
        let problem = build_lindblad(h, noise)?;
        match eval {
            Evaluation::SteadyState => {
                let rho = steady_state(&problem)?;
                let residual = Liouvillian::new(&problem).residual(&rho);
                Ok(Evaluated {
                    qubits: partial_trace(&rho, &QUBITS)?,
                    diag: Diagnostics {
                        steady_states: 1,
                        max_trace_error: (rho.trace().re - 1.0).abs(),
                        min_eigenvalue: Some(rho.min_eigenvalue()),
                        max_generator_residual: Some(residual),
                        ..Diagnostics::default()
                    },
                })
            }
            Evaluation::AtTime { at_us } => {
                let (traj, diag) = self.evolve(&problem, &[at_us])?;
                Ok(Evaluated { qubits: partial_trace(traj.last().expect("one state"), &QUBITS)?, diag })
            }
        }
    }

    fn evolve(
        &self,
        problem: &autostab_core::model::LindbladProblem,
        grid: &[f64],
    ) -> Result<(Trajectory, Diagnostics)> {
        let rho0 = DensityMatrix::ground(self.layout.clone());
        let cfg = IntegratorConfig::default();
        let traj = evolve_with(problem, &rho0, grid, cfg)?;
        let mut diag = Diagnostics::from_trajectory(&traj);
        if self.halving {
            let fine = evolve_with(problem, &rho0, grid, cfg.halved())?;
            diag.max_step_halving_drift = Some(trajectory_drift(&traj, &fine));
        }
        Ok((traj, diag))
    }

    fn bell(&self, parity: Parity, theta: f64) -> Result<(DriveSet, StabilizationTarget)> {
        bell_system(self.s.bell(parity)?, parity, theta)
    }

    fn eval_mode(&self) -> Evaluation {
        self.s.evaluation.unwrap_or(Evaluation::SteadyState)
    }
}

/// Drives and target of one Bell family at blending angle `theta` (rad).
pub fn bell_system(b: &BellDrives, parity: Parity, theta: f64) -> Result<(DriveSet, StabilizationTarget)> {
    let omega = mhz_to_angular(b.omega_mhz);
    let delta = detuning_for_angle(omega, theta)?;
    let (w1, w2) = (mhz_to_angular(b.w1_mhz), mhz_to_angular(b.w2_mhz));
    Ok(match parity {
        Parity::Even => (even_parity_drives(omega, delta, w1, w2)?, psi_theta(theta)),
        Parity::Odd => (odd_parity_drives(omega, delta, w1, w2, b.qr_colors.into())?, phi_theta(theta)),
    })
}

fn metric_cells(m: &StateMetrics) -> [Cell; 3] {
    [Cell::Num(m.fidelity), Cell::Num(m.purity), Cell::Num(m.parity)]
}

// ------------------------------------------------------------- job plumbing

struct JobOutput {
    rows: Vec<Row>,
    diag: Diagnostics,
    files: Vec<(String, String)>,
    metrics: Vec<(String, Value)>,
}

impl JobOutput {
    fn single(row: Row, diag: Diagnostics) -> Self {
        Self { rows: vec![row], diag, files: vec![], metrics: vec![] }
    }
}

struct Collected {
    rows: Vec<Row>,
    diag: Diagnostics,
    files: Vec<(String, String)>,
    metrics: Map<String, Value>,
    failures: Vec<Failure>,
}

/// Evaluates `jobs` in parallel and merges in job order. A failed job
/// contributes the rows from `failed_rows`, padded with NaN, and a status of
/// "failed".
fn run_jobs<J, F, G>(jobs: &[J], width: usize, eval: F, failed_rows: G) -> Collected
where
    J: Sync + fmt::Debug,
    F: Fn(&J) -> Result<JobOutput> + Sync,
    G: Fn(&J) -> Vec<Row>,
{
    let results: Vec<Result<JobOutput>> = jobs.par_iter().map(&eval).collect();
    let mut c = Collected {
        rows: vec![],
        diag: Diagnostics::default(),
        files: vec![],
        metrics: Map::new(),
        failures: vec![],
    };
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(out) => {
                for mut row in out.rows {
                    row.push(Cell::text("ok"));
                    c.rows.push(row);
                }
                c.diag.merge(&out.diag);
                c.files.extend(out.files);
                c.metrics.extend(out.metrics);
            }
            Err(e) => {
                for mut row in failed_rows(job) {
                    row.resize(width - 1, Cell::Num(f64::NAN));
                    row.push(Cell::text("failed"));
                    c.rows.push(row);
                }
                c.failures.push(Failure { point: format!("{job:?}"), message: format!("{e:#}") });
            }
        }
    }
    c
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().chain(["status"].iter()).map(|s| s.to_string()).collect()
}

fn finish(ctx: &Ctx, header: Vec<String>, c: Collected, plots: Vec<PlotSeries>) -> RunResult {
    let table = Table { header, rows: c.rows };
    RunResult {
        scenario: ctx.s.clone(),
        table,
        plots,
        files: c.files,
        metrics: c.metrics,
        diagnostics: c.diag,
        failures: c.failures,
    }
}

/// One x/y series per distinct value of `group`, skipping failed rows.
fn series(table: &Table, group: Option<&str>, x: &str, y: &str, prefix: &str) -> Result<Vec<PlotSeries>> {
    let xs = table.numbers(x)?;
    let ys = table.numbers(y)?;
    let status = table.texts("status")?;
    let groups = match group {
        Some(g) => table.texts(g)?,
        None => vec![String::new(); xs.len()],
    };
    let mut out: Vec<PlotSeries> = vec![];
    for i in 0..xs.len() {
        if status[i] != "ok" {
            continue;
        }
        let name = if groups[i].is_empty() { format!("{prefix}_vs_{x}") } else { format!("{prefix}_vs_{x}_{}", groups[i]) };
        match out.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((xs[i], ys[i])),
            None => out.push(PlotSeries { name, points: vec![(xs[i], ys[i])] }),
        }
    }
    Ok(out)
}

/// Best row per group by `fidelity`, reported as {column: value}.
fn best_by_group(table: &Table, group: &str, keys: &[&str]) -> Result<Map<String, Value>> {
    let fid = table.numbers("fidelity")?;
    let groups = table.texts(group)?;
    let cols: Vec<Vec<f64>> = keys.iter().map(|k| table.numbers(k)).collect::<Result<_>>()?;
    let mut best: Vec<(String, usize)> = vec![];
    for i in 0..fid.len() {
        if fid[i].is_nan() {
            continue;
        }
        match best.iter_mut().find(|(g, _)| *g == groups[i]) {
            Some((_, j)) if fid[i] > fid[*j] => *j = i,
            Some(_) => {}
            None => best.push((groups[i].clone(), i)),
        }
    }
    let mut m = Map::new();
    for (g, i) in best {
        let mut entry = Map::new();
        for (k, col) in keys.iter().zip(&cols) {
            entry.insert(k.to_string(), json!(col[i]));
        }
        entry.insert("fidelity".into(), json!(fid[i]));
        m.insert(g, Value::Object(entry));
    }
    Ok(m)
}

fn target_theta(ctx: &Ctx) -> f64 {
    deg_to_rad(ctx.s.target.theta_deg.unwrap_or(90.0))
}

// --------------------------------------------------------------- scenarios

fn time_domain(ctx: &Ctx) -> Result<RunResult> {
    let times = ctx.s.axis("times_us")?.to_vec();
    let theta = target_theta(ctx);
    let parities = ctx.s.target.family.parities();
    let cols = ["family", "t_us", "fidelity", "purity", "parity_signature"];
    let width = cols.len() + 1;
    let jobs: Vec<(usize, Parity)> = parities.into_iter().enumerate().collect();
    let c = run_jobs(
        &jobs,
        width,
        |&(idx, parity)| {
            let (drives, target) = ctx.bell(parity, theta)?;
            let problem = build_lindblad(&drives.hamiltonian(&ctx.layout)?, &ctx.s.noise.spec())?;
            let (traj, diag) = ctx.evolve(&problem, &times)?;
            let family = parity.family().label();
            let metrics = traj.metrics(&target)?;
            let rows = times
                .iter()
                .zip(&metrics)
                .map(|(&t, m)| {
                    let mut r = vec![Cell::text(family), Cell::Num(t)];
                    r.extend(metric_cells(m));
                    r
                })
                .collect();
            let mut out = JobOutput { rows, diag, files: vec![], metrics: vec![] };
            let last = metrics.last().expect("non-empty grid");
            out.metrics.push((format!("final_fidelity_{family}"), json!(last.fidelity)));
            if let Some(tomo) = &ctx.s.tomography {
                let rho_q = partial_trace(traj.last().expect("non-empty grid"), &QUBITS)?;
                let settings = TomographySettings {
                    shots_per_setting: tomo.shots,
                    pre_rotations: default_settings(),
                    readout_fidelity_q1: tomo.readout_fidelity[0],
                    readout_fidelity_q2: tomo.readout_fidelity[1],
                    rng_seed: ctx.s.seed,
                };
                let counts = simulate_tomography_with(&rho_q, &settings, &mut trial_rng(ctx.s.seed, idx as u64))?;
                let rho_hat = reconstruct(&counts, &settings)?;
                let m = state_metrics(&rho_hat, &target)?;
                out.metrics.push((format!("tomography_fidelity_{family}"), json!(m.fidelity)));
                let mut w = csv::Writer::from_writer(vec![]);
                w.write_record(["setting", "outcome", "count"])?;
                for (setting, outcome, count) in counts.rows() {
                    w.write_record([setting, outcome.to_string(), count.to_string()])?;
                }
                out.files.push((format!("counts_{family}.csv"), String::from_utf8(w.into_inner()?)?));
            }
            Ok(out)
        },
        |&(_, parity)| times.iter().map(|&t| vec![Cell::text(parity.family().label()), Cell::Num(t)]).collect(),
    );
    let header = header(&cols);
    let mut r = finish(ctx, header, c, vec![]);
    r.plots = series(&r.table, Some("family"), "t_us", "fidelity", "fidelity")?;
    Ok(r)
}

fn theta_spectroscopy(ctx: &Ctx) -> Result<RunResult> {
    let thetas = ctx.s.axis("theta_deg")?;
    let jobs: Vec<(Parity, f64)> =
        ctx.s.target.family.parities().into_iter().flat_map(|p| thetas.iter().map(move |&t| (p, t))).collect();
    let cols = ["family", "theta_deg", "fidelity", "purity", "parity_signature"];
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(parity, deg)| {
            let (drives, target) = ctx.bell(parity, deg_to_rad(deg))?;
            let e = ctx.evaluate(&drives.hamiltonian(&ctx.layout)?, &ctx.s.noise.spec(), ctx.eval_mode())?;
            let m = state_metrics(&e.qubits, &target)?;
            let mut row = vec![Cell::text(parity.family().label()), Cell::Num(deg)];
            row.extend(metric_cells(&m));
            Ok(JobOutput::single(row, e.diag))
        },
        |&(parity, deg)| vec![vec![Cell::text(parity.family().label()), Cell::Num(deg)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.plots = series(&r.table, Some("family"), "theta_deg", "fidelity", "fidelity")?;
    Ok(r)
}

fn parity_switch(ctx: &Ctx) -> Result<RunResult> {
    let times = ctx.s.axis("times_us")?.to_vec();
    let segments = ctx.s.grid.segments.clone().context("parity_switch needs segments")?;
    let theta = target_theta(ctx);
    let (even, psi) = ctx.bell(Parity::Even, theta)?;
    let (odd, phi) = ctx.bell(Parity::Odd, theta)?;
    let mut schedule = DriveSchedule::new(ctx.layout.clone(), ctx.s.noise.spec(), DensityMatrix::ground(ctx.layout.clone()));
    for seg in &segments {
        let drives = match seg.parity {
            Parity::Even => even.clone(),
            Parity::Odd => odd.clone(),
        };
        schedule.push(seg.duration_us, drives, seg.parity.label());
    }
    let mut bounds = vec![0.0];
    for seg in &segments {
        bounds.push(bounds.last().unwrap() + seg.duration_us);
    }
    let segment_of = |t: f64| bounds.windows(2).position(|w| t < w[1] - 1e-9).unwrap_or(segments.len() - 1);

    let cols = ["t_us", "segment", "drive_parity", "parity_signature", "fidelity_psi", "fidelity_phi", "purity"];
    let jobs = [()];
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |_| {
            let cfg = IntegratorConfig::default();
            let traj = evolve_schedule_with(&schedule, &times, cfg)?;
            let mut diag = Diagnostics::from_trajectory(&traj);
            if ctx.halving {
                let fine = evolve_schedule_with(&schedule, &times, cfg.halved())?;
                diag.max_step_halving_drift = Some(trajectory_drift(&traj, &fine));
            }
            let qubits = traj.qubit_states()?;
            let mut rows = vec![];
            let mut parity = vec![];
            for (&t, q) in times.iter().zip(&qubits) {
                let mp = state_metrics(q, &psi)?;
                let mf = state_metrics(q, &phi)?;
                let k = segment_of(t);
                parity.push(mp.parity);
                rows.push(vec![
                    Cell::Num(t),
                    Cell::Num(k as f64),
                    Cell::text(segments[k].parity.label()),
                    Cell::Num(mp.parity),
                    Cell::Num(mp.fidelity),
                    Cell::Num(mf.fidelity),
                    Cell::Num(mp.purity),
                ]);
            }
            let (fits_csv, metrics) = fit_segments(&times, &parity, &segments, &bounds)?;
            Ok(JobOutput { rows, diag, files: vec![("fits.csv".into(), fits_csv)], metrics })
        },
        |_| times.iter().map(|&t| vec![Cell::Num(t)]).collect(),
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.plots = series(&r.table, None, "t_us", "parity_signature", "parity_signature")?;
    Ok(r)
}

/// Exponential fits of the parity signature inside every segment.
fn fit_segments(
    times: &[f64],
    parity: &[f64],
    segments: &[crate::config::Segment],
    bounds: &[f64],
) -> Result<(String, Vec<(String, Value)>)> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["segment", "transition", "start_us", "end_us", "tau_us", "v0", "v_inf", "residual"])?;
    let mut fits = vec![];
    let mut by_transition: Vec<(String, Vec<f64>)> = vec![];
    for (k, seg) in segments.iter().enumerate() {
        let (a, b) = (bounds[k], bounds[k + 1]);
        let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= a - 1e-9 && times[i] <= b + 1e-9).collect();
        if idx.len() < 4 {
            bail!("segment {k} has only {} samples; refine grid.dt_us", idx.len());
        }
        let ts: Vec<f64> = idx.iter().map(|&i| times[i] - a).collect();
        let vs: Vec<f64> = idx.iter().map(|&i| parity[i]).collect();
        let dir = match seg.parity {
            Parity::Even => FitDirection::Rising,
            Parity::Odd => FitDirection::Falling,
        };
        let fit = fit_time_constant(&ts, &vs, dir).with_context(|| format!("fitting segment {k}"))?;
        let from = if k == 0 { "ground" } else { segments[k - 1].parity.label() };
        let transition = format!("{from}_to_{}", seg.parity.label());
        w.write_record([
            k.to_string(),
            transition.clone(),
            Cell::Num(a).to_string(),
            Cell::Num(b).to_string(),
            Cell::Num(fit.tau).to_string(),
            Cell::Num(fit.v0).to_string(),
            Cell::Num(fit.v_inf).to_string(),
            Cell::Num(fit.residual).to_string(),
        ])?;
        fits.push(json!({"segment": k, "transition": transition, "tau_us": fit.tau, "v_inf": fit.v_inf}));
        match by_transition.iter_mut().find(|(t, _)| *t == transition) {
            Some((_, v)) => v.push(fit.tau),
            None => by_transition.push((transition, vec![fit.tau])),
        }
    }
    let mut metrics = vec![("fits".to_string(), Value::Array(fits))];
    for (t, taus) in by_transition {
        metrics.push((format!("mean_tau_us_{t}"), json!(taus.iter().sum::<f64>() / taus.len() as f64)));
    }
    Ok((String::from_utf8(w.into_inner()?)?, metrics))
}

fn tphi_sweep(ctx: &Ctx) -> Result<RunResult> {
    let tphis = ctx.s.axis("tphi_us")?;
    let theta = target_theta(ctx);
    let jobs: Vec<(Parity, f64)> =
        ctx.s.target.family.parities().into_iter().flat_map(|p| tphis.iter().map(move |&t| (p, t))).collect();
    let cols = ["family", "tphi_us", "fidelity", "purity", "parity_signature"];
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(parity, tphi)| {
            let (drives, target) = ctx.bell(parity, theta)?;
            let noise = ctx.s.noise.with_tphi(Some(tphi)).spec();
            let e = ctx.evaluate(&drives.hamiltonian(&ctx.layout)?, &noise, ctx.eval_mode())?;
            let mut row = vec![Cell::text(parity.family().label()), Cell::Num(tphi)];
            row.extend(metric_cells(&state_metrics(&e.qubits, &target)?));
            Ok(JobOutput::single(row, e.diag))
        },
        |&(parity, tphi)| vec![vec![Cell::text(parity.family().label()), Cell::Num(tphi)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.plots = series(&r.table, Some("family"), "tphi_us", "fidelity", "fidelity")?;
    r.metrics.insert("best".into(), Value::Object(best_by_group(&r.table, "family", &["tphi_us"])?));
    Ok(r)
}

fn kappa_sweep(ctx: &Ctx) -> Result<RunResult> {
    let ratios = ctx.s.axis("kappa_over_w")?;
    let theta = target_theta(ctx);
    let jobs: Vec<(Parity, f64)> =
        ctx.s.target.family.parities().into_iter().flat_map(|p| ratios.iter().map(move |&t| (p, t))).collect();
    let cols = ["family", "kappa_over_w", "kappa_mhz", "fidelity", "purity", "parity_signature"];
    let kappa_of = |parity: Parity, ratio: f64| -> Result<f64> { Ok(ratio * ctx.s.bell(parity)?.w1_mhz) };
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(parity, ratio)| {
            let (drives, target) = ctx.bell(parity, theta)?;
            let kappa = kappa_of(parity, ratio)?;
            let noise = ctx.s.noise.with_kappa([kappa; 2]).spec();
            let e = ctx.evaluate(&drives.hamiltonian(&ctx.layout)?, &noise, ctx.eval_mode())?;
            let mut row = vec![Cell::text(parity.family().label()), Cell::Num(ratio), Cell::Num(kappa)];
            row.extend(metric_cells(&state_metrics(&e.qubits, &target)?));
            Ok(JobOutput::single(row, e.diag))
        },
        |&(parity, ratio)| {
            vec![vec![
                Cell::text(parity.family().label()),
                Cell::Num(ratio),
                Cell::Num(kappa_of(parity, ratio).unwrap_or(f64::NAN)),
            ]]
        },
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.plots = series(&r.table, Some("family"), "kappa_over_w", "fidelity", "fidelity")?;
    r.metrics.insert("peak".into(), Value::Object(best_by_group(&r.table, "family", &["kappa_over_w", "kappa_mhz"])?));
    Ok(r)
}

fn omega_kappa_map(ctx: &Ctx) -> Result<RunResult> {
    let omegas = ctx.s.axis("omega_mhz")?;
    let kappas = ctx.s.axis("kappa_mhz")?;
    let theta = target_theta(ctx);
    let mut jobs: Vec<(Parity, f64, f64)> = vec![];
    for p in ctx.s.target.family.parities() {
        for &o in omegas {
            for &k in kappas {
                jobs.push((p, o, k));
            }
        }
    }
    let cols = ["family", "omega_mhz", "kappa_mhz", "fidelity", "purity", "parity_signature"];
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(parity, omega, kappa)| {
            let b = BellDrives { omega_mhz: omega, w1_mhz: kappa, w2_mhz: kappa, qr_colors: QrColors::Standard };
            let (drives, target) = bell_system(&b, parity, theta)?;
            let noise = ctx.s.noise.with_kappa([kappa; 2]).spec();
            let e = ctx.evaluate(&drives.hamiltonian(&ctx.layout)?, &noise, ctx.eval_mode())?;
            let mut row = vec![Cell::text(parity.family().label()), Cell::Num(omega), Cell::Num(kappa)];
            row.extend(metric_cells(&state_metrics(&e.qubits, &target)?));
            Ok(JobOutput::single(row, e.diag))
        },
        |&(parity, omega, kappa)| vec![vec![Cell::text(parity.family().label()), Cell::Num(omega), Cell::Num(kappa)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.metrics.insert("best".into(), Value::Object(best_by_group(&r.table, "family", &["omega_mhz", "kappa_mhz"])?));
    // Fidelity maximized over kappa, as a function of the QQ rate.
    let fam = r.table.texts("family")?;
    let om = r.table.numbers("omega_mhz")?;
    let fid = r.table.numbers("fidelity")?;
    for p in ctx.s.target.family.parities() {
        let label = p.family().label();
        let points = omegas
            .iter()
            .map(|&o| {
                let best = (0..fid.len())
                    .filter(|&i| fam[i] == label && om[i] == o && !fid[i].is_nan())
                    .map(|i| fid[i])
                    .fold(f64::NAN, f64::max);
                (o, best)
            })
            .collect();
        r.plots.push(PlotSeries { name: format!("best_fidelity_vs_omega_mhz_{label}"), points });
    }
    Ok(r)
}

const QR_CANDIDATES: [(QrPair, GapAssignment); 4] = [
    (QrPair::BlueBlue, GapAssignment::Ascending),
    (QrPair::BlueBlue, GapAssignment::Swapped),
    (QrPair::RedRed, GapAssignment::Ascending),
    (QrPair::RedRed, GapAssignment::Swapped),
];

#[derive(Clone, Copy, Debug)]
enum QrPair {
    BlueBlue,
    RedRed,
}

impl QrPair {
    fn colors(self) -> [SidebandColor; 2] {
        match self {
            QrPair::BlueBlue => [SidebandColor::Blue; 2],
            QrPair::RedRed => [SidebandColor::Red; 2],
        }
    }

    fn label(self) -> &'static str {
        match self {
            QrPair::BlueBlue => "blue_blue",
            QrPair::RedRed => "red_red",
        }
    }
}

fn assignment_label(a: GapAssignment) -> &'static str {
    match a {
        GapAssignment::Ascending => "ascending",
        GapAssignment::Swapped => "swapped",
    }
}

struct BestPlan {
    pair: QrPair,
    assignment: GapAssignment,
    metrics: StateMetrics,
    plan_target: StabilizationTarget,
    diag: Diagnostics,
}

/// Stabilizes the lowest eigenstate of `hqq` with every QR color/gap
/// combination and keeps the one with the highest fidelity to `target`.
fn best_plan(ctx: &Ctx, hqq: &ComplexOperator, w: [f64; 2], target: &StabilizationTarget) -> Result<BestPlan> {
    let noise = ctx.s.noise.spec();
    let mut diag = Diagnostics::default();
    let mut best: Option<BestPlan> = None;
    let mut last_err = None;
    for (pair, assignment) in QR_CANDIDATES {
        let attempt = (|| -> Result<(StateMetrics, StabilizationTarget, Diagnostics)> {
            let plan = plan_stabilization(hqq, w[0], w[1], pair.colors(), assignment)?;
            let e = ctx.evaluate(&plan.hamiltonian(&ctx.layout)?, &noise, ctx.eval_mode())?;
            Ok((state_metrics(&e.qubits, target)?, plan.target, e.diag))
        })();
        match attempt {
            Ok((m, plan_target, d)) => {
                diag.merge(&d);
                if best.as_ref().is_none_or(|b| m.fidelity > b.metrics.fidelity) {
                    best = Some(BestPlan { pair, assignment, metrics: m, plan_target, diag: Diagnostics::default() });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(mut b) => {
            b.diag = diag;
            Ok(b)
        }
        None => Err(last_err.expect("at least one candidate")),
    }
}

fn dressed_parity_sweep(ctx: &Ctx) -> Result<RunResult> {
    let d = ctx.s.dressed.clone().context("dressed drives missing")?;
    let ratios = ctx.s.axis("a1_over_omega")?;
    let jobs: Vec<(QqColor, f64)> = d.qq_colors.iter().flat_map(|&c| ratios.iter().map(move |&r| (c, r))).collect();
    let omega = mhz_to_angular(d.omega_mhz);
    let w = [mhz_to_angular(d.w1_mhz), mhz_to_angular(d.w2_mhz)];
    let cols = [
        "qq_color",
        "a1_over_omega",
        "theta1_deg",
        "qr_colors",
        "assignment",
        "fidelity",
        "purity",
        "parity_signature",
        "eigenstate_overlap",
    ];
    let color_label = |c: QqColor| SidebandColor::from(c).label();
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(color, ratio)| {
            let a1 = ratio * omega;
            let sc = SidebandColor::from(color);
            let hqq = build_qubit_block(&DriveSet::new().with_qq(sc, omega, 0.0)?.with_rabi_q1(a1, 0.0))?;
            let theta1 = dressing_angle(omega, a1, sc)?;
            let target = dressed_parity_state(theta1);
            let b = best_plan(ctx, &hqq, w, &target)?;
            let row = vec![
                Cell::text(color_label(color)),
                Cell::Num(ratio),
                Cell::Num(rad_to_deg(theta1)),
                Cell::text(b.pair.label()),
                Cell::text(assignment_label(b.assignment)),
                Cell::Num(b.metrics.fidelity),
                Cell::Num(b.metrics.purity),
                Cell::Num(b.metrics.parity),
                Cell::Num(b.plan_target.overlap(&target)),
            ];
            Ok(JobOutput::single(row, b.diag))
        },
        |&(color, ratio)| vec![vec![Cell::text(color_label(color)), Cell::Num(ratio)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    r.plots = series(&r.table, Some("qq_color"), "a1_over_omega", "fidelity", "fidelity")?;
    r.metrics.insert("best".into(), Value::Object(best_by_group(&r.table, "qq_color", &["a1_over_omega"])?));
    Ok(r)
}

fn rabi_dressed_map(ctx: &Ctx) -> Result<RunResult> {
    let d = ctx.s.dressed.clone().context("dressed drives missing")?;
    let deltas = ctx.s.axis("delta_over_omega")?;
    let a1s = ctx.s.axis("a1_over_omega")?;
    let jobs: Vec<(f64, f64)> = deltas.iter().flat_map(|&dl| a1s.iter().map(move |&a| (dl, a))).collect();
    let omega = mhz_to_angular(d.omega_mhz);
    let w = [mhz_to_angular(d.w1_mhz), mhz_to_angular(d.w2_mhz)];
    let cols = [
        "delta_over_omega",
        "a1_over_omega",
        "qr_colors",
        "assignment",
        "fidelity",
        "purity",
        "parity_signature",
        "closed_form_residual",
    ];
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&(dr, ar)| {
            let (delta, a1) = (dr * omega, ar * omega);
            let (coeffs, target) = rabi_dressed_state(delta, a1, omega)?;
            let hqq = build_qubit_block(&autostab_core::targets::rabi_dressed_drives(delta, a1, omega)?)?;
            let b = best_plan(ctx, &hqq, w, &target)?;
            let row = vec![
                Cell::Num(dr),
                Cell::Num(ar),
                Cell::text(b.pair.label()),
                Cell::text(assignment_label(b.assignment)),
                Cell::Num(b.metrics.fidelity),
                Cell::Num(b.metrics.purity),
                Cell::Num(b.metrics.parity),
                Cell::Num(coeffs.residual),
            ];
            Ok(JobOutput::single(row, b.diag))
        },
        |&(dr, ar)| vec![vec![Cell::Num(dr), Cell::Num(ar)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    let fid = r.table.numbers("fidelity")?;
    let finite: Vec<f64> = fid.iter().copied().filter(|f| !f.is_nan()).collect();
    if !finite.is_empty() {
        r.metrics.insert("min_fidelity".into(), json!(finite.iter().copied().fold(f64::INFINITY, f64::min)));
        r.metrics.insert("max_fidelity".into(), json!(finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    }
    if let Some(i) = jobs.iter().position(|&(dl, a)| dl == 0.0 && a == 0.0) {
        r.metrics.insert("fidelity_at_origin".into(), json!(fid[i]));
    }
    Ok(r)
}

fn rate_model_compare(ctx: &Ctx) -> Result<RunResult> {
    let thetas = ctx.s.axis("theta_deg")?;
    let even = ctx.s.bell(Parity::Even)?.to_owned();
    let cols = ["theta_deg", "fidelity", "rate_model_fidelity", "abs_diff", "purity", "parity_signature"];
    let jobs: Vec<f64> = thetas.to_vec();
    let c = run_jobs(
        &jobs,
        cols.len() + 1,
        |&deg| {
            let theta = deg_to_rad(deg);
            // At theta = pi the target is |gg> and no drive is needed.
            let (drives, target) =
                if deg == 180.0 { (DriveSet::new(), psi_theta(PI)) } else { bell_system(&even, Parity::Even, theta)? };
            let e = ctx.evaluate(&drives.hamiltonian(&ctx.layout)?, &ctx.s.noise.spec(), ctx.eval_mode())?;
            let m = state_metrics(&e.qubits, &target)?;
            let analytic = psi_rate_model_fidelity(&even, &ctx.s.noise, theta)?;
            let row = vec![
                Cell::Num(deg),
                Cell::Num(m.fidelity),
                Cell::Num(analytic),
                Cell::Num((m.fidelity - analytic).abs()),
                Cell::Num(m.purity),
                Cell::Num(m.parity),
            ];
            Ok(JobOutput::single(row, e.diag))
        },
        |&deg| vec![vec![Cell::Num(deg)]],
    );
    let mut r = finish(ctx, header(&cols), c, vec![]);
    let mut plots = series(&r.table, None, "theta_deg", "fidelity", "lindblad_fidelity")?;
    plots.extend(series(&r.table, None, "theta_deg", "rate_model_fidelity", "rate_model_fidelity")?);
    r.plots = plots;
    let diffs = r.table.numbers("abs_diff")?;
    r.metrics.insert("max_abs_diff".into(), json!(diffs.iter().copied().filter(|d| !d.is_nan()).fold(0.0, f64::max)));
    Ok(r)
}
