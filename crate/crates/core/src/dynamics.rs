//! Lindblad time evolution, steady states, drive schedules and exponential
//! fits.
//!
//! Density matrices are vectorized row-major (`vec[i·d + j] = ρ_ij`), so the
//! generator acts as `dρ/dt = L·vec(ρ)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::{partial_trace, ComplexOperator, DensityMatrix, SpaceLayout, Subsystem};
use crate::linalg::{self, lu_solve, CMatrix, CsrMatrix};
use crate::model::{build_lindblad, DriveSet, LindbladProblem, NoiseSpec};
use crate::targets::{state_metrics, StabilizationTarget, StateMetrics};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Trace and positivity tolerance checked at every output time.
pub const STATE_TOL: f64 = 1e-6;

/// Sparse Lindblad generator.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    layout: SpaceLayout,
    generator: CsrMatrix,
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let n = m.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            if z != ZERO {
                out.push((i, j, z));
            }
        }
    }
    out
}

impl Liouvillian {
    pub fn new(problem: &LindbladProblem) -> Self {
        let layout = problem.layout().clone();
        let d = layout.dim();
        let minus_i = C64::new(0.0, -1.0);
        // H_eff = H − (i/2) Σ L†L; dρ = −i H_eff ρ + i ρ H_eff† + Σ L ρ L†.
        let mut heff = problem.hamiltonian.matrix().clone();
        for c in &problem.collapse_ops {
            let ldl = c.matrix().dagger().matmul(c.matrix());
            heff = &heff - &ldl.scale(C64::new(0.0, 0.5));
        }
        let left = heff.scale(minus_i);
        let right = left.dagger();
        let mut triplets = Vec::new();
        for (i, k, a) in nonzeros(&left) {
            for j in 0..d {
                triplets.push((i * d + j, k * d + j, a));
            }
        }
        for (k, j, b) in nonzeros(&right) {
            for i in 0..d {
                triplets.push((i * d + j, i * d + k, b));
            }
        }
        for c in &problem.collapse_ops {
            let nz = nonzeros(c.matrix());
            for &(i, k, lik) in &nz {
                for &(j, l, ljl) in &nz {
                    triplets.push((i * d + j, k * d + l, lik * ljl.conj()));
                }
            }
        }
        Self { generator: CsrMatrix::from_triplets(d * d, triplets), layout }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn generator(&self) -> &CsrMatrix {
        &self.generator
    }

    /// Largest absolute row sum of the generator, used to size RK4 steps.
    pub fn max_rate(&self) -> f64 {
        self.generator.inf_norm()
    }

    /// max |L(ρ)|
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        self.generator.mul_vec(rho.matrix().as_slice()).iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// Fixed-step RK4 settings: `h = min(max_step, 1/(rate_factor·max_rate))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub max_step: f64,
    pub rate_factor: f64,
}

impl Default for IntegratorConfig {
    // `max_rate` is an ∞-norm bound well above the spectral radius, so
    // h·max_rate = 0.2 already keeps step-halving drift near roundoff.
    fn default() -> Self {
        Self { max_step: 0.005, rate_factor: 5.0 }
    }
}

impl IntegratorConfig {
    /// Same settings with every step halved.
    pub fn halved(self) -> Self {
        Self { max_step: self.max_step / 2.0, rate_factor: self.rate_factor * 2.0 }
    }

    pub fn step(&self, liouvillian: &Liouvillian) -> f64 {
        let rate = liouvillian.max_rate();
        if rate > 0.0 {
            self.max_step.min(1.0 / (self.rate_factor * rate))
        } else {
            self.max_step
        }
    }
}

struct Rk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]], tmp: vec![ZERO; n] }
    }

    fn step(&mut self, l: &CsrMatrix, y: &mut [C64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        l.mul_vec_into(y, k1);
        for ((t, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
            *t = yi + k * (0.5 * h);
        }
        l.mul_vec_into(&self.tmp, k2);
        for ((t, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
            *t = yi + k * (0.5 * h);
        }
        l.mul_vec_into(&self.tmp, k3);
        for ((t, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
            *t = yi + k * h;
        }
        l.mul_vec_into(&self.tmp, k4);
        let h6 = h / 6.0;
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * h6;
        }
    }

    /// Integrates over `span` with `ceil(span/h_max)` equal substeps.
    fn advance(&mut self, l: &CsrMatrix, y: &mut [C64], span: f64, h_max: f64) {
        if span <= 0.0 {
            return;
        }
        let n = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            self.step(l, y, h);
        }
    }
}

/// Output states of an evolution plus per-state hygiene numbers.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// |Tr ρ − 1| at each output.
    pub trace_errors: Vec<f64>,
    /// Smallest eigenvalue at each output.
    pub min_eigenvalues: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            trace_errors: Vec::with_capacity(n),
            min_eigenvalues: Vec::with_capacity(n),
        }
    }

    fn push_checked(&mut self, t: f64, layout: &SpaceLayout, y: &[C64]) -> Result<()> {
        let m = CMatrix::from_row_major(y.to_vec()).hermitian_part();
        let tr_err = (m.trace() - C64::new(1.0, 0.0)).norm();
        let min_eig = linalg::eigvalsh(&m)[0];
        if !tr_err.is_finite() || tr_err > STATE_TOL {
            return Err(Error::StepFailure { time: t, reason: format!("trace drifted by {tr_err:e}") });
        }
        if !(min_eig >= -STATE_TOL) {
            return Err(Error::StepFailure { time: t, reason: format!("negative eigenvalue {min_eig:e}") });
        }
        self.times.push(t);
        self.states.push(DensityMatrix::from_trusted(layout.clone(), m));
        self.trace_errors.push(tr_err);
        self.min_eigenvalues.push(min_eig);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Two-qubit reduced states.
    pub fn qubit_states(&self) -> Result<Vec<DensityMatrix>> {
        self.states.iter().map(|s| partial_trace(s, &[Subsystem::Q1, Subsystem::Q2])).collect()
    }

    /// Fidelity, purity and parity signature of the reduced two-qubit state
    /// at every output time.
    pub fn metrics(&self, target: &StabilizationTarget) -> Result<Vec<StateMetrics>> {
        self.qubit_states()?.iter().map(|s| state_metrics(s, target)).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.trace_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if !(grid[0] >= 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must start at t >= 0 and be finite".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be strictly ascending".into()));
    }
    Ok(())
}

fn check_state(problem_layout: &SpaceLayout, rho0: &DensityMatrix) -> Result<()> {
    if rho0.layout() != problem_layout {
        return Err(Error::LayoutMismatch("initial state and problem live on different layouts".into()));
    }
    Ok(())
}

/// Evolves `rho0` (at t = 0) and records the state at every grid time.
pub fn evolve(problem: &LindbladProblem, rho0: &DensityMatrix, grid: &[f64]) -> Result<Trajectory> {
    evolve_with(problem, rho0, grid, IntegratorConfig::default())
}

pub fn evolve_with(
    problem: &LindbladProblem,
    rho0: &DensityMatrix,
    grid: &[f64],
    config: IntegratorConfig,
) -> Result<Trajectory> {
    check_grid(grid)?;
    check_state(problem.layout(), rho0)?;
    let l = Liouvillian::new(problem);
    let h = config.step(&l);
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut rk = Rk4::new(y.len());
    let mut traj = Trajectory::with_capacity(grid.len());
    let mut t = 0.0;
    for &target in grid {
        rk.advance(l.generator(), &mut y, target - t, h);
        t = target;
        traj.push_checked(t, problem.layout(), &y)?;
    }
    Ok(traj)
}

/// State at a single time `t`.
pub fn evolve_to(problem: &LindbladProblem, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let traj = evolve(problem, rho0, &[t])?;
    Ok(traj.states.into_iter().next().expect("one output"))
}

/// Pivot ratio below which the steady-state system is declared singular.
pub const KERNEL_TOL: f64 = 1e-10;

/// Unique steady state: solves L·vec(ρ) = 0 with the (0,0) row replaced by
/// the trace condition, then Hermitizes and renormalizes.
pub fn steady_state(problem: &LindbladProblem) -> Result<DensityMatrix> {
    let l = Liouvillian::new(problem);
    let d = problem.layout().dim();
    let n = d * d;
    let mut a = l.generator().to_dense();
    let scale = l.max_rate().max(f64::MIN_POSITIVE);
    for z in a.as_mut_slice() {
        *z /= scale;
    }
    for k in 0..n {
        a[(0, k)] = ZERO;
    }
    for i in 0..d {
        a[(0, i * d + i)] = C64::new(1.0, 0.0);
    }
    let mut b = vec![ZERO; n];
    b[0] = C64::new(1.0, 0.0);
    let x = lu_solve(a, b, KERNEL_TOL).map_err(|s| Error::DegenerateKernel(s.pivot_ratio))?;
    let mut m = CMatrix::from_row_major(x).hermitian_part();
    let tr = m.trace().re;
    m = m.scale_real(1.0 / tr);
    DensityMatrix::with_tolerance(problem.layout().clone(), m, 1e-9, STATE_TOL)
        .map_err(|e| Error::StepFailure { time: f64::INFINITY, reason: format!("steady state invalid: {e}") })
}

/// One constant-drive interval of a [`DriveSchedule`].
#[derive(Clone, Debug)]
pub struct Segment {
    pub duration: f64,
    pub drives: DriveSet,
    /// Name of the builder that produced `drives`, for reporting.
    pub label: String,
}

/// Piecewise-constant drive sequence sharing one layout and noise model.
#[derive(Clone, Debug)]
pub struct DriveSchedule {
    pub layout: SpaceLayout,
    pub noise: NoiseSpec,
    pub segments: Vec<Segment>,
    pub initial_state: DensityMatrix,
}

impl DriveSchedule {
    pub fn new(layout: SpaceLayout, noise: NoiseSpec, initial_state: DensityMatrix) -> Self {
        Self { layout, noise, segments: Vec::new(), initial_state }
    }

    pub fn push(&mut self, duration: f64, drives: DriveSet, label: impl Into<String>) {
        self.segments.push(Segment { duration, drives, label: label.into() });
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start time of every segment plus the end of the last one.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut t = 0.0;
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParameter("schedule has no segments".into()));
        }
        if let Some(s) = self.segments.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
            return Err(Error::InvalidParameter(format!("segment {:?} has duration {}", s.label, s.duration)));
        }
        self.noise.validate()?;
        for s in &self.segments {
            s.drives.validate()?;
        }
        check_state(&self.layout, &self.initial_state)
    }
}

/// Evolves through every segment, rebuilding the Lindblad problem at each
/// boundary; ρ is continuous across boundaries.
pub fn evolve_schedule(schedule: &DriveSchedule, grid: &[f64]) -> Result<Trajectory> {
    evolve_schedule_with(schedule, grid, IntegratorConfig::default())
}

pub fn evolve_schedule_with(schedule: &DriveSchedule, grid: &[f64], config: IntegratorConfig) -> Result<Trajectory> {
    schedule.validate()?;
    check_grid(grid)?;
    let end = schedule.total_duration();
    if grid[grid.len() - 1] > end * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("grid extends past the schedule end {end} us")));
    }
    let mut y = schedule.initial_state.matrix().as_slice().to_vec();
    let mut rk = Rk4::new(y.len());
    let mut traj = Trajectory::with_capacity(grid.len());
    let mut t = 0.0;
    let mut next = 0;
    let mut seg_start = 0.0;
    for seg in &schedule.segments {
        let seg_end = seg_start + seg.duration;
        let h_op = seg.drives.hamiltonian(&schedule.layout)?;
        let problem = build_lindblad(&h_op, &schedule.noise)?;
        let l = Liouvillian::new(&problem);
        let h = config.step(&l);
        while next < grid.len() && grid[next] <= seg_end {
            rk.advance(l.generator(), &mut y, grid[next] - t, h);
            t = grid[next];
            traj.push_checked(t, &schedule.layout, &y)?;
            next += 1;
        }
        rk.advance(l.generator(), &mut y, seg_end - t, h);
        t = seg_end;
        seg_start = seg_end;
    }
    // Grid points within roundoff of the end.
    while next < grid.len() {
        traj.push_checked(grid[next], &schedule.layout, &y)?;
        next += 1;
    }
    Ok(traj)
}

/// Expected monotonicity of a fitted relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitDirection {
    Rising,
    Falling,
    Either,
}

/// v(t) = v∞ + (v0 − v∞)·exp(−(t − t0)/τ), t0 the first sample time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    pub tau: f64,
    pub v0: f64,
    pub v_inf: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

impl ExpFit {
    pub fn eval(&self, dt: f64) -> f64 {
        self.v_inf + (self.v0 - self.v_inf) * (-dt / self.tau).exp()
    }
}

/// Linear least squares for (v∞, A) at fixed τ; returns (v∞, A, SSE).
fn project(dt: &[f64], v: &[f64], tau: f64) -> (f64, f64, f64) {
    let n = dt.len() as f64;
    let (mut se, mut see, mut sv, mut sev) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in dt.iter().zip(v) {
        let e = (-t / tau).exp();
        se += e;
        see += e * e;
        sv += y;
        sev += e * y;
    }
    let det = n * see - se * se;
    if det.abs() < 1e-300 {
        let mean = sv / n;
        let sse = v.iter().map(|y| (y - mean) * (y - mean)).sum();
        return (mean, 0.0, sse);
    }
    let vinf = (see * sv - se * sev) / det;
    let amp = (n * sev - se * sv) / det;
    let sse = dt.iter().zip(v).map(|(&t, &y)| (y - vinf - amp * (-t / tau).exp()).powi(2)).sum();
    (vinf, amp, sse)
}

/// Least-squares single-exponential fit by variable projection: a log-spaced
/// scan over τ, then golden-section refinement.
pub fn fit_time_constant(times: &[f64], values: &[f64], direction: FitDirection) -> Result<ExpFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    if times.len() < 5 {
        return Err(Error::FitFailed(format!("need at least 5 points, got {}", times.len())));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("times must be ascending and values finite".into()));
    }
    let (vmin, vmax) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if vmax - vmin <= 1e-14 * vmax.abs().max(vmin.abs()).max(1e-300) {
        return Err(Error::FitFailed("values are constant".into()));
    }
    let t0 = times[0];
    let dt: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let span = dt[dt.len() - 1];
    let min_dt = dt.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = ((min_dt / 20.0).ln(), (20.0 * span).ln());
    const SCAN: usize = 400;
    let grid: Vec<f64> = (0..SCAN).map(|i| lo + (hi - lo) * i as f64 / (SCAN - 1) as f64).collect();
    let sse: Vec<f64> = grid.iter().map(|&u| project(&dt, values, u.exp()).2).collect();
    let best = (0..SCAN).fold(0, |b, i| if sse[i] < sse[b] { i } else { b });
    if best == 0 || best == SCAN - 1 {
        return Err(Error::FitFailed("no interior minimum in tau".into()));
    }
    let f = |u: f64| project(&dt, values, u.exp()).2;
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let tau = (0.5 * (a + b)).exp();
    let (v_inf, amp, sse) = project(&dt, values, tau);
    let ok = match direction {
        FitDirection::Rising => amp < 0.0,
        FitDirection::Falling => amp > 0.0,
        FitDirection::Either => true,
    };
    if !ok {
        return Err(Error::FitFailed(format!("fitted relaxation runs against the requested {direction:?} direction")));
    }
    Ok(ExpFit { tau, v0: v_inf + amp, v_inf, residual: (sse / dt.len() as f64).sqrt() })
}

/// H = 0 problem with no collapse operators, on `layout`.
pub fn trivial_problem(layout: &SpaceLayout) -> LindbladProblem {
    LindbladProblem::new(ComplexOperator::zero(layout), Vec::new()).expect("zero operator is Hermitian")
}
