//! Pseudo-spectral integration of the cubic-quintic Ginzburg-Landau equation
//!
//! ```text
//! i U_t + (1/2 - iτ) U_xx - iκ U_xxxx + (1 - iμ)|U|²U + (ν - iε)|U|⁴U - iγ U = 0
//! ```
//!
//! on a periodic 1-D grid. Written as `U_t = L U + N(U)`, the linear part is
//! diagonal in Fourier space with multiplier [`linear_symbol`] and the
//! nonlinear part [`nonlinear_term`] is pointwise. Time stepping is ETDRK4
//! (Cox-Matthews) with the φ-function coefficients evaluated by contour
//! integrals, which stays accurate for the stiff `k⁴` modes.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{CMatrix, Complex64, Error, RegimeId, Result};

/// Points on the unit circle used for the φ-function contour means.
const CONTOUR_POINTS: usize = 64;

/// Uniform periodic grid on `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    n: usize,
    x_min: f64,
    x_max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    n: usize,
    x_min: f64,
    x_max: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.n, raw.x_min, raw.x_max)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid { n: g.n, x_min: g.x_min, x_max: g.x_max }
    }
}

impl GridSpec {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size {n} is not a power of two >= 2")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(format!("bad grid bounds [{x_min}, {x_max})")));
        }
        Ok(GridSpec { n, x_min, x_max })
    }

    /// 1024 nodes on `[-20, 20)`, shared by every regime in the library.
    pub fn standard() -> Self {
        GridSpec { n: 1024, x_min: -20.0, x_max: 20.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Wavenumbers in FFT order: `2π m / length` for
    /// `m = 0, …, n/2 - 1, -n/2, …, -1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let scale = 2.0 * PI / self.length();
        (0..n)
            .map(|m| {
                let m = if m < n / 2 { m } else { m - n };
                scale * m as f64
            })
            .collect()
    }

    /// Index of the node nearest to `x`, wrapping periodically.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx()).round() as i64;
        raw.rem_euclid(self.n as i64) as usize
    }
}

/// Coefficients β = (τ, κ, μ, ν, ε, γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqgleParams {
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub gamma: f64,
}

impl CqgleParams {
    pub const fn new(tau: f64, kappa: f64, mu: f64, nu: f64, eps: f64, gamma: f64) -> Self {
        CqgleParams { tau, kappa, mu, nu, eps, gamma }
    }

    pub fn is_finite(&self) -> bool {
        [self.tau, self.kappa, self.mu, self.nu, self.eps, self.gamma]
            .iter()
            .all(|v| v.is_finite())
    }

    /// The same parameters with `μ = ν = ε = 0`. The conservative cubic term
    /// `i|U|²U` has a fixed unit coefficient and survives.
    pub fn linear_part(&self) -> Self {
        CqgleParams { mu: 0.0, nu: 0.0, eps: 0.0, ..*self }
    }

    fn check(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite parameters {self:?}")))
        }
    }
}

/// Complex field sampled on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch { expected: grid.n(), found: values.len() });
        }
        if !all_finite(&values) {
            return Err(Error::NonFiniteField { time });
        }
        Ok(FieldState { grid, values, time })
    }

    pub fn zeros(grid: GridSpec, time: f64) -> Self {
        FieldState { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()], time }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// One piece of a piecewise-constant parameter schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub regime: RegimeId,
    pub params: CqgleParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSchedule {
    segments: Vec<Segment>,
}

impl BetaSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::invalid("schedule has no segments"))?;
        if first.start != 0.0 {
            return Err(Error::invalid("first schedule segment must start at t = 0"));
        }
        if segments.windows(2).any(|w| !(w[1].start > w[0].start)) {
            return Err(Error::invalid("schedule start times must be strictly increasing"));
        }
        for s in &segments {
            s.params.check()?;
        }
        Ok(BetaSchedule { segments })
    }

    pub fn single(regime: RegimeId, params: CqgleParams) -> Result<Self> {
        Self::new(vec![Segment { start: 0.0, regime, params }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment active at time `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        self.segments
            .partition_point(|s| s.start <= t + 1e-9)
            .saturating_sub(1)
    }

    /// End of segment `idx`: the next start, or `t_end` for the last one.
    pub fn segment_end(&self, idx: usize, t_end: f64) -> f64 {
        self.segments.get(idx + 1).map_or(t_end, |s| s.start)
    }
}

/// `U(x, 0) = amplitude · sech(x / width)`.
pub fn initial_condition(grid: &GridSpec, amplitude: f64, width: f64) -> Result<FieldState> {
    if !(amplitude > 0.0 && width > 0.0) {
        return Err(Error::invalid("initial condition needs amplitude > 0 and width > 0"));
    }
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| Complex64::new(amplitude / (x / width).cosh(), 0.0))
        .collect();
    FieldState::new(*grid, values, 0.0)
}

/// Fourier multiplier `c(k) = -τk² - (i/2)k² + κk⁴ + γ` of the linear part.
pub fn linear_symbol(params: &CqgleParams, k: f64) -> Complex64 {
    let k2 = k * k;
    Complex64::new(-params.tau * k2 + params.kappa * k2 * k2 + params.gamma, -0.5 * k2)
}

/// Pointwise `N(U) = i[(1 - iμ)|U|²U + (ν - iε)|U|⁴U]`.
pub fn nonlinear_term(values: &[Complex64], params: &CqgleParams) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    apply_nonlinear(values, params, &mut out);
    out
}

pub(crate) fn apply_nonlinear(values: &[Complex64], params: &CqgleParams, out: &mut [Complex64]) {
    // i(1 - iμ) = μ + i, i(ν - iε) = ε + iν
    let cubic = Complex64::new(params.mu, 1.0);
    let quintic = Complex64::new(params.eps, params.nu);
    for (o, &u) in out.iter_mut().zip(values) {
        let a = u.norm_sqr();
        *o = (cubic * a + quintic * (a * a)) * u;
    }
}

pub(crate) fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Forward/inverse FFT pair with scratch space. The inverse is normalized.
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    scale: f64,
}

impl Spectral {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Spectral {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            scale: 1.0 / n as f64,
        }
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

/// Time-stepping knobs shared by every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub dt: f64,
    /// Zero the upper third of the spectrum of the nonlinear term.
    #[serde(default)]
    pub dealias: bool,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { dt: 0.01, dealias: false }
    }
}

impl Integrator {
    pub fn new(dt: f64) -> Self {
        Integrator { dt, dealias: false }
    }
}

/// ETDRK4 stepper for one grid, parameter set and step size.
pub struct Etdrk4 {
    params: CqgleParams,
    dt: f64,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    keep: Option<Vec<bool>>,
    fft: Spectral,
    work: Vec<Complex64>,
    nv: Vec<Complex64>,
    na: Vec<Complex64>,
    nb: Vec<Complex64>,
    nc: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl Etdrk4 {
    pub fn new(grid: &GridSpec, params: &CqgleParams, integrator: &Integrator) -> Result<Self> {
        params.check()?;
        let dt = integrator.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let n = grid.n();
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
                Complex64::from_polar(1.0, theta)
            })
            .collect();
        let mean = |f: &dyn Fn(Complex64) -> Complex64| -> Complex64 {
            roots.iter().map(|&r| f(r)).sum::<Complex64>() / CONTOUR_POINTS as f64
        };

        let zero = Complex64::new(0.0, 0.0);
        let (mut e, mut e2, mut q) = (vec![zero; n], vec![zero; n], vec![zero; n]);
        let (mut f1, mut f2, mut f3) = (vec![zero; n], vec![zero; n], vec![zero; n]);
        for (i, &k) in grid.wavenumbers().iter().enumerate() {
            let z = linear_symbol(params, k) * dt;
            e[i] = z.exp();
            e2[i] = (z / 2.0).exp();
            q[i] = mean(&|r| {
                let lr = z + r;
                ((lr / 2.0).exp() - 1.0) / lr
            }) * dt;
            f1[i] = mean(&|r| {
                let lr = z + r;
                (-4.0 - lr + lr.exp() * (4.0 - 3.0 * lr + lr * lr)) / (lr * lr * lr)
            }) * dt;
            f2[i] = mean(&|r| {
                let lr = z + r;
                (2.0 + lr + lr.exp() * (lr - 2.0)) / (lr * lr * lr)
            }) * dt;
            f3[i] = mean(&|r| {
                let lr = z + r;
                (-4.0 - 3.0 * lr - lr * lr + lr.exp() * (4.0 - lr)) / (lr * lr * lr)
            }) * dt;
        }

        let keep = integrator.dealias.then(|| {
            let cutoff = n / 3;
            (0..n)
                .map(|i| {
                    let m = if i < n / 2 { i } else { n - i };
                    m <= cutoff
                })
                .collect()
        });

        Ok(Etdrk4 {
            params: *params,
            dt,
            e,
            e2,
            q,
            f1,
            f2,
            f3,
            keep,
            fft: Spectral::new(n),
            work: vec![zero; n],
            nv: vec![zero; n],
            na: vec![zero; n],
            nb: vec![zero; n],
            nc: vec![zero; n],
            a: vec![zero; n],
            b: vec![zero; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &CqgleParams {
        &self.params
    }

    /// Transform grid values to Fourier coefficients in place.
    pub fn to_spectral(&mut self, values: &mut [Complex64]) {
        self.fft.forward(values);
    }

    pub fn to_physical(&mut self, coeffs: &mut [Complex64]) {
        self.fft.inverse(coeffs);
    }

    /// Fourier transform of `N(U)` for the field whose transform is `v_hat`.
    fn nonlinear_hat(
        fft: &mut Spectral,
        params: &CqgleParams,
        keep: Option<&[bool]>,
        work: &mut [Complex64],
        v_hat: &[Complex64],
        out: &mut [Complex64],
    ) {
        work.copy_from_slice(v_hat);
        fft.inverse(work);
        apply_nonlinear(work, params, out);
        fft.forward(out);
        if let Some(keep) = keep {
            for (o, &k) in out.iter_mut().zip(keep) {
                if !k {
                    *o = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Advance Fourier coefficients `v` by one step.
    // parallel coefficient arrays read more plainly indexed than zipped six ways
    #[allow(clippy::needless_range_loop)]
    pub fn step_spectral(&mut self, v: &mut [Complex64]) {
        let keep = self.keep.as_deref();
        let p = &self.params;
        Self::nonlinear_hat(&mut self.fft, p, keep, &mut self.work, v, &mut self.nv);
        for i in 0..v.len() {
            self.a[i] = self.e2[i] * v[i] + self.q[i] * self.nv[i];
        }
        Self::nonlinear_hat(&mut self.fft, p, keep, &mut self.work, &self.a, &mut self.na);
        for i in 0..v.len() {
            self.b[i] = self.e2[i] * v[i] + self.q[i] * self.na[i];
        }
        Self::nonlinear_hat(&mut self.fft, p, keep, &mut self.work, &self.b, &mut self.nb);
        // c reuses the `b` buffer once Nb is known
        for i in 0..v.len() {
            self.b[i] = self.e2[i] * self.a[i] + self.q[i] * (2.0 * self.nb[i] - self.nv[i]);
        }
        Self::nonlinear_hat(&mut self.fft, p, keep, &mut self.work, &self.b, &mut self.nc);
        for i in 0..v.len() {
            v[i] = self.e[i] * v[i]
                + self.f1[i] * self.nv[i]
                + 2.0 * self.f2[i] * (self.na[i] + self.nb[i])
                + self.f3[i] * self.nc[i];
        }
    }
}

/// One ETDRK4 step of `state`.
pub fn step_etdrk4(state: &FieldState, params: &CqgleParams, dt: f64) -> Result<FieldState> {
    let mut stepper = Etdrk4::new(&state.grid, params, &Integrator::new(dt))?;
    let mut v = state.values.clone();
    stepper.to_spectral(&mut v);
    stepper.step_spectral(&mut v);
    stepper.to_physical(&mut v);
    let time = state.time + dt;
    if !all_finite(&v) {
        return Err(Error::NonFiniteField { time });
    }
    Ok(FieldState { grid: state.grid, values: v, time })
}

/// Field values recorded at a list of times, plus the state at the end.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `n × q`, column `j` is the field at `times[j]`.
    pub data: CMatrix,
    pub times: Vec<f64>,
    pub final_state: FieldState,
}

impl Trajectory {
    pub fn column_state(&self, j: usize) -> FieldState {
        FieldState {
            grid: self.final_state.grid,
            values: self.data.column(j).iter().copied().collect(),
            time: self.times[j],
        }
    }

    /// Column index whose time equals `t` to within `1e-9`.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

fn steps_for(span: f64, dt: f64) -> Result<usize> {
    if span < -1e-12 {
        return Err(Error::invalid(format!("time {span} before the initial state")));
    }
    let steps = (span / dt).round();
    if (steps * dt - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "time offset {span} is not a multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Integrate from `ic` to `t_end` with fixed parameters, recording the field at
/// each of `snapshot_times`.
pub fn simulate(
    params: &CqgleParams,
    ic: &FieldState,
    t_end: f64,
    integrator: &Integrator,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let schedule = BetaSchedule::single(RegimeId(0), *params)?;
    let total = steps_for(t_end - ic.time, integrator.dt)?;
    if snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("snapshot times must be strictly increasing"));
    }
    let mut marks = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        if t > t_end + 1e-9 {
            return Err(Error::invalid(format!("snapshot time {t} beyond t_end {t_end}")));
        }
        marks.push(steps_for(t - ic.time, integrator.dt)?);
    }
    integrate(&schedule, ic, total, integrator, &marks).map(|(traj, _)| traj)
}

/// Output of [`simulate_schedule`].
#[derive(Debug, Clone)]
pub struct ScheduleRun {
    pub trajectory: Trajectory,
    /// Segment index active at each recorded column.
    pub segment_of_column: Vec<usize>,
    pub schedule: BetaSchedule,
}

/// Integrate continuously through a piecewise-constant schedule, recording
/// every `stride` time units starting at `ic.time`. The state carries over
/// each switch unchanged.
pub fn simulate_schedule(
    schedule: &BetaSchedule,
    ic: &FieldState,
    t_end: f64,
    integrator: &Integrator,
    snapshot_stride: f64,
) -> Result<ScheduleRun> {
    let last = schedule.segments().last().map_or(0.0, |s| s.start);
    if t_end < last {
        return Err(Error::invalid(format!("t_end {t_end} precedes the last switch at {last}")));
    }
    if !(snapshot_stride > 0.0) {
        return Err(Error::invalid("snapshot stride must be positive"));
    }
    let total = steps_for(t_end - ic.time, integrator.dt)?;
    let per = steps_for(snapshot_stride, integrator.dt)?.max(1);
    let marks: Vec<usize> = (0..=total).step_by(per).collect();
    let (trajectory, segment_of_column) = integrate(schedule, ic, total, integrator, &marks)?;
    Ok(ScheduleRun { trajectory, segment_of_column, schedule: schedule.clone() })
}

fn integrate(
    schedule: &BetaSchedule,
    ic: &FieldState,
    total_steps: usize,
    integrator: &Integrator,
    marks: &[usize],
) -> Result<(Trajectory, Vec<usize>)> {
    let grid = ic.grid;
    if ic.values.len() != grid.n() {
        return Err(Error::DimensionMismatch { expected: grid.n(), found: ic.values.len() });
    }
    let dt = integrator.dt;
    let mut steppers: Vec<Option<Etdrk4>> = schedule.segments().iter().map(|_| None).collect();

    let mut data = CMatrix::zeros(grid.n(), marks.len());
    let mut times = Vec::with_capacity(marks.len());
    let mut seg_of_col = Vec::with_capacity(marks.len());
    let mut next_mark = 0;

    let mut v = ic.values.clone();
    let mut fft = Spectral::new(grid.n());
    fft.forward(&mut v);
    let mut physical = vec![Complex64::new(0.0, 0.0); grid.n()];

    for s in 0..=total_steps {
        let t = ic.time + s as f64 * dt;
        let seg = schedule.segment_at(t);
        while next_mark < marks.len() && marks[next_mark] == s {
            physical.copy_from_slice(&v);
            fft.inverse(&mut physical);
            data.column_mut(next_mark).copy_from_slice(&physical);
            times.push(t);
            seg_of_col.push(seg);
            next_mark += 1;
        }
        if s == total_steps {
            break;
        }
        let stepper = match &mut steppers[seg] {
            Some(st) => st,
            slot => slot.insert(Etdrk4::new(&grid, &schedule.segments()[seg].params, integrator)?),
        };
        stepper.step_spectral(&mut v);
        if !all_finite(&v) {
            return Err(Error::NonFiniteField { time: t + dt });
        }
    }

    fft.inverse(&mut v);
    let final_state = FieldState {
        grid,
        values: v,
        time: ic.time + total_steps as f64 * dt,
    };
    Ok((Trajectory { data, times, final_state }, seg_of_col))
}
