//! Sweeps over time, interaction and chain length, and the features read
//! off them: the first peak of `F/T²` (giving `F_max` and `τ`), the
//! interaction optimum `Ū`, and the mode-scaling table.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{eigensystem, EigenSystem, PeriodicStepper, MIN_STEPS_PER_PERIOD};
use crate::fock::{first_site_state, fock_state, noon_state, CVector, FockBasis, QuantumState};
use crate::metro::{
    check_gamma_step, default_gamma_step, scaled_qfi, GammaStencil, LocalGenerator, Method, QfiSeries,
};
use crate::model::{d_hamiltonian_d_gamma, hamiltonian, ModelKind, ModelParams};
use crate::observe::{correlator, dominant_pair, spectral_gap_tau, DominantPair};

/// Initial state recipe, resolved against a basis when the basis is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    /// `|N, 0, …, 0⟩`.
    #[default]
    Fock,
    Noon,
    Occupations(Vec<u32>),
}

impl StateSpec {
    pub fn build(&self, basis: &Arc<FockBasis>) -> Result<QuantumState> {
        match self {
            StateSpec::Fock => Ok(first_site_state(basis)),
            StateSpec::Noon => Ok(noon_state(basis)),
            StateSpec::Occupations(occ) => fock_state(basis, occ),
        }
    }
}

pub fn basis_for(params: &ModelParams) -> Result<Arc<FockBasis>> {
    Ok(Arc::new(FockBasis::new(params.n_particles, params.n_modes)?))
}

/// Knobs that are not physics: drive resolution and the `δγ` override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub steps_per_period: usize,
    pub gamma_step: Option<f64>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            steps_per_period: MIN_STEPS_PER_PERIOD,
            gamma_step: None,
        }
    }
}

pub(crate) fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::domain(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain(format!("{name} axis has non-finite entries")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    check_axis("T", times)?;
    if times[0] < 0.0 {
        return Err(Error::domain("times must be non-negative"));
    }
    Ok(())
}

/// `points` equally spaced times on `(0, t_end]`.
pub fn uniform_times(t_end: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|k| t_end * k as f64 / points as f64).collect()
}

fn summarize_warnings(found: Vec<String>, total: usize) -> Vec<String> {
    match found.first() {
        None => Vec::new(),
        Some(first) if found.len() == 1 => vec![first.clone()],
        Some(first) => vec![format!("{} of {total} points: {first}", found.len())],
    }
}

pub fn qfi_time_series(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    times: &[f64],
    method: Method,
) -> Result<QfiSeries> {
    qfi_time_series_with(kind, params, psi0, times, method, &SeriesOptions::default())
}

/// QFI at each time of `times`, by the requested route.
///
/// The generator routes need a time-independent model. The periodically
/// forced chain has no tilt to estimate and is rejected.
pub fn qfi_time_series_with(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    times: &[f64],
    method: Method,
    options: &SeriesOptions,
) -> Result<QfiSeries> {
    check_times(times)?;
    params.validate()?;
    let basis = psi0.basis();
    if basis.n_particles() != params.n_particles || basis.n_modes() != params.n_modes {
        return Err(Error::domain(format!(
            "state lives in N={}, M={} but the model has N={}, M={}",
            basis.n_particles(),
            basis.n_modes(),
            params.n_particles,
            params.n_modes
        )));
    }
    if kind == ModelKind::PeriodicForce {
        return Err(Error::domain("the periodically forced chain carries no tilt parameter"));
    }
    match method {
        Method::FiniteDifference => fd_series(kind, params, psi0, times, options),
        Method::Generator | Method::GeneratorTwoLevel => {
            if kind.is_time_dependent() {
                return Err(Error::domain(format!(
                    "the {method} route needs a time-independent model, not {kind}"
                )));
            }
            generator_series(kind, params, psi0, times, method)
        }
    }
}

fn generator_series(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    times: &[f64],
    method: Method,
) -> Result<QfiSeries> {
    let basis = psi0.basis();
    let eig = eigensystem(&hamiltonian(kind, params, basis, 0.0)?)?;
    let dh = d_hamiltonian_d_gamma(params, basis, kind, 0.0)?;
    let generator = LocalGenerator::new(eig, &dh)?;
    let coeffs = generator.eigensystem().to_eigenbasis(psi0.amplitudes());
    let mut warnings = Vec::new();
    let pair = if method == Method::GeneratorTwoLevel {
        if basis.dim() < 3 {
            return Err(Error::domain("two-level truncation needs a basis of dimension at least 3"));
        }
        let overlaps: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
        let pair = dominant_pair(&overlaps);
        if pair.flagged() {
            warnings.push(pair_warning(&pair));
        }
        Some(pair)
    } else {
        None
    };

    let rows: Vec<(f64, f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let c = match pair {
                Some(p) => generator.truncated_qfi_at(&coeffs, t, p.first, p.second),
                None => generator.qfi_at(&coeffs, t),
            };
            let g = state_correlator(basis, generator.eigensystem().propagate(psi0.amplitudes(), t));
            (c.qfi, c.var_linear, c.var_oscillating, g)
        })
        .collect();
    let qfi: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let var_l = rows.iter().map(|r| r.1).collect();
    let var_o = rows.iter().map(|r| r.2).collect();
    let corr = rows.iter().map(|r| r.3).collect();
    Ok(QfiSeries {
        qfi_over_t2: scaled(&qfi, times),
        times: times.to_vec(),
        qfi,
        var_linear: Some(var_l),
        var_oscillating: Some(var_o),
        correlator: corr,
        params: params.clone(),
        kind,
        method,
        warnings,
    })
}

fn pair_warning(pair: &DominantPair) -> String {
    let why = if pair.tie { "overlap tie" } else { "overlap concentrated on one eigenstate" };
    format!("{why}: using eigenpair ({}, {})", pair.first, pair.second)
}

fn state_correlator(basis: &Arc<FockBasis>, amplitudes: CVector) -> f64 {
    correlator(&QuantumState::from_unitary_image(basis.clone(), amplitudes))
}

fn scaled(qfi: &[f64], times: &[f64]) -> Vec<f64> {
    qfi.iter().zip(times).map(|(&f, &t)| scaled_qfi(f, t)).collect()
}

fn fd_series(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    times: &[f64],
    options: &SeriesOptions,
) -> Result<QfiSeries> {
    let basis = psi0.basis();
    let step = options.gamma_step.unwrap_or_else(|| default_gamma_step(params.gamma));
    check_gamma_step(params.gamma, step)?;
    let shifted: Vec<ModelParams> = GammaStencil::offsets(step)
        .iter()
        .map(|d| params.clone().with_gamma(params.gamma + d))
        .collect();

    // states[s][k]: stencil member s at times[k]
    let states: Vec<Vec<CVector>> = if kind.is_time_dependent() {
        shifted
            .par_iter()
            .map(|p| PeriodicStepper::new(kind, p, basis, options.steps_per_period)?.states_at(psi0.amplitudes(), times))
            .collect::<Result<_>>()?
    } else {
        shifted
            .par_iter()
            .map(|p| {
                let eig: EigenSystem = eigensystem(&hamiltonian(kind, p, basis, 0.0)?)?;
                Ok(times.par_iter().map(|&t| eig.propagate(psi0.amplitudes(), t)).collect())
            })
            .collect::<Result<_>>()?
    };

    let mut qfi = Vec::with_capacity(times.len());
    let mut corr = Vec::with_capacity(times.len());
    let mut found = Vec::new();
    for k in 0..times.len() {
        let stencil = GammaStencil {
            center: states[0][k].clone(),
            plus: states[1][k].clone(),
            minus: states[2][k].clone(),
            plus_half: states[3][k].clone(),
            minus_half: states[4][k].clone(),
        };
        let fd = stencil.qfi(step);
        if let Some(w) = fd.warning {
            found.push(format!("T={}: {w}", times[k]));
        }
        qfi.push(fd.qfi);
        corr.push(state_correlator(basis, stencil.center));
    }
    Ok(QfiSeries {
        qfi_over_t2: scaled(&qfi, times),
        times: times.to_vec(),
        qfi,
        var_linear: None,
        var_oscillating: None,
        correlator: corr,
        params: params.clone(),
        kind,
        method: Method::FiniteDifference,
        warnings: summarize_warnings(found, times.len()),
    })
}

/// First peak of `F/T²` and, after a `U` search, the optimum `Ū`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakResult {
    pub f_max: f64,
    pub tau: f64,
    pub u_bar: Option<f64>,
    /// No interior maximum was found; the values are the global grid maximum.
    pub boundary: bool,
    /// Grid index of the bracketing maximum.
    pub index: usize,
    /// Parabolic refinement was applied.
    pub refined: bool,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

/// Vertex of the parabola through three points with `x0 < x1 < x2`, when it
/// opens downward. The vertex abscissa is clamped to `[x0, x2]`.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let (d0, d2) = (x[0] - x[1], x[2] - x[1]);
    let (s0, s2) = ((y[0] - y[1]) / d0, (y[2] - y[1]) / d2);
    // y = y1 + b (x − x1) + a (x − x1)²
    let a = (s2 - s0) / (d2 - d0);
    let b = s0 - a * d0;
    if !(a < 0.0) || !a.is_finite() || !b.is_finite() {
        return None;
    }
    let dx = (-b / (2.0 * a)).clamp(d0, d2);
    Some((x[1] + dx, y[1] + b * dx + a * dx * dx))
}

/// Relative size of the rise that counts as the start of a peak.
pub const PEAK_NOISE: f64 = 1e-9;

/// First interior local maximum (`f[i−1] < f[i] ≥ f[i+1]`), parabolically
/// refined. Without one, the earliest global maximum is returned and flagged.
pub fn find_first_peak_in(times: &[f64], values: &[f64]) -> Result<PeakResult> {
    if times.len() != values.len() {
        return Err(Error::domain("times and values differ in length"));
    }
    if times.len() < 5 {
        return Err(Error::domain(format!(
            "peak search needs at least 5 points, got {}",
            times.len()
        )));
    }
    let n = times.len();
    let base = |index, f_max, tau, boundary, refined| PeakResult {
        f_max,
        tau,
        u_bar: None,
        boundary,
        index,
        refined,
        t_start: times[0],
        t_end: times[n - 1],
        points: n,
    };
    // rises below this are rounding noise on a flat series
    let noise = PEAK_NOISE * values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for i in 1..n - 1 {
        if values[i] - values[i - 1] > noise && values[i] >= values[i + 1] {
            let x = [times[i - 1], times[i], times[i + 1]];
            let y = [values[i - 1], values[i], values[i + 1]];
            return Ok(match parabolic_vertex(x, y) {
                Some((tau, f)) => base(i, f.max(values[i]), tau, false, true),
                None => base(i, values[i], times[i], false, false),
            });
        }
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Ok(base(best, values[best], times[best], true, false))
}

pub fn find_first_peak(series: &QfiSeries) -> Result<PeakResult> {
    find_first_peak_in(&series.times, &series.qfi_over_t2)
}

/// Time window for first-peak searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TWindow {
    pub points: usize,
    /// Defaults to `3M/2`.
    pub t_end: Option<f64>,
    /// Times the window (and point count) is doubled while the peak sits on the boundary.
    pub max_extensions: usize,
}

impl Default for TWindow {
    fn default() -> Self {
        TWindow {
            points: 400,
            t_end: None,
            max_extensions: 5,
        }
    }
}

impl TWindow {
    pub fn end_for(&self, n_modes: usize) -> f64 {
        self.t_end.unwrap_or(1.5 * n_modes as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.points < 5 {
            return Err(Error::domain("T window needs at least 5 points"));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::domain("T window end must be positive"));
            }
        }
        Ok(())
    }
}

/// First peak on `(0, T_end]`, doubling the window while the peak is on its edge.
pub fn first_peak_adaptive(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    method: Method,
    window: &TWindow,
    options: &SeriesOptions,
) -> Result<(PeakResult, QfiSeries)> {
    window.validate()?;
    let mut t_end = window.end_for(params.n_modes);
    let mut points = window.points;
    let mut extensions = 0;
    let mut series = qfi_time_series_with(kind, params, psi0, &uniform_times(t_end, points), method, options)?;
    loop {
        let peak = find_first_peak(&series)?;
        if !peak.boundary || extensions >= window.max_extensions {
            return Ok((peak, series));
        }
        t_end *= 2.0;
        points *= 2;
        extensions += 1;
        // the doubled grid repeats the current one, so only the tail is new
        let times = uniform_times(t_end, points);
        let tail = qfi_time_series_with(kind, params, psi0, &times[series.times.len()..], method, options)?;
        series.append(tail);
    }
}

/// `F/T²` over a `T × U` grid, with `𝒢^(N)` and, for generator routes, the part variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub t_axis: Vec<f64>,
    pub u_axis: Vec<f64>,
    /// `values[i][j]` at `(t_axis[i], u_axis[j])`.
    pub values: Vec<Vec<f64>>,
    pub correlator: Vec<Vec<f64>>,
    pub var_linear: Option<Vec<Vec<f64>>>,
    pub var_oscillating: Option<Vec<Vec<f64>>>,
    pub params: ModelParams,
    pub kind: ModelKind,
    pub method: Method,
    pub warnings: Vec<String>,
}

fn transpose(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = columns.first().map_or(0, |c| c.len());
    (0..rows).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

pub fn scan_tu(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    t_axis: &[f64],
    u_axis: &[f64],
    method: Method,
    options: &SeriesOptions,
) -> Result<ScanGrid> {
    check_times(t_axis)?;
    check_axis("U", u_axis)?;
    let columns: Vec<QfiSeries> = u_axis
        .par_iter()
        .map(|&u| qfi_time_series_with(kind, &params.clone().with_u(u), psi0, t_axis, method, options))
        .collect::<Result<_>>()?;
    let pick = |f: fn(&QfiSeries) -> Option<&Vec<f64>>| -> Option<Vec<Vec<f64>>> {
        let cols: Option<Vec<Vec<f64>>> = columns.iter().map(|s| f(s).cloned()).collect();
        cols.map(|c| transpose(&c))
    };
    let warnings = columns
        .iter()
        .zip(u_axis)
        .flat_map(|(s, u)| s.warnings.iter().map(move |w| format!("U={u}: {w}")))
        .collect();
    Ok(ScanGrid {
        t_axis: t_axis.to_vec(),
        u_axis: u_axis.to_vec(),
        values: pick(|s| Some(&s.qfi_over_t2)).unwrap_or_default(),
        correlator: pick(|s| Some(&s.correlator)).unwrap_or_default(),
        var_linear: pick(|s| s.var_linear.as_ref()),
        var_oscillating: pick(|s| s.var_oscillating.as_ref()),
        params: params.clone(),
        kind,
        method,
        warnings,
    })
}

/// Optimum over a `U` axis together with the first peak found at every `U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UbarResult {
    pub peak: PeakResult,
    pub per_u: Vec<(f64, PeakResult)>,
}

/// Neighbouring first peaks whose `τ` differ by more than this fraction
/// belong to different peaks of `F/T²` and are not interpolated across.
pub const BRANCH_TAU_RATIO: f64 = 0.25;

/// `Ū = argmax_U F_max(U)` over non-boundary peaks, refined by a parabola in `U`
/// when the neighbouring peaks lie on the same branch.
pub fn find_ubar(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    u_axis: &[f64],
    window: &TWindow,
    method: Method,
    options: &SeriesOptions,
) -> Result<UbarResult> {
    check_axis("U", u_axis)?;
    let per_u: Vec<(f64, PeakResult)> = u_axis
        .par_iter()
        .map(|&u| {
            first_peak_adaptive(kind, &params.clone().with_u(u), psi0, method, window, options).map(|(p, _)| (u, p))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = None;
    for (j, (_, p)) in per_u.iter().enumerate() {
        if !p.boundary && best.is_none_or(|b| p.f_max > per_u[b].1.f_max) {
            best = Some(j);
        }
    }
    let Some(j) = best else {
        return Err(Error::InconclusiveScan(format!(
            "every first peak over {} interaction values sits on the window boundary",
            u_axis.len()
        )));
    };
    let mut peak = per_u[j].1.clone();
    peak.u_bar = Some(u_axis[j]);
    // a parabola only makes sense when the neighbours' peaks continue the same branch
    let same_branch = |k: usize| {
        let (p, c) = (&per_u[k].1, &per_u[j].1);
        !p.boundary && (p.tau - c.tau).abs() <= BRANCH_TAU_RATIO * c.tau
    };
    if j > 0 && j + 1 < per_u.len() && same_branch(j - 1) && same_branch(j + 1) {
        let x = [u_axis[j - 1], u_axis[j], u_axis[j + 1]];
        let y = [per_u[j - 1].1.f_max, per_u[j].1.f_max, per_u[j + 1].1.f_max];
        if let Some((u, f)) = parabolic_vertex(x, y) {
            peak.u_bar = Some(u);
            peak.f_max = f.max(peak.f_max);
            peak.refined = true;
        }
    }
    Ok(UbarResult { peak, per_u })
}

/// One line of the mode-scaling table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_modes: usize,
    pub peak: Option<PeakResult>,
    /// `F_max^(M) / F_max^(2)`.
    pub ratio_to_two_modes: Option<f64>,
    /// `F_max / (N(M−1))²`, i.e. `F(τ)/F_HL(τ)`.
    pub ratio_to_heisenberg: Option<f64>,
    /// Set when this `M` exceeds the dimension cap.
    pub error: Option<String>,
}

fn peak_for_modes(
    kind: ModelKind,
    params: &ModelParams,
    m: usize,
    state: &StateSpec,
    method: Method,
    window: &TWindow,
    options: &SeriesOptions,
) -> Result<PeakResult> {
    let mut p = params.clone();
    p.n_modes = m;
    let basis = basis_for(&p)?;
    let psi0 = state.build(&basis)?;
    first_peak_adaptive(kind, &p, &psi0, method, window, options).map(|(peak, _)| peak)
}

/// First peak for each `M`, sorted ascending; rows past the dimension cap
/// carry the error and the rest are still computed. Fails if no row fits.
pub fn scaling_study(
    kind: ModelKind,
    params: &ModelParams,
    m_axis: &[usize],
    state: &StateSpec,
    method: Method,
    window: &TWindow,
    options: &SeriesOptions,
) -> Result<Vec<ScalingRow>> {
    if m_axis.is_empty() {
        return Err(Error::domain("M axis is empty"));
    }
    let mut ms = m_axis.to_vec();
    ms.sort_unstable();
    ms.dedup();
    if ms[0] < 2 {
        return Err(Error::domain("every M must be at least 2"));
    }
    let mut wanted = ms.clone();
    if ms[0] != 2 {
        wanted.insert(0, 2);
    }
    let peaks: Vec<Result<PeakResult>> = wanted
        .par_iter()
        .map(|&m| peak_for_modes(kind, params, m, state, method, window, options))
        .collect();
    if let Some(Err(e)) = peaks.iter().find(|p| p.is_err()).filter(|_| peaks.iter().all(|p| p.is_err())) {
        // nothing fits under the cap
        return Err(e.clone());
    }
    let mut rows = Vec::with_capacity(ms.len());
    let mut reference = None;
    for (&m, peak) in wanted.iter().zip(peaks) {
        let row = match peak {
            Ok(p) => ScalingRow {
                n_modes: m,
                ratio_to_two_modes: None,
                ratio_to_heisenberg: Some({
                    let span = (params.n_particles * (m - 1)) as f64;
                    p.f_max / (span * span)
                }),
                peak: Some(p),
                error: None,
            },
            Err(e @ Error::DimensionCap { .. }) => ScalingRow {
                n_modes: m,
                peak: None,
                ratio_to_two_modes: None,
                ratio_to_heisenberg: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        if m == 2 {
            reference = row.peak.as_ref().map(|p| p.f_max);
        }
        if ms.contains(&m) {
            rows.push(row);
        }
    }
    for row in &mut rows {
        if let (Some(p), Some(r)) = (&row.peak, reference) {
            row.ratio_to_two_modes = Some(if row.n_modes == 2 { 1.0 } else { p.f_max / r });
        }
    }
    Ok(rows)
}

/// Spectrum and overlap diagnostics at one interaction strength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub u: f64,
    pub energies: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub pair: DominantPair,
    /// `None` when the dominant pair is degenerate.
    pub omega: Option<f64>,
    pub tau_estimate: Option<f64>,
}

pub fn spectrum_sweep(
    kind: ModelKind,
    params: &ModelParams,
    psi0: &QuantumState,
    u_axis: &[f64],
) -> Result<Vec<SpectrumRow>> {
    check_axis("U", u_axis)?;
    if kind.is_time_dependent() {
        return Err(Error::domain(format!("spectrum needs a time-independent model, not {kind}")));
    }
    let basis = psi0.basis();
    if basis.dim() < 2 {
        return Err(Error::domain("spectrum diagnostics need a basis of dimension at least 2"));
    }
    u_axis
        .par_iter()
        .map(|&u| {
            let eig = eigensystem(&hamiltonian(kind, &params.clone().with_u(u), basis, 0.0)?)?;
            let overlaps = crate::observe::eigenstate_overlaps(psi0, &eig)?;
            let pair = dominant_pair(&overlaps);
            let (omega, tau_estimate) = match spectral_gap_tau(&eig, &overlaps) {
                Ok(g) => (Some(g.omega), Some(g.tau)),
                Err(Error::DegeneratePair { .. }) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(SpectrumRow {
                u,
                energies: eig.energies,
                overlaps,
                pair,
                omega,
                tau_estimate,
            })
        })
        .collect()
}

/// Least-squares line `y = slope·x + intercept` and its `R²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("a line fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("a line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metro::heisenberg_limit;
    use crate::model::KCoefficient;
    use proptest::prelude::*;

    fn setup(n: usize, m: usize) -> (ModelParams, Arc<FockBasis>) {
        let p = ModelParams::chain(n, m);
        let b = basis_for(&p).unwrap();
        (p, b)
    }

    #[test]
    fn tilt_noon_series_is_flat_at_heisenberg_limit() {
        let (mut p, b) = setup(2, 4);
        p.j = 0.0;
        let times = uniform_times(3.0, 12);
        for method in [Method::FiniteDifference, Method::Generator] {
            let s = qfi_time_series(ModelKind::Tilt, &p, &noon_state(&b), &times, method).unwrap();
            for (k, v) in s.qfi_over_t2.iter().enumerate() {
                assert!((v - 36.0).abs() < 1e-6 * 36.0, "{method} k={k} {v}");
                assert!((s.qfi[k] - heisenberg_limit(2, 4, times[k])).abs() < 1e-5 * s.qfi[k]);
            }
        }
    }

    #[test]
    fn single_time_and_zero_time() {
        let (p, b) = setup(2, 3);
        let s = qfi_time_series(ModelKind::Effective, &p, &first_site_state(&b), &[0.7], Method::Generator).unwrap();
        assert_eq!(s.times.len(), 1);
        let s = qfi_time_series(ModelKind::Effective, &p, &first_site_state(&b), &[0.0, 1.0], Method::Generator).unwrap();
        assert_eq!(s.qfi_over_t2[0], 0.0);
    }

    #[test]
    fn bad_axes_are_rejected() {
        let (p, b) = setup(1, 2);
        let psi = first_site_state(&b);
        for times in [vec![], vec![1.0, 1.0], vec![2.0, 1.0], vec![-1.0, 1.0], vec![f64::NAN]] {
            assert!(qfi_time_series(ModelKind::Effective, &p, &psi, &times, Method::Generator).is_err());
        }
    }

    #[test]
    fn generator_route_rejects_driven_model() {
        let (p, b) = setup(1, 2);
        let r = qfi_time_series(ModelKind::Dbh, &p, &first_site_state(&b), &[1.0], Method::Generator);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = qfi_time_series(ModelKind::PeriodicForce, &p, &first_site_state(&b), &[1.0], Method::FiniteDifference);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let (p, _) = setup(2, 3);
        let other = basis_for(&ModelParams::chain(1, 3)).unwrap();
        let r = qfi_time_series(ModelKind::Effective, &p, &first_site_state(&other), &[1.0], Method::Generator);
        assert!(r.is_err());
    }

    #[test]
    fn peak_on_synthetic_series() {
        // sin²(t)/t peaks where tan t = 2t
        let f = |t: f64| t.sin().powi(2) / t;
        let dense: Vec<f64> = (0..10_000).map(|k| 0.1 + 3.9 * k as f64 / 9_999.0).collect();
        let reference = dense.iter().cloned().fold((0.0, f64::MIN), |acc, t| if f(t) > acc.1 { (t, f(t)) } else { acc });
        let coarse: Vec<f64> = (0..40).map(|k| 0.1 + 3.9 * k as f64 / 39.0).collect();
        let values: Vec<f64> = coarse.iter().map(|&t| f(t)).collect();
        let peak = find_first_peak_in(&coarse, &values).unwrap();
        assert!(!peak.boundary && peak.refined);
        assert!((peak.tau - reference.0).abs() < 0.1);
        assert!((peak.tau - reference.0).abs() < (coarse[peak.index] - reference.0).abs() + 1e-3);
    }

    #[test]
    fn boundary_peaks() {
        let t: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let up = find_first_peak_in(&t, &t).unwrap();
        assert!(up.boundary);
        assert_eq!(up.tau, 6.0);
        let flat = find_first_peak_in(&t, &[2.0; 6]).unwrap();
        assert!(flat.boundary);
        assert_eq!(flat.index, 0);
        assert!(find_first_peak_in(&t[..4], &t[..4]).is_err());
    }

    #[test]
    fn parabola_vertex_nonuniform() {
        let g = |x: f64| 3.0 - 2.0 * (x - 1.3) * (x - 1.3);
        let x = [0.9, 1.2, 2.0];
        let (xv, yv) = parabolic_vertex(x, x.map(g)).unwrap();
        assert!((xv - 1.3).abs() < 1e-12 && (yv - 3.0).abs() < 1e-12);
        assert!(parabolic_vertex([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]).is_none());
    }

    #[test]
    fn one_by_one_grid_matches_direct_call() {
        let (p, b) = setup(2, 3);
        let psi = first_site_state(&b);
        let g = scan_tu(ModelKind::Effective, &p, &psi, &[2.5], &[0.8], Method::Generator, &SeriesOptions::default()).unwrap();
        let s = qfi_time_series(ModelKind::Effective, &p.clone().with_u(0.8), &psi, &[2.5], Method::Generator).unwrap();
        assert_eq!(g.values, vec![vec![s.qfi_over_t2[0]]]);
    }

    #[test]
    fn grid_cells_are_pure() {
        let (p, b) = setup(2, 3);
        let psi = first_site_state(&b);
        let t_axis = uniform_times(4.0, 6);
        let u_axis = [0.0, 0.5, 1.0];
        for (kind, method) in [(ModelKind::Effective, Method::Generator), (ModelKind::Dbh, Method::FiniteDifference)] {
            let g = scan_tu(kind, &p, &psi, &t_axis, &u_axis, method, &SeriesOptions::default()).unwrap();
            assert_eq!(g.values.len(), t_axis.len());
            let (i, j) = (4, 1);
            let single = qfi_time_series(kind, &p.clone().with_u(u_axis[j]), &psi, &[t_axis[i]], method).unwrap();
            assert!((single.qfi_over_t2[0] - g.values[i][j]).abs() <= 1e-12 * g.values[i][j].abs().max(1.0));
        }
    }

    #[test]
    fn zero_interaction_column_reproduces_series() {
        let (p, b) = setup(2, 3);
        let psi = first_site_state(&b);
        let t_axis = uniform_times(4.0, 8);
        let g = scan_tu(ModelKind::Effective, &p, &psi, &t_axis, &[0.0], Method::Generator, &SeriesOptions::default()).unwrap();
        let s = qfi_time_series(ModelKind::Effective, &p.clone().with_u(0.0), &psi, &t_axis, Method::Generator).unwrap();
        let col: Vec<f64> = g.values.iter().map(|r| r[0]).collect();
        assert_eq!(col, s.qfi_over_t2);
    }

    #[test]
    fn single_u_is_trivial_optimum() {
        let (p, b) = setup(1, 3);
        let r = find_ubar(ModelKind::Effective, &p, &first_site_state(&b), &[0.0], &TWindow::default(), Method::Generator, &SeriesOptions::default()).unwrap();
        assert_eq!(r.peak.u_bar, Some(0.0));
    }

    #[test]
    fn all_boundary_is_inconclusive() {
        let (mut p, b) = setup(1, 2);
        p.j = 0.0;
        p.k = KCoefficient::Fixed(0.0);
        // tilt-only NOON: F/T² is flat, so no interior peak exists
        let w = TWindow { points: 10, t_end: Some(1.0), max_extensions: 1 };
        let r = find_ubar(ModelKind::Tilt, &p, &noon_state(&b), &[0.0, 1.0], &w, Method::Generator, &SeriesOptions::default());
        assert!(matches!(r, Err(Error::InconclusiveScan(_))));
    }

    #[test]
    fn window_extends_when_peak_is_late() {
        let (p, b) = setup(1, 6);
        let w = TWindow { points: 50, t_end: Some(2.0), max_extensions: 5 };
        let (peak, series) = first_peak_adaptive(ModelKind::Effective, &p, &first_site_state(&b), Method::Generator, &w, &SeriesOptions::default()).unwrap();
        assert!(!peak.boundary);
        assert!(series.times.len() > 50);
    }

    #[test]
    fn scaling_rows_sorted_with_unit_self_ratio() {
        let p = ModelParams::chain(1, 2);
        let rows = scaling_study(ModelKind::Effective, &p, &[4, 2, 3], &StateSpec::Fock, Method::Generator, &TWindow::default(), &SeriesOptions::default()).unwrap();
        let ms: Vec<usize> = rows.iter().map(|r| r.n_modes).collect();
        assert_eq!(ms, vec![2, 3, 4]);
        assert_eq!(rows[0].ratio_to_two_modes, Some(1.0));
        let rows = scaling_study(ModelKind::Effective, &p, &[3], &StateSpec::Fock, Method::Generator, &TWindow::default(), &SeriesOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].ratio_to_two_modes.unwrap() > 1.0);
    }

    #[test]
    fn scaling_reports_cap_per_row() {
        let p = ModelParams::chain(6, 2);
        let rows = scaling_study(ModelKind::Effective, &p, &[2, 3, 40], &StateSpec::Fock, Method::Generator, &TWindow { points: 40, ..TWindow::default() }, &SeriesOptions::default()).unwrap();
        assert!(rows[0].peak.is_some() && rows[1].peak.is_some());
        assert!(rows[2].error.is_some() && rows[2].peak.is_none());

        let huge = ModelParams::chain(6000, 2);
        let all_capped = scaling_study(ModelKind::Effective, &huge, &[2, 3], &StateSpec::Fock, Method::Generator, &TWindow::default(), &SeriesOptions::default());
        assert!(matches!(all_capped, Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn spectrum_rows_are_ascending() {
        let (p, b) = setup(3, 3);
        let rows = spectrum_sweep(ModelKind::Effective, &p, &first_site_state(&b), &[0.0, 1.0, 2.0]).unwrap();
        for r in &rows {
            assert!(r.energies.windows(2).all(|w| w[0] <= w[1]));
            assert!((r.overlaps.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        let direct = eigensystem(&hamiltonian(ModelKind::Effective, &p.clone().with_u(0.0), &b, 0.0).unwrap()).unwrap();
        assert_eq!(rows[0].energies, direct.energies);
    }

    #[test]
    fn line_fit() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
        let g = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((g.r_squared - 0.2).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn state_spec_round_trip() {
        for (spec, text) in [
            (StateSpec::Fock, "\"fock\""),
            (StateSpec::Noon, "\"noon\""),
            (StateSpec::Occupations(vec![1, 2]), "{\"occupations\":[1,2]}"),
        ] {
            assert_eq!(serde_json::to_string(&spec).unwrap(), text);
            assert_eq!(serde_json::from_str::<StateSpec>(text).unwrap(), spec);
        }
        assert!(serde_json::from_str::<StateSpec>("\"vacuum\"").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn generator_and_fd_series_agree(u in 0.0..3.0f64, gamma in 25.0..40.0f64) {
            let p = ModelParams::chain(2, 3).with_u(u).with_gamma(gamma);
            let b = basis_for(&p).unwrap();
            let psi = first_site_state(&b);
            let times = uniform_times(5.0, 7);
            let g = qfi_time_series(ModelKind::Effective, &p, &psi, &times, Method::Generator).unwrap();
            let f = qfi_time_series(ModelKind::Effective, &p, &psi, &times, Method::FiniteDifference).unwrap();
            for k in 0..times.len() {
                prop_assert!((g.qfi[k] - f.qfi[k]).abs() <= 1e-6 * g.qfi[k].abs().max(1e-6));
                prop_assert!((g.correlator[k] - f.correlator[k]).abs() < 1e-12);
            }
        }
    }
}
