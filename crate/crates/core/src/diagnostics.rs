//! Time series of norms and the decay-rate diagnostics built on them.
//!
//! Every experiment in the crate reports its evolution as a [`NormSeries`]:
//! one row per sample with the L^2 norm in log domain (mandatory) and the
//! other norms and ratios when the producing model defines them. The checks
//! here are deliberately small and explicit: a windowed quadratic fit of
//! `log ||rho||_{L^2}` with a curvature-based classification, a linear fit of
//! the gradient ratio against its a priori growth bound, envelope checks for
//! one- and two-sided exponential bounds, and the mixing-scale stagnation
//! test.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {need} samples in the window, found {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("rows in the requested window do not carry `{0}`")]
    MissingColumn(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row {index}: {reason}")]
    MalformedRow { index: usize, reason: String },
}

/// One sample of an evolution. `log_l2` is always present; the remaining
/// columns are model-dependent and therefore optional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub log_l2: f64,
    pub log_h1: Option<f64>,
    pub log_hneg1: Option<f64>,
    pub mix_scale: Option<f64>,
    pub grad_ratio: Option<f64>,
    pub err_budget: Option<f64>,
}

impl NormRow {
    pub fn new(t: f64, log_l2: f64) -> Self {
        NormRow {
            t,
            log_l2,
            log_h1: None,
            log_hneg1: None,
            mix_scale: None,
            grad_ratio: None,
            err_budget: None,
        }
    }
}

/// Rows strictly increasing in `t`, all mandatory entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    rows: Vec<NormRow>,
    pub meta: String,
}

impl NormSeries {
    pub fn new(meta: impl Into<String>) -> Self {
        NormSeries { rows: Vec::new(), meta: meta.into() }
    }

    /// Appends a row; panics on a non-finite or non-monotone sample, which
    /// always indicates a producer bug rather than bad experimental data.
    pub fn push(&mut self, row: NormRow) {
        assert!(row.t.is_finite() && row.log_l2.is_finite(), "non-finite norm sample");
        if let Some(last) = self.rows.last() {
            assert!(row.t > last.t, "norm samples must be strictly increasing in t");
        }
        self.rows.push(row);
    }

    /// Fallible constructor for deserialized data.
    pub fn from_rows(
        meta: impl Into<String>,
        rows: Vec<NormRow>,
    ) -> Result<Self, DiagnosticsError> {
        for (i, row) in rows.iter().enumerate() {
            if !row.t.is_finite() || !row.log_l2.is_finite() {
                return Err(DiagnosticsError::MalformedRow {
                    index: i,
                    reason: "non-finite t or log_l2".into(),
                });
            }
            if i > 0 && row.t <= rows[i - 1].t {
                return Err(DiagnosticsError::MalformedRow {
                    index: i,
                    reason: "t not strictly increasing".into(),
                });
            }
        }
        Ok(NormSeries { rows, meta: meta.into() })
    }

    pub fn rows(&self) -> &[NormRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first(&self) -> Option<&NormRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&NormRow> {
        self.rows.last()
    }

    /// The default analysis window: the second half of the recorded span,
    /// which skips the initial transient of every experiment here.
    pub fn default_window(&self) -> Option<(f64, f64)> {
        let first = self.rows.first()?;
        let last = self.rows.last()?;
        Some((first.t + 0.5 * (last.t - first.t), last.t))
    }

    fn windowed(&self, window: Option<(f64, f64)>) -> Result<Vec<&NormRow>, DiagnosticsError> {
        let (lo, hi) = match window.or_else(|| self.default_window()) {
            Some(w) => w,
            None => return Err(DiagnosticsError::InsufficientData { have: 0, need: 1 }),
        };
        if !(lo < hi) {
            return Err(DiagnosticsError::InvalidParameter(format!(
                "window [{lo}, {hi}] is empty"
            )));
        }
        Ok(self.rows.iter().filter(|r| r.t >= lo && r.t <= hi).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Exponential,
    SuperExponential,
    SubExponential,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Exponential => "exponential",
            Classification::SuperExponential => "super_exponential",
            Classification::SubExponential => "sub_exponential",
        };
        f.write_str(s)
    }
}

/// Windowed least-squares quadratic fit of `log ||rho||_{L^2}`.
///
/// `slope` is the tangent slope of the fitted parabola at the window
/// midpoint (the decay rate there, per unit `t`); `curvature` is the
/// quadratic coefficient. The classification compares the curvature against
/// `curv_tol * |slope| / window_width`: within that band the window is
/// declared a straight line (exponential decay); below it, concave
/// (super-exponential); above it, convex (sub-exponential).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub curvature: f64,
    pub classification: Classification,
    pub window: (f64, f64),
    pub samples: usize,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FitParams {
    /// Relative curvature tolerance for the straight-line verdict.
    pub curv_tol: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams { curv_tol: 0.02 }
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_log_norm(
    series: &NormSeries,
    window: Option<(f64, f64)>,
) -> Result<DecayFit, DiagnosticsError> {
    fit_log_norm_with(series, window, &FitParams::default())
}

pub fn fit_log_norm_with(
    series: &NormSeries,
    window: Option<(f64, f64)>,
    params: &FitParams,
) -> Result<DecayFit, DiagnosticsError> {
    if !(params.curv_tol > 0.0) {
        return Err(DiagnosticsError::InvalidParameter("curv_tol must be positive".into()));
    }
    let rows = series.windowed(window)?;
    if rows.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData { have: rows.len(), need: MIN_FIT_SAMPLES });
    }
    let t_lo = rows.first().unwrap().t;
    let t_hi = rows.last().unwrap().t;
    let mid = 0.5 * (t_lo + t_hi);
    // Quadratic least squares in the centered variable s = t - mid; the
    // centering keeps the normal equations well conditioned on any window.
    let (mut m0, mut m1, mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for r in &rows {
        let s = r.t - mid;
        let (s2, s3) = (s * s, s * s * s);
        m0 += 1.0;
        m1 += s;
        m2 += s2;
        m3 += s3;
        m4 += s2 * s2;
        b0 += r.log_l2;
        b1 += s * r.log_l2;
        b2 += s2 * r.log_l2;
    }
    let (c0, c1, c2) = solve_3x3(
        [[m0, m1, m2], [m1, m2, m3], [m2, m3, m4]],
        [b0, b1, b2],
    )
    .ok_or_else(|| DiagnosticsError::InvalidParameter("degenerate fit window".into()))?;
    let mut resid = 0.0;
    for r in &rows {
        let s = r.t - mid;
        let d = r.log_l2 - (c0 + c1 * s + c2 * s * s);
        resid += d * d;
    }
    let width = t_hi - t_lo;
    let threshold = params.curv_tol * c1.abs() / width;
    let classification = if c2 < -threshold {
        Classification::SuperExponential
    } else if c2 > threshold {
        Classification::SubExponential
    } else {
        Classification::Exponential
    };
    Ok(DecayFit {
        slope: c1,
        curvature: c2,
        classification,
        window: (t_lo, t_hi),
        samples: rows.len(),
        residual_rms: (resid / rows.len() as f64).sqrt(),
    })
}

fn solve_3x3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<(f64, f64, f64)> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut cols = [0.0; 3];
    for j in 0..3 {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = b[i];
        }
        cols[j] = det(m) / d;
    }
    Some((cols[0], cols[1], cols[2]))
}

/// Outcome of the gradient-ratio growth test.
///
/// The a priori energy argument bounds the growth of
/// `log(||rho||_{H^1} / ||rho||_{L^2})` by a rate proportional to
/// `||u||_inf^2 / mu`; a weaker reading of the same computation yields a
/// candidate proportional to `||u||_inf / mu`. The check adjudicates against
/// the quadratic candidate `u_inf^2 / (4 mu)` and reports both so a caller
/// can see how much headroom either reading leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioGrowthReport {
    pub fitted_rate: f64,
    pub bound_quadratic: f64,
    pub bound_linear: f64,
    pub passes: bool,
    pub window: (f64, f64),
}

pub fn ratio_growth_check(
    series: &NormSeries,
    mu: f64,
    u_inf: f64,
    window: Option<(f64, f64)>,
) -> Result<RatioGrowthReport, DiagnosticsError> {
    if !(mu > 0.0) {
        return Err(DiagnosticsError::InvalidParameter("mu must be positive".into()));
    }
    if !(u_inf >= 0.0) {
        return Err(DiagnosticsError::InvalidParameter("u_inf must be nonnegative".into()));
    }
    let rows = series.windowed(window)?;
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.grad_ratio.map(|g| (r.t, g)))
        .collect();
    if samples.len() < rows.len() {
        return Err(DiagnosticsError::MissingColumn("grad_ratio"));
    }
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData {
            have: samples.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    if samples.iter().any(|(_, g)| !(*g > 0.0)) {
        return Err(DiagnosticsError::InvalidParameter(
            "grad_ratio must be strictly positive to fit in log domain".into(),
        ));
    }
    // Linear least squares of log(grad_ratio) against t.
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = samples.iter().map(|(_, g)| g.ln()).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (t, g) in &samples {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (g.ln() - mean_y);
    }
    if stt == 0.0 {
        return Err(DiagnosticsError::InvalidParameter("degenerate fit window".into()));
    }
    let fitted_rate = sty / stt;
    let bound_quadratic = u_inf * u_inf / (4.0 * mu);
    let bound_linear = u_inf / (4.0 * mu);
    Ok(RatioGrowthReport {
        fitted_rate,
        bound_quadratic,
        bound_linear,
        passes: fitted_rate <= bound_quadratic + 1e-12,
        window: (samples[0].0, samples[samples.len() - 1].0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// Lower envelope `c.0 * exp(-c.1 * t) <= ||rho(t)||`; `c.2` is unused.
    SingleExp,
    /// Lower envelope `c.0 * exp(-c.1 * exp(c.2 * t)) <= ||rho(t)||`.
    DoubleExp,
}

/// Floating slack applied to envelope comparisons so that a bound extracted
/// from the series itself verifies against it.
const ENVELOPE_SLACK: f64 = 1e-9;

/// True iff every sample respects the lower envelope of the given kind.
pub fn envelope_check(series: &NormSeries, c: (f64, f64, f64), kind: EnvelopeKind) -> bool {
    if !(c.0 > 0.0) {
        return false;
    }
    series.rows().iter().all(|row| {
        let floor = match kind {
            EnvelopeKind::SingleExp => c.0.ln() - c.1 * row.t,
            EnvelopeKind::DoubleExp => c.0.ln() - c.1 * (c.2 * row.t).exp(),
        };
        row.log_l2 >= floor - ENVELOPE_SLACK * (1.0 + floor.abs())
    })
}

/// The tightest single-exponential decay rate consistent with the series:
/// `max over samples t > 0 of -log(||rho(t)|| / ||rho(0)||) / t`. The pair
/// `(||rho(0)||, rate)` always passes [`envelope_check`] on the same series.
pub fn extract_decay_rate(series: &NormSeries) -> Result<f64, DiagnosticsError> {
    let rows = series.rows();
    if rows.len() < 2 {
        return Err(DiagnosticsError::InsufficientData { have: rows.len(), need: 2 });
    }
    let log0 = rows[0].log_l2;
    let t0 = rows[0].t;
    let mut rate = f64::NEG_INFINITY;
    for row in &rows[1..] {
        rate = rate.max(-(row.log_l2 - log0) / (row.t - t0));
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagnationReport {
    pub infimum: f64,
    pub floor: f64,
    pub passes: bool,
    pub window: (f64, f64),
}

pub const DEFAULT_STAGNATION_FLOOR: f64 = 1e-4;

/// Passes iff the recorded mixing scale stays above the floor throughout the
/// window: the scalar keeps a definite coarse scale instead of mixing down
/// indefinitely.
pub fn stagnation_check(
    series: &NormSeries,
    window: Option<(f64, f64)>,
) -> Result<StagnationReport, DiagnosticsError> {
    stagnation_check_with(series, window, DEFAULT_STAGNATION_FLOOR)
}

pub fn stagnation_check_with(
    series: &NormSeries,
    window: Option<(f64, f64)>,
    floor: f64,
) -> Result<StagnationReport, DiagnosticsError> {
    if !(floor > 0.0) {
        return Err(DiagnosticsError::InvalidParameter("stagnation floor must be positive".into()));
    }
    let rows = series.windowed(window)?;
    if rows.is_empty() {
        return Err(DiagnosticsError::InsufficientData { have: 0, need: 1 });
    }
    let scales: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.mix_scale.map(|m| (r.t, m))).collect();
    if scales.len() < rows.len() {
        return Err(DiagnosticsError::MissingColumn("mix_scale"));
    }
    let infimum = scales.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    Ok(StagnationReport {
        infimum,
        floor,
        passes: infimum > floor,
        window: (scales[0].0, scales[scales.len() - 1].0),
    })
}
