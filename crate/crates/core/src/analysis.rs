//! Specularity analysis of a cloud time series: hard-wall comparison of the
//! mean height and a linear-fit residual test on the lateral expansion.

use std::fmt;

use crate::constants::G_GRAV;
use crate::ensemble::CloudTimeSeries;
use crate::error::AnalysisError;

/// Default pre-reflection fit window [s].
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.0, 15e-3);
/// Default half-width of the exclusion interval around each bounce [s].
pub const DEFAULT_GUARD: f64 = 5e-3;
pub const DEFAULT_THRESHOLD_SIGMA: f64 = 3.0;

/// Height of a point mass released at rest from `h0` bouncing elastically
/// on y = 0.
pub fn ideal_bounce_trajectory(h0: f64, t: f64) -> f64 {
    let fall = (2.0 * h0 / G_GRAV).sqrt();
    let period = 2.0 * fall;
    let phase = t.rem_euclid(period);
    let tau = if phase <= fall { phase } else { period - phase };
    (h0 - 0.5 * G_GRAV * tau * tau).max(0.0)
}

/// Largest |mean_y − hard-wall height| over the snapshots.
pub fn mean_height_deviation(series: &CloudTimeSeries, h0: f64) -> f64 {
    series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0)
        .map(|s| (s.mean_y - ideal_bounce_trajectory(h0, s.t)).abs())
        .fold(0.0, f64::max)
}

/// Same as [`mean_height_deviation`], skipping snapshots within `guard` of
/// a hard-wall impact time.
pub fn mean_height_deviation_away_from_impacts(
    series: &CloudTimeSeries,
    h0: f64,
    guard: f64,
) -> f64 {
    let fall = (2.0 * h0 / G_GRAV).sqrt();
    series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0)
        .filter(|s| {
            // Impacts sit at odd multiples of the fall time.
            let k = ((s.t / fall - 1.0) / 2.0).round().max(0.0);
            let impact = (2.0 * k + 1.0) * fall;
            (s.t - impact).abs() > guard
        })
        .map(|s| (s.mean_y - ideal_bounce_trajectory(h0, s.t)).abs())
        .fold(0.0, f64::max)
}

/// Times of interior local minima of `mean_y`.
pub fn detect_bounces(series: &CloudTimeSeries) -> Vec<f64> {
    local_extrema(series, |a, b| a < b)
}

/// Times of interior local maxima of `mean_y`.
pub fn detect_apexes(series: &CloudTimeSeries) -> Vec<f64> {
    local_extrema(series, |a, b| a > b)
}

fn local_extrema(series: &CloudTimeSeries, beats: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let s: Vec<_> = series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0)
        .collect();
    s.windows(3)
        .filter(|w| beats(w[1].mean_y, w[0].mean_y) && beats(w[1].mean_y, w[2].mean_y))
        .map(|w| w[1].t)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionFit {
    /// Fitted expansion rate [m/s].
    pub slope: f64,
    pub intercept: f64,
    pub fit_window: (f64, f64),
    /// (t, rms_x − line) for every snapshot with survivors.
    pub residuals: Vec<(f64, f64)>,
    /// Rms of the residuals inside the fit window [m].
    pub residual_rms: f64,
    pub n_fit: usize,
}

impl ExpansionFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }

    pub fn in_window(&self, t: f64) -> bool {
        t >= self.fit_window.0 && t < self.fit_window.1
    }
}

/// Least-squares line through rms_x over `t_min ≤ t < t_max`.
pub fn fit_expansion(
    series: &CloudTimeSeries,
    window: (f64, f64),
) -> Result<ExpansionFit, AnalysisError> {
    let (t_min, t_max) = window;
    if !(t_max > t_min) {
        return Err(AnalysisError::InvalidWindow(format!(
            "fit window [{t_min}, {t_max}) is empty"
        )));
    }
    let pts: Vec<(f64, f64)> = series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0 && s.t >= t_min && s.t < t_max)
        .map(|s| (s.t, s.rms_x))
        .collect();
    if pts.len() < 3 {
        return Err(AnalysisError::TooFewFitSamples {
            t_min,
            t_max,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if stt == 0.0 {
        return Err(AnalysisError::DegenerateFit);
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;

    let residuals: Vec<(f64, f64)> = series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0)
        .map(|s| (s.t, s.rms_x - (slope * s.t + intercept)))
        .collect();
    let ss: f64 = pts
        .iter()
        .map(|&(t, y)| {
            let r = y - (slope * t + intercept);
            r * r
        })
        .sum();
    Ok(ExpansionFit {
        slope,
        intercept,
        fit_window: window,
        residuals,
        residual_rms: (ss / n).sqrt(),
        n_fit: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Specular,
    NonSpecular,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Specular => "specular",
            Verdict::NonSpecular => "non-specular",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecularityOptions {
    pub threshold_sigma: f64,
    /// Half-width of the excluded interval around each detected bounce [s].
    pub guard: f64,
}

impl Default for SpecularityOptions {
    fn default() -> Self {
        SpecularityOptions {
            threshold_sigma: DEFAULT_THRESHOLD_SIGMA,
            guard: DEFAULT_GUARD,
        }
    }
}

/// Classification of a residual sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowLabel {
    Fit,
    Guard,
    Post,
}

impl fmt::Display for WindowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowLabel::Fit => "fit",
            WindowLabel::Guard => "guard",
            WindowLabel::Post => "post",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecularityReport {
    pub pre_fit: ExpansionFit,
    pub post_window: (f64, f64),
    pub guard_intervals: Vec<(f64, f64)>,
    pub n_post: usize,
    pub post_residual_mean: f64,
    pub post_residual_rms: f64,
    /// Standard error used to normalise the post-window mean [m].
    pub standard_error: f64,
    /// post_residual_mean / standard_error.
    pub statistic: f64,
    pub threshold_sigma: f64,
    pub verdict: Verdict,
}

impl SpecularityReport {
    /// Window label of a residual at time `t`, if it falls in one.
    pub fn label(&self, t: f64) -> Option<WindowLabel> {
        label_for(
            t,
            self.pre_fit.fit_window,
            self.post_window,
            &self.guard_intervals,
        )
    }

    /// Residuals with their window label; unlabelled samples are dropped.
    pub fn labelled_residuals(&self) -> Vec<(f64, f64, WindowLabel)> {
        self.pre_fit
            .residuals
            .iter()
            .filter_map(|&(t, r)| self.label(t).map(|l| (t, r, l)))
            .collect()
    }
}

fn label_for(
    t: f64,
    fit: (f64, f64),
    post: (f64, f64),
    guards: &[(f64, f64)],
) -> Option<WindowLabel> {
    if t >= fit.0 && t < fit.1 {
        Some(WindowLabel::Fit)
    } else if guards.iter().any(|g| t >= g.0 && t <= g.1) {
        Some(WindowLabel::Guard)
    } else if t >= post.0 && t <= post.1 {
        Some(WindowLabel::Post)
    } else {
        None
    }
}

/// Compares post-reflection residuals of the expansion fit with zero.
///
/// The standard error combines the scatter of the pre-window residuals with
/// the sampling error of an rms width estimated from the surviving atoms,
/// σ/√(2N). Snapshots in the post window share the same atoms, so averaging
/// over them does not reduce it further.
pub fn specularity_test(
    series: &CloudTimeSeries,
    fit: &ExpansionFit,
    post_window: (f64, f64),
    opts: &SpecularityOptions,
) -> Result<SpecularityReport, AnalysisError> {
    let (p0, p1) = post_window;
    let (f0, f1) = fit.fit_window;
    if !(p1 > p0) {
        return Err(AnalysisError::InvalidWindow(format!(
            "post window [{p0}, {p1}] is empty"
        )));
    }
    if p0 < f1 {
        return Err(AnalysisError::InvalidWindow(format!(
            "post window [{p0}, {p1}] must start after the fit window [{f0}, {f1}) ends"
        )));
    }
    if !(opts.threshold_sigma > 0.0) || !(opts.guard >= 0.0) {
        return Err(AnalysisError::InvalidWindow(
            "threshold and guard must be non-negative".into(),
        ));
    }

    let guard_intervals: Vec<(f64, f64)> = detect_bounces(series)
        .into_iter()
        .map(|t| (t - opts.guard, t + opts.guard))
        .collect();
    let post: Vec<(f64, f64, usize)> = series
        .snapshots
        .iter()
        .filter(|s| s.n_survivors > 0)
        .filter(|s| label_for(s.t, fit.fit_window, post_window, &guard_intervals) == Some(WindowLabel::Post))
        .map(|s| (s.rms_x - fit.predict(s.t), s.rms_x, s.n_survivors))
        .collect();

    let n_post = post.len();
    let mut report = SpecularityReport {
        pre_fit: fit.clone(),
        post_window,
        guard_intervals,
        n_post,
        post_residual_mean: f64::NAN,
        post_residual_rms: f64::NAN,
        standard_error: f64::NAN,
        statistic: f64::NAN,
        threshold_sigma: opts.threshold_sigma,
        verdict: Verdict::Inconclusive,
    };
    if n_post == 0 {
        return Ok(report);
    }
    let n = n_post as f64;
    let mean = post.iter().map(|p| p.0).sum::<f64>() / n;
    let rms = (post.iter().map(|p| p.0 * p.0).sum::<f64>() / n).sqrt();
    let width = post.iter().map(|p| p.1).sum::<f64>() / n;
    let survivors = post.iter().map(|p| p.2 as f64).sum::<f64>() / n;
    let se = (fit.residual_rms.powi(2) + width * width / (2.0 * survivors)).sqrt();
    report.post_residual_mean = mean;
    report.post_residual_rms = rms;
    report.standard_error = se;
    report.statistic = mean / se;
    if n_post < 3 {
        return Ok(report);
    }
    report.verdict = if mean.abs() < opts.threshold_sigma * se {
        Verdict::Specular
    } else {
        Verdict::NonSpecular
    };
    Ok(report)
}

/// Default post window: from the end of the fit window to the first apex
/// after the first detected bounce, or to the end of the series.
pub fn default_post_window(series: &CloudTimeSeries, fit_window: (f64, f64)) -> (f64, f64) {
    let end = series.snapshots.last().map_or(fit_window.1, |s| s.t);
    let first_bounce = detect_bounces(series).first().copied();
    let apex = first_bounce.and_then(|tb| detect_apexes(series).into_iter().find(|&t| t > tb));
    (fit_window.1, apex.unwrap_or(end))
}
