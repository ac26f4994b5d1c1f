//! Output densities of the phaseless model and the quantities built on them.
//!
//! Given `X_eq = x_eq` and the signal, a measurement is `Y = U + Z` where `U`
//! is the squared magnitude of `CN(<x_eq, b_eq>, v_dif)`, i.e. a scaled
//! non-central chi-square with two degrees of freedom. Its density is a 1-D
//! convolution, evaluated here in the log domain: the integrand
//! `ln f_U(u) + ln f_Z(y - u)` is concave in `u` (both factors are
//! log-concave), so its maximizer and the window where it stays within
//! `log_depth` nats of the maximum can be located by bracketing, and only that
//! window is integrated. This keeps `ln f` accurate far into both tails,
//! which the information densities and the `D(b)` integrals need.

use std::cell::Cell;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PartitionPowers;
use crate::numeric::bessel::ln_i0_scaled;
use crate::numeric::{golden_max, integrate, QuadConfig};

/// Log values below this are clamped and flagged (smallest normal exponent of an f64).
pub const LOG_FLOOR: f64 = -745.0;

/// Log-concave additive noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[non_exhaustive]
pub enum NoiseModel {
    Gaussian { variance: f64 },
}

impl NoiseModel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::invalid(format!(
                "noise variance must be positive, got {variance}"
            )));
        }
        Ok(NoiseModel::Gaussian { variance })
    }

    pub fn gaussian_sd(sigma: f64) -> Result<Self> {
        Self::gaussian(sigma * sigma)
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => variance,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => -0.5 * (2.0 * PI * variance).ln() - z * z / (2.0 * variance),
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    /// Differential entropy `h(Z)` in nats.
    pub fn entropy(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => 0.5 * (2.0 * PI * E * variance).ln(),
        }
    }

    /// `exp(2 h(Z))`.
    pub fn entropy_power(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => 2.0 * PI * E * variance,
        }
    }

    /// `||f_Z||_inf`.
    pub fn peak_density(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => 1.0 / (2.0 * PI * variance).sqrt(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => {
                let g: f64 = rng.sample(StandardNormal);
                variance.sqrt() * g
            }
        }
    }
}

/// Numerical settings shared by the density evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityConfig {
    pub quad: QuadConfig,
    /// Depth in nats below the integrand maximum at which windows are cut.
    pub log_depth: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            quad: QuadConfig::with_rel_tol(1e-11),
            log_depth: 46.0,
        }
    }
}

/// Log density of `|CN(sqrt(lambda) e^{i phi}, v)|^2` at `u`.
pub fn ln_noncentral_chi2_scaled_pdf(u: f64, lambda: f64, v: f64) -> f64 {
    if u < 0.0 {
        return f64::NEG_INFINITY;
    }
    let su = u.sqrt();
    let sl = lambda.sqrt();
    let z = 2.0 * su * sl / v;
    -v.ln() - (su - sl).powi(2) / v + ln_i0_scaled(z)
}

/// `(1/v) exp(-(u+lambda)/v) I0(2 sqrt(u lambda)/v)` for `u >= 0`, else 0.
pub fn noncentral_chi2_scaled_pdf(u: f64, lambda: f64, v: f64) -> Result<f64> {
    check_kernel(lambda, v)?;
    if u.is_nan() {
        return Err(Error::invalid("u must not be NaN"));
    }
    Ok(ln_noncentral_chi2_scaled_pdf(u, lambda, v).exp())
}

fn check_kernel(lambda: f64, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("scale v must be positive, got {v}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "non-centrality must be non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Move from `inside` (where `g >= target`) toward `outside` (where
/// `g < target`) and return a point just outside the level set.
fn level_set_edge<G: Fn(f64) -> f64>(g: &G, anchor: f64, mut inside: f64, mut outside: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let span = (outside - inside).abs();
        if span <= 0.05 * (outside - anchor).abs() || span <= f64::EPSILON * outside.abs() {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if g(mid) >= target {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    outside
}

/// Window `[lo, hi]` (clipped at `floor`) where a concave `g` stays within
/// `depth` of its value at `peak`.
fn concave_window<G: Fn(f64) -> f64>(
    g: &G,
    peak: f64,
    peak_value: f64,
    depth: f64,
    step: f64,
    floor: Option<f64>,
) -> Result<(f64, f64)> {
    let target = peak_value - depth;
    let lo = match floor {
        Some(f) if g(f) >= target => f,
        Some(f) if peak - f <= step => level_set_edge(g, peak, peak, f, target),
        _ => {
            let mut h = step;
            loop {
                let x = peak - h;
                if let Some(f) = floor {
                    if x <= f {
                        break level_set_edge(g, peak, peak, f, target);
                    }
                }
                if g(x) < target {
                    break level_set_edge(g, peak, peak - 0.5 * h, x, target);
                }
                h *= 2.0;
                if !h.is_finite() || h > 1e300 {
                    return Err(Error::numeric("window search", "left edge not found"));
                }
            }
        }
    };
    let mut h = step;
    let hi = loop {
        let x = peak + h;
        if g(x) < target {
            break level_set_edge(g, peak, peak + 0.5 * h, x, target);
        }
        h *= 2.0;
        if !h.is_finite() || h > 1e300 {
            return Err(Error::numeric("window search", "right edge not found"));
        }
    };
    Ok((lo, hi))
}

/// Density of `Y` given the overlap projection: `(f_U * f_Z)(y)` where
/// `U ~ |CN(sqrt(lambda)·phase, v_dif)|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOutputLaw {
    pub lambda: f64,
    pub v_dif: f64,
    pub noise: NoiseModel,
}

impl ConditionalOutputLaw {
    pub fn new(lambda: f64, v_dif: f64, noise: NoiseModel) -> Result<Self> {
        check_kernel(lambda, v_dif)?;
        Ok(ConditionalOutputLaw { lambda, v_dif, noise })
    }

    /// The unconditional law `f_{Y|beta=b}`: central, scale `||b||^2`.
    pub fn marginal(b_norm_sq: f64, noise: NoiseModel) -> Result<Self> {
        Self::new(0.0, b_norm_sq, noise)
    }

    pub fn mean(&self) -> f64 {
        self.lambda + self.v_dif
    }

    pub fn variance(&self) -> f64 {
        self.v_dif * self.v_dif + 2.0 * self.lambda * self.v_dif + self.noise.variance()
    }

    /// Interval holding all but a negligible fraction of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        let s = self.noise.std_dev();
        let sl = self.lambda.sqrt();
        let w = 6.0 * self.v_dif.sqrt();
        let lo = (sl - w).max(0.0).powi(2) - 8.0 * s;
        let hi = (sl + w).powi(2) + 8.0 * s;
        (lo, hi)
    }

    pub fn ln_pdf(&self, y: f64) -> Result<f64> {
        self.ln_pdf_with(y, &DensityConfig::default())
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.ln_pdf(y).map(f64::exp)
    }

    pub fn ln_pdf_with(&self, y: f64, cfg: &DensityConfig) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::invalid(format!("y must be finite, got {y}")));
        }
        let (lambda, v, noise) = (self.lambda, self.v_dif, self.noise);
        let g = |u: f64| ln_noncentral_chi2_scaled_pdf(u, lambda, v) + noise.ln_pdf(y - u);

        let sd_u = (v * v + 2.0 * lambda * v).sqrt();
        // The maximizer lies between the mode of U and the mode of f_Z(y - .).
        let hi = y.max(lambda + v + 2.0 * sd_u).max(0.0);
        let peak = if hi > 0.0 {
            golden_max(g, 0.0, hi, 1e-10 * hi, 200)
        } else {
            crate::numeric::Extremum { x: 0.0, value: g(0.0) }
        };
        if !peak.value.is_finite() {
            return Err(Error::numeric(
                "conditional output density",
                format!("non-finite integrand peak at y={y}, law={self:?}"),
            ));
        }

        let step = noise.std_dev().min(sd_u).max(1e-6 * (noise.std_dev() + sd_u));
        let (a, b) = concave_window(&g, peak.x, peak.value, cfg.log_depth, step, Some(0.0))?;
        let shifted = |u: f64| (g(u) - peak.value).exp();
        let integral = integrate(shifted, &[a, peak.x, b], &cfg.quad).map_err(|e| match e {
            Error::NumericFailure { detail, .. } => Error::numeric(
                "conditional output density",
                format!("y={y}, lambda={lambda}, v={v}: {detail}"),
            ),
            other => other,
        })?;
        if !(integral.value > 0.0) {
            return Err(Error::numeric(
                "conditional output density",
                format!("non-positive integral {} at y={y}", integral.value),
            ));
        }
        Ok(peak.value + integral.value.ln())
    }

    /// Mode of the density (unimodal because it is log-concave).
    pub fn mode(&self) -> Result<f64> {
        let sd = self.variance().sqrt();
        let (m, s) = (self.mean(), sd);
        let err = Cell::new(None);
        let f = |y: f64| match self.ln_pdf(y) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::NEG_INFINITY
            }
        };
        let e = golden_max(f, m - 2.0 * s, m + 2.0 * s, 1e-9 * s, 200);
        if let Some(e) = err.take() {
            return Err(e);
        }
        Ok(e.x)
    }

    /// CSV trace `y,pdf,log_pdf` for debugging.
    pub fn trace_csv(&self, ys: &[f64]) -> Result<String> {
        let mut out = String::from("y,pdf,log_pdf\n");
        for &y in ys {
            let l = self.ln_pdf(y)?;
            writeln!(out, "{:.16e},{:.16e},{:.16e}", y, l.exp(), l).expect("write to string");
        }
        Ok(out)
    }
}

/// `f_{Y|X_eq, beta}(y)`.
pub fn f_y_given_xeq(y: f64, law: &ConditionalOutputLaw) -> Result<f64> {
    law.pdf(y)
}

/// A univariate density known through its logarithm, for shape checks.
pub trait LogDensity: Sync {
    fn ln_density(&self, y: f64) -> Result<f64>;
    fn effective_support(&self) -> (f64, f64);
    /// Natural length scale; grid steps are expressed as fractions of it.
    fn length_scale(&self) -> f64;
    fn label(&self) -> String;
}

impl LogDensity for ConditionalOutputLaw {
    fn ln_density(&self, y: f64) -> Result<f64> {
        self.ln_pdf(y)
    }

    fn effective_support(&self) -> (f64, f64) {
        ConditionalOutputLaw::effective_support(self)
    }

    fn length_scale(&self) -> f64 {
        self.noise.std_dev()
    }

    fn label(&self) -> String {
        format!(
            "conditional_output(lambda={}, v={}, sigma={})",
            self.lambda,
            self.v_dif,
            self.noise.std_dev()
        )
    }
}

/// Finite Gaussian mixture; with well separated components it is the
/// standard example of a density that is not log-concave.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<(f64, f64, f64)>,
}

impl GaussianMixture {
    /// `(weight, mean, sd)` triples; weights are normalized.
    pub fn new(components: Vec<(f64, f64, f64)>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| !(c.0 > 0.0 && c.2 > 0.0)) {
            return Err(Error::invalid("mixture needs positive weights and scales"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        Ok(GaussianMixture {
            components: components.into_iter().map(|(w, m, s)| (w / total, m, s)).collect(),
        })
    }

    /// Equal-weight mixture of `N(-3, 1)` and `N(3, 1)`.
    pub fn bimodal_control() -> Self {
        Self::new(vec![(0.5, -3.0, 1.0), (0.5, 3.0, 1.0)]).expect("valid mixture")
    }
}

impl LogDensity for GaussianMixture {
    fn ln_density(&self, y: f64) -> Result<f64> {
        let mut acc = f64::NEG_INFINITY;
        for &(w, m, s) in &self.components {
            let l = w.ln() - 0.5 * (2.0 * PI * s * s).ln() - (y - m).powi(2) / (2.0 * s * s);
            acc = crate::numeric::log_add_exp(acc, l);
        }
        Ok(acc)
    }

    fn effective_support(&self) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|c| c.1 - 8.0 * c.2)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.1 + 8.0 * c.2)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn length_scale(&self) -> f64 {
        self.components.iter().map(|c| c.2).fold(f64::INFINITY, f64::min)
    }

    fn label(&self) -> String {
        format!("gaussian_mixture({:?})", self.components)
    }
}

/// A single-letter information density value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoDensity {
    pub value: f64,
    /// Number of denominator evaluations that hit [`LOG_FLOOR`].
    pub clamped: usize,
}

/// `i(x_dif; y | x_eq, b) = ln f_Z(y - |x_eq + x_dif|^2) - ln f_{Y|X_eq,beta}(y)`,
/// with `x_dif_proj = <x_dif, b_dif>` and `x_eq_proj = <x_eq, b_eq>`.
pub fn info_density_single(
    x_dif_proj: Complex64,
    x_eq_proj: Complex64,
    y: f64,
    powers: &PartitionPowers,
    noise: &NoiseModel,
) -> Result<InfoDensity> {
    info_density_single_with(x_dif_proj, x_eq_proj, y, powers, noise, &DensityConfig::default())
}

pub fn info_density_single_with(
    x_dif_proj: Complex64,
    x_eq_proj: Complex64,
    y: f64,
    powers: &PartitionPowers,
    noise: &NoiseModel,
    cfg: &DensityConfig,
) -> Result<InfoDensity> {
    powers.require_positive_dif()?;
    if !y.is_finite() {
        return Err(Error::invalid(format!("y must be finite, got {y}")));
    }
    let numerator = noise.ln_pdf(y - (x_eq_proj + x_dif_proj).norm_sqr());
    let law = ConditionalOutputLaw::new(x_eq_proj.norm_sqr(), powers.v_dif, *noise)?;
    let mut denominator = law.ln_pdf_with(y, cfg)?;
    let mut clamped = 0;
    if denominator < LOG_FLOOR {
        denominator = LOG_FLOOR;
        clamped = 1;
    }
    Ok(InfoDensity {
        value: numerator - denominator,
        clamped,
    })
}

/// `i^n = sum_i i(x_dif^(i); y^(i) | x_eq^(i), b)` over per-measurement projections.
pub fn info_density_n(
    x_dif_proj: &[Complex64],
    x_eq_proj: &[Complex64],
    y: &[f64],
    powers: &PartitionPowers,
    noise: &NoiseModel,
) -> Result<InfoDensity> {
    if x_dif_proj.len() != y.len() || x_eq_proj.len() != y.len() {
        return Err(Error::invalid("projection and observation lengths differ"));
    }
    let mut total = InfoDensity { value: 0.0, clamped: 0 };
    for ((&xd, &xe), &yi) in x_dif_proj.iter().zip(x_eq_proj).zip(y) {
        let i = info_density_single(xd, xe, yi, powers, noise)?;
        total.value += i.value;
        total.clamped += i.clamped;
    }
    Ok(total)
}

/// `r(u) = u - ln(1 + u)` for `u > -1`, `+inf` otherwise.
pub fn r(u: f64) -> f64 {
    if u > -1.0 {
        if u.abs() < 1e-4 {
            // Series avoids cancellation: u^2/2 - u^3/3 + u^4/4 - ...
            let u2 = u * u;
            u2 * (0.5 - u / 3.0 + u2 / 4.0 - u2 * u / 5.0)
        } else {
            u - u.ln_1p()
        }
    } else {
        f64::INFINITY
    }
}

/// Settings for the `D(b)` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DSearchConfig {
    pub t_min: f64,
    pub t_max: f64,
    /// Points of the coarse grid in `ln t` that seeds the golden-section refinement.
    pub grid_points: usize,
    pub density: DensityConfig,
    pub inner: QuadConfig,
}

impl Default for DSearchConfig {
    fn default() -> Self {
        DSearchConfig {
            t_min: 1e-3,
            t_max: 1e3,
            grid_points: 25,
            density: DensityConfig::default(),
            inner: QuadConfig::with_rel_tol(1e-10),
        }
    }
}

impl DSearchConfig {
    /// Same search with every quadrature tolerance halved.
    pub fn refined(&self) -> Self {
        let mut c = *self;
        c.density.quad.rel_tol *= 0.5;
        c.inner.rel_tol *= 0.5;
        c
    }
}

/// Result of the `D(b)` search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DValue {
    pub d: f64,
    pub t_star: f64,
    /// `||f_{Y|beta=b}||_inf`.
    pub peak: f64,
}

/// `ln ∫ f(y)^t dy` for a log-concave `f` with known mode and peak.
fn ln_power_integral(law: &ConditionalOutputLaw, t: f64, mode: f64, ln_peak: f64, cfg: &DSearchConfig) -> Result<f64> {
    let err = Cell::new(None);
    let h = |y: f64| match law.ln_pdf_with(y, &cfg.density) {
        Ok(l) => t * (l - ln_peak),
        Err(e) => {
            err.set(Some(e));
            f64::NAN
        }
    };
    let step = law.variance().sqrt() / t.sqrt().max(1e-3);
    let window = concave_window(&h, mode, 0.0, cfg.density.log_depth, step, None);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let (a, b) = window?;
    let integral = integrate(|y| h(y).exp(), &[a, mode, b], &cfg.inner);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let integral = integral?;
    Ok(t * ln_peak + integral.value.ln())
}

/// `D(b) = sup_{t>0} (M+1)^{-t} ∫ t f_{Y|beta=b}(y)^t dy` with `M` the peak of
/// `f_{Y|beta=b}`, searched over `t ∈ [t_min, t_max]`.
pub fn compute_d(b_norm_sq: f64, noise: &NoiseModel) -> Result<DValue> {
    compute_d_with(b_norm_sq, noise, &DSearchConfig::default())
}

pub fn compute_d_with(b_norm_sq: f64, noise: &NoiseModel, cfg: &DSearchConfig) -> Result<DValue> {
    if !(b_norm_sq.is_finite() && b_norm_sq > 0.0) {
        return Err(Error::invalid(format!("||b||^2 must be positive, got {b_norm_sq}")));
    }
    if !(cfg.t_min > 0.0 && cfg.t_max > cfg.t_min && cfg.grid_points >= 3) {
        return Err(Error::invalid("invalid t-search range"));
    }
    let law = ConditionalOutputLaw::marginal(b_norm_sq, *noise)?;
    let mode = law.mode()?;
    let ln_peak = law.ln_pdf_with(mode, &cfg.density)?;
    let peak = ln_peak.exp();
    let ln_m1 = (peak + 1.0).ln();

    let objective = |s: f64| -> Result<f64> {
        let t = s.exp();
        Ok(-t * ln_m1 + s + ln_power_integral(&law, t, mode, ln_peak, cfg)?)
    };

    let (s_lo, s_hi) = (cfg.t_min.ln(), cfg.t_max.ln());
    let step = (s_hi - s_lo) / (cfg.grid_points - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for j in 0..cfg.grid_points {
        let v = objective(s_lo + j as f64 * step)?;
        if v > best.1 {
            best = (j, v);
        }
    }
    let lo = s_lo + best.0.saturating_sub(1) as f64 * step;
    let hi = (s_lo + (best.0 + 1) as f64 * step).min(s_hi);

    let err = Cell::new(None);
    let refined = golden_max(
        |s| match objective(s) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-8,
        200,
    );
    if let Some(e) = err.take() {
        return Err(e);
    }
    let (s_star, ln_d) = if refined.value >= best.1 {
        (refined.x, refined.value)
    } else {
        (s_lo + best.0 as f64 * step, best.1)
    };
    let d = ln_d.exp();
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::numeric("D(b) search", format!("invalid supremum {d}")));
    }
    Ok(DValue {
        d,
        t_star: s_star.exp(),
        peak,
    })
}

/// Constants of the information-density concentration bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationConstants {
    pub d_b: f64,
    pub c_b: f64,
    pub peak_fz: f64,
}

impl ConcentrationConstants {
    /// `C = 150 max{2 D (||f_Z||_inf + 1), 1}`.
    pub fn from_d(d_b: f64, peak_fz: f64) -> Self {
        ConcentrationConstants {
            d_b,
            c_b: 150.0 * (2.0 * d_b * (peak_fz + 1.0)).max(1.0),
            peak_fz,
        }
    }
}

pub fn compute_c(b_norm_sq: f64, noise: &NoiseModel) -> Result<ConcentrationConstants> {
    compute_c_with(b_norm_sq, noise, &DSearchConfig::default())
}

pub fn compute_c_with(b_norm_sq: f64, noise: &NoiseModel, cfg: &DSearchConfig) -> Result<ConcentrationConstants> {
    let d = compute_d_with(b_norm_sq, noise, cfg)?;
    Ok(ConcentrationConstants::from_d(d.d, noise.peak_density()))
}
