//! Closed-form sample-complexity thresholds.
//!
//! `n_ach = max_{α∈[α*,1]} α k ln(p/k) / I₁(α)` and
//! `n_con = max_{α∈[α*,1]} (α-α*) k ln(p/k) / I₂(α)`, with the discrete
//! quantities built from sorted partial sums of the signal and the Gaussian
//! ones from `g(α)`. The slack `η` of the underlying statements is taken as 0,
//! so the values are leading-order asymptotics.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::NoiseModel;
use crate::error::{Error, Result};
use crate::model::{partition_powers, PartitionMode, SignalModel, SortedSignal};
use crate::numeric::{golden_max, integrate, QuadConfig};

/// Attached to every threshold result.
pub const REGIME_CAVEAT: &str = "Leading-order values in the limit p, k -> infinity with the slack eta set \
to 0. The formulas are evaluated for any input; the scaling conditions on k, p and the number of \
distinct signal magnitudes under which they are proven are not checked.";

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// `g(α) = ∫_0^∞ [α - (1 - e^{-u})]^+ du`: the share of total power held by
/// the smallest `α` fraction of `|CN(0,1)|²` draws.
pub fn g(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let upper = -(-alpha).ln_1p();
    let r = integrate(
        |u| (alpha + (-u).exp_m1()).max(0.0),
        &[0.0, upper],
        &QuadConfig::with_rel_tol(1e-13),
    )?;
    Ok(r.value)
}

/// `½ ln[(4 / e^{2h(Z)}) v_dif² + 1]`.
pub fn i1_from_power(v_dif: f64, noise: &NoiseModel) -> f64 {
    0.5 * (4.0 / noise.entropy_power() * v_dif * v_dif).ln_1p()
}

/// `½ ln[(2πe / e^{2h}) v_dif² + 1] + ½ ln[1 + v_dif v_eq / (v_dif² + e^{2h}/(2πe))] + ½ ln(πe/2)`.
pub fn i2_from_powers(v_dif: f64, v_eq: f64, noise: &NoiseModel) -> f64 {
    let ep = noise.entropy_power();
    let two_pi_e = 2.0 * PI * E;
    0.5 * (two_pi_e / ep * v_dif * v_dif).ln_1p()
        + 0.5 * (v_dif * v_eq / (v_dif * v_dif + ep / two_pi_e)).ln_1p()
        + 0.5 * (PI * E / 2.0).ln()
}

pub fn i1_discrete(alpha: f64, sorted: &SortedSignal, noise: &NoiseModel, mode: PartitionMode) -> Result<f64> {
    let parts = partition_powers(sorted, alpha, mode)?;
    Ok(i1_from_power(parts.v_dif, noise))
}

pub fn i2_discrete(alpha: f64, sorted: &SortedSignal, noise: &NoiseModel, mode: PartitionMode) -> Result<f64> {
    let parts = partition_powers(sorted, alpha, mode)?;
    Ok(i2_from_powers(parts.v_dif, parts.v_eq, noise))
}

fn check_gaussian(c_beta: f64, sigma: f64) -> Result<()> {
    if !(c_beta.is_finite() && c_beta > 0.0 && sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "c_beta and sigma must be positive, got c_beta={c_beta}, sigma={sigma}"
        )));
    }
    Ok(())
}

fn i1_bar_from_g(g: f64, c_beta: f64, sigma: f64) -> f64 {
    let x = c_beta * g / (sigma * (2.0 * PI * E).sqrt());
    0.5 * (4.0 * x * x).ln_1p()
}

fn i2_bar_from_g(g: f64, c_beta: f64, sigma: f64) -> f64 {
    let cg = c_beta * g;
    0.5 * (cg / sigma).powi(2).ln_1p()
        + 0.5 * (c_beta * c_beta * g * (1.0 - g) / (cg * cg + sigma * sigma)).ln_1p()
        + 0.5 * (PI * E / 2.0).ln()
}

/// `Ī₁(α)` for `CN(0, c_β/k)` entries and `N(0, σ²)` noise.
pub fn i1_gaussian(alpha: f64, c_beta: f64, sigma: f64) -> Result<f64> {
    check_gaussian(c_beta, sigma)?;
    Ok(i1_bar_from_g(g(alpha)?, c_beta, sigma))
}

/// `Ī₂(α)` for `CN(0, c_β/k)` entries and `N(0, σ²)` noise.
pub fn i2_gaussian(alpha: f64, c_beta: f64, sigma: f64) -> Result<f64> {
    check_gaussian(c_beta, sigma)?;
    Ok(i2_bar_from_g(g(alpha)?, c_beta, sigma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub p: usize,
    pub k: usize,
    pub alpha_star: f64,
    pub signal: SignalModel,
    pub noise: NoiseModel,
    pub mode: PartitionMode,
    pub alpha_grid_step: f64,
}

impl ThresholdQuery {
    pub fn new(p: usize, alpha_star: f64, signal: SignalModel, noise: NoiseModel, mode: PartitionMode) -> Self {
        ThresholdQuery {
            p,
            k: signal.k(),
            alpha_star,
            signal,
            noise,
            mode,
            alpha_grid_step: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        if self.k == 0 || self.k >= self.p {
            return Err(Error::invalid(format!(
                "need 1 <= k < p, got k={}, p={}",
                self.k, self.p
            )));
        }
        if self.k != self.signal.k() {
            return Err(Error::invalid(format!(
                "k={} does not match the signal length {}",
                self.k,
                self.signal.k()
            )));
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(Error::invalid(format!(
                "alpha_star must lie in (0, 1), got {}",
                self.alpha_star
            )));
        }
        if !(self.alpha_grid_step > 0.0 && self.alpha_grid_step <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha_grid_step must lie in (0, 1], got {}",
                self.alpha_grid_step
            )));
        }
        if self.mode == PartitionMode::FloorExact && crate::numeric::floor_alpha_k(self.alpha_star, self.k) == 0 {
            return Err(Error::invalid(format!(
                "floor(alpha_star * k) = 0 for alpha_star={}, k={}",
                self.alpha_star, self.k
            )));
        }
        Ok(())
    }

    /// `k ln(p/k)`.
    pub fn scale(&self) -> f64 {
        self.k as f64 * (self.p as f64 / self.k as f64).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedThresholds {
    pub achievability: f64,
    pub converse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub n_achievability: f64,
    pub n_converse: f64,
    pub alpha_ach: f64,
    pub alpha_con: f64,
    /// Thresholds divided by `k ln(p/k)`.
    pub normalized: NormalizedThresholds,
    pub eta: f64,
    pub regime_caveat: String,
}

/// Maximizers of `α / I₁(α)` and `(α-α*) / I₂(α)` over `[α*, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMaxima {
    pub achievability: f64,
    pub alpha_ach: f64,
    pub converse: f64,
    pub alpha_con: f64,
}

fn alpha_grid(alpha_star: f64, step: f64) -> Vec<f64> {
    let n = ((1.0 - alpha_star) / step).floor() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|j| alpha_star + j as f64 * step)
        .filter(|&a| a < 1.0)
        .collect();
    grid.push(1.0);
    grid
}

fn maximize_on_grid<F>(grid: &[f64], objective: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let values: Vec<f64> = grid.par_iter().map(|&a| objective(a)).collect::<Result<_>>()?;
    let mut arg = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[arg] {
            arg = j;
        }
    }
    let mut best = (grid[arg], values[arg]);
    if grid.len() >= 3 {
        let lo = grid[arg.saturating_sub(1)];
        let hi = grid[(arg + 1).min(grid.len() - 1)];
        let mut failure = None;
        let refined = golden_max(
            |a| match objective(a) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            1e-10,
            200,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if refined.value > best.1 {
            best = (refined.x, refined.value);
        }
    }
    Ok(best)
}

/// Maximize both threshold ratios given per-α evaluators of `I₁` and `I₂`.
pub fn maximize_ratios<F1, F2>(alpha_star: f64, step: f64, i1: F1, i2: F2) -> Result<RatioMaxima>
where
    F1: Fn(f64) -> Result<f64> + Sync,
    F2: Fn(f64) -> Result<f64> + Sync,
{
    let grid = alpha_grid(alpha_star, step);
    let ach = |a: f64| -> Result<f64> {
        let d = i1(a)?;
        if !(d > 0.0) {
            return Err(Error::InfeasibleThreshold(format!(
                "I1({a}) = {d}: no signal power on the smallest entries"
            )));
        }
        Ok(a / d)
    };
    let con = |a: f64| -> Result<f64> {
        let d = i2(a)?;
        if !(d > 0.0) {
            return Err(Error::InfeasibleThreshold(format!("I2({a}) = {d}")));
        }
        Ok((a - alpha_star) / d)
    };
    let (alpha_ach, achievability) = maximize_on_grid(&grid, ach)?;
    let (alpha_con, converse) = maximize_on_grid(&grid, con)?;
    Ok(RatioMaxima {
        achievability,
        alpha_ach,
        converse,
        alpha_con,
    })
}

fn gaussian_sigma(noise: &NoiseModel) -> f64 {
    match noise {
        NoiseModel::Gaussian { variance } => variance.sqrt(),
    }
}

/// Achievability and converse measurement counts for `query`.
pub fn threshold(query: &ThresholdQuery) -> Result<ThresholdResult> {
    query.validate()?;
    let noise = query.noise;
    let maxima = match &query.signal {
        SignalModel::GaussianIid { c_beta, .. } => {
            let (c, sigma) = (*c_beta, gaussian_sigma(&noise));
            maximize_ratios(
                query.alpha_star,
                query.alpha_grid_step,
                |a| Ok(i1_bar_from_g(g(a)?, c, sigma)),
                |a| Ok(i2_bar_from_g(g(a)?, c, sigma)),
            )?
        }
        discrete => {
            let sorted = discrete.sorted().expect("discrete model");
            let mode = query.mode;
            maximize_ratios(
                query.alpha_star,
                query.alpha_grid_step,
                |a| i1_discrete(a, &sorted, &noise, mode),
                |a| i2_discrete(a, &sorted, &noise, mode),
            )?
        }
    };
    let scale = query.scale();
    Ok(ThresholdResult {
        n_achievability: maxima.achievability * scale,
        n_converse: maxima.converse * scale,
        alpha_ach: maxima.alpha_ach,
        alpha_con: maxima.alpha_con,
        normalized: NormalizedThresholds {
            achievability: maxima.achievability,
            converse: maxima.converse,
        },
        eta: 0.0,
        regime_caveat: REGIME_CAVEAT.to_string(),
    })
}

/// Linear SNR `E[signal²]/σ²`: `2 ||b||⁴ / σ²` for discrete vectors, which
/// is `2 c_β² / σ²` for flat and Gaussian signals with the `1/k` term dropped.
pub fn snr(model: &SignalModel, noise: &NoiseModel) -> Result<f64> {
    model.validate()?;
    let power = match model {
        SignalModel::DiscreteFlat { c_beta, .. } | SignalModel::GaussianIid { c_beta, .. } => *c_beta,
        SignalModel::DiscreteGeneral { .. } => model.expected_norm_sq(),
    };
    Ok(2.0 * power * power / noise.variance())
}

/// SNR in decibels, `10 log10(SNR)`.
pub fn snr_db(model: &SignalModel, noise: &NoiseModel) -> Result<f64> {
    Ok(10.0 * snr(model, noise)?.log10())
}

/// Inverse of [`snr_db`] for flat and Gaussian signals: `σ sqrt(10^{dB/10} / 2)`.
pub fn c_beta_from_snr_db(snr_db: f64, sigma: f64) -> Result<f64> {
    if !snr_db.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "need finite SNR and positive sigma, got snr_db={snr_db}, sigma={sigma}"
        )));
    }
    Ok(sigma * (10f64.powf(snr_db / 10.0) / 2.0).sqrt())
}

/// Signal family of a figure curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureModel {
    DiscreteFlat,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub snr_db: f64,
    pub n_ach_norm: f64,
    pub n_con_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub model: FigureModel,
    pub alpha_star: f64,
    pub rows: Vec<FigureRow>,
}

impl FigureTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,n_ach_norm,n_con_norm\n");
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r.snr_db, r.n_ach_norm, r.n_con_norm).expect("write to string");
        }
        out
    }
}

/// Normalized limit thresholds `n / (k ln(p/k))` against SNR, with `σ = 1`.
/// The flat curve uses `Σ_{i≤αk} |b'_i|² → α c_β`, the Gaussian one `c_β g(α)`.
pub fn figure_data(alpha_star: f64, snr_db_grid: &[f64], model: FigureModel) -> Result<FigureTable> {
    figure_data_with_step(alpha_star, snr_db_grid, model, 1e-3)
}

pub fn figure_data_with_step(
    alpha_star: f64,
    snr_db_grid: &[f64],
    model: FigureModel,
    alpha_grid_step: f64,
) -> Result<FigureTable> {
    if !(alpha_star > 0.0 && alpha_star < 1.0) {
        return Err(Error::invalid(format!(
            "alpha_star must lie in (0, 1), got {alpha_star}"
        )));
    }
    if let Some(bad) = snr_db_grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("SNR grid must be finite, got {bad}")));
    }
    let sigma = 1.0;
    let noise = NoiseModel::gaussian(sigma * sigma)?;
    // g on the α grid is shared by every SNR.
    let grid = alpha_grid(alpha_star, alpha_grid_step);
    let g_values: Vec<f64> = grid.iter().map(|&a| g(a)).collect::<Result<_>>()?;
    let g_at = |a: f64| -> Result<f64> {
        match grid.iter().position(|&x| x == a) {
            Some(j) => Ok(g_values[j]),
            None => g(a),
        }
    };

    let mut rows = Vec::with_capacity(snr_db_grid.len());
    for &db in snr_db_grid {
        let c = c_beta_from_snr_db(db, sigma)?;
        let m = match model {
            FigureModel::Gaussian => maximize_ratios(
                alpha_star,
                alpha_grid_step,
                |a| Ok(i1_bar_from_g(g_at(a)?, c, sigma)),
                |a| Ok(i2_bar_from_g(g_at(a)?, c, sigma)),
            )?,
            FigureModel::DiscreteFlat => maximize_ratios(
                alpha_star,
                alpha_grid_step,
                |a| Ok(i1_from_power(a * c, &noise)),
                |a| Ok(i2_from_powers(a * c, (1.0 - a) * c, &noise)),
            )?,
        };
        rows.push(FigureRow {
            snr_db: db,
            n_ach_norm: m.achievability,
            n_con_norm: m.converse,
        });
    }
    Ok(FigureTable {
        model,
        alpha_star,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_noise() -> NoiseModel {
        NoiseModel::gaussian(1.0).unwrap()
    }

    #[test]
    fn g_endpoints_and_midpoint() {
        assert_eq!(g(0.0).unwrap(), 0.0);
        assert_eq!(g(1.0).unwrap(), 1.0);
        let want = 0.5 + 0.5 * 0.5f64.ln();
        assert!((g(0.5).unwrap() - want).abs() < 1e-12);
        assert!((g(0.5).unwrap() - 0.153_426_4).abs() < 1e-7);
        assert!(g(-0.1).is_err());
        assert!(g(1.1).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let two_pi_e = 2.0 * PI * E;
        let i1 = 0.5 * (1.0 + 4.0 / two_pi_e).ln();
        assert!((i1 - 0.105_211_220_440_379_6).abs() < 1e-15);
        assert!((i1 - 0.105_216).abs() < 1e-5);
        assert!((i1_gaussian(1.0, 1.0, 1.0).unwrap() - i1).abs() < 1e-15);
        let flat = SignalModel::flat(1.0, 10).unwrap().sorted().unwrap();
        let got = i1_discrete(1.0, &flat, &unit_noise(), PartitionMode::Asymptotic).unwrap();
        assert!((got - i1).abs() < 1e-14);

        let i2 = 0.5 * 2f64.ln() + 0.5 * (PI * E / 2.0).ln();
        assert!((i2 - 1.072_364_942_924_7).abs() < 1e-12);
        assert!((i2 - 1.072_375).abs() < 2e-5);
        assert!((i2_gaussian(1.0, 1.0, 1.0).unwrap() - i2).abs() < 1e-14);
        assert_eq!(i1_gaussian(0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn discrete_degenerate_partitions() {
        let s = SignalModel::flat(1.0, 4).unwrap().sorted().unwrap();
        assert_eq!(
            i1_discrete(0.2, &s, &unit_noise(), PartitionMode::FloorExact).unwrap(),
            0.0
        );
        // alpha = 1 leaves no overlap mass: the middle log vanishes.
        let full = i2_discrete(1.0, &s, &unit_noise(), PartitionMode::FloorExact).unwrap();
        let first = 0.5 * (1.0f64 / unit_noise().variance()).ln_1p();
        assert!((full - first - 0.5 * (PI * E / 2.0).ln()).abs() < 1e-14);
        // v_dif = 0 with v_eq > 0 stays finite.
        let zero = i2_discrete(0.2, &s, &unit_noise(), PartitionMode::FloorExact).unwrap();
        assert!((zero - 0.5 * (PI * E / 2.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_threshold_single_alpha() {
        let q = ThresholdQuery::new(
            1000,
            1.0 - 1e-9,
            SignalModel::gaussian(1.0, 10).unwrap(),
            unit_noise(),
            PartitionMode::Asymptotic,
        );
        let r = threshold(&q).unwrap();
        let want = 10.0 * 100f64.ln() / i1_gaussian(1.0, 1.0, 1.0).unwrap();
        assert!((r.n_achievability - want).abs() < 1e-6 * want);
        assert!((r.n_achievability - 437.7).abs() < 0.1);
        assert!(r.n_converse < 1e-6);
        assert_eq!(r.eta, 0.0);
        assert!(!r.regime_caveat.is_empty());
    }

    #[test]
    fn threshold_query_validation() {
        let sig = SignalModel::flat(1.0, 10).unwrap();
        let mut q = ThresholdQuery::new(100, 0.05, sig.clone(), unit_noise(), PartitionMode::FloorExact);
        assert!(matches!(threshold(&q), Err(Error::InvalidArgument(_))));
        q.mode = PartitionMode::Asymptotic;
        assert!(threshold(&q).is_ok());
        let q = ThresholdQuery::new(10, 0.5, sig, unit_noise(), PartitionMode::Asymptotic);
        assert!(threshold(&q).is_err());
    }

    #[test]
    fn zero_signal_power_is_infeasible() {
        let b = vec![num_complex::Complex64::new(0.0, 0.0); 4]
            .into_iter()
            .chain([num_complex::Complex64::new(1.0, 0.0); 4])
            .collect();
        let q = ThresholdQuery::new(
            100,
            0.25,
            SignalModel::discrete(b).unwrap(),
            unit_noise(),
            PartitionMode::FloorExact,
        );
        assert!(matches!(threshold(&q), Err(Error::InfeasibleThreshold(_))));
    }

    #[test]
    fn snr_calibration() {
        let m = SignalModel::gaussian(5f64.sqrt(), 3).unwrap();
        let db = snr_db(&m, &unit_noise()).unwrap();
        assert!((db - 10.0).abs() < 1e-12);
        let c = c_beta_from_snr_db(db, 1.0).unwrap();
        assert!((c - 5f64.sqrt()).abs() < 1e-12);
        let doubled = NoiseModel::gaussian_sd(2.0).unwrap();
        let ratio = snr(&m, &unit_noise()).unwrap() / snr(&m, &doubled).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn figure_csv_format() {
        let t = figure_data(0.1, &[0.0, 10.0], FigureModel::Gaussian).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("snr_db,n_ach_norm,n_con_norm"));
        assert_eq!(lines.count(), 2);
        assert!(figure_data(0.1, &[f64::NAN], FigureModel::Gaussian).is_err());
    }
}
