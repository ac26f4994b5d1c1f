//! Monte Carlo and grid checks of the mutual-information bounds, the
//! information-density tail bound, the order-statistics limit behind `g`, and
//! log-concavity of the output densities.
//!
//! Every check produces a [`VerificationReport`] whose verdict can be
//! recomputed from its stored fields.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

use crate::densities::{
    compute_c, info_density_single_with, r, ConditionalOutputLaw, DensityConfig, GaussianMixture, LogDensity,
    NoiseModel,
};
use crate::error::{Error, Result};
use crate::limits::{g, i1_from_power, i2_from_powers};
use crate::model::{sample_complex_normal, PartitionPowers, SignalModel, SortedSignal};
use crate::numeric::{compensated_sum, floor_alpha_k, mean_and_batch_se};
use crate::rng::{derive_seed, substream, Domain};

/// Standard errors above this make a Monte Carlo verdict inconclusive.
pub const DEFAULT_RESOLUTION: f64 = 0.02;
/// Clamped density evaluations tolerated before a verdict is inconclusive.
pub const MAX_CLAMP_FRACTION: f64 = 1e-3;

/// Check name carried by the bimodal control report.
pub const NEGATIVE_CONTROL: &str = "logconcavity_negative_control";

/// Trials per random-number substream.
const BLOCK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

fn ser_lower<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn de_lower<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

fn de_upper<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

fn de_se<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Outcome of one check. Infinite bounds (and an infinite standard error)
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub parameters: serde_json::Value,
    pub estimate: f64,
    #[serde(serialize_with = "ser_lower", deserialize_with = "de_se")]
    pub standard_error: f64,
    #[serde(serialize_with = "ser_lower", deserialize_with = "de_lower")]
    pub lower_bound: f64,
    #[serde(serialize_with = "ser_lower", deserialize_with = "de_upper")]
    pub upper_bound: f64,
    pub trials: u64,
    /// Density evaluations that hit the log floor.
    #[serde(default)]
    pub clamped: u64,
    pub resolution: f64,
    pub verdict: Verdict,
    /// Diagnostics that do not enter the verdict.
    #[serde(default)]
    pub details: serde_json::Value,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check_name: impl Into<String>,
        parameters: serde_json::Value,
        estimate: f64,
        standard_error: f64,
        lower_bound: f64,
        upper_bound: f64,
        trials: u64,
        resolution: f64,
    ) -> Self {
        let mut r = VerificationReport {
            check_name: check_name.into(),
            parameters,
            estimate,
            standard_error,
            lower_bound,
            upper_bound,
            trials,
            clamped: 0,
            resolution,
            verdict: Verdict::Inconclusive,
            details: serde_json::Value::Null,
        };
        r.verdict = r.recompute_verdict();
        r
    }

    pub fn with_clamped(mut self, clamped: u64) -> Self {
        self.clamped = clamped;
        self.verdict = self.recompute_verdict();
        self
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    /// Inconclusive when the standard error exceeds the resolution or too
    /// many densities were clamped; otherwise pass iff the estimate lies in
    /// `[lower - 3 se, upper + 3 se]`.
    pub fn recompute_verdict(&self) -> Verdict {
        let se = self.standard_error;
        if !self.estimate.is_finite()
            || se.is_nan()
            || se > self.resolution
            || self.clamped as f64 > MAX_CLAMP_FRACTION * self.trials as f64
        {
            return Verdict::Inconclusive;
        }
        if self.estimate >= self.lower_bound - 3.0 * se && self.estimate <= self.upper_bound + 3.0 * se {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn reports_to_jsonl(reports: &[VerificationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<VerificationReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::invalid(format!("bad report line: {e}"))))
        .collect()
}

/// Which of the two complex draws of a trial becomes `W_eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawOrder {
    EqFirst,
    DifFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiConfig {
    pub trials: usize,
    pub seed: u64,
    pub batches: usize,
    pub order: DrawOrder,
    pub density: DensityConfig,
}

impl MiConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        MiConfig {
            trials,
            seed,
            batches: 100,
            order: DrawOrder::EqFirst,
            density: DensityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub trials: usize,
    pub clamped: usize,
}

/// One measurement of the rewritten model: projections and output.
#[derive(Debug, Clone, Copy)]
struct Letter {
    x_dif: Complex64,
    x_eq: Complex64,
    y: f64,
}

fn draw_letter<R: rand::Rng + ?Sized>(
    powers: &PartitionPowers,
    noise: &NoiseModel,
    order: DrawOrder,
    rng: &mut R,
) -> Letter {
    let a = sample_complex_normal(rng, 1.0);
    let b = sample_complex_normal(rng, 1.0);
    let (w_eq, w_dif) = match order {
        DrawOrder::EqFirst => (a, b),
        DrawOrder::DifFirst => (b, a),
    };
    let x_eq = w_eq * powers.v_eq.sqrt();
    let x_dif = w_dif * powers.v_dif.sqrt();
    let y = (x_eq + x_dif).norm_sqr() + noise.sample(rng);
    Letter { x_dif, x_eq, y }
}

/// Per-trial values `f(letter)` in trial order, generated from fixed-size
/// blocks of independent substreams so the result ignores the thread count.
fn per_trial<T, F>(trials: usize, seed: u64, domain: Domain, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut crate::rng::StreamRng) -> Result<T> + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let chunks: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, domain, b as u64);
            let len = BLOCK.min(trials - b * BLOCK);
            (0..len).map(|_| f(&mut rng)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte Carlo estimate of `I(X_dif; Y | X_eq, β = b)` as the mean
/// single-letter information density.
pub fn mi_estimate(powers: &PartitionPowers, noise: &NoiseModel, cfg: &MiConfig) -> Result<MiEstimate> {
    powers.require_positive_dif()?;
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let values = per_trial(cfg.trials, cfg.seed, Domain::MutualInformation, |rng| {
        let l = draw_letter(powers, noise, cfg.order, rng);
        info_density_single_with(l.x_dif, l.x_eq, l.y, powers, noise, &cfg.density)
    })?;
    let clamped = values.iter().map(|v| v.clamped).sum();
    let samples: Vec<f64> = values.iter().map(|v| v.value).collect();
    let (estimate, standard_error) = mean_and_batch_se(&samples, cfg.batches);
    Ok(MiEstimate {
        estimate,
        standard_error,
        trials: cfg.trials,
        clamped,
    })
}

/// Monte Carlo mean of `exp(-i)`, which equals 1 under the model.
pub fn importance_weight_mean(powers: &PartitionPowers, noise: &NoiseModel, cfg: &MiConfig) -> Result<(f64, f64)> {
    powers.require_positive_dif()?;
    let values = per_trial(cfg.trials, cfg.seed, Domain::MutualInformation, |rng| {
        let l = draw_letter(powers, noise, cfg.order, rng);
        Ok((-info_density_single_with(l.x_dif, l.x_eq, l.y, powers, noise, &cfg.density)?.value).exp())
    })?;
    Ok(mean_and_batch_se(&values, cfg.batches))
}

fn powers_json(p: &PartitionPowers, noise: &NoiseModel) -> serde_json::Value {
    json!({"v_dif": p.v_dif, "v_eq": p.v_eq, "sigma": noise.std_dev()})
}

/// Lower and upper single-letter bounds: the `I₁` form with `v_dif`, and the
/// `I₂` form with `v_dif`, `v_eq`.
pub fn sandwich_bounds(powers: &PartitionPowers, noise: &NoiseModel) -> (f64, f64) {
    (
        i1_from_power(powers.v_dif, noise),
        i2_from_powers(powers.v_dif, powers.v_eq, noise),
    )
}

pub fn sandwich_check(
    powers: &PartitionPowers,
    noise: &NoiseModel,
    cfg: &MiConfig,
    resolution: f64,
) -> Result<VerificationReport> {
    let est = mi_estimate(powers, noise, cfg)?;
    let (lower, upper) = sandwich_bounds(powers, noise);
    let mut params = powers_json(powers, noise);
    params["seed"] = json!(cfg.seed);
    Ok(VerificationReport::new(
        "sandwich",
        params,
        est.estimate,
        est.standard_error,
        lower,
        upper,
        cfg.trials as u64,
        resolution,
    )
    .with_clamped(est.clamped as u64))
}

/// `(v_dif, v_eq, σ)` over `{0.5, 1, 2} × {0, 1} × {0.5, 1}`.
pub fn sandwich_battery() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &v_dif in &[0.5, 1.0, 2.0] {
        for &v_eq in &[0.0, 1.0] {
            for &sigma in &[0.5, 1.0] {
                out.push((v_dif, v_eq, sigma));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub n: usize,
    pub mu_grid: Vec<f64>,
    pub trials: usize,
    /// Samples for the reference value of `I`.
    pub mi_trials: usize,
    pub seed: u64,
    pub resolution: f64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            n: 20,
            mu_grid: vec![0.0, 0.01, 0.02, 0.05],
            trials: 10_000,
            mi_trials: 1_000_000,
            seed: 0,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Required precision of the reference `I`, relative to its value.
pub const MI_REFERENCE_REL_SE: f64 = 3e-3;

/// Empirical two-sided tails of `iⁿ - nI` at `±2nCμ` against
/// `exp(-nC r(μ)) + exp(-nC r(-μ))`, one report per `μ`.
pub fn concentration_check(
    b_norm_sq: f64,
    powers: &PartitionPowers,
    noise: &NoiseModel,
    cfg: &ConcentrationConfig,
) -> Result<Vec<VerificationReport>> {
    powers.require_positive_dif()?;
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::invalid("n and trials must be positive"));
    }
    let constants = compute_c(b_norm_sq, noise)?;
    let reference = mi_estimate(
        powers,
        noise,
        &MiConfig::new(cfg.mi_trials, derive_seed(cfg.seed, Domain::MutualInformation, 0)),
    )?;
    let reference_ok = reference.standard_error < MI_REFERENCE_REL_SE * reference.estimate.abs();

    let sample_seed = derive_seed(cfg.seed, Domain::Concentration, 0);
    let sums = per_trial(cfg.trials, sample_seed, Domain::Concentration, |rng| {
        let mut values = Vec::with_capacity(cfg.n);
        let mut clamped = 0;
        for _ in 0..cfg.n {
            let l = draw_letter(powers, noise, DrawOrder::EqFirst, rng);
            let i = info_density_single_with(l.x_dif, l.x_eq, l.y, powers, noise, &DensityConfig::default())?;
            values.push(i.value);
            clamped += i.clamped;
        }
        Ok((compensated_sum(values), clamped))
    })?;
    let clamped: usize = sums.iter().map(|s| s.1).sum();
    let n = cfg.n as f64;
    let centered: Vec<f64> = sums.iter().map(|s| s.0 - n * reference.estimate).collect();

    let c = constants.c_b;
    let t = cfg.trials as f64;
    let mut reports = Vec::with_capacity(cfg.mu_grid.len());
    for &mu in &cfg.mu_grid {
        let cut = 2.0 * n * c * mu;
        let low = centered.iter().filter(|&&d| d <= -cut).count() as f64 / t;
        let high = centered.iter().filter(|&&d| d >= cut).count() as f64 / t;
        let freq = low + high;
        let se = (freq.min(1.0) * (1.0 - freq.min(1.0)) / t).sqrt();
        let bound = (-n * c * r(mu)).exp() + (-n * c * r(-mu)).exp();
        let mut params = powers_json(powers, noise);
        params["b_norm_sq"] = json!(b_norm_sq);
        params["n"] = json!(cfg.n);
        params["mu"] = json!(mu);
        params["seed"] = json!(cfg.seed);
        let mut report = VerificationReport::new(
            "concentration",
            params,
            freq,
            se,
            f64::NEG_INFINITY,
            bound,
            cfg.trials as u64,
            cfg.resolution,
        )
        .with_clamped((clamped / cfg.n) as u64)
        .with_details(json!({
            "lower_tail": low,
            "upper_tail": high,
            "slack": bound - freq,
            "c_b": c,
            "d_b": constants.d_b,
            "mi_reference": reference.estimate,
            "mi_reference_se": reference.standard_error,
            "mi_reference_trials": reference.trials,
            "mi_reference_precise": reference_ok,
        }));
        if !reference_ok {
            report.verdict = Verdict::Inconclusive;
        }
        reports.push(report);
    }
    Ok(reports)
}

/// `(v_dif, v_eq, σ)`: the central case plus one with overlap mass.
pub fn concentration_battery() -> Vec<(f64, f64, f64)> {
    vec![(1.0, 0.0, 1.0), (1.0, 1.0, 0.5)]
}

/// `sup_α |(1/c_β) Σ_{i≤⌊αk⌋} |β'_i|² - g(α)|` for one Gaussian draw,
/// checked against `5/√k`.
pub fn g_convergence_check(c_beta: f64, k: usize, alpha_grid: &[f64], seed: u64) -> Result<VerificationReport> {
    if k < 100 {
        return Err(Error::invalid(format!("k must be at least 100, got {k}")));
    }
    let model = SignalModel::gaussian(c_beta, k)?;
    let beta = model.sample_beta(&mut substream(seed, Domain::GConvergence, 0));
    let sorted = SortedSignal::from_values(&beta);
    let norm = 1.0 / (k as f64 * model.sigma_beta_sq().expect("gaussian model"));
    let mut sup: f64 = 0.0;
    let mut arg = 0.0;
    for &a in alpha_grid {
        let dev = (sorted.prefix_sums()[floor_alpha_k(a, k)] * norm - g(a)?).abs();
        if dev > sup {
            sup = dev;
            arg = a;
        }
    }
    let tolerance = 5.0 / (k as f64).sqrt();
    Ok(VerificationReport::new(
        "g_convergence",
        json!({"c_beta": c_beta, "k": k, "grid_points": alpha_grid.len(), "seed": seed}),
        sup,
        0.0,
        f64::NEG_INFINITY,
        tolerance,
        1,
        DEFAULT_RESOLUTION,
    )
    .with_details(json!({"argmax_alpha": arg})))
}

/// `0, 0.01, …, 1`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=100).map(|j| j as f64 / 100.0).collect()
}

/// Largest centered second difference of `ln f` on a grid with step
/// `0.01 × length_scale` over the effective support; passes when `≤ 1e-6`.
pub fn logconcavity_check(density: &dyn LogDensity) -> Result<VerificationReport> {
    const TOLERANCE: f64 = 1e-6;
    let (lo, hi) = density.effective_support();
    let h = 0.01 * density.length_scale();
    let m = ((hi - lo) / h).ceil() as usize;
    let logs: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|j| density.ln_density(lo + j as f64 * h))
        .collect::<Result<_>>()?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = lo;
    for j in 1..m {
        let d2 = logs[j + 1] - 2.0 * logs[j] + logs[j - 1];
        if d2 > worst {
            worst = d2;
            at = lo + j as f64 * h;
        }
    }
    Ok(VerificationReport::new(
        "logconcavity",
        json!({"density": density.label(), "grid_step": h, "lo": lo, "hi": hi}),
        worst,
        0.0,
        f64::NEG_INFINITY,
        TOLERANCE,
        (m + 1) as u64,
        DEFAULT_RESOLUTION,
    )
    .with_details(json!({"argmax_y": at})))
}

/// `(λ, v, σ)` triples for the log-concavity check.
pub fn logconcavity_battery() -> Vec<(f64, f64, f64)> {
    vec![
        (0.0, 1.0, 1.0),
        (4.0, 0.5, 1.0),
        (1.0, 1.0, 0.5),
        (9.0, 0.25, 0.5),
        (0.5, 2.0, 0.25),
        (16.0, 1.0, 1.0),
    ]
}

pub fn logconcavity_laws() -> Result<Vec<ConditionalOutputLaw>> {
    logconcavity_battery()
        .into_iter()
        .map(|(l, v, s)| ConditionalOutputLaw::new(l, v, NoiseModel::gaussian_sd(s)?))
        .collect()
}

/// The bimodal mixture, which must fail the log-concavity check.
pub fn negative_control() -> Result<VerificationReport> {
    let mut r = logconcavity_check(&GaussianMixture::bimodal_control())?;
    r.check_name = NEGATIVE_CONTROL.to_string();
    Ok(r)
}

/// Named groups of checks with their default sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sandwich,
    Concentration,
    Gconv,
    Logconcavity,
    NegativeControl,
    All,
}

impl Suite {
    pub fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Sandwich,
                Suite::Concentration,
                Suite::Gconv,
                Suite::Logconcavity,
                Suite::NegativeControl,
            ],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub sandwich_trials: usize,
    pub concentration: ConcentrationConfig,
    pub gconv_k: usize,
    pub gconv_seeds: u64,
    pub resolution: f64,
}

impl SuiteOptions {
    pub fn new(seed: u64) -> Self {
        SuiteOptions {
            seed,
            sandwich_trials: 100_000,
            concentration: ConcentrationConfig {
                seed,
                ..ConcentrationConfig::default()
            },
            gconv_k: 10_000,
            gconv_seeds: 20,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuiteTally {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

impl SuiteTally {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Counts outcomes of a suite run. Inside `All` the negative control is
/// expected to fail, so a failing control counts as passed there; run on its
/// own its verdict is taken at face value.
pub fn tally(suite: Suite, reports: &[VerificationReport]) -> SuiteTally {
    let mut t = SuiteTally::default();
    for r in reports {
        let mut v = r.verdict;
        if suite == Suite::All && r.check_name == NEGATIVE_CONTROL {
            v = match v {
                Verdict::Fail => Verdict::Pass,
                Verdict::Pass => Verdict::Fail,
                Verdict::Inconclusive => Verdict::Inconclusive,
            };
        }
        match v {
            Verdict::Pass => t.passed += 1,
            Verdict::Fail => t.failed += 1,
            Verdict::Inconclusive => t.inconclusive += 1,
        }
    }
    t
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for part in suite.parts() {
        match part {
            Suite::Sandwich => {
                for (j, (v_dif, v_eq, sigma)) in sandwich_battery().into_iter().enumerate() {
                    let powers = PartitionPowers::new(v_dif, v_eq)?;
                    let noise = NoiseModel::gaussian_sd(sigma)?;
                    let cfg = MiConfig::new(
                        opts.sandwich_trials,
                        derive_seed(opts.seed, Domain::MutualInformation, j as u64),
                    );
                    out.push(sandwich_check(&powers, &noise, &cfg, opts.resolution)?);
                }
            }
            Suite::Concentration => {
                for (j, (v_dif, v_eq, sigma)) in concentration_battery().into_iter().enumerate() {
                    let powers = PartitionPowers::new(v_dif, v_eq)?;
                    let noise = NoiseModel::gaussian_sd(sigma)?;
                    let cfg = ConcentrationConfig {
                        seed: derive_seed(opts.concentration.seed, Domain::Concentration, j as u64),
                        resolution: opts.resolution,
                        ..opts.concentration.clone()
                    };
                    out.extend(concentration_check(v_dif + v_eq, &powers, &noise, &cfg)?);
                }
            }
            Suite::Gconv => {
                let grid = default_alpha_grid();
                for s in 0..opts.gconv_seeds {
                    out.push(g_convergence_check(
                        1.0,
                        opts.gconv_k,
                        &grid,
                        derive_seed(opts.seed, Domain::GConvergence, s),
                    )?);
                }
            }
            Suite::Logconcavity => {
                for law in logconcavity_laws()? {
                    out.push(logconcavity_check(&law)?);
                }
            }
            Suite::NegativeControl => out.push(negative_control()?),
            Suite::All => unreachable!("expanded by parts()"),
        }
    }
    Ok(out)
}
