//! Small-scale support recovery experiments with exhaustive likelihood
//! decoders, producing empirical error curves `P_e(α*)` against `n`.

use std::fmt::Write as _;

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::NoiseModel;
use crate::error::{Error, Result};
use crate::model::{ProblemInstance, SignalModel, SupportSet};
use crate::numeric::floor_alpha_k;
use crate::rng::{derive_seed, substream, Domain};

/// Largest number of candidate supports an exhaustive decoder will scan.
pub const MAX_HYPOTHESES: u128 = 10_000;

/// Default number of signal draws for the marginal-likelihood decoder.
pub const DEFAULT_MC_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decoder {
    /// Exact maximum likelihood for a flat signal.
    FlatMl,
    /// Monte Carlo marginal likelihood over Gaussian signal draws shared by
    /// all candidate supports.
    McMarginal { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: usize,
    pub k: usize,
    pub n_grid: Vec<usize>,
    pub alpha_star: f64,
    pub signal: SignalModel,
    pub noise: NoiseModel,
    pub trials: usize,
    pub decoder: Decoder,
    pub master_seed: u64,
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        if self.k == 0 || self.k > self.p {
            return Err(Error::invalid(format!(
                "need 1 <= k <= p, got k={}, p={}",
                self.k, self.p
            )));
        }
        if self.signal.k() != self.k {
            return Err(Error::invalid(format!(
                "k={} does not match the signal length {}",
                self.k,
                self.signal.k()
            )));
        }
        let count = binomial(self.p, self.k);
        if count > MAX_HYPOTHESES {
            return Err(Error::invalid(format!(
                "C({}, {}) = {count} supports exceeds the exhaustive limit {MAX_HYPOTHESES}",
                self.p, self.k
            )));
        }
        if !(self.alpha_star > 0.0 && self.alpha_star <= 1.0) || floor_alpha_k(self.alpha_star, self.k) == 0 {
            return Err(Error::invalid(format!(
                "need floor(alpha_star * k) >= 1, got alpha_star={}, k={}",
                self.alpha_star, self.k
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        check_decoder(&self.decoder, &self.signal)
    }
}

fn check_decoder(decoder: &Decoder, signal: &SignalModel) -> Result<()> {
    match (decoder, signal) {
        (Decoder::FlatMl, SignalModel::DiscreteFlat { .. }) => Ok(()),
        (Decoder::FlatMl, SignalModel::DiscreteGeneral { .. }) => {
            if signal.distinct_count() == Some(1) {
                Ok(())
            } else {
                Err(Error::Unsupported(
                    "flat-ml needs identical entries; a discrete signal with several distinct values \
                     would require marginalizing over permutations"
                        .into(),
                ))
            }
        }
        (Decoder::FlatMl, SignalModel::GaussianIid { .. }) => {
            Err(Error::invalid("flat-ml decoder requires a discrete flat signal"))
        }
        (Decoder::McMarginal { samples }, SignalModel::GaussianIid { .. }) => {
            if *samples == 0 {
                Err(Error::invalid("mc-marginal needs at least one sample"))
            } else {
                Ok(())
            }
        }
        (Decoder::McMarginal { .. }, _) => Err(Error::invalid("mc-marginal decoder requires a Gaussian signal")),
    }
}

/// `Σ_i ln f_Z(y_i - |<x_s^(i), b>|²)` for the columns `support`.
fn log_likelihood(inst: &ProblemInstance, support: &[usize], b: &[Complex64], noise: &NoiseModel) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.n {
        let row = inst.x.row(i);
        let mut ip = Complex64::new(0.0, 0.0);
        for (&j, bj) in support.iter().zip(b) {
            ip += row[j].conj() * bj;
        }
        total += noise.ln_pdf(inst.y[i] - ip.norm_sqr());
    }
    total
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = values.iter().map(|v| (v - m).exp()).sum();
    m + (s / values.len() as f64).ln()
}

/// Exhaustive decoder; the first support in lexicographic order wins ties.
pub fn decode(
    inst: &ProblemInstance,
    signal: &SignalModel,
    noise: &NoiseModel,
    decoder: &Decoder,
) -> Result<SupportSet> {
    check_decoder(decoder, signal)?;
    if signal.k() != inst.k {
        return Err(Error::invalid("signal length differs from the instance sparsity"));
    }
    if binomial(inst.p, inst.k) > MAX_HYPOTHESES {
        return Err(Error::invalid("too many candidate supports for exhaustive decoding"));
    }
    let draws: Vec<Vec<Complex64>> = match decoder {
        Decoder::FlatMl => vec![signal.fixed_vector().expect("discrete model")],
        Decoder::McMarginal { samples } => {
            let mut rng = substream(inst.seed, Domain::Decoder, 0);
            (0..*samples).map(|_| signal.sample_beta(&mut rng)).collect()
        }
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut scores = vec![0.0; draws.len()];
    for cand in (0..inst.p).combinations(inst.k) {
        for (s, b) in scores.iter_mut().zip(&draws) {
            *s = log_likelihood(inst, &cand, b, noise);
        }
        let score = if scores.len() == 1 {
            scores[0]
        } else {
            log_mean_exp(&scores)
        };
        let better = match &best {
            None => true,
            Some((_, s)) => score > *s,
        };
        if better {
            best = Some((cand, score));
        }
    }
    let (indices, _) = best.expect("at least one candidate support");
    SupportSet::new(inst.p, indices)
}

/// `|S \ Ŝ| >= ⌊α* k⌋`.
pub fn error_event(truth: &SupportSet, estimate: &SupportSet, k: usize, alpha_star: f64) -> Result<bool> {
    if truth.k() != k || estimate.k() != k {
        return Err(Error::invalid(format!(
            "supports must both have size {k}, got {} and {}",
            truth.k(),
            estimate.k()
        )));
    }
    Ok(truth.missed_by(estimate) >= floor_alpha_k(alpha_star, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub n: usize,
    pub pe: f64,
    pub se: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub points: Vec<ErrorPoint>,
}

/// A threshold value drawn next to an empirical curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub name: String,
    pub n: f64,
}

impl ErrorCurve {
    pub fn to_csv(&self) -> String {
        self.to_csv_with_references(&[])
    }

    /// CSV `n,pe,se,trials`, preceded by one `#` comment per reference line.
    pub fn to_csv_with_references(&self, refs: &[ReferenceLine]) -> String {
        let mut out = String::new();
        for r in refs {
            writeln!(out, "# reference {}={:.16e} (asymptotic, not finite-p)", r.name, r.n).expect("write");
        }
        out.push_str("n,pe,se,trials\n");
        for p in &self.points {
            writeln!(out, "{},{:.16e},{:.16e},{}", p.n, p.pe, p.se, p.trials).expect("write");
        }
        out
    }
}

/// Seed of trial `t` at grid position `j`.
pub fn trial_seed(master_seed: u64, j: usize, t: usize) -> u64 {
    derive_seed(
        derive_seed(master_seed, Domain::Simulation, j as u64),
        Domain::Simulation,
        t as u64,
    )
}

pub fn error_curve(cfg: &SimConfig) -> Result<ErrorCurve> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    for (j, &n) in cfg.n_grid.iter().enumerate() {
        let outcomes: Vec<bool> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let inst =
                    ProblemInstance::generate(cfg.p, n, &cfg.signal, &cfg.noise, trial_seed(cfg.master_seed, j, t))?;
                let est = decode(&inst, &cfg.signal, &cfg.noise, &cfg.decoder)?;
                error_event(&inst.support, &est, cfg.k, cfg.alpha_star)
            })
            .collect::<Result<_>>()?;
        let errors = outcomes.iter().filter(|&&e| e).count();
        let t = cfg.trials as f64;
        let pe = errors as f64 / t;
        points.push(ErrorPoint {
            n,
            pe,
            se: (pe * (1.0 - pe) / t).sqrt(),
            trials: cfg.trials,
        });
    }
    Ok(ErrorCurve { points })
}

/// Weighted least-squares nonincreasing fit (pool adjacent violators).
pub fn isotonic_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // Blocks of (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, l1 + l2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    pub max_residual: f64,
    pub pooled_se: f64,
    pub passed: bool,
}

/// Largest deviation from the nonincreasing fit, against `3 × pooled se`
/// with `pooled se = sqrt(p̄(1-p̄)/T)`.
pub fn monotonicity_check(curve: &ErrorCurve) -> MonotonicityCheck {
    let pes: Vec<f64> = curve.points.iter().map(|p| p.pe).collect();
    let weights: Vec<f64> = curve.points.iter().map(|p| p.trials as f64).collect();
    let fit = isotonic_nonincreasing(&pes, &weights);
    let max_residual = pes.iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let total: f64 = weights.iter().sum();
    let pbar = pes.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / total.max(1.0);
    let per_point = total / weights.len().max(1) as f64;
    let pooled_se = (pbar * (1.0 - pbar) / per_point.max(1.0)).sqrt();
    MonotonicityCheck {
        max_residual,
        pooled_se,
        passed: max_residual <= 3.0 * pooled_se,
    }
}
