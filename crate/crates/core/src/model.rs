//! Supports, signal laws, measurement matrices and observations for the
//! phaseless acquisition model `Y = |<X_s, beta_s>|^2 + Z`.
//!
//! Inner products follow `<x, b> = sum_i conj(x_i) * b_i`. Only the squared
//! magnitude enters the model, so the side that is conjugated is immaterial.
//! A complex Gaussian `CN(0, v)` has variance `v / 2` in each of its real and
//! imaginary parts.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::densities::NoiseModel;
use crate::error::{Error, Result};
use crate::numeric::floor_alpha_k;
use crate::rng::{substream, Domain};

/// Draw from `CN(0, variance)`.
pub fn sample_complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `<x, b> = sum conj(x_i) b_i`.
pub fn inner(x: &[Complex64], b: &[Complex64]) -> Complex64 {
    x.iter().zip(b).map(|(xi, bi)| xi.conj() * bi).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    p: usize,
}

impl SupportSet {
    pub fn new(p: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("support must contain at least one index"));
        }
        if indices.len() > p {
            return Err(Error::invalid(format!(
                "support of size {} exceeds ambient dimension {p}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("support indices must be strictly increasing"));
        }
        if indices.last().is_some_and(|&i| i >= p) {
            return Err(Error::invalid(format!("support index out of range [0, {p})")));
        }
        Ok(SupportSet { indices, p })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    /// Number of indices of `self` absent from `other`.
    pub fn missed_by(&self, other: &SupportSet) -> usize {
        self.indices
            .iter()
            .filter(|i| other.indices.binary_search(i).is_err())
            .count()
    }
}

/// Uniform draw over the `C(p, k)` subsets of `{0, …, p-1}` of size `k`.
pub fn sample_support<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Result<SupportSet> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > p {
        return Err(Error::invalid(format!("k = {k} exceeds p = {p}")));
    }
    let mut indices = rand::seq::index::sample(rng, p, k).into_vec();
    indices.sort_unstable();
    SupportSet::new(p, indices)
}

/// Law of the non-zero entries `beta_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalModel {
    /// Uniformly random permutation of a fixed vector.
    DiscreteGeneral { b: Vec<Complex64> },
    /// All entries equal to `sqrt(c_beta / k)`.
    DiscreteFlat { c_beta: f64, k: usize },
    /// I.i.d. `CN(0, c_beta / k)` entries.
    GaussianIid { c_beta: f64, k: usize },
}

impl SignalModel {
    pub fn discrete(b: Vec<Complex64>) -> Result<Self> {
        let m = SignalModel::DiscreteGeneral { b };
        m.validate()?;
        Ok(m)
    }

    pub fn flat(c_beta: f64, k: usize) -> Result<Self> {
        let m = SignalModel::DiscreteFlat { c_beta, k };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(c_beta: f64, k: usize) -> Result<Self> {
        let m = SignalModel::GaussianIid { c_beta, k };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SignalModel::DiscreteGeneral { b } => {
                if b.is_empty() {
                    return Err(Error::invalid("discrete signal vector must be non-empty"));
                }
                if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::invalid("discrete signal entries must be finite"));
                }
            }
            SignalModel::DiscreteFlat { c_beta, k } | SignalModel::GaussianIid { c_beta, k } => {
                if !(c_beta.is_finite() && *c_beta > 0.0) {
                    return Err(Error::invalid(format!("c_beta must be positive, got {c_beta}")));
                }
                if *k == 0 {
                    return Err(Error::invalid("k must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        match self {
            SignalModel::DiscreteGeneral { b } => b.len(),
            SignalModel::DiscreteFlat { k, .. } | SignalModel::GaussianIid { k, .. } => *k,
        }
    }

    /// Per-entry variance `c_beta / k` of the Gaussian model.
    pub fn sigma_beta_sq(&self) -> Option<f64> {
        match self {
            SignalModel::GaussianIid { c_beta, k } => Some(c_beta / *k as f64),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, SignalModel::GaussianIid { .. })
    }

    /// Number of distinct entries `m_beta` of a discrete vector.
    pub fn distinct_count(&self) -> Option<usize> {
        match self {
            SignalModel::DiscreteGeneral { b } => {
                let mut distinct: Vec<Complex64> = Vec::new();
                for z in b {
                    if !distinct.contains(z) {
                        distinct.push(*z);
                    }
                }
                Some(distinct.len())
            }
            SignalModel::DiscreteFlat { .. } => Some(1),
            SignalModel::GaussianIid { .. } => None,
        }
    }

    /// The fixed vector of a discrete model (in its stored order).
    pub fn fixed_vector(&self) -> Option<Vec<Complex64>> {
        match self {
            SignalModel::DiscreteGeneral { b } => Some(b.clone()),
            SignalModel::DiscreteFlat { c_beta, k } => Some(vec![Complex64::new((c_beta / *k as f64).sqrt(), 0.0); *k]),
            SignalModel::GaussianIid { .. } => None,
        }
    }

    /// Sorted squared magnitudes of a discrete model.
    pub fn sorted(&self) -> Option<SortedSignal> {
        self.fixed_vector().map(|b| SortedSignal::from_values(&b))
    }

    /// `E ||beta_s||^2`: exact for discrete models, `c_beta` for the Gaussian one.
    pub fn expected_norm_sq(&self) -> f64 {
        match self {
            SignalModel::GaussianIid { c_beta, .. } => *c_beta,
            _ => self.sorted().map(|s| s.total()).unwrap_or(0.0),
        }
    }

    pub fn sample_beta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        match self {
            SignalModel::DiscreteGeneral { b } => {
                let mut v = b.clone();
                v.shuffle(rng);
                v
            }
            SignalModel::DiscreteFlat { .. } => self.fixed_vector().expect("discrete model"),
            SignalModel::GaussianIid { c_beta, k } => {
                let var = c_beta / *k as f64;
                (0..*k).map(|_| sample_complex_normal(rng, var)).collect()
            }
        }
    }
}

/// Squared magnitudes in nondecreasing order with their prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSignal {
    sq_magnitudes: Vec<f64>,
    prefix_sums: Vec<f64>,
}

impl SortedSignal {
    pub fn from_values(values: &[Complex64]) -> Self {
        Self::from_sq_magnitudes(values.iter().map(|z| z.norm_sqr()).collect())
    }

    pub fn from_sq_magnitudes(mut sq: Vec<f64>) -> Self {
        sq.sort_by(|a, b| a.total_cmp(b));
        let mut prefix_sums = Vec::with_capacity(sq.len() + 1);
        let mut acc = 0.0;
        prefix_sums.push(acc);
        for &x in &sq {
            acc += x;
            prefix_sums.push(acc);
        }
        SortedSignal {
            sq_magnitudes: sq,
            prefix_sums,
        }
    }

    pub fn k(&self) -> usize {
        self.sq_magnitudes.len()
    }

    pub fn sq_magnitudes(&self) -> &[f64] {
        &self.sq_magnitudes
    }

    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix_sums
    }

    pub fn total(&self) -> f64 {
        *self.prefix_sums.last().expect("prefix sums start with 0")
    }

    /// Mass of the `alpha·k` smallest entries.
    pub fn lower_mass(&self, alpha: f64, mode: PartitionMode) -> f64 {
        let k = self.k();
        match mode {
            PartitionMode::FloorExact => self.prefix_sums[floor_alpha_k(alpha, k)],
            PartitionMode::Asymptotic => {
                let x = alpha * k as f64;
                let m = (x.floor() as usize).min(k);
                if m == k {
                    self.total()
                } else {
                    self.prefix_sums[m] + (x - m as f64) * self.sq_magnitudes[m]
                }
            }
        }
    }
}

/// How `alpha·k` is turned into a count of entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    /// `⌊alpha·k⌋` smallest entries, for finite-k evaluation.
    FloorExact,
    /// Linear interpolation at `alpha·k`, the k → ∞ form used by limit curves.
    Asymptotic,
}

/// Signal mass on the differing and overlapping parts of a support partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPowers {
    pub v_dif: f64,
    pub v_eq: f64,
    pub ell: usize,
}

impl PartitionPowers {
    pub fn new(v_dif: f64, v_eq: f64) -> Result<Self> {
        if !(v_dif.is_finite() && v_dif >= 0.0 && v_eq.is_finite() && v_eq >= 0.0) {
            return Err(Error::invalid(format!(
                "partition powers must be finite and non-negative, got v_dif={v_dif}, v_eq={v_eq}"
            )));
        }
        Ok(PartitionPowers { v_dif, v_eq, ell: 0 })
    }

    pub fn require_positive_dif(&self) -> Result<()> {
        if self.v_dif > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("v_dif must be positive"))
        }
    }
}

/// Split `total` into `v_dif` and a `v_eq` with `v_dif + v_eq == total` in
/// floating point.
fn complement(total: f64, v_dif: f64) -> f64 {
    let mut v_eq = (total - v_dif).max(0.0);
    for _ in 0..4 {
        let s = v_dif + v_eq;
        if s == total {
            break;
        }
        v_eq = if s > total { v_eq.next_down() } else { v_eq.next_up() };
    }
    v_eq
}

/// Partition powers for `s_dif` = the `alpha·k` smallest-magnitude entries.
pub fn partition_powers(sorted: &SortedSignal, alpha: f64, mode: PartitionMode) -> Result<PartitionPowers> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let v_dif = sorted.lower_mass(alpha, mode);
    let ell = match mode {
        PartitionMode::FloorExact => floor_alpha_k(alpha, sorted.k()),
        PartitionMode::Asymptotic => (alpha * sorted.k() as f64).round() as usize,
    };
    Ok(PartitionPowers {
        v_dif,
        v_eq: complement(sorted.total(), v_dif),
        ell,
    })
}

/// Anything that can produce additive observation noise.
pub trait NoiseSampler {
    fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

impl NoiseSampler for NoiseModel {
    fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample(rng)
    }
}

/// Zero noise, for exercising the signal term alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Noiseless;

impl NoiseSampler for Noiseless {
    fn sample_noise<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        0.0
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// I.i.d. `CN(0, 1)` entries.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| sample_complex_normal(rng, 1.0)).collect();
        ComplexMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// Sub-matrix made of the given columns.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        ComplexMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }
}

/// `Y[i] = |<x_s^(i), beta_s>|^2 + Z[i]`.
pub fn observe<N: NoiseSampler, R: Rng + ?Sized>(
    x_s: &ComplexMatrix,
    beta_s: &[Complex64],
    noise: &N,
    rng: &mut R,
) -> Result<Vec<f64>> {
    observe_with_noise(x_s, beta_s, noise, rng).map(|(y, _)| y)
}

fn observe_with_noise<N: NoiseSampler, R: Rng + ?Sized>(
    x_s: &ComplexMatrix,
    beta_s: &[Complex64],
    noise: &N,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x_s.cols() != beta_s.len() {
        return Err(Error::invalid(format!(
            "X_s has {} columns but beta_s has {} entries",
            x_s.cols(),
            beta_s.len()
        )));
    }
    let mut y = Vec::with_capacity(x_s.rows());
    let mut z = Vec::with_capacity(x_s.rows());
    for i in 0..x_s.rows() {
        let zi = noise.sample_noise(rng);
        y.push(inner(x_s.row(i), beta_s).norm_sqr() + zi);
        z.push(zi);
    }
    Ok((y, z))
}

/// One realization of the full acquisition model. Everything is a
/// deterministic function of `(p, k, n, signal, noise, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub support: SupportSet,
    /// Dense, zero off the support.
    pub beta: Vec<Complex64>,
    pub x: ComplexMatrix,
    pub y: Vec<f64>,
    /// Noise draws actually added to each measurement.
    pub z: Vec<f64>,
}

/// Serialized form of a [`ProblemInstance`]; the matrix is regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub support: Vec<usize>,
    pub beta_re: Vec<f64>,
    pub beta_im: Vec<f64>,
    pub y: Vec<f64>,
}

impl ProblemInstance {
    pub fn generate(p: usize, n: usize, signal: &SignalModel, noise: &NoiseModel, seed: u64) -> Result<Self> {
        signal.validate()?;
        let k = signal.k();
        let support = sample_support(p, k, &mut substream(seed, Domain::Support, 0))?;
        let beta_s = signal.sample_beta(&mut substream(seed, Domain::Beta, 0));
        let x = Self::regenerate_matrix(p, n, seed);
        let x_s = x.select_columns(support.indices());
        let (y, z) = observe_with_noise(&x_s, &beta_s, noise, &mut substream(seed, Domain::Noise, 0))?;
        let mut beta = vec![Complex64::new(0.0, 0.0); p];
        for (&i, &b) in support.indices().iter().zip(&beta_s) {
            beta[i] = b;
        }
        Ok(ProblemInstance {
            p,
            k,
            n,
            seed,
            support,
            beta,
            x,
            y,
            z,
        })
    }

    /// The `n x p` measurement matrix belonging to `seed`.
    pub fn regenerate_matrix(p: usize, n: usize, seed: u64) -> ComplexMatrix {
        ComplexMatrix::gaussian(n, p, &mut substream(seed, Domain::Matrix, 0))
    }

    pub fn beta_s(&self) -> Vec<Complex64> {
        self.support.indices().iter().map(|&i| self.beta[i]).collect()
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            p: self.p,
            k: self.k,
            n: self.n,
            seed: self.seed,
            support: self.support.indices().to_vec(),
            beta_re: self.beta.iter().map(|b| b.re).collect(),
            beta_im: self.beta.iter().map(|b| b.im).collect(),
            y: self.y.clone(),
        }
    }

    /// Regenerate an instance from its record and check it reproduces the
    /// stored support, signal and observations bit for bit.
    pub fn replay(record: &InstanceRecord, signal: &SignalModel, noise: &NoiseModel) -> Result<Self> {
        let inst = Self::generate(record.p, record.n, signal, noise, record.seed)?;
        if inst.to_record() != *record {
            return Err(Error::invalid(
                "instance record does not match regeneration from its seed",
            ));
        }
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn rng() -> crate::rng::StreamRng {
        substream(11, Domain::Custom(0), 0)
    }

    #[test]
    fn full_support_when_k_equals_p() {
        let s = sample_support(5, 5, &mut rng()).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_empty_or_oversized_support() {
        assert!(matches!(
            sample_support(5, 0, &mut rng()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_support(5, 6, &mut rng()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(SupportSet::new(4, vec![2, 1]).is_err());
        assert!(SupportSet::new(4, vec![1, 4]).is_err());
    }

    #[test]
    fn two_element_support_is_fair() {
        // Exact oracle: P[{0}] = 1/2, binomial sd sqrt(N/4).
        let n = 1_000_000;
        let mut r = rng();
        let zeros = (0..n)
            .filter(|_| sample_support(2, 1, &mut r).unwrap().indices()[0] == 0)
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((zeros - 0.5 * n as f64).abs() <= 3.0 * sd, "zeros={zeros}");
    }

    #[test]
    fn flat_signal_is_constant() {
        let m = SignalModel::flat(2.0, 2).unwrap();
        assert_eq!(m.sample_beta(&mut rng()), vec![Complex64::new(1.0, 0.0); 2]);
    }

    #[test]
    fn gaussian_signal_energy_matches_c_beta() {
        // E||beta||^2 = k sigma_beta^2 = c_beta.
        let m = SignalModel::gaussian(1.0, 100).unwrap();
        let mut r = rng();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| m.sample_beta(&mut r).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let (mean, se) = crate::numeric::mean_and_batch_se(&draws, 100);
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean={mean} se={se}");
    }

    #[test]
    fn discrete_permutation_is_uniform() {
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let m = SignalModel::discrete(b.clone()).unwrap();
        let n = 100_000;
        let mut r = rng();
        let same = (0..n).filter(|_| m.sample_beta(&mut r) == b).count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((same - 0.5 * n as f64).abs() <= 3.0 * sd);
        assert_eq!(m.distinct_count(), Some(2));
    }

    #[test]
    fn observe_examples() {
        let x = ComplexMatrix::gaussian(5, 3, &mut rng());
        let y = observe(&x, &[Complex64::new(0.0, 0.0); 3], &Noiseless, &mut rng()).unwrap();
        assert_eq!(y, vec![0.0; 5]);

        let e1 = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let x = ComplexMatrix::from_rows(2, 3, [e1.clone(), e1].concat()).unwrap();
        let beta = [
            Complex64::new(3.0, 4.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let y = observe(&x, &beta, &Noiseless, &mut rng()).unwrap();
        assert_eq!(y, vec![25.0, 25.0]);

        assert!(observe(&x, &beta[..2], &Noiseless, &mut rng()).is_err());
    }

    #[test]
    fn noiseless_observations_are_exponential() {
        // |CN(0, v)|^2 ~ Exp(mean v); KS statistic at level 0.01 is 1.63/sqrt(N).
        let v = 1.0;
        let k = 4;
        let b = vec![Complex64::new((v / k as f64).sqrt(), 0.0); k];
        let n = 1_000_000;
        let mut r = rng();
        let x = ComplexMatrix::gaussian(n, k, &mut r);
        let mut y = observe(&x, &b, &Noiseless, &mut r).unwrap();
        let (mean, se) = crate::numeric::mean_and_batch_se(&y, 100);
        assert!((mean - v).abs() <= 3.0 * se);
        let var = y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - v * v).abs() < 0.01, "var={var}");

        y.sort_by(|a, b| a.total_cmp(b));
        let nf = n as f64;
        let ks = y
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let cdf = 1.0 - (-t / v).exp();
                (cdf - i as f64 / nf).abs().max(((i + 1) as f64 / nf - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 1.63 / nf.sqrt(), "ks={ks}");
    }

    #[test]
    fn partition_examples() {
        let flat = SignalModel::flat(2.0, 10).unwrap().sorted().unwrap();
        let pp = partition_powers(&flat, 0.35, PartitionMode::FloorExact).unwrap();
        assert!((pp.v_dif - 0.6).abs() < 1e-15);
        assert_eq!(pp.ell, 3);
        let pp = partition_powers(&flat, 0.35, PartitionMode::Asymptotic).unwrap();
        assert!((pp.v_dif - 0.7).abs() < 1e-14);

        let pp = partition_powers(&flat, 1.0, PartitionMode::FloorExact).unwrap();
        assert_eq!(pp.v_dif, flat.total());
        assert_eq!(pp.v_eq, 0.0);
        let pp = partition_powers(&flat, 0.0, PartitionMode::FloorExact).unwrap();
        assert_eq!(pp.v_dif, 0.0);
        assert_eq!(pp.v_eq, flat.total());

        assert!(partition_powers(&flat, 1.5, PartitionMode::FloorExact).is_err());
    }

    #[test]
    fn instances_are_reproducible_and_replayable() {
        let signal = SignalModel::gaussian(1.0, 3).unwrap();
        let noise = NoiseModel::gaussian(0.5).unwrap();
        let a = ProblemInstance::generate(12, 7, &signal, &noise, 99).unwrap();
        let b = ProblemInstance::generate(12, 7, &signal, &noise, 99).unwrap();
        let ja = serde_json::to_string(&a.to_record()).unwrap();
        let jb = serde_json::to_string(&b.to_record()).unwrap();
        assert_eq!(ja, jb);

        // Stored noise replays the observations exactly.
        let x_s = a.x.select_columns(a.support.indices());
        let beta_s = a.beta_s();
        for i in 0..a.n {
            assert_eq!(a.y[i], inner(x_s.row(i), &beta_s).norm_sqr() + a.z[i]);
        }
        for (j, b) in a.beta.iter().enumerate() {
            assert_eq!(a.support.indices().contains(&j), *b != Complex64::new(0.0, 0.0));
        }

        let record: InstanceRecord = serde_json::from_str(&ja).unwrap();
        let replayed = ProblemInstance::replay(&record, &signal, &noise).unwrap();
        assert_eq!(replayed, a);

        let mut tampered = record.clone();
        tampered.y[0] += 1.0;
        assert!(ProblemInstance::replay(&tampered, &signal, &noise).is_err());
    }
}
