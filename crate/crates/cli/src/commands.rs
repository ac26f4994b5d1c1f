use std::fmt::Write as _;

use phaselim_core::densities::NoiseModel;
use phaselim_core::limits::{
    figure_data_with_step, threshold, FigureModel, ThresholdQuery, ThresholdResult, REGIME_CAVEAT,
};
use phaselim_core::model::{PartitionMode, SignalModel};
use phaselim_core::simulator::{error_curve, monotonicity_check, Decoder, ReferenceLine, SimConfig};
use phaselim_core::verify::{reports_to_jsonl, run_suite, tally, Suite, SuiteOptions, Verdict, NEGATIVE_CONTROL};
use serde::Serialize;

use crate::args::{
    Command, DecoderArg, FigureArgs, ModeArg, ModelArg, SimulateArgs, SuiteArg, ThresholdsArgs, VerifyArgs,
};
use crate::error::CliError;

/// Data files plus console text produced by one command. Nothing here depends
/// on wall-clock time or the thread count.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
    pub stderr: String,
    /// Set when verification found a failing check.
    pub failure: Option<String>,
}

pub fn run(command: &Command, seed: u64) -> Result<RunOutput, CliError> {
    match command {
        Command::Thresholds(a) => thresholds(a),
        Command::Figure(a) => figure(a),
        Command::Verify(a) => verify(a, seed),
        Command::Simulate(a) => simulate(a, seed),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot describe a replay".into())),
    }
}

fn signal(model: ModelArg, c_beta: f64, k: usize) -> Result<SignalModel, CliError> {
    Ok(match model {
        ModelArg::Gaussian => SignalModel::gaussian(c_beta, k)?,
        ModelArg::Flat => SignalModel::flat(c_beta, k)?,
    })
}

#[derive(Serialize)]
struct ThresholdRecord<'a> {
    query: &'a ThresholdQuery,
    result: &'a ThresholdResult,
}

fn thresholds(a: &ThresholdsArgs) -> Result<RunOutput, CliError> {
    let mode = match a.mode {
        ModeArg::Asymptotic => PartitionMode::Asymptotic,
        ModeArg::FloorExact => PartitionMode::FloorExact,
    };
    let mut query = ThresholdQuery::new(
        a.p,
        a.alpha_star,
        signal(a.model, a.c_beta, a.k)?,
        NoiseModel::gaussian_sd(a.sigma)?,
        mode,
    );
    query.alpha_grid_step = a.alpha_step;
    let result = threshold(&query)?;
    let mut json = serde_json::to_string_pretty(&ThresholdRecord {
        query: &query,
        result: &result,
    })
    .expect("record serializes");
    json.push('\n');

    let stdout = if a.json {
        json.clone()
    } else {
        let mut s = String::new();
        let r = &result;
        writeln!(s, "{:<28}{:.6}", "n_achievability", r.n_achievability).unwrap();
        writeln!(s, "{:<28}{:.6}", "n_converse", r.n_converse).unwrap();
        writeln!(s, "{:<28}{:.6}", "alpha_ach", r.alpha_ach).unwrap();
        writeln!(s, "{:<28}{:.6}", "alpha_con", r.alpha_con).unwrap();
        writeln!(s, "{:<28}{:.6}", "normalized achievability", r.normalized.achievability).unwrap();
        writeln!(s, "{:<28}{:.6}", "normalized converse", r.normalized.converse).unwrap();
        writeln!(s, "{:<28}{}", "eta", r.eta).unwrap();
        writeln!(s, "note: {REGIME_CAVEAT}").unwrap();
        s
    };
    Ok(RunOutput {
        files: vec![("thresholds.json".into(), json.into_bytes())],
        stdout,
        ..RunOutput::default()
    })
}

pub fn snr_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(CliError::Usage(format!("bad SNR grid {min}..{max} step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|j| min + j as f64 * step).collect())
}

fn figure(a: &FigureArgs) -> Result<RunOutput, CliError> {
    let grid = snr_grid(a.snr_min, a.snr_max, a.snr_step)?;
    let mut out = RunOutput::default();
    for (model, name) in [
        (FigureModel::DiscreteFlat, "figure_discrete_flat.csv"),
        (FigureModel::Gaussian, "figure_gaussian.csv"),
    ] {
        let table = figure_data_with_step(a.alpha_star, &grid, model, a.alpha_step)?;
        writeln!(out.stdout, "{name}: {} rows", table.rows.len()).unwrap();
        out.files.push((name.into(), table.to_csv().into_bytes()));
    }
    Ok(out)
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<RunOutput, CliError> {
    let suite = match a.suite {
        SuiteArg::Sandwich => Suite::Sandwich,
        SuiteArg::Concentration => Suite::Concentration,
        SuiteArg::Gconv => Suite::Gconv,
        SuiteArg::Logconcavity => Suite::Logconcavity,
        SuiteArg::NegativeControl => Suite::NegativeControl,
        SuiteArg::All => Suite::All,
    };
    let mut opts = SuiteOptions::new(seed);
    opts.resolution = a.resolution;
    if let Some(t) = a.trials {
        if t == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        opts.sandwich_trials = t;
        opts.concentration.trials = t;
    }
    let reports = run_suite(suite, &opts)?;
    let t = tally(suite, &reports);

    let mut out = RunOutput::default();
    for r in &reports {
        let expected = suite == Suite::All && r.check_name == NEGATIVE_CONTROL;
        let tag = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail if expected => "fail(ok)",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        writeln!(
            out.stdout,
            "{tag:<13}{:<32} estimate={:.6} se={:.2e} bounds=[{:.6}, {:.6}]",
            r.check_name, r.estimate, r.standard_error, r.lower_bound, r.upper_bound
        )
        .unwrap();
    }
    writeln!(
        out.stdout,
        "{} passed, {} failed, {} inconclusive",
        t.passed, t.failed, t.inconclusive
    )
    .unwrap();
    if t.inconclusive > 0 {
        writeln!(
            out.stderr,
            "warning: {} inconclusive check(s); raise --trials for a verdict",
            t.inconclusive
        )
        .unwrap();
    }
    if !t.ok() {
        out.failure = Some(format!("{} verification check(s) failed", t.failed));
    }
    out.files
        .push(("verify.jsonl".into(), reports_to_jsonl(&reports).into_bytes()));
    Ok(out)
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<RunOutput, CliError> {
    let signal = signal(a.model, a.c_beta, a.k)?;
    let noise = NoiseModel::gaussian_sd(a.sigma)?;
    let decoder = match a.decoder.unwrap_or(match a.model {
        ModelArg::Flat => DecoderArg::FlatMl,
        ModelArg::Gaussian => DecoderArg::McMarginal,
    }) {
        DecoderArg::FlatMl => Decoder::FlatMl,
        DecoderArg::McMarginal => Decoder::McMarginal { samples: a.mc_samples },
    };
    let cfg = SimConfig {
        p: a.p,
        k: a.k,
        n_grid: a.n_grid.clone(),
        alpha_star: a.alpha_star,
        signal: signal.clone(),
        noise,
        trials: a.trials,
        decoder,
        master_seed: seed,
    };
    let curve = error_curve(&cfg)?;

    // The limits need k < p and α* < 1; without them the curve stands alone.
    let query = ThresholdQuery::new(a.p, a.alpha_star, signal, noise, PartitionMode::Asymptotic);
    let refs = match threshold(&query) {
        Ok(r) => vec![
            ReferenceLine {
                name: "n_achievability".into(),
                n: r.n_achievability,
            },
            ReferenceLine {
                name: "n_converse".into(),
                n: r.n_converse,
            },
        ],
        Err(_) => Vec::new(),
    };

    let mut out = RunOutput::default();
    let csv = curve.to_csv_with_references(&refs);
    out.stdout.push_str(&csv);
    let m = monotonicity_check(&curve);
    writeln!(
        out.stderr,
        "monotonicity: max residual {:.4} vs 3 x pooled se {:.4} ({})",
        m.max_residual,
        3.0 * m.pooled_se,
        if m.passed { "ok" } else { "violated" }
    )
    .unwrap();
    out.files.push(("simulate.csv".into(), csv.into_bytes()));
    Ok(out)
}
