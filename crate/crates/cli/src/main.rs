//! `cloak`: design and evaluate size-capped leakage-minimal channels.

mod input;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use cloak_core::design::min_leakage_closed_form;
use cloak_core::entropy::parse_measure_list;
use cloak_core::gain::{design_with_gain, full_vector, g_leakage, g_min_leakage_closed_form};
use cloak_core::oracle::{
    adversary_comparison, baseline_uniform_leakage, counterexample_objective,
    counterexample_optimize, sample_feasible_channels, verify_design, VerificationReport,
};
use cloak_core::{design, leakage, Channel, DesignResult, EntropyMeasure, Error};

use input::{parse_gains, parse_k_range, parse_prior, read_maybe_file, PriorInput};
use output::{emit, num, Csv};

#[derive(Parser)]
#[command(
    name = "cloak",
    version,
    about = "Leakage-minimal channels under a pre-image size cap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the optimal channel for one prior and cap.
    Design(DesignArgs),
    /// Minimal leakage per measure over a range of caps.
    LeakageCurve(CurveArgs),
    /// Optimal min-entropy leakage against the uniform k-subset baseline.
    BaselineCompare(RangeArgs),
    /// Informed versus pre-image-only adversary on the optimal channel.
    AdversaryCompare(RangeArgs),
    /// Check a channel file against the optimality conditions.
    Verify(VerifyArgs),
    /// Maximize conditional entropy over the one-parameter channel family
    /// for the 4-input example where no universal optimum exists at k = 3.
    Counterexample(CounterexampleArgs),
}

#[derive(Args)]
struct Common {
    /// JSON array, @file, `paper-v`, or `uniform:N`.
    #[arg(long)]
    prior: String,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Comma-separated measures to report leakage for.
    #[arg(long)]
    measures: Option<String>,
    /// Diagonal gains as a JSON array (or @file), in input order.
    #[arg(long)]
    gains: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: Common,
    /// Caps such as `1..30`, `2-5` or `1,4,9`. Defaults to `1..n`.
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long, default_value = "shannon,log-guesswork,min")]
    measures: String,
    #[arg(long)]
    gains: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct RangeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Channel JSON (`{"n","outputs","rows"}`, a bare matrix, or `design`
    /// output), inline or @file.
    #[arg(long)]
    channel: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value = "shannon,min,guesswork")]
    measures: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Also compare against this many random feasible channels.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value = "guesswork,renyi-arimoto:2,shannon,min")]
    measures: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) if !err.is_validation() => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Design(a) => cmd_design(a),
        Command::LeakageCurve(a) => cmd_curve(a),
        Command::BaselineCompare(a) => cmd_baseline(a),
        Command::AdversaryCompare(a) => cmd_adversary(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Counterexample(a) => cmd_counterexample(a),
    }
    .map(|pass| {
        if pass {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        }
    })
}

fn caps(spec: Option<&str>, p: &PriorInput) -> Result<Vec<usize>> {
    let n = p.prior.original_len();
    let ks = match spec {
        Some(s) => parse_k_range(s)?,
        None => (1..=n).collect(),
    };
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::InvalidCap { k, n }.into());
    }
    Ok(ks)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct DesignOutput<'a> {
    #[serde(flatten)]
    design: &'a DesignResult,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    leakage: BTreeMap<String, f64>,
}

fn cmd_design(a: DesignArgs) -> Result<bool> {
    let p = parse_prior(&a.common.prior)?;
    let k = a.k as usize;
    let gains = a.gains.as_deref().map(parse_gains).transpose()?;
    let d = match &gains {
        Some(g) => design_with_gain(&p.prior, k, g)?,
        None => design(&p.prior, k)?,
    };
    let measures = match &a.measures {
        Some(s) => parse_measure_list(s)?,
        None => Vec::new(),
    };
    let full = full_vector(&p.prior);
    let mut leak = BTreeMap::new();
    for m in &measures {
        let v = match &gains {
            Some(g) => g_leakage(m, &full, &d.channel, g)?,
            None => leakage(m, &full, &d.channel)?,
        };
        leak.insert(m.to_string(), v);
    }
    let text = match a.format {
        Format::Json => to_json(&DesignOutput {
            design: &d,
            leakage: leak,
        })?,
        Format::Csv => channel_csv(&d.channel),
    };
    emit(&text, a.common.out.as_deref())?;
    Ok(true)
}

fn channel_csv(ch: &Channel) -> String {
    let labels: Vec<String> = ch.outputs().iter().map(|l| format!("{{{l}}}")).collect();
    let mut header = vec!["input"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for (i, row) in ch.rows().iter().enumerate() {
        csv.row(std::iter::once((i + 1).to_string()).chain(row.iter().map(|&v| num(v))));
    }
    csv.finish()
}

#[derive(Serialize)]
struct CurveRow {
    k: usize,
    measure: String,
    leakage: f64,
}

fn cmd_curve(a: CurveArgs) -> Result<bool> {
    let p = parse_prior(&a.common.prior)?;
    let ks = caps(a.k_range.as_deref(), &p)?;
    let measures = parse_measure_list(&a.measures)?;
    let gains = a.gains.as_deref().map(parse_gains).transpose()?;
    let cells: Vec<(usize, &EntropyMeasure)> = ks
        .iter()
        .flat_map(|&k| measures.iter().map(move |m| (k, m)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(k, m)| {
            let leakage = match &gains {
                Some(g) => g_min_leakage_closed_form(m, &p.prior, k, g)?,
                None => min_leakage_closed_form(m, &p.prior, k)?,
            };
            Ok(CurveRow {
                k,
                measure: m.to_string(),
                leakage,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut csv = Csv::new(&["k", "measure", "leakage"]);
            for r in &rows {
                csv.row([r.k.to_string(), r.measure.clone(), num(r.leakage)]);
            }
            csv.finish()
        }
    };
    emit(&text, a.common.out.as_deref())?;
    Ok(true)
}

#[derive(Serialize)]
struct BaselineRow {
    k: usize,
    optimal: f64,
    baseline: f64,
}

fn cmd_baseline(a: RangeArgs) -> Result<bool> {
    let p = parse_prior(&a.common.prior)?;
    let ks = caps(a.k_range.as_deref(), &p)?;
    let min = EntropyMeasure::min_entropy();
    let rows = ks
        .par_iter()
        .map(|&k| {
            Ok(BaselineRow {
                k,
                optimal: min_leakage_closed_form(&min, &p.prior, k)?,
                baseline: baseline_uniform_leakage(&p.prior, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut csv = Csv::new(&["k", "optimal", "baseline"]);
            for r in &rows {
                csv.row([r.k.to_string(), num(r.optimal), num(r.baseline)]);
            }
            csv.finish()
        }
    };
    emit(&text, a.common.out.as_deref())?;
    Ok(true)
}

#[derive(Serialize)]
struct AdversaryRow {
    k: usize,
    informed: f64,
    ignorant: f64,
    informed_reward: f64,
    ignorant_reward: f64,
}

fn cmd_adversary(a: RangeArgs) -> Result<bool> {
    let p = parse_prior(&a.common.prior)?;
    let ks = caps(a.k_range.as_deref(), &p)?;
    let rows = ks
        .par_iter()
        .map(|&k| {
            let c = adversary_comparison(&p.prior, k)?;
            Ok(AdversaryRow {
                k,
                informed: c.informed,
                ignorant: c.ignorant,
                informed_reward: c.informed_reward,
                ignorant_reward: c.ignorant_reward,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "k",
                "informed",
                "ignorant",
                "informed_reward",
                "ignorant_reward",
            ]);
            for r in &rows {
                csv.row([
                    r.k.to_string(),
                    num(r.informed),
                    num(r.ignorant),
                    num(r.informed_reward),
                    num(r.ignorant_reward),
                ]);
            }
            csv.finish()
        }
    };
    emit(&text, a.common.out.as_deref())?;
    Ok(true)
}

fn parse_channel(text: &str) -> Result<Channel> {
    let value: serde_json::Value =
        serde_json::from_str(text).context("channel is not valid JSON")?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("channel") => {
            map.remove("channel").expect("checked")
        }
        v => v,
    };
    if value.is_array() {
        let rows: Vec<Vec<f64>> =
            serde_json::from_value(value).context("channel matrix must hold numbers")?;
        return Ok(Channel::from_matrix(rows)?);
    }
    serde_json::from_value(value).context("malformed channel object")
}

#[derive(Serialize)]
struct SampleSummary {
    samples: usize,
    seed: u64,
    /// Per measure: the largest sampled `H(X|Y)` minus the channel's.
    worst_excess: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<SampleSummary>,
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        bail!("tolerance must be a non-negative number");
    }
    let p = parse_prior(&a.common.prior)?;
    let k = a.k as usize;
    let ch = parse_channel(&read_maybe_file(&a.channel)?)?;
    let measures = parse_measure_list(&a.measures)?;
    let full = p.raw.clone();
    let mut report = verify_design(&p.prior, &full, &ch, k, &measures, a.tol)?;
    let sampled = if a.samples > 0 {
        let own: Vec<f64> = measures
            .iter()
            .map(|m| cloak_core::conditional_entropy(m, &full, &ch))
            .collect::<cloak_core::Result<_>>()?;
        let mut worst = vec![f64::NEG_INFINITY; measures.len()];
        for c in sample_feasible_channels(full.len(), k, a.samples, a.seed)? {
            let c = &c;
            for (i, m) in measures.iter().enumerate() {
                let h = cloak_core::conditional_entropy(m, &full, c)?;
                worst[i] = worst[i].max(h - own[i]);
            }
        }
        for ((m, &w), &h) in measures.iter().zip(&worst).zip(&own) {
            if w > a.tol * h.abs().max(1.0) {
                report
                    .issues
                    .push(format!("sampled channel beats {m} by {w:e}"));
                report.pass = false;
            }
        }
        Some(SampleSummary {
            samples: a.samples,
            seed: a.seed,
            worst_excess: measures.iter().map(|m| m.to_string()).zip(worst).collect(),
        })
    } else {
        None
    };
    let pass = report.pass;
    emit(
        &to_json(&VerifyOutput { report, sampled })?,
        a.common.out.as_deref(),
    )?;
    if !pass {
        eprintln!("verification failed");
    }
    Ok(pass)
}

#[derive(Serialize)]
struct CounterexampleRow {
    measure: String,
    maximizer: f64,
    conditional_entropy: f64,
}

fn cmd_counterexample(a: CounterexampleArgs) -> Result<bool> {
    let measures = parse_measure_list(&a.measures)?;
    let rows = measures
        .par_iter()
        .map(|m| {
            let x = counterexample_optimize(m)?;
            Ok(CounterexampleRow {
                measure: m.to_string(),
                maximizer: x,
                conditional_entropy: counterexample_objective(m, x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut csv = Csv::new(&["measure", "maximizer", "conditional_entropy"]);
            for r in &rows {
                csv.row([
                    r.measure.clone(),
                    num(r.maximizer),
                    num(r.conditional_entropy),
                ]);
            }
            csv.finish()
        }
    };
    emit(&text, a.out.as_deref())?;
    Ok(true)
}
