//! Parsing of priors, cap ranges and gains from command-line strings.

use std::fs;

use anyhow::{bail, Context, Result};
use cloak_core::prob::Prior;
use cloak_core::GainSpec;

/// A prior as the user gave it (zeros included) plus its validated form.
pub struct PriorInput {
    pub raw: Vec<f64>,
    pub prior: Prior,
}

/// Accepts a JSON array, `@path` to a JSON file, `paper-v`, or `uniform:N`.
pub fn parse_prior(spec: &str) -> Result<PriorInput> {
    let spec = spec.trim();
    let raw: Vec<f64> = if spec == "paper-v" {
        (1..=30).map(|i| (31 - i) as f64 / 465.0).collect()
    } else if let Some(n) = spec.strip_prefix("uniform:") {
        let n: usize = n
            .parse()
            .with_context(|| format!("bad uniform size {n:?}"))?;
        if n == 0 {
            bail!("uniform prior needs at least one input");
        }
        vec![1.0 / n as f64; n]
    } else {
        parse_json_vec(spec, "prior")?
    };
    let prior = Prior::strip_zeros(&raw)?;
    Ok(PriorInput { raw, prior })
}

fn parse_json_vec(spec: &str, what: &str) -> Result<Vec<f64>> {
    let text = read_maybe_file(spec)?;
    serde_json::from_str(&text).with_context(|| format!("{what} must be a JSON array of numbers"))
}

/// `@path` reads a file; anything else is returned as is.
pub fn read_maybe_file(spec: &str) -> Result<String> {
    match spec.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(spec.to_string()),
    }
}

pub fn parse_gains(spec: &str) -> Result<GainSpec> {
    Ok(GainSpec::diagonal(parse_json_vec(spec, "gains")?)?)
}

/// `a..b` and `a..=b` and `a-b` (all inclusive), single values, or comma
/// lists of those.
pub fn parse_k_range(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bounds = part
            .split_once("..=")
            .or_else(|| part.split_once(".."))
            .or_else(|| part.split_once('-'));
        match bounds {
            Some((a, b)) => {
                let a: usize = a
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range {part:?}"))?;
                let b: usize = b
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range {part:?}"))?;
                if a > b {
                    bail!("empty range {part:?}");
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().with_context(|| format!("bad cap {part:?}"))?),
        }
    }
    if out.is_empty() {
        bail!("no caps in {spec:?}");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
