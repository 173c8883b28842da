//! Generalized entropies of the form `H(X|Y) = η(Σ_y p(y) F(p_{X|y}))`.
//!
//! Every measure is a pair of an outer scalar map `η` and a symmetric,
//! expansible core `F` on probability vectors. Admissible pairs are
//! *core-concave*: `η` increasing with `F` concave, or `η` decreasing with
//! `F` convex. Unconditional entropy is the one-output special case
//! `H(p) = η(F(p))`.
//!
//! Logarithms are natural; [`LogBase`] converts logarithmic measures to bits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{joint, output_marginal, posteriors, sorted_desc, Channel, PosteriorTable};
use crate::sampling::random_simplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Concave,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

/// A user-supplied `(η, F)` pair. Symmetry and expansibility of `core` are the
/// caller's responsibility; [`crate::majorization::schur_concavity_probe`] can
/// check them empirically.
#[derive(Clone)]
pub struct CustomMeasure {
    pub name: String,
    pub eta: fn(f64) -> f64,
    pub eta_inverse: Option<fn(f64) -> f64>,
    pub core: fn(&[f64]) -> f64,
    pub monotonicity: Monotonicity,
    pub curvature: Curvature,
}

impl fmt::Debug for CustomMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMeasure")
            .field("name", &self.name)
            .field("monotonicity", &self.monotonicity)
            .field("curvature", &self.curvature)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum MeasureKind {
    Shannon,
    MinEntropy,
    /// Probability that none of the `l` best guesses is right.
    LGuess {
        l: usize,
    },
    Guesswork,
    /// `ln` of guesswork; puts guesswork on the same scale as the log measures.
    LogGuesswork,
    RenyiArimoto {
        alpha: f64,
    },
    RenyiHayashi {
        alpha: f64,
    },
    RenyiFehrBerens {
        alpha: f64,
    },
    SharmaMittal {
        alpha: f64,
        beta: f64,
    },
    Tsallis {
        alpha: f64,
    },
    Custom(CustomMeasure),
}

/// An admissible `(η, F)` entropy. Construct through the named constructors,
/// which reject out-of-domain parameters.
#[derive(Debug, Clone)]
pub struct EntropyMeasure {
    kind: MeasureKind,
}

fn check_alpha(alpha: f64, what: &str) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Parameter(format!(
            "{what}: alpha must be finite and > 0, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Err(Error::Parameter(format!(
            "{what}: alpha = 1 is a removable singularity; use the Shannon measure"
        )));
    }
    Ok(())
}

impl EntropyMeasure {
    pub fn shannon() -> Self {
        Self {
            kind: MeasureKind::Shannon,
        }
    }

    pub fn min_entropy() -> Self {
        Self {
            kind: MeasureKind::MinEntropy,
        }
    }

    pub fn l_guess(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Parameter("l-guess needs l >= 1".into()));
        }
        Ok(Self {
            kind: MeasureKind::LGuess { l },
        })
    }

    pub fn guesswork() -> Self {
        Self {
            kind: MeasureKind::Guesswork,
        }
    }

    pub fn log_guesswork() -> Self {
        Self {
            kind: MeasureKind::LogGuesswork,
        }
    }

    pub fn renyi_arimoto(alpha: f64) -> Result<Self> {
        check_alpha(alpha, "renyi-arimoto")?;
        Ok(Self {
            kind: MeasureKind::RenyiArimoto { alpha },
        })
    }

    pub fn renyi_hayashi(alpha: f64) -> Result<Self> {
        check_alpha(alpha, "renyi-hayashi")?;
        Ok(Self {
            kind: MeasureKind::RenyiHayashi { alpha },
        })
    }

    pub fn renyi_fehr_berens(alpha: f64) -> Result<Self> {
        check_alpha(alpha, "renyi-fehr-berens")?;
        Ok(Self {
            kind: MeasureKind::RenyiFehrBerens { alpha },
        })
    }

    /// `β = 1` is the Rényi limit; use one of the Rényi constructors for it.
    pub fn sharma_mittal(alpha: f64, beta: f64) -> Result<Self> {
        check_alpha(alpha, "sharma-mittal")?;
        if !beta.is_finite() || beta == 1.0 {
            return Err(Error::Parameter(format!(
                "sharma-mittal: beta must be finite and != 1, got {beta}"
            )));
        }
        Ok(Self {
            kind: MeasureKind::SharmaMittal { alpha, beta },
        })
    }

    pub fn tsallis(alpha: f64) -> Result<Self> {
        check_alpha(alpha, "tsallis")?;
        Ok(Self {
            kind: MeasureKind::Tsallis { alpha },
        })
    }

    /// Rejects pairs that are not core-concave.
    pub fn custom(custom: CustomMeasure) -> Result<Self> {
        match (custom.monotonicity, custom.curvature) {
            (Monotonicity::Increasing, Curvature::Concave)
            | (Monotonicity::Decreasing, Curvature::Convex) => Ok(Self {
                kind: MeasureKind::Custom(custom),
            }),
            (m, c) => Err(Error::Parameter(format!(
                "{}: eta {m:?} with F {c:?} is not core-concave",
                custom.name
            ))),
        }
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn monotonicity(&self) -> Monotonicity {
        use MeasureKind::*;
        match &self.kind {
            Shannon | LGuess { .. } | Guesswork | LogGuesswork => Monotonicity::Increasing,
            MinEntropy | RenyiFehrBerens { .. } => Monotonicity::Decreasing,
            RenyiArimoto { alpha }
            | RenyiHayashi { alpha }
            | SharmaMittal { alpha, .. }
            | Tsallis { alpha } => {
                if *alpha < 1.0 {
                    Monotonicity::Increasing
                } else {
                    Monotonicity::Decreasing
                }
            }
            Custom(c) => c.monotonicity,
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self.monotonicity() {
            Monotonicity::Increasing => Curvature::Concave,
            Monotonicity::Decreasing => Curvature::Convex,
        }
    }

    /// True for measures measured in log units, which [`LogBase`] rescales.
    pub fn is_logarithmic(&self) -> bool {
        use MeasureKind::*;
        matches!(
            self.kind,
            Shannon
                | MinEntropy
                | LogGuesswork
                | RenyiArimoto { .. }
                | RenyiHayashi { .. }
                | RenyiFehrBerens { .. }
        )
    }

    /// Converts a value of this measure from nats to `base`.
    pub fn in_base(&self, value: f64, base: LogBase) -> f64 {
        match base {
            LogBase::Bits if self.is_logarithmic() => value / std::f64::consts::LN_2,
            _ => value,
        }
    }

    /// The outer map `η`.
    pub fn eta(&self, x: f64) -> f64 {
        use MeasureKind::*;
        match &self.kind {
            Shannon | LGuess { .. } | Guesswork => x,
            LogGuesswork => x.ln(),
            MinEntropy | RenyiFehrBerens { .. } => -x.ln(),
            RenyiArimoto { alpha } => alpha / (1.0 - alpha) * x.ln(),
            RenyiHayashi { alpha } => x.ln() / (1.0 - alpha),
            SharmaMittal { alpha, beta } => {
                (1.0 - x.powf((1.0 - beta) / (1.0 - alpha))) / (beta - 1.0)
            }
            Tsallis { alpha } => (1.0 - x) / (alpha - 1.0),
            Custom(c) => (c.eta)(x),
        }
    }

    /// `η⁻¹`, when `η` is strictly monotonic and its inverse is known.
    pub fn eta_inverse(&self, h: f64) -> Option<f64> {
        use MeasureKind::*;
        Some(match &self.kind {
            Shannon | LGuess { .. } | Guesswork => h,
            LogGuesswork => h.exp(),
            MinEntropy | RenyiFehrBerens { .. } => (-h).exp(),
            RenyiArimoto { alpha } => (h * (1.0 - alpha) / alpha).exp(),
            RenyiHayashi { alpha } => (h * (1.0 - alpha)).exp(),
            SharmaMittal { alpha, beta } => {
                (1.0 - (beta - 1.0) * h).powf((1.0 - alpha) / (1.0 - beta))
            }
            Tsallis { alpha } => 1.0 - (alpha - 1.0) * h,
            Custom(c) => return c.eta_inverse.map(|inv| inv(h)),
        })
    }

    /// The core `F`. Zero entries are ignored, so `F` is expansible.
    pub fn core(&self, p: &[f64]) -> f64 {
        use MeasureKind::*;
        match &self.kind {
            Shannon => -p
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| q * q.ln())
                .sum::<f64>(),
            MinEntropy => p.iter().copied().fold(0.0, f64::max),
            LGuess { l } => 1.0 - sorted_desc(p).iter().take(*l).sum::<f64>(),
            Guesswork | LogGuesswork => guesswork_sum(p),
            RenyiArimoto { alpha } => alpha_norm(p, *alpha),
            RenyiHayashi { alpha } | SharmaMittal { alpha, .. } | Tsallis { alpha } => {
                power_sum(p, *alpha)
            }
            RenyiFehrBerens { alpha } => alpha_norm(p, *alpha).powf(alpha / (alpha - 1.0)),
            Custom(c) => (c.core)(p),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

fn power_sum(p: &[f64], alpha: f64) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| q.powf(alpha)).sum()
}

/// `‖p‖_α`, scaled by the largest entry so large `α` does not underflow.
fn alpha_norm(p: &[f64], alpha: f64) -> f64 {
    let top = p.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0.0;
    }
    let scaled: f64 = p
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| (q / top).powf(alpha))
        .sum();
    top * scaled.powf(1.0 / alpha)
}

fn guesswork_sum(p: &[f64]) -> f64 {
    sorted_desc(p)
        .iter()
        .enumerate()
        .map(|(i, &q)| (i + 1) as f64 * q)
        .sum()
}

impl fmt::Display for EntropyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MeasureKind::*;
        match &self.kind {
            Shannon => write!(f, "shannon"),
            MinEntropy => write!(f, "min"),
            LGuess { l } => write!(f, "lguess:{l}"),
            Guesswork => write!(f, "guesswork"),
            LogGuesswork => write!(f, "log-guesswork"),
            RenyiArimoto { alpha } => write!(f, "renyi-arimoto:{alpha}"),
            RenyiHayashi { alpha } => write!(f, "renyi-hayashi:{alpha}"),
            RenyiFehrBerens { alpha } => write!(f, "renyi-fehr-berens:{alpha}"),
            SharmaMittal { alpha, beta } => write!(f, "sharma-mittal:{alpha}:{beta}"),
            Tsallis { alpha } => write!(f, "tsallis:{alpha}"),
            Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for EntropyMeasure {
    type Err = Error;

    /// Parses `shannon`, `min`, `guesswork`, `log-guesswork`, `lguess:L`,
    /// `renyi-arimoto:A`, `renyi-hayashi:A`, `renyi-fehr-berens:A`,
    /// `sharma-mittal:A:B` and `tsallis:A`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = |detail: String| Error::Parse {
            what: "measure",
            detail,
        };
        let num = |i: usize| -> Result<f64> {
            let raw = parts
                .get(i)
                .ok_or_else(|| bad(format!("{s:?} is missing a parameter")))?;
            raw.parse::<f64>().map_err(|e| bad(format!("{raw:?}: {e}")))
        };
        let arity = |want: usize| -> Result<()> {
            if parts.len() != want + 1 {
                return Err(bad(format!("{s:?} takes {want} parameter(s)")));
            }
            Ok(())
        };
        match parts[0].to_ascii_lowercase().as_str() {
            "shannon" => arity(0).map(|_| Self::shannon()),
            "min" | "min-entropy" => arity(0).map(|_| Self::min_entropy()),
            "guesswork" => arity(0).map(|_| Self::guesswork()),
            "log-guesswork" => arity(0).map(|_| Self::log_guesswork()),
            "lguess" => {
                arity(1)?;
                let l = parts[1]
                    .parse::<usize>()
                    .map_err(|e| bad(format!("{:?}: {e}", parts[1])))?;
                Self::l_guess(l)
            }
            "renyi-arimoto" | "arimoto" => {
                arity(1)?;
                Self::renyi_arimoto(num(1)?)
            }
            "renyi-hayashi" | "hayashi" => {
                arity(1)?;
                Self::renyi_hayashi(num(1)?)
            }
            "renyi-fehr-berens" | "fehr-berens" => {
                arity(1)?;
                Self::renyi_fehr_berens(num(1)?)
            }
            "sharma-mittal" => {
                arity(2)?;
                Self::sharma_mittal(num(1)?, num(2)?)
            }
            "tsallis" => {
                arity(1)?;
                Self::tsallis(num(1)?)
            }
            other => Err(bad(format!("unknown measure {other:?}"))),
        }
    }
}

/// Parses a comma-separated measure list.
pub fn parse_measure_list(s: &str) -> Result<Vec<EntropyMeasure>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// The measure family every optimality check is run against: Shannon,
/// min-entropy, guesswork (plain and log), l-guess for `l = 1..=max_l`,
/// Arimoto α ∈ {0.5, 2, 5}, Hayashi and Fehr-Berens α ∈ {0.5, 2},
/// Sharma-Mittal (α, β) ∈ {0.5, 2} × {0.5, 3}, Tsallis α ∈ {0.5, 2}.
pub fn standard_catalog(max_l: usize) -> Vec<EntropyMeasure> {
    let mut out = vec![
        EntropyMeasure::shannon(),
        EntropyMeasure::min_entropy(),
        EntropyMeasure::guesswork(),
        EntropyMeasure::log_guesswork(),
    ];
    out.extend((1..=max_l).map(|l| EntropyMeasure::l_guess(l).expect("l >= 1")));
    for a in [0.5, 2.0, 5.0] {
        out.push(EntropyMeasure::renyi_arimoto(a).expect("valid alpha"));
    }
    for a in [0.5, 2.0] {
        out.push(EntropyMeasure::renyi_hayashi(a).expect("valid alpha"));
        out.push(EntropyMeasure::renyi_fehr_berens(a).expect("valid alpha"));
        out.push(EntropyMeasure::tsallis(a).expect("valid alpha"));
        for b in [0.5, 3.0] {
            out.push(EntropyMeasure::sharma_mittal(a, b).expect("valid params"));
        }
    }
    out
}

/// `H(p) = η(F(p))`.
pub fn entropy(m: &EntropyMeasure, p: &[f64]) -> f64 {
    m.eta(m.core(p))
}

/// Conditional entropy from already computed posteriors.
pub fn conditional_from_table(m: &EntropyMeasure, table: &PosteriorTable) -> f64 {
    let inner: f64 = table.iter().map(|e| e.prob * m.core(&e.posterior)).sum();
    m.eta(inner)
}

/// `H(X|Y) = η(Σ_{y: p(y)>0} p(y) F(p_{X|y}))`.
pub fn conditional_entropy(m: &EntropyMeasure, p: &[f64], ch: &Channel) -> Result<f64> {
    Ok(conditional_from_table(m, &posteriors(p, ch)?))
}

/// `H(X) − H(X|Y)`; never below `−1e-9` for a valid channel.
pub fn leakage(m: &EntropyMeasure, p: &[f64], ch: &Channel) -> Result<f64> {
    Ok(entropy(m, p) - conditional_entropy(m, p, ch)?)
}

/// The Kolmogorov–Nagumo form `η(Σ_y p(y) η⁻¹(H(p_{X|y})))`, which equals
/// [`conditional_entropy`] whenever `η` is strictly monotonic.
pub fn kn_average_form(m: &EntropyMeasure, p: &[f64], ch: &Channel) -> Result<f64> {
    let table = posteriors(p, ch)?;
    let mut inner = 0.0;
    for e in table.iter() {
        let h = entropy(m, &e.posterior);
        let back = m
            .eta_inverse(h)
            .ok_or_else(|| Error::NonInvertible(m.name()))?;
        inner += e.prob * back;
    }
    Ok(m.eta(inner))
}

/// Plain Rényi entropy of order `alpha` (`alpha ≥ 0`, `alpha ≠ 1`).
pub fn renyi(alpha: f64, p: &[f64]) -> f64 {
    power_sum(p, alpha).ln() / (1.0 - alpha)
}

/// Conditional Rényi definitions found in the literature.
///
/// Only [`RenyiConditional::Arimoto`] fits the `(η, F)` framework; the other
/// three can exceed the unconditional entropy and exist here to demonstrate
/// that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenyiConditional {
    /// `Σ_y p(y) H_α(p_{X|y})`.
    Averaged,
    /// `H_α(XY) − H_α(Y)`.
    JointDifference,
    /// `1/(1−α) · max_y ln ‖p_{X|y}‖_α^α`.
    WorstCase,
    /// `α/(1−α) · ln Σ_y p(y) ‖p_{X|y}‖_α`.
    Arimoto,
}

impl RenyiConditional {
    pub const LEGACY: [RenyiConditional; 3] = [
        RenyiConditional::Averaged,
        RenyiConditional::JointDifference,
        RenyiConditional::WorstCase,
    ];
}

impl fmt::Display for RenyiConditional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Averaged => "averaged",
            Self::JointDifference => "joint-difference",
            Self::WorstCase => "worst-case",
            Self::Arimoto => "arimoto",
        })
    }
}

pub fn legacy_renyi_conditional(
    variant: RenyiConditional,
    alpha: f64,
    p: &[f64],
    ch: &Channel,
) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 || alpha == 1.0 {
        return Err(Error::Parameter(format!(
            "conditional Rényi needs alpha >= 0 and != 1, got {alpha}"
        )));
    }
    let scale = 1.0 / (1.0 - alpha);
    Ok(match variant {
        RenyiConditional::Averaged => posteriors(p, ch)?
            .iter()
            .map(|e| e.prob * renyi(alpha, &e.posterior))
            .sum(),
        RenyiConditional::JointDifference => {
            let pxy: f64 = joint(p, ch)?.iter().map(|row| power_sum(row, alpha)).sum();
            let py = power_sum(&output_marginal(p, ch)?, alpha);
            scale * (pxy / py).ln()
        }
        RenyiConditional::WorstCase => {
            let worst = posteriors(p, ch)?
                .iter()
                .map(|e| power_sum(&e.posterior, alpha).ln())
                .fold(f64::NEG_INFINITY, f64::max);
            scale * worst
        }
        RenyiConditional::Arimoto => {
            let s: f64 = posteriors(p, ch)?
                .iter()
                .map(|e| e.prob * power_sum(&e.posterior, alpha).powf(1.0 / alpha))
                .sum();
            alpha * scale * s.ln()
        }
    })
}

/// A joint distribution on which a conditional Rényi definition exceeds the
/// unconditional entropy.
#[derive(Debug, Clone, Serialize)]
pub struct CreViolation {
    pub variant: RenyiConditional,
    pub alpha: f64,
    pub prior: Vec<f64>,
    pub channel: Channel,
    pub conditional: f64,
    pub unconditional: f64,
    pub trial: usize,
}

/// Random search over 2–3 state inputs and outputs for an instance with
/// `H_α(X|Y) > H_α(X) + 1e-6`.
pub fn find_cre_violation(
    variant: RenyiConditional,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<Option<CreViolation>> {
    const MARGIN: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let n = rng.gen_range(2..=3);
        let m = rng.gen_range(2..=3);
        let skew = rng.gen_range(0.5..4.0);
        let prior = random_simplex(&mut rng, n, skew);
        let rows = (0..n)
            .map(|_| {
                let s = rng.gen_range(0.5..4.0);
                random_simplex(&mut rng, m, s)
            })
            .collect();
        let channel = Channel::from_matrix(rows)?;
        let conditional = legacy_renyi_conditional(variant, alpha, &prior, &channel)?;
        let unconditional = renyi(alpha, &prior);
        if conditional > unconditional + MARGIN {
            return Ok(Some(CreViolation {
                variant,
                alpha,
                prior,
                channel,
                conditional,
                unconditional,
                trial,
            }));
        }
    }
    Ok(None)
}
