//! Priors, channels and Bayes posteriors.
//!
//! A [`Prior`] is always held sorted non-increasingly; the permutation back to
//! the caller's labels is kept alongside so results can be reported in the
//! original indexing. A [`Channel`] is a row-stochastic matrix `p(y|x)` whose
//! columns carry the input subset each output was built for.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for structural checks (row sums, prior totals).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for analytical identities (posteriors, entropy equalities).
pub const ANALYTIC_TOL: f64 = 1e-9;

/// A strictly positive probability vector, sorted non-increasingly.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    probs: Vec<f64>,
    /// `labels[i]` is the caller's index of the `i`-th largest probability.
    labels: Vec<usize>,
    /// Length of the caller's vector, including any stripped zeros.
    original_len: usize,
}

impl Prior {
    /// Validates and sorts `probs`. Ties keep their original relative order.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPrior("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidPrior(format!(
                    "entry {i} is {p}; every input needs strictly positive probability"
                )));
            }
        }
        check_total(&probs)?;
        let n = probs.len();
        Ok(Self::sorted_from(
            probs.iter().copied().enumerate().collect(),
            n,
        ))
    }

    /// Builds a prior from a vector that may contain zeros, dropping them.
    ///
    /// Zero-probability inputs never influence any entropy (expansibility), so
    /// they are removed before sorting. [`Prior::original_len`] still reports
    /// the full length and [`Prior::labels`] index into the full vector.
    pub fn strip_zeros(probs: &[f64]) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidPrior(format!("entry {i} is {p}")));
            }
        }
        let kept: Vec<(usize, f64)> = probs
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidPrior("no positive entries".into()));
        }
        check_total(probs)?;
        Ok(Self::sorted_from(kept, probs.len()))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPrior("uniform prior over zero inputs".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    fn sorted_from(mut entries: Vec<(usize, f64)>, original_len: usize) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (labels, probs) = entries.into_iter().unzip();
        Self {
            probs,
            labels,
            original_len,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// True when sorting did not move anything and no zeros were stripped.
    pub fn is_identity_order(&self) -> bool {
        self.original_len == self.probs.len()
            && self.labels.iter().enumerate().all(|(i, &l)| i == l)
    }
}

impl AsRef<[f64]> for Prior {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

fn check_total(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > STRUCTURAL_TOL {
        return Err(Error::InvalidPrior(format!(
            "entries sum to {total}, expected 1 within {STRUCTURAL_TOL:e}"
        )));
    }
    Ok(())
}

/// A non-empty set of input indices, stored sorted and zero-based.
///
/// Displayed and serialized one-based, e.g. `1,2,3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetLabel(Vec<usize>);

impl SubsetLabel {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::Parameter("subset label must be non-empty".into()));
        }
        Ok(Self(members))
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetLabel) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// Maps every member through `f`, re-sorting.
    pub fn map(&self, f: impl Fn(usize) -> usize) -> SubsetLabel {
        let mut members: Vec<usize> = self.0.iter().map(|&i| f(i)).collect();
        members.sort_unstable();
        SubsetLabel(members)
    }

    fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    fn from_one_based(raw: Vec<usize>) -> Result<Self> {
        if raw.contains(&0) {
            return Err(Error::Parse {
                what: "subset label",
                detail: "members are one-based".into(),
            });
        }
        Self::new(raw.into_iter().map(|i| i - 1))
    }
}

impl fmt::Display for SubsetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SubsetLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let raw = s
            .split(',')
            .map(|t| {
                t.trim().parse::<usize>().map_err(|e| Error::Parse {
                    what: "subset label",
                    detail: format!("{t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(raw)
    }
}

impl Serialize for SubsetLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SubsetLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        Self::from_one_based(raw).map_err(serde::de::Error::custom)
    }
}

/// A transition matrix `p(y|x)` with one subset label per output column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct Channel {
    rows: Vec<Vec<f64>>,
    outputs: Vec<SubsetLabel>,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    n: usize,
    #[serde(default)]
    outputs: Option<Vec<SubsetLabel>>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(raw: ChannelJson) -> Result<Self> {
        if raw.rows.len() != raw.n {
            return Err(Error::Dimension(format!(
                "declared n={} but {} rows given",
                raw.n,
                raw.rows.len()
            )));
        }
        match raw.outputs {
            Some(outputs) => Channel::new(raw.rows, outputs),
            None => Channel::from_matrix(raw.rows),
        }
    }
}

impl From<Channel> for ChannelJson {
    fn from(ch: Channel) -> Self {
        ChannelJson {
            n: ch.rows.len(),
            outputs: Some(ch.outputs),
            rows: ch.rows,
        }
    }
}

impl Channel {
    /// Checks dimensions only; see [`validate_channel`] for the stochastic
    /// and pre-image constraints.
    pub fn new(rows: Vec<Vec<f64>>, outputs: Vec<SubsetLabel>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("channel has no input rows".into()));
        }
        let m = outputs.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries but there are {m} outputs",
                row.len()
            )));
        }
        if let Some(label) = outputs.iter().find(|l| l.members().iter().any(|&x| x >= n)) {
            return Err(Error::Dimension(format!(
                "output label {{{label}}} names an input beyond n={n}"
            )));
        }
        Ok(Self { rows, outputs })
    }

    /// Labels each column by its support. All-zero columns get the full
    /// input set as label.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let outputs = (0..m)
            .map(|j| {
                let support = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.get(j).is_some_and(|&v| v > 0.0))
                    .map(|(i, _)| i);
                SubsetLabel::new(support).or_else(|_| SubsetLabel::new(0..n))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, outputs)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows, (0..n).map(SubsetLabel::singleton).collect())
    }

    /// Every input maps to one shared output: zero leakage.
    pub fn constant(n: usize) -> Result<Self> {
        Self::new(vec![vec![1.0]; n], vec![SubsetLabel::new(0..n)?])
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn outputs(&self) -> &[SubsetLabel] {
        &self.outputs
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Re-indexes inputs: row `i` of `self` becomes row `new_index[i]` of the
    /// result, which has `n` rows. Rows not hit by `new_index` are filled by
    /// `filler` (one output per filler row is appended).
    pub(crate) fn reindex_inputs(&self, new_index: &[usize], n: usize) -> Result<Channel> {
        let m = self.n_outputs();
        let mut hit = vec![false; n];
        for &t in new_index {
            hit[t] = true;
        }
        let fillers: Vec<usize> = (0..n).filter(|&i| !hit[i]).collect();
        let width = m + fillers.len();
        let mut rows = vec![vec![0.0; width]; n];
        for (i, &t) in new_index.iter().enumerate() {
            rows[t][..m].copy_from_slice(&self.rows[i]);
        }
        let mut outputs: Vec<SubsetLabel> = self
            .outputs
            .iter()
            .map(|l| l.map(|x| new_index[x]))
            .collect();
        for (c, &f) in fillers.iter().enumerate() {
            rows[f][m + c] = 1.0;
            outputs.push(SubsetLabel::singleton(f));
        }
        Channel::new(rows, outputs)
    }
}

/// One problem found by [`validate_channel`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelIssue {
    NonFinite { row: usize, col: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
    OutsideLabel { row: usize, col: usize },
    PreimageTooLarge { col: usize, size: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub valid: bool,
    pub issues: Vec<ChannelIssue>,
}

/// Checks non-negativity, unit row sums (within [`STRUCTURAL_TOL`]), label
/// consistency and the pre-image cap `k`.
pub fn validate_channel(ch: &Channel, k: usize) -> Result<ChannelReport> {
    validate_channel_with_tol(ch, k, STRUCTURAL_TOL)
}

pub fn validate_channel_with_tol(ch: &Channel, k: usize, row_tol: f64) -> Result<ChannelReport> {
    if k == 0 {
        return Err(Error::InvalidCap {
            k,
            n: ch.n_inputs(),
        });
    }
    let mut issues = Vec::new();
    for (x, row) in ch.rows.iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                issues.push(ChannelIssue::NonFinite { row: x, col: y });
            } else if v < 0.0 {
                issues.push(ChannelIssue::NegativeEntry {
                    row: x,
                    col: y,
                    value: v,
                });
            } else if v > 0.0 && !ch.outputs[y].contains(x) {
                issues.push(ChannelIssue::OutsideLabel { row: x, col: y });
            }
        }
        let sum: f64 = row.iter().sum();
        if !((sum - 1.0).abs() <= row_tol) {
            issues.push(ChannelIssue::RowSum { row: x, sum });
        }
    }
    for y in 0..ch.n_outputs() {
        let size = ch.rows.iter().filter(|r| r[y] > 0.0).count();
        if size > k {
            issues.push(ChannelIssue::PreimageTooLarge { col: y, size, k });
        }
    }
    Ok(ChannelReport {
        valid: issues.is_empty(),
        issues,
    })
}

/// Rows with a strictly positive entry in column `y`; `None` marks an unused
/// output.
pub fn preimage(ch: &Channel, y: usize) -> Result<Option<SubsetLabel>> {
    if y >= ch.n_outputs() {
        return Err(Error::OutputOutOfRange {
            index: y,
            len: ch.n_outputs(),
        });
    }
    let support = ch
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r[y] > 0.0)
        .map(|(x, _)| x);
    Ok(SubsetLabel::new(support).ok())
}

/// The posterior over inputs for one realized output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputPosterior {
    /// Column index in the channel.
    pub output: usize,
    /// Marginal probability `p(y) > 0`.
    pub prob: f64,
    /// Full-length posterior `p(x|y)`; zero outside the pre-image.
    pub posterior: Vec<f64>,
}

/// Posteriors for the realized outputs only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorTable {
    pub entries: Vec<OutputPosterior>,
}

impl PosteriorTable {
    pub fn iter(&self) -> impl Iterator<Item = &OutputPosterior> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ_y p(y) p_{X|y}`, which should give back the prior.
    pub fn reconstruct_prior(&self) -> Vec<f64> {
        let n = self.entries.first().map_or(0, |e| e.posterior.len());
        let mut out = vec![0.0; n];
        for e in &self.entries {
            for (o, q) in out.iter_mut().zip(&e.posterior) {
                *o += e.prob * q;
            }
        }
        out
    }
}

fn check_prior_len(p: &[f64], ch: &Channel) -> Result<()> {
    if p.len() != ch.n_inputs() {
        return Err(Error::Dimension(format!(
            "prior has {} entries but channel has {} inputs",
            p.len(),
            ch.n_inputs()
        )));
    }
    Ok(())
}

/// Joint distribution `p(x, y) = p(x) p(y|x)`, as an `n × m` matrix.
pub fn joint(p: &[f64], ch: &Channel) -> Result<Vec<Vec<f64>>> {
    check_prior_len(p, ch)?;
    Ok(ch
        .rows
        .iter()
        .zip(p)
        .map(|(row, &px)| row.iter().map(|&c| px * c).collect())
        .collect())
}

/// Output marginal `p(y)` for every column, including unused ones.
pub fn output_marginal(p: &[f64], ch: &Channel) -> Result<Vec<f64>> {
    check_prior_len(p, ch)?;
    let mut py = vec![0.0; ch.n_outputs()];
    for (row, &px) in ch.rows.iter().zip(p) {
        for (acc, &c) in py.iter_mut().zip(row) {
            *acc += px * c;
        }
    }
    Ok(py)
}

/// Bayes posteriors for every output with `p(y) > 0`.
///
/// Does not re-run [`validate_channel`]; callers that accept untrusted
/// channels should validate first.
pub fn posteriors(p: &[f64], ch: &Channel) -> Result<PosteriorTable> {
    let py = output_marginal(p, ch)?;
    let entries = py
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(y, &m)| OutputPosterior {
            output: y,
            prob: m,
            posterior: ch
                .rows
                .iter()
                .zip(p)
                .map(|(r, &px)| px * r[y] / m)
                .collect(),
        })
        .collect();
    Ok(PosteriorTable { entries })
}

/// Cascades two channels: `X → Y` then `Y → Z`.
pub fn compose(first: &Channel, second: &Channel) -> Result<Channel> {
    if first.n_outputs() != second.n_inputs() {
        return Err(Error::Dimension(format!(
            "first channel has {} outputs, second has {} inputs",
            first.n_outputs(),
            second.n_inputs()
        )));
    }
    let r = second.n_outputs();
    let rows = first
        .rows
        .iter()
        .map(|row| {
            let mut out = vec![0.0; r];
            for (&a, srow) in row.iter().zip(&second.rows) {
                if a != 0.0 {
                    for (o, &b) in out.iter_mut().zip(srow) {
                        *o += a * b;
                    }
                }
            }
            out
        })
        .collect();
    Channel::from_matrix(rows)
}

/// Sorts a copy of `v` non-increasingly.
pub fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    s
}
