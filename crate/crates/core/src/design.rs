//! The optimal channel under a pre-image size cap.
//!
//! For a sorted prior `p` and cap `k`, the *giants* `1..j*−1` keep their
//! probabilities and the tail `j*..n` is spread evenly over the remaining
//! `u = k−j*+1` slots, giving the posterior shape `π`. Every output of the
//! designed channel has a pre-image of size exactly `k` that contains all
//! giants, and each realized output has posterior `π`. Since `π` is majorized
//! by the posterior of any feasible channel, one channel is optimal for every
//! measure in the `(η, F)` family at once.
//!
//! The routines here take weights rather than probabilities so that the gain
//! extension can reuse them on `Gp`, which need not sum to 1.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::entropy::{entropy, EntropyMeasure};
use crate::error::{Error, Result};
use crate::prob::{Channel, Prior, SubsetLabel};

/// Residuals at or below `RESIDUAL_EPS` times the initial tail mass are zero.
const RESIDUAL_EPS: f64 = 1e-14;
/// Per-equation tolerance for the Step-2 system.
pub const EQUATION_TOL: f64 = 1e-10;

fn check_cap(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidCap { k, n });
    }
    Ok(())
}

/// Smallest `j` (1-based) with `w[j] ≤ Σ_{i≥j} w[i] / (k−j+1)`, for weights
/// sorted non-increasingly. Exact comparison: at equality both choices yield
/// the same `π`.
pub fn jstar_of(w: &[f64], k: usize) -> Result<usize> {
    check_cap(w.len(), k)?;
    let tails = tail_sums(w);
    for j in 1..=k {
        if w[j - 1] <= tails[j - 1] / (k - j + 1) as f64 {
            return Ok(j);
        }
    }
    // j = k always satisfies the inequality; only NaNs get here
    Err(Error::Invariant(format!("no j* found for k={k}")))
}

/// `tails[i] = Σ_{l≥i} w[l]`, summed from the smallest entry up.
fn tail_sums(w: &[f64]) -> Vec<f64> {
    let mut tails = vec![0.0; w.len() + 1];
    for i in (0..w.len()).rev() {
        tails[i] = tails[i + 1] + w[i];
    }
    tails
}

/// Unnormalized `π` for sorted weights: giants kept, tail spread over `u`.
pub fn pi_of(w: &[f64], k: usize, jstar: usize) -> Vec<f64> {
    let u = k - jstar + 1;
    let share = tail_sums(w)[jstar - 1] / u as f64;
    let mut pi = w[..jstar - 1].to_vec();
    pi.resize(k, share);
    pi
}

pub fn compute_jstar(p: &Prior, k: usize) -> Result<usize> {
    jstar_of(p.probs(), k)
}

/// `π` for `p` and cap `k`; non-increasing, sums to 1.
pub fn build_pi(p: &Prior, k: usize) -> Result<Vec<f64>> {
    let jstar = compute_jstar(p, k)?;
    Ok(pi_of(p.probs(), k, jstar))
}

/// The run of [`greedy_decomposition`].
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    /// Selected positions (into the residual vector) and weight, per step.
    pub steps: Vec<(Vec<usize>, f64)>,
    /// Largest observed `max r − S/u` before each step; `≤ 0` up to rounding.
    pub worst_invariant_gap: f64,
}

/// Writes `r` as `Σ_s w_s · 1_{A_s}` with `|A_s| = u`.
///
/// Needs `max r ≤ Σ r / u`. Each step takes the `u` largest residuals (ties
/// by position) and removes `w = min(r_[u], S/u − r_[u+1])` from each, which
/// keeps `max r ≤ S/u` and either zeroes an entry or joins `r_[u+1]` to the
/// top group. At most `len(r)` steps are taken.
pub fn greedy_decomposition(residual: &[f64], u: usize) -> Result<GreedyTrace> {
    let t = residual.len();
    if u == 0 || u > t {
        return Err(Error::Invariant(format!(
            "cannot split {t} residuals into {u}-sets"
        )));
    }
    let mut r = residual.to_vec();
    let s0: f64 = r.iter().sum();
    let eps = RESIDUAL_EPS * s0;
    let mut trace = GreedyTrace {
        steps: Vec::new(),
        worst_invariant_gap: f64::NEG_INFINITY,
    };
    let mut order: Vec<usize> = (0..t).collect();
    loop {
        let s: f64 = r.iter().sum();
        let positives = r.iter().filter(|&&x| x > eps).count();
        if positives < u || trace.steps.len() > t {
            break;
        }
        order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
        let r_u = r[order[u - 1]];
        let r_next = if u < t { r[order[u]] } else { 0.0 };
        trace.worst_invariant_gap = trace.worst_invariant_gap.max(r[order[0]] - s / u as f64);
        let w = r_u.min(s / u as f64 - r_next);
        if w <= eps {
            break;
        }
        let mut selected = order[..u].to_vec();
        for &i in &selected {
            r[i] = if r[i] - w <= eps { 0.0 } else { r[i] - w };
        }
        selected.sort_unstable();
        trace.steps.push((selected, w));
    }
    let left: f64 = r.iter().sum();
    if left > 1e-12 * s0.max(1.0) || trace.steps.len() > t {
        return Err(Error::Invariant(format!(
            "greedy decomposition stalled with residual mass {left:e} after {} steps",
            trace.steps.len()
        )));
    }
    Ok(trace)
}

/// Step 2 in sorted, zero-based labels: weights `v_M ≥ 0` over `k`-subsets
/// `M ⊇ giants` with `Σ_{M∋i} v_M = w[i]` for every tail input.
pub fn decompose_weights(w: &[f64], k: usize, jstar: usize) -> Result<BTreeMap<SubsetLabel, f64>> {
    let n = w.len();
    check_cap(n, k)?;
    if jstar == 0 || jstar > k {
        return Err(Error::Parameter(format!("j*={jstar} outside 1..={k}")));
    }
    let giants = jstar - 1;
    let trace = greedy_decomposition(&w[giants..], k - giants)?;
    let mut weights = BTreeMap::new();
    for (sel, v) in trace.steps {
        let label = SubsetLabel::new((0..giants).chain(sel.into_iter().map(|i| i + giants)))?;
        *weights.entry(label).or_insert(0.0) += v;
    }
    check_equations(w, giants, &weights)?;
    Ok(weights)
}

fn check_equations(w: &[f64], giants: usize, weights: &BTreeMap<SubsetLabel, f64>) -> Result<()> {
    for (i, &wi) in w.iter().enumerate().skip(giants) {
        let got: f64 = weights
            .iter()
            .filter(|(m, _)| m.contains(i))
            .map(|(_, v)| v)
            .sum();
        if (got - wi).abs() > EQUATION_TOL * wi.max(1.0) {
            return Err(Error::Invariant(format!(
                "input {} receives {got} instead of {wi}",
                i + 1
            )));
        }
    }
    Ok(())
}

pub fn decompose_residual(p: &Prior, k: usize, jstar: usize) -> Result<BTreeMap<SubsetLabel, f64>> {
    decompose_weights(p.probs(), k, jstar)
}

/// Steps 3–5 on sorted weights: tail rows get `v_M / w(i)`, giant rows get
/// `v_M / Σ v`. Zero weights are dropped.
///
/// Tail rows divide by `Σ_{M∋i} v_M` rather than `w(i)`; the two agree to
/// [`EQUATION_TOL`], and the former keeps row sums exact for tiny `w(i)`.
pub fn assemble_weights(
    w: &[f64],
    k: usize,
    jstar: usize,
    weights: &BTreeMap<SubsetLabel, f64>,
) -> Result<Channel> {
    let n = w.len();
    check_cap(n, k)?;
    let giants = jstar - 1;
    let kept: Vec<(&SubsetLabel, f64)> = weights
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(m, &v)| (m, v))
        .collect();
    let total: f64 = kept.iter().map(|(_, v)| v).sum();
    let mut covered = vec![0.0; n];
    for (label, v) in &kept {
        for &i in label.members() {
            covered[i] += v;
        }
    }
    let mut rows = vec![vec![0.0; kept.len()]; n];
    for (col, (label, v)) in kept.iter().enumerate() {
        if label.len() != k || (0..giants).any(|g| !label.contains(g)) {
            return Err(Error::Invariant(format!(
                "subset {{{label}}} is not a {k}-set over all giants"
            )));
        }
        for &i in label.members() {
            rows[i][col] = if i < giants {
                v / total
            } else {
                v / covered[i]
            };
        }
    }
    Channel::new(rows, kept.into_iter().map(|(m, _)| m.clone()).collect())
}

pub fn assemble_channel(
    p: &Prior,
    k: usize,
    jstar: usize,
    weights: &BTreeMap<SubsetLabel, f64>,
) -> Result<Channel> {
    assemble_weights(p.probs(), k, jstar, weights)
}

/// Output of [`design`], reported in the caller's labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub k: usize,
    /// 1-based.
    pub jstar: usize,
    pub pi: Vec<f64>,
    /// Keys are output pre-images in the caller's labels.
    #[serde(serialize_with = "weights_as_strings")]
    pub weights: BTreeMap<SubsetLabel, f64>,
    pub channel: Channel,
    /// `permutation[i]` is the caller's (0-based) label of the `i`-th
    /// largest input.
    pub permutation: Vec<usize>,
}

fn weights_as_strings<S: Serializer>(
    weights: &BTreeMap<SubsetLabel, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(weights.iter().map(|(m, v)| (m.to_string(), v)))
}

/// Runs the full construction on sorted weights and maps the result back to
/// the labels in `labels` (an `original_len`-row channel).
pub(crate) fn design_sorted(
    w: &[f64],
    k: usize,
    labels: &[usize],
    original_len: usize,
) -> Result<DesignResult> {
    let jstar = jstar_of(w, k)?;
    let pi = pi_of(w, k, jstar);
    let sorted_weights = decompose_weights(w, k, jstar)?;
    let channel = assemble_weights(w, k, jstar, &sorted_weights)?;
    let channel = if original_len == w.len() && labels.iter().enumerate().all(|(i, &l)| i == l) {
        channel
    } else {
        channel.reindex_inputs(labels, original_len)?
    };
    let weights = sorted_weights
        .into_iter()
        .map(|(m, v)| (m.map(|i| labels[i]), v))
        .collect();
    Ok(DesignResult {
        k,
        jstar,
        pi,
        weights,
        channel,
        permutation: labels.to_vec(),
    })
}

/// The leakage-optimal channel for prior `p` under pre-image cap `k`.
pub fn design(p: &Prior, k: usize) -> Result<DesignResult> {
    design_sorted(p.probs(), k, p.labels(), p.original_len())
}

/// `H(π)`: the largest conditional entropy any feasible channel achieves.
pub fn max_conditional_entropy(m: &EntropyMeasure, p: &Prior, k: usize) -> Result<f64> {
    Ok(entropy(m, &build_pi(p, k)?))
}

/// `H(p) − H(π)`, without building a channel.
pub fn min_leakage_closed_form(m: &EntropyMeasure, p: &Prior, k: usize) -> Result<f64> {
    Ok(entropy(m, p.probs()) - max_conditional_entropy(m, p, k)?)
}

/// `−ln max(1/k, p[1])`.
pub fn corollary_min_entropy(p: &Prior, k: usize) -> Result<f64> {
    check_cap(p.len(), k)?;
    Ok(-(1.0 / k as f64).max(p.probs()[0]).ln())
}

/// `1 − max_{0≤j≤l} {P_j + (1−P_j)(l−j)/(k−j)}` with `0/0 := 0`; `l > k` is
/// clamped to `k`.
pub fn corollary_lguess(p: &Prior, k: usize, l: usize) -> Result<f64> {
    check_cap(p.len(), k)?;
    if l == 0 {
        return Err(Error::Parameter("l-guess needs l >= 1".into()));
    }
    let l = l.min(k);
    let probs = p.probs();
    let mut prefix = 0.0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=l {
        if j > 0 {
            prefix += probs[j - 1];
        }
        let spread = if k == j {
            0.0
        } else {
            (l - j) as f64 / (k - j) as f64
        };
        best = best.max(prefix + (1.0 - prefix) * spread);
    }
    Ok(1.0 - best)
}

/// `min_{1≤j≤k} {Σ_{i<j} i·p[i] + (1−P_{j−1})(k+j)/2}`.
pub fn corollary_guesswork(p: &Prior, k: usize) -> Result<f64> {
    check_cap(p.len(), k)?;
    let probs = p.probs();
    let (mut head, mut prefix) = (0.0, 0.0);
    let mut best = f64::INFINITY;
    for j in 1..=k {
        if j > 1 {
            head += (j - 1) as f64 * probs[j - 2];
            prefix += probs[j - 2];
        }
        best = best.min(head + (1.0 - prefix) * (k + j) as f64 / 2.0);
    }
    Ok(best)
}
