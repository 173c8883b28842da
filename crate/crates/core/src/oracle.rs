//! Independent checkers: posterior verification, random feasible channels,
//! a brute-force grid optimizer, the support-constrained counterexample, and
//! the uniform-randomization baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::design::design;
use crate::entropy::{conditional_entropy, entropy, leakage, EntropyMeasure};
use crate::error::{Error, Result};
use crate::prob::{posteriors, preimage, validate_channel_with_tol, Channel, Prior, SubsetLabel};
use crate::sampling::random_capped_channel;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub label: String,
    pub achieved: f64,
    pub bound: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub instance: String,
    pub tolerance: f64,
    pub checks: Vec<CheckRow>,
    /// Structural problems found before any numeric check.
    pub issues: Vec<String>,
    pub max_violation: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn new(instance: String, tolerance: f64) -> Self {
        Self {
            instance,
            tolerance,
            checks: Vec::new(),
            issues: Vec::new(),
            max_violation: 0.0,
            pass: true,
        }
    }

    fn push(&mut self, label: String, achieved: f64, bound: f64, violation: f64) {
        let violation = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation.max(0.0)
        };
        self.max_violation = self.max_violation.max(violation);
        self.checks.push(CheckRow {
            label,
            achieved,
            bound,
            violation,
        });
    }

    fn finish(mut self) -> Self {
        self.pass = self.issues.is_empty() && self.max_violation <= self.tolerance;
        self
    }
}

fn sorted_padded(v: &[f64], len: usize) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().copied().filter(|&x| x > 0.0).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(len.max(s.len()), 0.0);
    s
}

/// Every realized output's sorted posterior against sorted `pi`.
pub fn verify_posteriors_equal_pi(
    p: &[f64],
    ch: &Channel,
    pi: &[f64],
    tol: f64,
) -> Result<VerificationReport> {
    let mut report =
        VerificationReport::new(format!("posteriors vs pi over {} inputs", p.len()), tol);
    for e in posteriors(p, ch)?.iter() {
        let len = pi
            .len()
            .max(e.posterior.iter().filter(|&&x| x > 0.0).count());
        let post = sorted_padded(&e.posterior, len);
        let want = sorted_padded(pi, len);
        let dev = post
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.push(
            format!("output {{{}}}", ch.outputs()[e.output]),
            post[0],
            want[0],
            dev,
        );
    }
    Ok(report.finish())
}

/// Full check of a claimed optimal channel: feasibility at row tolerance
/// `tol`, posteriors equal to `π(p, k)`, and `H(X|Y) = H(π)` per measure.
pub fn verify_design(
    p: &Prior,
    full_prior: &[f64],
    ch: &Channel,
    k: usize,
    measures: &[EntropyMeasure],
    tol: f64,
) -> Result<VerificationReport> {
    if ch.n_inputs() != full_prior.len() {
        return Err(Error::Dimension(format!(
            "channel has {} inputs, prior has {}",
            ch.n_inputs(),
            full_prior.len()
        )));
    }
    let pi = crate::design::build_pi(p, k)?;
    let mut report = verify_posteriors_equal_pi(full_prior, ch, &pi, tol)?;
    report.instance = format!("channel with cap k={k} over {} inputs", full_prior.len());
    report.pass = true;
    let structure = validate_channel_with_tol(ch, k, tol)?;
    report.issues = structure.issues.iter().map(|i| format!("{i:?}")).collect();
    for m in measures {
        let achieved = conditional_entropy(m, full_prior, ch)?;
        let bound = entropy(m, &pi);
        report.push(m.to_string(), achieved, bound, (achieved - bound).abs());
    }
    Ok(report.finish())
}

/// Seeded stream of random channels with pre-image cap `k` over `n` inputs.
/// See [`random_capped_channel`] for the generation scheme.
pub struct FeasibleChannels {
    rng: ChaCha8Rng,
    n: usize,
    k: usize,
    remaining: usize,
}

impl Iterator for FeasibleChannels {
    type Item = Channel;

    fn next(&mut self) -> Option<Channel> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(
            random_capped_channel(&mut self.rng, self.n, self.k)
                .expect("generator builds valid shapes"),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

pub fn sample_feasible_channels(
    n: usize,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<FeasibleChannels> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidCap { k, n });
    }
    Ok(FeasibleChannels {
        rng: ChaCha8Rng::seed_from_u64(seed),
        n,
        k,
        remaining: count,
    })
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Compositions of `total` into `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Largest conditional entropy over channels whose outputs are the `k`-subsets
/// of the inputs and whose rows put multiples of `1/grid_resolution` on the
/// subsets containing that input. Restricted to `n ≤ 4`, `k ≤ 3`.
pub fn exhaustive_small_optimum(
    m: &EntropyMeasure,
    p: &[f64],
    k: usize,
    grid_resolution: usize,
) -> Result<f64> {
    let n = p.len();
    if n > 4 || k > 3 || k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "grid search covers n <= 4 and 1 <= k <= min(3, n); got n={n}, k={k}"
        )));
    }
    if grid_resolution == 0 {
        return Err(Error::Parameter("grid resolution must be positive".into()));
    }
    let subsets = k_subsets(n, k);
    let containing: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            (0..subsets.len())
                .filter(|&s| subsets[s].contains(&x))
                .collect()
        })
        .collect();
    let options: Vec<Vec<Vec<usize>>> = containing
        .iter()
        .map(|c| compositions(grid_resolution, c.len()))
        .collect();
    let r = grid_resolution as f64;
    let mut joint = vec![vec![0.0; n]; subsets.len()];
    let mut idx = vec![0usize; n];
    let mut post = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        for col in joint.iter_mut() {
            col.iter_mut().for_each(|v| *v = 0.0);
        }
        for x in 0..n {
            for (slot, &units) in containing[x].iter().zip(&options[x][idx[x]]) {
                joint[*slot][x] = p[x] * units as f64 / r;
            }
        }
        let mut inner = 0.0;
        for col in &joint {
            let py: f64 = col.iter().sum();
            if py > 0.0 {
                for (d, v) in post.iter_mut().zip(col) {
                    *d = v / py;
                }
                inner += py * m.core(&post);
            }
        }
        best = best.max(m.eta(inner));
        // odometer over per-row choices
        let mut x = 0;
        while x < n {
            idx[x] += 1;
            if idx[x] < options[x].len() {
                break;
            }
            idx[x] = 0;
            x += 1;
        }
        if x == n {
            break;
        }
    }
    Ok(best)
}

/// The four-secret prior of the support-constrained demo.
pub const COUNTEREXAMPLE_PRIOR: [f64; 4] = [0.2, 0.5, 0.15, 0.15];

/// The demo channel: input 1 always emits `a`, inputs 3 and 4 always emit
/// `b`, and input 2 emits `b` with joint mass `x ∈ [0, p₂]`.
pub fn counterexample_channel(x: f64) -> Result<Channel> {
    let p2 = COUNTEREXAMPLE_PRIOR[1];
    if !(0.0..=p2).contains(&x) {
        return Err(Error::Parameter(format!("x={x} outside [0, {p2}]")));
    }
    let rows = vec![
        vec![1.0, 0.0],
        vec![(p2 - x) / p2, x / p2],
        vec![0.0, 1.0],
        vec![0.0, 1.0],
    ];
    Channel::new(
        rows,
        vec![SubsetLabel::new([0, 1])?, SubsetLabel::new([1, 2, 3])?],
    )
}

pub fn counterexample_objective(m: &EntropyMeasure, x: f64) -> Result<f64> {
    conditional_entropy(m, &COUNTEREXAMPLE_PRIOR, &counterexample_channel(x)?)
}

/// Golden-section maximizer of `H(X|Y)` over `x ∈ [0, p₂]`, run until the
/// bracket is below `1e-6`. On ties the left sub-bracket is kept.
pub fn counterexample_optimize(m: &EntropyMeasure) -> Result<f64> {
    let f = |x: f64| counterexample_objective(m, x);
    golden_section_max(f, 0.0, COUNTEREXAMPLE_PRIOR[1], 1e-6)
}

pub fn golden_section_max<F>(f: F, mut a: f64, mut b: f64, width: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a + b) / 2.0)
}

/// `C(n−i, k−1) / C(n−1, k−1)` for 1-based `i`, as a running product.
fn binomial_ratio(n: usize, i: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for t in 0..k - 1 {
        if n < i + t + 1 {
            return 0.0;
        }
        r *= (n - i - t) as f64 / (n - 1 - t) as f64;
    }
    r
}

/// Min-entropy leakage of the baseline that picks a uniformly random
/// `k`-subset containing the secret. Posterior vulnerability is
/// `Σ_i p(i) C(n−i, k−1) / C(n−1, k−1)`.
pub fn baseline_uniform_leakage(p: &Prior, k: usize) -> Result<f64> {
    let n = p.len();
    if k == 0 || k > n {
        return Err(Error::InvalidCap { k, n });
    }
    let v: f64 = p
        .probs()
        .iter()
        .enumerate()
        .map(|(i, q)| q * binomial_ratio(n, i + 1, k))
        .sum();
    Ok((v / p.probs()[0]).ln())
}

/// The explicit baseline channel: one output per `k`-subset.
pub fn baseline_channel(n: usize, k: usize) -> Result<Channel> {
    if k == 0 || k > n {
        return Err(Error::InvalidCap { k, n });
    }
    let subsets = k_subsets(n, k);
    let per_row = subsets.iter().filter(|s| s.contains(&0)).count() as f64;
    let rows = (0..n)
        .map(|x| {
            subsets
                .iter()
                .map(|s| if s.contains(&x) { 1.0 / per_row } else { 0.0 })
                .collect()
        })
        .collect();
    let labels = subsets
        .into_iter()
        .map(SubsetLabel::new)
        .collect::<Result<_>>()?;
    Channel::new(rows, labels)
}

/// [`baseline_uniform_leakage`] by evaluating the explicit channel.
pub fn baseline_enumerated_leakage(p: &Prior, k: usize) -> Result<f64> {
    leakage(
        &EntropyMeasure::min_entropy(),
        p.probs(),
        &baseline_channel(p.len(), k)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversaryComparison {
    /// Expected reward of guessing the most likely secret per output.
    pub informed_reward: f64,
    /// Expected reward of guessing uniformly within the pre-image.
    pub ignorant_reward: f64,
    /// `−ln informed_reward`.
    pub informed: f64,
    /// `−ln ignorant_reward`.
    pub ignorant: f64,
}

/// Both adversaries facing the optimal channel for `(p, k)`.
pub fn adversary_comparison(p: &Prior, k: usize) -> Result<AdversaryComparison> {
    let d = design(p, k)?;
    let full = crate::gain::full_vector(p);
    let mut informed = 0.0;
    let mut ignorant = 0.0;
    for e in posteriors(&full, &d.channel)?.iter() {
        informed += e.prob * e.posterior.iter().copied().fold(0.0, f64::max);
        let size = preimage(&d.channel, e.output)?.map_or(0, |s| s.len());
        ignorant += e.prob / size as f64;
    }
    Ok(AdversaryComparison {
        informed_reward: informed,
        ignorant_reward: ignorant,
        informed: -informed.ln(),
        ignorant: -ignorant.ln(),
    })
}
