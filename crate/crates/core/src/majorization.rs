//! The majorization preorder and an empirical Schur-concavity probe.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{entropy, EntropyMeasure};
use crate::sampling::random_simplex;

const TOTAL_TOL: f64 = 1e-9;
const PREFIX_SLACK: f64 = 1e-12;

/// A vector held in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedVec(Vec<f64>);

impl SortedVec {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.0.clone();
        v.resize(len, 0.0);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Majorization {
    Holds,
    /// Totals differ by more than `1e-9`.
    UnequalTotals {
        a: f64,
        b: f64,
    },
    /// First prefix (1-based length) where `Σ a[..j] < Σ b[..j] − 1e-12`.
    PrefixFails {
        prefix: usize,
        a: f64,
        b: f64,
    },
}

/// Decides `a ≻ b`, zero-padding the shorter vector.
pub fn majorization(a: &[f64], b: &[f64]) -> Majorization {
    let len = a.len().max(b.len());
    let a = SortedVec::new(a.to_vec()).padded(len);
    let b = SortedVec::new(b.to_vec()).padded(len);
    let (ta, tb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (ta - tb).abs() > TOTAL_TOL {
        return Majorization::UnequalTotals { a: ta, b: tb };
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    for j in 0..len.saturating_sub(1) {
        sa += a[j];
        sb += b[j];
        if sa < sb - PREFIX_SLACK {
            return Majorization::PrefixFails {
                prefix: j + 1,
                a: sa,
                b: sb,
            };
        }
    }
    Majorization::Holds
}

/// `a ≻ b`: `a` is at least as concentrated as `b`.
pub fn majorizes(a: &[f64], b: &[f64]) -> bool {
    majorization(a, b) == Majorization::Holds
}

/// A majorizing pair `a ≻ b` on which `f(a) > f(b) + 1e-9`.
#[derive(Debug, Clone, Serialize)]
pub struct SchurViolation {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub fa: f64,
    pub fb: f64,
}

/// Draws `a` on the simplex, then builds `b ≺ a` by a few random T-transforms
/// (Robin Hood moves) followed by a random permutation.
pub fn random_majorizing_pair<R: Rng + ?Sized>(rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let d = rng.gen_range(2..=6);
    let skew = rng.gen_range(0.5..3.0);
    let a = random_simplex(rng, d, skew);
    let mut b = a.clone();
    for _ in 0..rng.gen_range(1..=4) {
        let i = rng.gen_range(0..d);
        let j = rng.gen_range(0..d);
        let (hi, lo) = if b[i] >= b[j] { (i, j) } else { (j, i) };
        let t = rng.gen::<f64>() * (b[hi] - b[lo]) / 2.0;
        b[hi] -= t;
        b[lo] += t;
    }
    b.shuffle(rng);
    (a, b)
}

/// Returns every sampled pair violating Schur-concavity of `f`.
pub fn schur_concavity_probe_fn<F>(f: F, trials: usize, seed: u64) -> Vec<SchurViolation>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..trials {
        let (a, b) = random_majorizing_pair(&mut rng);
        let (fa, fb) = (f(&a), f(&b));
        if fa > fb + 1e-9 {
            out.push(SchurViolation { a, b, fa, fb });
        }
    }
    out
}

/// [`schur_concavity_probe_fn`] applied to `H = η∘F` of a measure.
pub fn schur_concavity_probe(m: &EntropyMeasure, trials: usize, seed: u64) -> Vec<SchurViolation> {
    schur_concavity_probe_fn(|p| entropy(m, p), trials, seed)
}
