//! Seeded random generators for priors, channels and majorizing pairs.

use rand::seq::index;
use rand::Rng;

use crate::error::Result;
use crate::prob::{Channel, SubsetLabel};

/// A random point on the simplex. `skew = 1` is Dirichlet(1); larger values
/// concentrate mass on fewer coordinates.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, skew: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            (-(1.0 - u).ln()).powf(skew).max(1e-300)
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// A random strictly positive prior on `n` inputs, sorted non-increasingly.
///
/// Renormalized so the total is 1 to within a few ulps. Occasionally
/// introduces exact ties, which stress tie-breaking paths.
pub fn random_prior<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let skew = rng.gen_range(0.3..3.0);
    let mut p = random_simplex(rng, n, skew);
    if n > 1 && rng.gen_bool(0.1) {
        let i = rng.gen_range(0..n - 1);
        let avg = (p[i] + p[i + 1]) / 2.0;
        p[i] = avg;
        p[i + 1] = avg;
    }
    p.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// A dense random channel with `m` outputs and no pre-image cap.
pub fn random_dense_channel<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Result<Channel> {
    let rows = (0..n)
        .map(|_| {
            let skew = rng.gen_range(0.5..3.0);
            let mut row = random_simplex(rng, m, skew);
            // sparsify some rows to hit boundary cases
            if m > 1 && rng.gen_bool(0.3) {
                let j = rng.gen_range(0..m);
                row[j] = 0.0;
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter_mut().for_each(|x| *x /= s);
                } else {
                    row[(j + 1) % m] = 1.0;
                }
            }
            row
        })
        .collect();
    Channel::from_matrix(rows)
}

/// A random channel whose every output has pre-image size at most `k`.
///
/// Output slots are random `k`-subsets: one drawn around each input (so every
/// input has somewhere to go) plus `0..=n` extra ones. Each input then picks
/// between 1 and 3 of the slots that contain it and splits its row mass over
/// them with random positive weights, renormalized to sum to 1.
pub fn random_capped_channel<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<Channel> {
    let k = k.clamp(1, n);
    let mut slots: Vec<SubsetLabel> = Vec::new();
    for x in 0..n {
        let mut members: Vec<usize> = index::sample(rng, n - 1, k - 1)
            .into_iter()
            .map(|i| if i >= x { i + 1 } else { i })
            .collect();
        members.push(x);
        slots.push(SubsetLabel::new(members)?);
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        slots.push(SubsetLabel::new(index::sample(rng, n, k))?);
    }
    let m = slots.len();
    let mut rows = vec![vec![0.0; m]; n];
    for (x, row) in rows.iter_mut().enumerate() {
        let containing: Vec<usize> = (0..m).filter(|&j| slots[j].contains(x)).collect();
        let picks = rng.gen_range(1..=3).min(containing.len());
        let chosen = index::sample(rng, containing.len(), picks);
        let skew = rng.gen_range(0.5..3.0);
        let w = random_simplex(rng, picks, skew);
        for (c, wj) in chosen.into_iter().zip(w) {
            row[containing[c]] += wj;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    Channel::new(rows, slots)
}
