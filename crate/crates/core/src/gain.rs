//! Gain-weighted entropies `H_g(X) = η(‖Gp‖₁ F(Gp/‖Gp‖₁))` and the optimal
//! design for diagonal gains.
//!
//! With `G = diag(γ)` the construction of [`crate::design`] applies verbatim
//! to the weights `Gp`. Inputs with `γ_i = 0` carry no gain; they are given an
//! output of their own, and the `0/0 := 0` convention makes its term vanish.

use serde::{Deserialize, Serialize};

use crate::design::{design_sorted, jstar_of, pi_of, DesignResult};
use crate::entropy::EntropyMeasure;
use crate::error::{Error, Result};
use crate::prob::{posteriors, Channel, Prior};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSpec {
    /// `γ`, indexed by the caller's input labels.
    Diagonal(Vec<f64>),
    /// `G[w][x]`: rows are guesses, columns are inputs. Evaluation only.
    Matrix(Vec<Vec<f64>>),
}

impl GainSpec {
    pub fn diagonal(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Gain("gains must be finite and non-negative".into()));
        }
        if !gamma.iter().any(|&g| g > 0.0) {
            return Err(Error::Gain("at least one gain must be positive".into()));
        }
        Ok(Self::Diagonal(gamma))
    }

    pub fn unit(n: usize) -> Self {
        Self::Diagonal(vec![1.0; n])
    }

    pub fn matrix(g: Vec<Vec<f64>>) -> Result<Self> {
        let cols = g.first().map_or(0, Vec::len);
        if g.is_empty() || cols == 0 || g.iter().any(|r| r.len() != cols) {
            return Err(Error::Gain(
                "gain matrix must be non-empty and rectangular".into(),
            ));
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Gain("gain matrix has non-finite entries".into()));
        }
        Ok(Self::Matrix(g))
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Self::Diagonal(g) => g.len(),
            Self::Matrix(g) => g[0].len(),
        }
    }

    /// `Gp`. For matrices the result must be elementwise non-negative.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.n_inputs() {
            return Err(Error::Dimension(format!(
                "gain covers {} inputs, distribution has {}",
                self.n_inputs(),
                p.len()
            )));
        }
        let q: Vec<f64> = match self {
            Self::Diagonal(g) => g.iter().zip(p).map(|(g, p)| g * p).collect(),
            Self::Matrix(g) => g
                .iter()
                .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
                .collect(),
        };
        if q.iter().any(|&v| v < 0.0) {
            return Err(Error::Gain(
                "Gp has negative entries for this distribution".into(),
            ));
        }
        Ok(q)
    }
}

/// `(‖q‖₁, F(q/‖q‖₁))` term, or `None` when `q = 0`.
fn weighted_core(m: &EntropyMeasure, q: &[f64]) -> Option<f64> {
    let s: f64 = q.iter().sum();
    if s <= 0.0 {
        return None;
    }
    let normalized: Vec<f64> = q.iter().map(|v| v / s).collect();
    Some(s * m.core(&normalized))
}

pub fn g_entropy(m: &EntropyMeasure, p: &[f64], g: &GainSpec) -> Result<f64> {
    let q = g.apply(p)?;
    let inner = weighted_core(m, &q).ok_or_else(|| Error::Gain("Gp is identically zero".into()))?;
    Ok(m.eta(inner))
}

/// `η(Σ_y p(y) ‖G p_{X|y}‖₁ F(G p_{X|y} / ‖G p_{X|y}‖₁))`; outputs whose
/// posterior has zero gain contribute nothing.
pub fn g_conditional_entropy(
    m: &EntropyMeasure,
    p: &[f64],
    ch: &Channel,
    g: &GainSpec,
) -> Result<f64> {
    let mut inner = 0.0;
    for e in posteriors(p, ch)?.iter() {
        if let Some(t) = weighted_core(m, &g.apply(&e.posterior)?) {
            inner += e.prob * t;
        }
    }
    Ok(m.eta(inner))
}

pub fn g_leakage(m: &EntropyMeasure, p: &[f64], ch: &Channel, g: &GainSpec) -> Result<f64> {
    Ok(g_entropy(m, p, g)? - g_conditional_entropy(m, p, ch, g)?)
}

/// Positive entries of `Gp` in sorted order with their caller labels.
/// Stable, so unit gains reproduce the prior's own order exactly.
fn weighted_inputs(p: &Prior, gamma: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    if gamma.len() != p.original_len() {
        return Err(Error::Dimension(format!(
            "{} gains for a prior over {} inputs",
            gamma.len(),
            p.original_len()
        )));
    }
    let mut pairs: Vec<(f64, usize)> = p
        .probs()
        .iter()
        .zip(p.labels())
        .map(|(&pi, &l)| (gamma[l] * pi, l))
        .filter(|&(w, _)| w > 0.0)
        .collect();
    if pairs.is_empty() {
        return Err(Error::Gain(
            "every input with positive probability has zero gain".into(),
        ));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs.into_iter().unzip())
}

fn diagonal(g: &GainSpec) -> Result<&[f64]> {
    match g {
        GainSpec::Diagonal(gamma) => Ok(gamma),
        GainSpec::Matrix(_) => Err(Error::Gain("optimal design needs a diagonal gain".into())),
    }
}

/// The optimal channel for diagonal gains: [`crate::design::design`] run on
/// `Gp`. `jstar` and `pi` refer to the sorted `Gp`, and `pi` keeps its mass
/// `‖Gp‖₁`. The cap is reduced to the number of positive-gain inputs when
/// needed.
pub fn design_with_gain(p: &Prior, k: usize, g: &GainSpec) -> Result<DesignResult> {
    let gamma = diagonal(g)?;
    if k == 0 || k > p.original_len() {
        return Err(Error::InvalidCap {
            k,
            n: p.original_len(),
        });
    }
    let (w, labels) = weighted_inputs(p, gamma)?;
    let mut res = design_sorted(&w, k.min(w.len()), &labels, p.original_len())?;
    res.k = k;
    Ok(res)
}

/// `η(‖π‖₁ F(π/‖π‖₁))` with `π` built from `Gp`.
pub fn g_max_conditional_entropy(
    m: &EntropyMeasure,
    p: &Prior,
    k: usize,
    g: &GainSpec,
) -> Result<f64> {
    let gamma = diagonal(g)?;
    if k == 0 || k > p.original_len() {
        return Err(Error::InvalidCap {
            k,
            n: p.original_len(),
        });
    }
    let (w, _) = weighted_inputs(p, gamma)?;
    let k = k.min(w.len());
    let pi = pi_of(&w, k, jstar_of(&w, k)?);
    Ok(m.eta(weighted_core(m, &pi).expect("positive weights")))
}

/// Smallest achievable g-leakage under cap `k`.
pub fn g_min_leakage_closed_form(
    m: &EntropyMeasure,
    p: &Prior,
    k: usize,
    g: &GainSpec,
) -> Result<f64> {
    let full = full_vector(p);
    Ok(g_entropy(m, &full, g)? - g_max_conditional_entropy(m, p, k, g)?)
}

/// The prior in the caller's labels, zeros restored.
pub fn full_vector(p: &Prior) -> Vec<f64> {
    let mut v = vec![0.0; p.original_len()];
    for (&l, &q) in p.labels().iter().zip(p.probs()) {
        v[l] = q;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design;
    use crate::entropy::{conditional_entropy, entropy, standard_catalog};
    use crate::prob::validate_channel;

    #[test]
    fn gain_validation() {
        assert!(GainSpec::diagonal(vec![0.0, 0.0]).is_err());
        assert!(GainSpec::diagonal(vec![1.0, -1.0]).is_err());
        assert!(GainSpec::diagonal(vec![0.0, 2.0]).is_ok());
        assert!(GainSpec::matrix(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        let g = GainSpec::unit(3);
        assert!(g.apply(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn unit_gain_is_plain_entropy() {
        let p = [0.5, 0.3, 0.2];
        let ch =
            Channel::from_matrix(vec![vec![0.7, 0.3], vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let g = GainSpec::unit(3);
        for m in standard_catalog(3) {
            assert!((g_entropy(&m, &p, &g).unwrap() - entropy(&m, &p)).abs() < 1e-12);
            let a = g_conditional_entropy(&m, &p, &ch, &g).unwrap();
            assert!((a - conditional_entropy(&m, &p, &ch).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn min_entropy_gain_is_classical_g_vulnerability() {
        let p = [0.5, 0.3, 0.2];
        let g = GainSpec::diagonal(vec![0.2, 1.0, 3.0]).unwrap();
        let h = g_entropy(&EntropyMeasure::min_entropy(), &p, &g).unwrap();
        assert!((h + 0.6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_positive_gain() {
        let p = [0.5, 0.3, 0.2];
        let g = GainSpec::diagonal(vec![0.0, 2.0, 0.0]).unwrap();
        for m in standard_catalog(3) {
            let h = g_entropy(&m, &p, &g).unwrap();
            assert!((h - m.eta(0.6 * m.core(&[1.0]))).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn identity_channel_min_entropy_g_leakage() {
        let p = [0.5, 0.3, 0.2];
        let gamma = [0.2, 1.0, 3.0];
        let g = GainSpec::diagonal(gamma.to_vec()).unwrap();
        let ch = Channel::identity(3).unwrap();
        let l = g_leakage(&EntropyMeasure::min_entropy(), &p, &ch, &g).unwrap();
        let sum: f64 = gamma.iter().zip(p).map(|(a, b)| a * b).sum();
        assert!((l - (sum / 0.6).ln()).abs() < 1e-12);
    }

    #[test]
    fn unit_gain_design_is_bit_identical() {
        let p = Prior::new(vec![0.1, 0.35, 0.15, 0.4]).unwrap();
        for k in 1..=4 {
            assert_eq!(
                design_with_gain(&p, k, &GainSpec::unit(4)).unwrap(),
                design(&p, k).unwrap()
            );
        }
    }

    #[test]
    fn zero_gain_input_is_a_free_rider() {
        let p = Prior::new(vec![0.3, 0.28, 0.22, 0.2]).unwrap();
        let g = GainSpec::diagonal(vec![1.0, 0.0, 2.0, 1.0]).unwrap();
        let d = design_with_gain(&p, 2, &g).unwrap();
        assert!(validate_channel(&d.channel, 2).unwrap().valid);
        for m in standard_catalog(2) {
            let got = g_conditional_entropy(&m, &[0.3, 0.28, 0.22, 0.2], &d.channel, &g).unwrap();
            let want = g_max_conditional_entropy(&m, &p, 2, &g).unwrap();
            assert!((got - want).abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn matrix_gain_is_not_designable() {
        let p = Prior::uniform(2).unwrap();
        let g = GainSpec::matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(design_with_gain(&p, 1, &g), Err(Error::Gain(_))));
        // identity matrix gain evaluates like the unit diagonal
        let h = g_entropy(&EntropyMeasure::shannon(), &[0.5, 0.5], &g).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
    }
}
