//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cloak_core::design::{
    build_pi, compute_jstar, corollary_guesswork, corollary_lguess, corollary_min_entropy, design,
    min_leakage_closed_form,
};
use cloak_core::entropy::{
    conditional_from_table, entropy, find_cre_violation, leakage, standard_catalog, EntropyMeasure,
    RenyiConditional,
};
use cloak_core::gain::{
    design_with_gain, g_conditional_entropy, g_leakage, g_max_conditional_entropy, GainSpec,
};
use cloak_core::oracle::{
    baseline_enumerated_leakage, baseline_uniform_leakage, counterexample_optimize,
    exhaustive_small_optimum, sample_feasible_channels,
};
use cloak_core::prob::{compose, joint, posteriors, validate_channel, Prior, SubsetLabel};
use cloak_core::sampling::{random_dense_channel, random_prior};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

const P1: [f64; 4] = [0.3, 0.28, 0.22, 0.2];
const P2: [f64; 4] = [0.36, 0.3, 0.2, 0.14];
const P3: [f64; 4] = [0.4, 0.35, 0.15, 0.1];

fn linear_prior() -> Prior {
    Prior::new((1..=30).map(|i| (31 - i) as f64 / 465.0).collect()).unwrap()
}

/// The seeded instance set shared by criteria 3 and 4.
fn random_instances() -> Vec<(u64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    (0..500)
        .map(|i| {
            let n = rng.gen_range(2..=10);
            (i as u64, random_prior(&mut rng, n))
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `1e-9`, widened to `1e-9·|v|` once `|v| > 1`: an absolute `1e-9` is finer
/// than an f64 ulp for entropies of order `1e7` and above.
fn tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

fn label(s: &str) -> SubsetLabel {
    s.parse().unwrap()
}

fn c1_worked_examples() -> Outcome {
    let tables: [(&[f64; 4], usize, Vec<f64>, Vec<(&str, [f64; 4])>); 3] = [
        (
            &P1,
            1,
            vec![1.0 / 3.0; 3],
            vec![
                ("1,2,3", [0.4444, 0.4762, 0.6061, 0.0]),
                ("1,2,4", [0.3778, 0.4048, 0.0, 0.5667]),
                ("1,3,4", [0.1778, 0.0, 0.2424, 0.2667]),
                ("2,3,4", [0.0, 0.1190, 0.1515, 0.1667]),
            ],
        ),
        (
            &P2,
            2,
            vec![0.36, 0.32, 0.32],
            vec![
                ("1,2,3", [0.5625, 0.6, 0.9, 0.0]),
                ("1,2,4", [0.375, 0.4, 0.0, 0.8571]),
                ("1,3,4", [0.0625, 0.0, 0.1, 0.1429]),
            ],
        ),
        (
            &P3,
            3,
            vec![0.4, 0.35, 0.25],
            vec![
                ("1,2,3", [0.6, 0.6, 1.0, 0.0]),
                ("1,2,4", [0.4, 0.4, 0.0, 1.0]),
            ],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (i, (p, jstar, pi, cols)) in tables.iter().enumerate() {
        let prior = Prior::new(p.to_vec()).unwrap();
        let d = design(&prior, 3).map_err(|e| e.to_string())?;
        ensure(d.jstar == *jstar, || {
            format!("p{}: j*={} want {jstar}", i + 1, d.jstar)
        })?;
        ensure(compute_jstar(&prior, 3).unwrap() == *jstar, || {
            "compute_jstar disagrees".into()
        })?;
        let pi_dev =
            d.pi.iter()
                .zip(pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        ensure(pi_dev < 1e-12, || format!("p{}: pi {:?}", i + 1, d.pi))?;
        ensure(d.channel.n_outputs() == cols.len(), || {
            format!(
                "p{}: {} outputs, table has {}",
                i + 1,
                d.channel.n_outputs(),
                cols.len()
            )
        })?;
        for (name, want) in cols {
            let c = d
                .channel
                .outputs()
                .iter()
                .position(|m| *m == label(name))
                .ok_or_else(|| format!("p{}: no output {{{name}}}", i + 1))?;
            for (x, w) in want.iter().enumerate() {
                worst = worst.max((d.channel.entry(x, c) - w).abs());
            }
        }
    }
    ensure(worst <= 1e-3, || format!("max entry deviation {worst:.2e}"))?;
    Ok(format!(
        "j*=1,2,3; pi exact; max table deviation {worst:.1e}"
    ))
}

fn c2_joint_constants() -> Outcome {
    let d = design(&Prior::new(P1.to_vec()).unwrap(), 3).map_err(|e| e.to_string())?;
    let j = joint(&P1, &d.channel).unwrap();
    let third = 1.0 / 3.0;
    let want = [
        ("1,2,3", third - 0.2, 0.1333),
        ("1,2,4", third - 0.22, 0.1133),
        ("1,3,4", third - 0.28, 0.0533),
        ("2,3,4", third - 0.3, 0.0333),
    ];
    let mut worst: f64 = 0.0;
    for (name, exact, printed) in want {
        let c = d
            .channel
            .outputs()
            .iter()
            .position(|m| *m == label(name))
            .unwrap();
        for &x in label(name).members() {
            let v = j[x][c];
            ensure((v - exact).abs() < 1e-12, || {
                format!("{{{name}}} input {}: {v}", x + 1)
            })?;
            worst = worst.max((v - printed).abs());
        }
    }
    ensure(worst <= 1e-3, || {
        format!("printed constants off by {worst:.2e}")
    })?;
    Ok(format!("constants exact to 1e-12; vs printed {worst:.1e}"))
}

fn c3_metric_invariance() -> Outcome {
    let instances = random_instances();
    let results: Vec<Result<usize, String>> = instances
        .par_iter()
        .map(|(id, p)| {
            let prior = Prior::new(p.clone()).map_err(|e| e.to_string())?;
            let mut checks = 0;
            for k in 1..=p.len() {
                let d = design(&prior, k).map_err(|e| format!("instance {id} k={k}: {e}"))?;
                ensure(validate_channel(&d.channel, k).unwrap().valid, || {
                    format!("instance {id} k={k}: infeasible channel")
                })?;
                let table = posteriors(p, &d.channel).unwrap();
                for m in standard_catalog(k) {
                    let got = conditional_from_table(&m, &table);
                    let want = entropy(&m, &d.pi);
                    ensure((got - want).abs() <= tol(want), || {
                        format!("instance {id} k={k} {m}: {got} vs {want}")
                    })?;
                    checks += 1;
                }
            }
            Ok(checks)
        })
        .collect();
    let total: usize = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .iter()
        .sum();
    Ok(format!(
        "500 priors, every k, {total} (instance, measure) checks"
    ))
}

fn c4_optimality_bound() -> Outcome {
    let instances = random_instances();
    let results: Vec<Result<usize, String>> = instances
        .par_iter()
        .map(|(id, p)| {
            let prior = Prior::new(p.clone()).map_err(|e| e.to_string())?;
            let n = p.len();
            let mut count = 0;
            for k in 1..=n {
                let catalog = standard_catalog(k);
                let pi = build_pi(&prior, k).unwrap();
                let bounds: Vec<f64> = catalog.iter().map(|m| entropy(m, &pi)).collect();
                let seed = id * 1000 + k as u64;
                for ch in sample_feasible_channels(n, k, 1000, seed).unwrap() {
                    let table = posteriors(p, &ch).unwrap();
                    for (m, b) in catalog.iter().zip(&bounds) {
                        let h = conditional_from_table(m, &table);
                        ensure(h <= b + tol(*b), || {
                            format!("instance {id} k={k} {m}: {h} > {b}")
                        })?;
                    }
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect();
    let total: usize = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .iter()
        .sum();
    Ok(format!(
        "{total} random feasible channels, no bound violations"
    ))
}

fn c5_corollaries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=12);
        let prior = Prior::new(random_prior(&mut rng, n)).unwrap();
        let k = rng.gen_range(1..=n);
        let l = rng.gen_range(1..=k);
        let pi = build_pi(&prior, k).unwrap();
        let pairs = [
            (
                corollary_min_entropy(&prior, k).unwrap(),
                entropy(&EntropyMeasure::min_entropy(), &pi),
            ),
            (
                corollary_lguess(&prior, k, l).unwrap(),
                entropy(&EntropyMeasure::l_guess(l).unwrap(), &pi),
            ),
            (
                corollary_guesswork(&prior, k).unwrap(),
                entropy(&EntropyMeasure::guesswork(), &pi),
            ),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max disagreement {worst:.2e}"))?;
    Ok(format!("1000 instances, max disagreement {worst:.1e}"))
}

fn c6_leakage_curves() -> Outcome {
    let p = linear_prior();
    let measures = [
        EntropyMeasure::shannon(),
        EntropyMeasure::log_guesswork(),
        EntropyMeasure::min_entropy(),
    ];
    let curves: Vec<Vec<f64>> = measures
        .iter()
        .map(|m| {
            (1..=30)
                .map(|k| min_leakage_closed_form(m, &p, k).unwrap())
                .collect()
        })
        .collect();
    let zero = 1e-12;
    let min_e = &curves[2];
    for k in 1..=30 {
        let v = min_e[k - 1];
        if k >= 16 {
            ensure(v.abs() <= zero, || {
                format!("min-entropy leakage {v} at k={k}")
            })?;
        } else {
            ensure(v > zero, || format!("min-entropy leakage {v} at k={k}"))?;
        }
        let s = curves[0][k - 1];
        if k == 30 {
            ensure(s.abs() <= zero, || format!("Shannon leakage {s} at k=30"))?;
        } else {
            ensure(s > zero, || format!("Shannon leakage {s} at k={k}"))?;
        }
    }
    for (m, c) in measures.iter().zip(&curves) {
        for k in 1..30 {
            ensure(c[k] <= c[k - 1] + 1e-12, || {
                format!("{m} rises at k={}", k + 1)
            })?;
        }
    }
    Ok("min-entropy zero exactly from k=16; Shannon zero only at k=30; all monotone".into())
}

fn c7_counterexample() -> Outcome {
    let targets = [
        (EntropyMeasure::guesswork(), 0.1518),
        (EntropyMeasure::renyi_arimoto(2.0).unwrap(), 0.2573),
        (EntropyMeasure::shannon(), 0.2998),
    ];
    let mut parts = Vec::new();
    let mut failed = false;
    for (m, want) in targets {
        let x = counterexample_optimize(&m).map_err(|e| e.to_string())?;
        failed |= (x - want).abs() > 1e-3;
        parts.push(format!("{m}={x:.4} (want {want})"));
    }
    let msg = parts.join(", ");
    if failed {
        Err(msg)
    } else {
        Ok(msg)
    }
}

fn c8_dpi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut checks = 0;
    for t in 0..1000 {
        let n = rng.gen_range(2..=6);
        let m1 = rng.gen_range(1..=5);
        let m2 = rng.gen_range(1..=5);
        let p = random_prior(&mut rng, n);
        let first = random_dense_channel(&mut rng, n, m1).unwrap();
        let second = random_dense_channel(&mut rng, m1, m2).unwrap();
        let both = compose(&first, &second).unwrap();
        let ty = posteriors(&p, &first).unwrap();
        let tz = posteriors(&p, &both).unwrap();
        for m in standard_catalog(n) {
            let hy = conditional_from_table(&m, &ty);
            let hz = conditional_from_table(&m, &tz);
            ensure(hz >= hy - tol(hy), || {
                format!("trial {t} {m}: H(X|Z)={hz} < H(X|Y)={hy}")
            })?;
            let l = leakage(&m, &p, &first).unwrap();
            ensure(l >= -tol(entropy(&m, &p)), || {
                format!("trial {t} {m}: leakage {l}")
            })?;
            checks += 1;
        }
    }
    Ok(format!("1000 chains, {checks} (chain, measure) checks"))
}

fn c9_cre_violations() -> Outcome {
    let runs = [
        (RenyiConditional::Averaged, 2.0, "(a)"),
        (RenyiConditional::JointDifference, 2.0, "(b)"),
        (RenyiConditional::WorstCase, 0.5, "(c)"),
    ];
    let mut parts = Vec::new();
    for (variant, alpha, tag) in runs {
        let found = find_cre_violation(variant, alpha, 100_000, 0x5eed_0009)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{tag} {variant} alpha={alpha}: no violation in 1e5 trials"))?;
        parts.push(format!(
            "{tag} alpha={alpha} trial {}: {:.4} > {:.4}",
            found.trial, found.conditional, found.unconditional
        ));
    }
    let arimoto = find_cre_violation(RenyiConditional::Arimoto, 2.0, 10_000, 0x5eed_0009).unwrap();
    ensure(arimoto.is_none(), || "Arimoto form violated CRE".into())?;
    Ok(parts.join("; "))
}

fn c10_gain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
    let random_gamma = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        let mut g: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.05..5.0)
                }
            })
            .collect();
        if g.iter().all(|&v| v == 0.0) {
            g[rng.gen_range(0..n)] = 1.0;
        }
        g
    };
    // non-negativity
    for t in 0..1000 {
        let n = rng.gen_range(2..=6);
        let p = random_prior(&mut rng, n);
        let m = rng.gen_range(1..=5);
        let ch = random_dense_channel(&mut rng, n, m).unwrap();
        let g = GainSpec::diagonal(random_gamma(&mut rng, n)).unwrap();
        for meas in standard_catalog(n) {
            let l = g_leakage(&meas, &p, &ch, &g).map_err(|e| e.to_string())?;
            let scale = cloak_core::gain::g_entropy(&meas, &p, &g).unwrap();
            ensure(l >= -tol(scale), || {
                format!("triple {t} {meas}: g-leakage {l}")
            })?;
        }
    }
    // unit gains
    for t in 0..200 {
        let n = rng.gen_range(1..=10);
        let mut p = random_prior(&mut rng, n);
        p.reverse();
        let prior = Prior::new(p).unwrap();
        let k = rng.gen_range(1..=n);
        let a = design(&prior, k).unwrap();
        let b = design_with_gain(&prior, k, &GainSpec::unit(n)).unwrap();
        ensure(a == b, || {
            format!("unit gains changed the design (instance {t})")
        })?;
    }
    // closed form and dominance
    let instances: Vec<(u64, Vec<f64>, Vec<f64>, usize)> = (0..30)
        .map(|i| {
            let n = rng.gen_range(2..=8);
            let p = random_prior(&mut rng, n);
            let g = random_gamma(&mut rng, n);
            let k = rng.gen_range(1..=n);
            (i, p, g, k)
        })
        .collect();
    let res: Vec<Result<(), String>> = instances
        .par_iter()
        .map(|(i, p, gamma, k)| {
            let prior = Prior::new(p.clone()).unwrap();
            let g = GainSpec::diagonal(gamma.clone()).unwrap();
            let d = design_with_gain(&prior, *k, &g).map_err(|e| e.to_string())?;
            ensure(validate_channel(&d.channel, *k).unwrap().valid, || {
                format!("gain instance {i}: infeasible")
            })?;
            let catalog = standard_catalog(*k);
            let bounds: Vec<f64> = catalog
                .iter()
                .map(|m| g_max_conditional_entropy(m, &prior, *k, &g).unwrap())
                .collect();
            for (m, b) in catalog.iter().zip(&bounds) {
                let h = g_conditional_entropy(m, p, &d.channel, &g).unwrap();
                ensure((h - b).abs() <= tol(*b), || {
                    format!("gain instance {i} {m}: {h} vs {b}")
                })?;
            }
            for ch in sample_feasible_channels(p.len(), *k, 1000, 0x9a10 + i).unwrap() {
                for (m, b) in catalog.iter().zip(&bounds) {
                    let h = g_conditional_entropy(m, p, &ch, &g).unwrap();
                    ensure(h <= b + tol(*b), || {
                        format!("gain instance {i} {m}: random {h} > {b}")
                    })?;
                }
            }
            Ok(())
        })
        .collect();
    res.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok("1000 triples non-negative; unit gains identical; 30 gain designs optimal vs 1000 channels each".into())
}

fn c11_grid_oracle() -> Outcome {
    const R: usize = 8;
    let mut cases: Vec<(Vec<f64>, usize, EntropyMeasure)> = vec![
        (vec![0.5, 0.5], 2, EntropyMeasure::shannon()),
        (P1.to_vec(), 3, EntropyMeasure::min_entropy()),
        (P3.to_vec(), 3, EntropyMeasure::guesswork()),
        (P2.to_vec(), 3, EntropyMeasure::shannon()),
        (P2.to_vec(), 2, EntropyMeasure::renyi_arimoto(2.0).unwrap()),
        (
            vec![0.5, 0.3, 0.2],
            2,
            EntropyMeasure::tsallis(2.0).unwrap(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0011);
    for _ in 0..4 {
        let n = rng.gen_range(3..=4);
        let k = rng.gen_range(1..=3.min(n));
        let m = ["shannon", "min", "guesswork", "renyi-hayashi:0.5"][rng.gen_range(0..4)];
        cases.push((random_prior(&mut rng, n), k, m.parse().unwrap()));
    }
    let res: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|(p, k, m)| {
            let best = exhaustive_small_optimum(m, p, *k, R).map_err(|e| e.to_string())?;
            let bound = entropy(m, &build_pi(&Prior::new(p.clone()).unwrap(), *k).unwrap());
            ensure(best <= bound + 1e-9, || {
                format!("{m} k={k}: grid {best} exceeds {bound}")
            })?;
            ensure(bound - best <= 2.0 / R as f64, || {
                format!("{m} k={k}: grid gap {}", bound - best)
            })?;
            Ok(bound - best)
        })
        .collect();
    let gaps = res.into_iter().collect::<Result<Vec<_>, _>>()?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{} instances at resolution {R}, worst gap {worst:.3}",
        gaps.len()
    ))
}

fn c12_baseline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0012);
    let mut worst: f64 = 0.0;
    for n in 1..=12 {
        let prior = Prior::new(random_prior(&mut rng, n)).unwrap();
        for k in 1..=n {
            let a = baseline_uniform_leakage(&prior, k).unwrap();
            let b = baseline_enumerated_leakage(&prior, k).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-10, || {
        format!("formula vs enumeration {worst:.2e}")
    })?;
    let p = linear_prior();
    let me = EntropyMeasure::min_entropy();
    let mut gap_at = BTreeMap::new();
    for k in 1..=30 {
        let opt = min_leakage_closed_form(&me, &p, k).unwrap();
        let base = baseline_uniform_leakage(&p, k).unwrap();
        ensure(opt <= base + 1e-12, || {
            format!("k={k}: optimal {opt} > baseline {base}")
        })?;
        if base - opt > 1e-9 {
            gap_at.insert(k, base - opt);
        }
    }
    ensure(!gap_at.is_empty(), || {
        "baseline never strictly worse".into()
    })?;
    let (k_max, g_max) = gap_at.iter().fold(
        (0, 0.0),
        |acc, (&k, &g)| if g > acc.1 { (k, g) } else { acc },
    );
    Ok(format!(
        "formula = enumeration within {worst:.1e}; optimal <= baseline for k=1..30, largest gap {g_max:.4} at k={k_max}"
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "worked examples",
            budget: Some(Duration::from_secs(1)),
            run: c1_worked_examples,
        },
        Criterion {
            id: 2,
            name: "joint constancy",
            budget: None,
            run: c2_joint_constants,
        },
        Criterion {
            id: 3,
            name: "metric invariance",
            budget: Some(Duration::from_secs(60)),
            run: c3_metric_invariance,
        },
        Criterion {
            id: 4,
            name: "optimality bound",
            budget: Some(Duration::from_secs(300)),
            run: c4_optimality_bound,
        },
        Criterion {
            id: 5,
            name: "closed-form cross-checks",
            budget: None,
            run: c5_corollaries,
        },
        Criterion {
            id: 6,
            name: "leakage curves",
            budget: None,
            run: c6_leakage_curves,
        },
        Criterion {
            id: 7,
            name: "counterexample maximizers",
            budget: None,
            run: c7_counterexample,
        },
        Criterion {
            id: 8,
            name: "DPI and non-negativity",
            budget: None,
            run: c8_dpi,
        },
        Criterion {
            id: 9,
            name: "CRE violations",
            budget: None,
            run: c9_cre_violations,
        },
        Criterion {
            id: 10,
            name: "gain extension",
            budget: None,
            run: c10_gain,
        },
        Criterion {
            id: 11,
            name: "small-instance grid oracle",
            budget: None,
            run: c11_grid_oracle,
        },
        Criterion {
            id: 12,
            name: "baseline formula",
            budget: None,
            run: c12_baseline,
        },
    ];
    let mut failures = 0;
    for c in criteria {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(msg), Some(budget)) = (&outcome, c.budget) {
            if elapsed > budget {
                outcome = Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}"));
            }
        }
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failures += 1;
                ("FAIL", m)
            }
        };
        println!(
            "criterion {:>2} [{tag}] {}: {msg} ({elapsed:.2?})",
            c.id, c.name
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
