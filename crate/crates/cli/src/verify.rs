//! Named acceptance suites, runnable without a test harness.
//!
//! Each suite re-runs one acceptance criterion with the same grids and
//! exact tolerances as the `acceptance` test target and prints one
//! PASS/FAIL line. `--suite all` runs everything.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use clap::ValueEnum;

use geomech::derivability::{add_privacy, check_derivable, cramer_oracle, DerivabilityReport};
use geomech::matrix::RMatrix;
use geomech::mechanism::{
    check_dp, geometric_restricted, sample, ConsumerProfile, LossKind, Mechanism,
};
use geomech::multilevel::{build_ladder, collusion_audit, conditional_factorization_holds};
use geomech::oblivious::{reduction_audit, DatabaseSpace};
use geomech::optimizer::{optimal_interaction, optimal_mechanism};
use geomech::random::{random_db_mechanism, random_dp_mechanism, random_monotone_profile};
use geomech::rational::{rat, Rational};
use geomech::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    NonDerivable,
    Determinant,
    AddPrivacy,
    UniversalOptimality,
    Characterization,
    Collusion,
    Oblivious,
    Sampling,
    All,
}

type SuiteResult = Result<(), String>;

const SUITES: &[(Suite, &str, fn() -> SuiteResult)] = &[
    (Suite::NonDerivable, "non-derivable", non_derivable_fixture),
    (Suite::Determinant, "determinant", determinant),
    (Suite::AddPrivacy, "add-privacy", add_privacy_suite),
    (
        Suite::UniversalOptimality,
        "universal-optimality",
        universal_optimality,
    ),
    (Suite::Characterization, "characterization", characterization),
    (Suite::Collusion, "collusion", collusion),
    (Suite::Oblivious, "oblivious", oblivious),
    (Suite::Sampling, "sampling", sampling),
];

pub fn run(which: Suite) -> ExitCode {
    let mut all_ok = true;
    for (suite, name, runner) in SUITES {
        if which != Suite::All && which != *suite {
            continue;
        }
        let started = Instant::now();
        match runner() {
            Ok(()) => println!("PASS {name} ({:?})", started.elapsed()),
            Err(reason) => {
                all_ok = false;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> SuiteResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn non_derivable_half_dp() -> Mechanism {
    let matrix = RMatrix::from_i64_rows(&[
        &[(1, 9), (2, 9), (4, 9), (2, 9)],
        &[(2, 9), (1, 9), (2, 9), (4, 9)],
        &[(4, 9), (2, 9), (1, 9), (2, 9)],
        &[(13, 18), (1, 9), (1, 18), (1, 9)],
    ]);
    Mechanism::new(3, Some(rat(1, 2)), matrix).expect("fixture is well-formed")
}

fn non_derivable_fixture() -> SuiteResult {
    let m = non_derivable_half_dp();
    let alpha = rat(1, 2);
    ensure(check_dp(&m, &alpha).is_ok(), || "fixture must be 1/2-DP".into())?;
    match check_derivable(&m, &alpha).map_err(|e| e.to_string())? {
        DerivabilityReport::NotDerivable { column, row, margin } => {
            ensure(column == 1 && row == 0 && margin == rat(-1, 12), || {
                format!("wrong violation: column {column}, row {row}, margin {margin}")
            })
        }
        DerivabilityReport::Derivable { .. } => Err("fixture must not be derivable".into()),
    }
}

fn determinant() -> SuiteResult {
    for k in 2..=8usize {
        for alpha in [rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3)] {
            let rows = (0..k)
                .map(|i| (0..k).map(|j| alpha.pow(i.abs_diff(j) as u32)).collect())
                .collect();
            let m = RMatrix::from_rows(rows).map_err(|e| e.to_string())?;
            let det = m.det().map_err(|e| e.to_string())?;
            let expected = (Rational::one() - &alpha * &alpha).pow(k as u32 - 1);
            ensure(det == expected, || {
                format!("det mismatch at k={k} alpha={alpha}: {det} != {expected}")
            })?;
            let g = geometric_restricted(k - 1, &alpha).map_err(|e| e.to_string())?;
            let det_g = g.matrix().det().map_err(|e| e.to_string())?;
            ensure(det_g.is_positive(), || {
                format!("det(G) not positive at n={} alpha={alpha}", k - 1)
            })?;
        }
    }
    Ok(())
}

fn add_privacy_suite() -> SuiteResult {
    let grid = [rat(1, 5), rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(3, 4)];
    for n in 1..=5usize {
        for (i, alpha) in grid.iter().enumerate() {
            for beta in &grid[i + 1..] {
                let t = add_privacy(n, alpha, beta).map_err(|e| e.to_string())?;
                let g_alpha = geometric_restricted(n, alpha).map_err(|e| e.to_string())?;
                let g_beta = geometric_restricted(n, beta).map_err(|e| e.to_string())?;
                let product = g_alpha
                    .matrix()
                    .mat_mul(t.matrix())
                    .map_err(|e| e.to_string())?;
                ensure(&product == g_beta.matrix(), || {
                    format!("G*T != G_beta at n={n} alpha={alpha} beta={beta}")
                })?;
                ensure(add_privacy(n, beta, alpha).is_err(), || {
                    format!("privacy removal accepted at n={n} beta={beta} alpha={alpha}")
                })?;
            }
        }
    }
    Ok(())
}

fn named_side_infos(n: usize) -> Vec<BTreeSet<usize>> {
    vec![
        (0..=n).collect(),
        (0..=n / 2).collect(),
        ((n + 1) / 2..=n).collect(),
        [n / 2].into_iter().collect(),
    ]
}

fn universal_optimality() -> SuiteResult {
    let alphas = [rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3)];
    for n in 1..=5usize {
        for (ai, alpha) in alphas.iter().enumerate() {
            let geometric = geometric_restricted(n, alpha).map_err(|e| e.to_string())?;
            let mut profiles = Vec::new();
            for kind in [LossKind::Abs, LossKind::Square, LossKind::ZeroOne] {
                for side in named_side_infos(n) {
                    profiles.push(
                        ConsumerProfile::with_loss_kind(n, kind, side)
                            .map_err(|e| e.to_string())?,
                    );
                }
            }
            let mut rng = SplitMix64::new(4_000 + (n * 10 + ai) as u64);
            for _ in 0..20 {
                profiles.push(random_monotone_profile(n, &mut rng));
            }
            for profile in &profiles {
                let tailored =
                    optimal_mechanism(n, alpha, profile).map_err(|e| e.to_string())?;
                let interaction =
                    optimal_interaction(&geometric, profile).map_err(|e| e.to_string())?;
                ensure(tailored.loss == interaction.loss, || {
                    format!(
                        "loss mismatch at n={n} alpha={alpha} S={:?}: {} != {}",
                        profile.side_info(),
                        tailored.loss,
                        interaction.loss
                    )
                })?;
            }
        }
    }
    Ok(())
}

fn characterization() -> SuiteResult {
    let alphas = [rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3)];
    let mut rng = SplitMix64::new(55_000);
    let (mut derivable, mut not_derivable) = (0usize, 0usize);
    for round in 0..5usize {
        for n in 1..=5usize {
            for alpha in &alphas {
                let m = random_dp_mechanism(n, alpha, &mut rng, 40 + 10 * round)
                    .map_err(|e| e.to_string())?;
                let triple = check_derivable(&m, alpha).map_err(|e| e.to_string())?;
                let cramer = cramer_oracle(&m, alpha).map_err(|e| e.to_string())?;
                ensure(triple.is_derivable() == cramer.is_derivable(), || {
                    format!("verdict mismatch at n={n} alpha={alpha}")
                })?;
                if let DerivabilityReport::Derivable { witness } = &triple {
                    derivable += 1;
                    let g = geometric_restricted(n, alpha).map_err(|e| e.to_string())?;
                    let rebuilt = g
                        .matrix()
                        .mat_mul(witness.matrix())
                        .map_err(|e| e.to_string())?;
                    ensure(&rebuilt == m.matrix(), || {
                        format!("witness does not reconstruct input at n={n} alpha={alpha}")
                    })?;
                } else {
                    not_derivable += 1;
                }
            }
        }
    }
    ensure(derivable + not_derivable == 100, || "wrong suite size".into())?;
    ensure(derivable > 0 && not_derivable > 0, || {
        "suite must exercise both verdicts".into()
    })
}

fn collusion() -> SuiteResult {
    let ladders: [&[Rational]; 2] = [
        &[rat(1, 3), rat(1, 2)],
        &[rat(1, 4), rat(1, 3), rat(1, 2)],
    ];
    for n in 1..=4usize {
        for alphas in ladders {
            let ladder = build_ladder(n, alphas).map_err(|e| e.to_string())?;
            let report = collusion_audit(&ladder).map_err(|e| e.to_string())?;
            ensure(report.ok, || format!("audit failed at n={n} alphas={alphas:?}"))?;
            for subset in &report.subsets {
                ensure(subset.worst_ratio >= subset.bound, || {
                    format!(
                        "subset {:?} ratio {} below bound {}",
                        subset.levels, subset.worst_ratio, subset.bound
                    )
                })?;
            }
            let factorizes =
                conditional_factorization_holds(&ladder).map_err(|e| e.to_string())?;
            ensure(factorizes, || {
                format!("conditionals depend on the input at n={n} alphas={alphas:?}")
            })?;
        }
    }
    Ok(())
}

fn oblivious() -> SuiteResult {
    let alpha = rat(1, 2);
    let mut rng = SplitMix64::new(7_700);
    let mut audited = 0usize;
    for round in 0..17usize {
        for n in 1..=3usize {
            if audited == 50 {
                break;
            }
            let space = DatabaseSpace::new(2, n, [1usize].into_iter().collect())
                .map_err(|e| e.to_string())?;
            let m = random_db_mechanism(&space, &alpha, &mut rng, 30 + round)
                .map_err(|e| e.to_string())?;
            let profile = ConsumerProfile::full(n, LossKind::Abs);
            let report = reduction_audit(&m, &alpha, &profile).map_err(|e| e.to_string())?;
            ensure(report.dp_preserved, || format!("privacy degraded (round {round}, n={n})"))?;
            ensure(report.loss_dominated, || {
                format!(
                    "loss grew from {} to {} (round {round}, n={n})",
                    report.db_worst_loss, report.oblivious_loss
                )
            })?;
            audited += 1;
        }
    }
    ensure(audited == 50, || "wrong suite size".into())
}

fn sampling() -> SuiteResult {
    let pairs = [
        (3usize, rat(1, 2), 0usize),
        (3, rat(1, 2), 2),
        (5, rat(1, 4), 3),
        (1, rat(1, 2), 0),
        (4, rat(2, 3), 1),
    ];
    const DRAWS: u64 = 50_000;
    let critical = |df: usize| -> f64 {
        [10.828, 13.816, 16.266, 18.467, 20.515][df - 1]
    };
    for (idx, (n, alpha, row)) in pairs.iter().enumerate() {
        let g = geometric_restricted(*n, alpha).map_err(|e| e.to_string())?;
        let mut counts = vec![0u64; n + 1];
        let base = (idx as u64) << 32;
        for offset in 0..DRAWS {
            let trace = sample(&g, *row, base + offset).map_err(|e| e.to_string())?;
            counts[trace.output] += 1;
        }
        let mut statistic = 0.0_f64;
        for col in 0..=*n {
            let expected = g.mass(*row, col).to_f64() * DRAWS as f64;
            let diff = counts[col] as f64 - expected;
            statistic += diff * diff / expected;
        }
        ensure(statistic < critical(*n), || {
            format!(
                "chi-square {statistic:.3} >= {} for pair {idx} (n={n}, alpha={alpha}, row={row})",
                critical(*n)
            )
        })?;
    }

    let ladder = build_ladder(3, &[rat(1, 4), rat(1, 2)]).map_err(|e| e.to_string())?;
    let a = geomech::multilevel::release(&ladder, 2, 7).map_err(|e| e.to_string())?;
    let b = geomech::multilevel::release(&ladder, 2, 7).map_err(|e| e.to_string())?;
    ensure(a == b, || "release replay diverged".into())
}
