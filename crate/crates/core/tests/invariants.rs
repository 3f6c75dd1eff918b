//! Cross-module invariants: algebraic identities on random inputs, grid
//! sweeps, and the structural properties the acceptance criteria lean on.

mod common;

use geomech::derivability::{add_privacy, check_derivable, triple_margin};
use geomech::matrix::RMatrix;
use geomech::mechanism::{
    check_dp, geometric_full_pmf, geometric_restricted, max_loss, ConsumerProfile, LossKind,
    Mechanism,
};
use geomech::optimizer::{optimal_interaction, optimal_mechanism};
use geomech::random::{random_dp_mechanism, random_monotone_profile, random_row_stochastic};
use geomech::rational::{rat, Rational};
use geomech::rng::SplitMix64;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Rational::new(n, d))
}

fn matrix3() -> impl Strategy<Value = RMatrix> {
    proptest::collection::vec(small_rational(), 9)
        .prop_map(|entries| RMatrix::new(3, 3, entries).unwrap())
}

fn is_canonical(x: &Rational) -> bool {
    x.denom().is_positive() && x.numer().gcd(x.denom()) == BigInt::one()
        || (x.is_zero() && x.denom().is_one())
}

proptest! {
    /// a * a^{-1} = I exactly for every nonsingular matrix.
    #[test]
    fn inverse_roundtrip(a in matrix3()) {
        prop_assume!(!a.det().unwrap().is_zero());
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.mat_mul(&inv).unwrap(), RMatrix::identity(3));
    }

    /// det(ab) = det(a) det(b) exactly.
    #[test]
    fn det_is_multiplicative(a in matrix3(), b in matrix3()) {
        let prod = a.mat_mul(&b).unwrap();
        prop_assert_eq!(prod.det().unwrap(), a.det().unwrap() * b.det().unwrap());
    }

    /// Every arithmetic result stays in canonical form.
    #[test]
    fn arithmetic_stays_canonical(a in small_rational(), b in small_rational()) {
        prop_assert!(is_canonical(&(&a + &b)));
        prop_assert!(is_canonical(&(&a - &b)));
        prop_assert!(is_canonical(&(&a * &b)));
        if !b.is_zero() {
            prop_assert!(is_canonical(&(&a / &b)));
        }
        // Parse/display round-trip reproduces the canonical string.
        let s = a.to_string();
        prop_assert_eq!(s.parse::<Rational>().unwrap(), a);
    }
}

/// The sign of det(G'(i, x)) for an interior column matches the triple
/// condition, checked by brute-force determinants on random nonnegative
/// replacement columns.
#[test]
fn replace_column_sign_matches_characterization() {
    let alpha = rat(1, 2);
    let g_prime = common::symm_power_matrix(4, &alpha);
    let mut rng = SplitMix64::new(31);
    for _ in 0..10 {
        let col: Vec<Rational> = (0..4)
            .map(|_| Rational::new(rng.next_index(9) as i64, 1 + rng.next_index(4) as i64))
            .collect();
        let replaced = g_prime.replace_column(1, &col).unwrap();
        let det = replaced.det().unwrap();
        assert_eq!(det, common::cofactor_det(&replaced));
        let margin = triple_margin(&col[0], &col[1], &col[2], &alpha);
        assert_eq!(
            det.is_negative(),
            margin.is_negative(),
            "det {det} vs margin {margin} for column {col:?}"
        );
    }
}

/// The geometric mechanism is alpha-DP exactly at its own level: it passes
/// at alpha and fails at any stricter level (its adjacent-row ratio is
/// exactly alpha).
#[test]
fn geometric_dp_level_is_tight() {
    let grid = [rat(1, 4), rat(1, 2), rat(3, 4)];
    for n in 1..=4usize {
        for alpha in &grid {
            let g = geometric_restricted(n, alpha).unwrap();
            assert!(check_dp(&g, alpha).is_ok());
            for stricter in grid.iter().filter(|a| *a > alpha) {
                assert!(!check_dp(&g, stricter).is_ok(), "n={n} {alpha} vs {stricter}");
            }
            // Just above alpha already fails.
            let nudged = alpha + &rat(1, 100);
            assert!(!check_dp(&g, &nudged).is_ok());
        }
    }
}

/// Collapsing the full two-sided geometric pmf onto {0..n} reproduces the
/// range-restricted mechanism exactly. The tails are closed-form geometric
/// series: sum_{z <= 0} pmf(z - k) = alpha^k / (1 + alpha), and
/// symmetrically above n.
#[test]
fn restricted_mechanism_is_collapsed_full_pmf() {
    for n in 1..=6usize {
        for alpha in [rat(1, 4), rat(1, 2), rat(3, 4)] {
            let g = geometric_restricted(n, &alpha).unwrap();
            let one = Rational::one();
            for k in 0..=n {
                for r in 0..=n {
                    let expected = if r == 0 {
                        alpha.pow(k as u32) / (&one + &alpha)
                    } else if r == n {
                        alpha.pow((n - k) as u32) / (&one + &alpha)
                    } else {
                        geometric_full_pmf(&alpha, r as i64 - k as i64).unwrap()
                    };
                    assert_eq!(g.mass(k, r), &expected, "n={n} alpha={alpha} k={k} r={r}");
                }
            }
        }
    }
}

/// Post-processing never degrades privacy: for random DP mechanisms and
/// random row-stochastic T, the product still passes check_dp.
#[test]
fn post_processing_preserves_privacy() {
    let mut rng = SplitMix64::new(909);
    for n in 1..=4usize {
        for alpha in [rat(1, 4), rat(1, 2), rat(2, 3)] {
            for _ in 0..10 {
                let y = random_dp_mechanism(n, &alpha, &mut rng, 30).unwrap();
                let t = random_row_stochastic(n + 1, &mut rng);
                let induced =
                    Mechanism::new(n, None, y.matrix().mat_mul(&t).unwrap()).unwrap();
                assert!(check_dp(&induced, &alpha).is_ok(), "n={n} alpha={alpha}");
            }
        }
    }
}

/// Ladder steps compose: T(a,b) * T(b,c) = T(a,c) exactly (the step is
/// unique because G is nonsingular).
#[test]
fn add_privacy_steps_compose() {
    let grid = [rat(1, 5), rat(1, 3), rat(1, 2), rat(3, 4)];
    for n in 1..=4usize {
        for i in 0..grid.len() {
            for j in i..grid.len() {
                for k in j..grid.len() {
                    let ab = add_privacy(n, &grid[i], &grid[j]).unwrap();
                    let bc = add_privacy(n, &grid[j], &grid[k]).unwrap();
                    let ac = add_privacy(n, &grid[i], &grid[k]).unwrap();
                    assert_eq!(
                        ab.matrix().mat_mul(bc.matrix()).unwrap(),
                        *ac.matrix(),
                        "n={n} {} {} {}",
                        grid[i],
                        grid[j],
                        grid[k]
                    );
                }
            }
        }
    }
}

/// Derivability between geometric mechanisms points exactly one way:
/// G(beta) is derivable from G(alpha) iff beta >= alpha.
#[test]
fn derivability_direction_on_geometric_grid() {
    let grid = [rat(1, 5), rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(3, 4)];
    for n in 2..=5usize {
        for alpha in &grid {
            for beta in &grid {
                let g_beta = geometric_restricted(n, beta).unwrap();
                if beta < alpha {
                    // Not even alpha-DP, so the check rejects the input.
                    assert!(check_derivable(&g_beta, alpha).is_err());
                } else {
                    let report = check_derivable(&g_beta, alpha).unwrap();
                    assert!(report.is_derivable(), "n={n} beta={beta} alpha={alpha}");
                }
            }
        }
    }
}

/// Everything the mechanism LP returns is a valid DP mechanism, its loss
/// never beats stricter privacy, and interacting with a DP deployment
/// yields a DP induced mechanism.
#[test]
fn optimizer_outputs_stay_in_the_polytope() {
    let mut rng = SplitMix64::new(606);
    let alphas = [rat(1, 4), rat(1, 2), rat(2, 3)];
    for n in 1..=3usize {
        let profiles = [
            ConsumerProfile::full(n, LossKind::Abs),
            random_monotone_profile(n, &mut rng),
        ];
        for profile in &profiles {
            let mut previous: Option<Rational> = None;
            for alpha in &alphas {
                let result = optimal_mechanism(n, alpha, profile).unwrap();
                assert!(check_dp(&result.mechanism, alpha).is_ok());
                assert!(result.mechanism.matrix().is_row_stochastic());
                assert_eq!(result.loss, max_loss(&result.mechanism, profile).unwrap());
                // Monotone in alpha: stricter privacy cannot reduce loss.
                if let Some(prev) = &previous {
                    assert!(
                        &result.loss >= prev,
                        "loss decreased from {prev} to {} at alpha={alpha}",
                        result.loss
                    );
                }
                previous = Some(result.loss.clone());

                let deployed = random_dp_mechanism(n, alpha, &mut rng, 25).unwrap();
                let inter = optimal_interaction(&deployed, profile).unwrap();
                assert!(check_dp(&inter.induced, alpha).is_ok());
                assert_eq!(
                    inter.induced.matrix(),
                    &deployed.matrix().mat_mul(inter.post.matrix()).unwrap()
                );
            }
        }
    }
}

/// Count-level DP constraints appear blockwise per column; a mechanism
/// whose matrix equals G stays exactly on the ratio boundary, which the
/// tightened check above relies on. Here: products of geometric matrices
/// against add_privacy steps agree with direct construction.
#[test]
fn geometric_chain_products_match_direct_construction() {
    let g14 = geometric_restricted(3, &rat(1, 4)).unwrap();
    let g12 = geometric_restricted(3, &rat(1, 2)).unwrap();
    let inv = g14.matrix().inverse().unwrap();
    assert_eq!(inv.mat_mul(g14.matrix()).unwrap(), RMatrix::identity(4));
    let step = inv.mat_mul(g12.matrix()).unwrap();
    let roundtrip = g14.matrix().mat_mul(&step).unwrap();
    assert_eq!(&roundtrip, g12.matrix());
}

/// The boundary conditions of the column-replacement determinant (first
/// and last witness rows nonnegative) are implied by DP, so the triple
/// check needs no extra boundary cases. Asserted rather than assumed: on
/// DP mechanisms, every Cramer violation sits at an interior row, and the
/// boundary inequalities hold per column.
#[test]
fn boundary_conditions_follow_from_dp() {
    use geomech::derivability::cramer_oracle;
    use geomech::derivability::DerivabilityReport;
    let mut rng = SplitMix64::new(808);
    for n in 2..=4usize {
        for _ in 0..10 {
            let alpha = rat(1, 2);
            let m = random_dp_mechanism(n, &alpha, &mut rng, 40).unwrap();
            for col in 0..=n {
                // x_0 >= alpha*x_1 and x_n >= alpha*x_{n-1} are one side of
                // the DP pair.
                assert!(m.mass(0, col) >= &(&alpha * m.mass(1, col)));
                assert!(m.mass(n, col) >= &(&alpha * m.mass(n - 1, col)));
            }
            if let DerivabilityReport::NotDerivable { row, .. } =
                cramer_oracle(&m, &alpha).unwrap()
            {
                assert!(row > 0 && row < n, "violation at boundary row {row}");
            }
        }
    }
}

/// The spec'd 20-mechanism spot check at n = 4, alpha = 1/2: triple
/// condition and Cramer oracle verdicts are identical.
#[test]
fn oracle_equivalence_n4_half() {
    use geomech::derivability::cramer_oracle;
    let alpha = rat(1, 2);
    let mut rng = SplitMix64::new(440);
    for _ in 0..20 {
        let m = random_dp_mechanism(4, &alpha, &mut rng, 50).unwrap();
        assert_eq!(
            check_derivable(&m, &alpha).unwrap().is_derivable(),
            cramer_oracle(&m, &alpha).unwrap().is_derivable()
        );
    }
}

/// Empirical marginal of the second chained release: with ladder
/// [1/4, 1/2] the law of r_2 is exactly the geometric row at 1/2, so
/// 60000 seeded runs land within +-0.01 per cell.
#[test]
fn chained_release_marginal_matches_geometric() {
    use geomech::multilevel::{build_ladder, release};
    let ladder = build_ladder(3, &[rat(1, 4), rat(1, 2)]).unwrap();
    let g_half = geometric_restricted(3, &rat(1, 2)).unwrap();
    let mut counts = [0u64; 4];
    const RUNS: u64 = 60_000;
    for seed in 0..RUNS {
        let record = release(&ladder, 2, seed).unwrap();
        counts[record.results[1]] += 1;
    }
    for (cell, count) in counts.iter().enumerate() {
        let expected = g_half.mass(2, cell).to_f64();
        let freq = *count as f64 / RUNS as f64;
        assert!(
            (freq - expected).abs() < 0.01,
            "cell {cell}: {freq} vs {expected}"
        );
    }
}

/// Collusion bound at the top of the exhaustive range: n = 5 with two- and
/// three-level ladders, every subset audited at its own alpha.
#[test]
fn collusion_bound_holds_at_n5() {
    use geomech::multilevel::{build_ladder, collusion_audit};
    for alphas in [vec![rat(1, 3), rat(1, 2)], vec![rat(1, 4), rat(1, 3), rat(1, 2)]] {
        let ladder = build_ladder(5, &alphas).unwrap();
        let report = collusion_audit(&ladder).unwrap();
        assert!(report.ok);
        for subset in &report.subsets {
            assert!(subset.worst_ratio >= subset.bound);
        }
    }
}

/// Everything shared across threads is immutable; the core types are
/// Send + Sync by construction.
#[test]
fn core_types_are_send_sync() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Rational>();
    assert_send_sync::<RMatrix>();
    assert_send_sync::<Mechanism>();
    assert_send_sync::<ConsumerProfile>();
    assert_send_sync::<geomech::derivability::PostProcess>();
    assert_send_sync::<geomech::multilevel::ReleaseLadder>();
    assert_send_sync::<geomech::oblivious::DbMechanism>();
}
