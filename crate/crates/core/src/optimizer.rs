//! Minimax-optimal mechanisms and interactions via exact LPs.
//!
//! Two linear programs share the simplex engine. The mechanism LP searches
//! over all alpha-DP mechanisms for the one minimizing the consumer's
//! worst-case loss; the interaction LP searches over row-stochastic
//! reinterpretations of a deployed mechanism's outputs. The minimax
//! objective is linearized with an auxiliary variable d bounding every
//! per-input expected loss; variables are ordered row-major with d last,
//! which together with Bland's rule makes results deterministic.

use serde::{Deserialize, Serialize};

use crate::derivability::PostProcess;
use crate::error::Error;
use crate::matrix::RMatrix;
use crate::mechanism::{check_dp, max_loss, ConsumerProfile, Mechanism};
use crate::rational::Rational;
use crate::simplex::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalMechanismResult {
    pub loss: Rational,
    pub mechanism: Mechanism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalInteractionResult {
    pub loss: Rational,
    pub post: PostProcess,
    pub induced: Mechanism,
}

fn require_open_unit(alpha: &Rational) -> Result<(), Error> {
    if !alpha.is_positive() || *alpha >= Rational::one() {
        return Err(Error::AlphaOutOfRange {
            alpha: alpha.clone(),
            allowed: "(0,1)",
        });
    }
    Ok(())
}

/// Shared DP + row-sum constraint block over x variables laid out
/// row-major; `num_vars` covers any trailing auxiliaries.
fn dp_polytope_constraints(
    n: usize,
    alpha: &Rational,
    num_vars: usize,
) -> Vec<Constraint> {
    let m = n + 1;
    let idx = |i: usize, r: usize| i * m + r;
    let mut constraints = Vec::with_capacity(2 * n * m + m);
    for i in 0..n {
        for r in 0..m {
            // x[i][r] - alpha*x[i+1][r] >= 0
            let mut coeffs = vec![Rational::zero(); num_vars];
            coeffs[idx(i, r)] = Rational::one();
            coeffs[idx(i + 1, r)] = -alpha;
            constraints.push(Constraint::new(coeffs, Relation::Ge, Rational::zero()));
            // x[i+1][r] - alpha*x[i][r] >= 0
            let mut coeffs = vec![Rational::zero(); num_vars];
            coeffs[idx(i + 1, r)] = Rational::one();
            coeffs[idx(i, r)] = -alpha;
            constraints.push(Constraint::new(coeffs, Relation::Ge, Rational::zero()));
        }
    }
    for i in 0..m {
        let mut coeffs = vec![Rational::zero(); num_vars];
        for r in 0..m {
            coeffs[idx(i, r)] = Rational::one();
        }
        constraints.push(Constraint::new(coeffs, Relation::Eq, Rational::one()));
    }
    constraints
}

/// Minimax rows: d - sum_r weight(i, r) * x[i][r] >= 0 for each i in S,
/// where `weight` gives the loss coefficient of variable (i, r).
fn minimax_constraints(
    profile: &ConsumerProfile,
    num_vars: usize,
    d_idx: usize,
    weight: impl Fn(usize, usize) -> Rational,
) -> Vec<Constraint> {
    let m = profile.n() + 1;
    profile
        .side_info()
        .iter()
        .map(|&i| {
            let mut coeffs = vec![Rational::zero(); num_vars];
            coeffs[d_idx] = Rational::one();
            for r in 0..m {
                let w = weight(i, r);
                if !w.is_zero() {
                    coeffs[i * m + r] = -w;
                }
            }
            Constraint::new(coeffs, Relation::Ge, Rational::zero())
        })
        .collect()
}

fn mechanism_lp(n: usize, alpha: &Rational, profile: &ConsumerProfile) -> LinearProgram {
    let m = n + 1;
    let num_vars = m * m + 1;
    let d_idx = m * m;
    let mut constraints =
        minimax_constraints(profile, num_vars, d_idx, |i, r| profile.loss().get(i, r).clone());
    constraints.extend(dp_polytope_constraints(n, alpha, num_vars));
    let mut objective = vec![Rational::zero(); num_vars];
    objective[d_idx] = Rational::one();
    // Losses are nonnegative, so restricting d >= 0 loses nothing.
    LinearProgram {
        objective,
        constraints,
        num_vars,
        nonneg: vec![true; num_vars],
    }
}

fn expect_optimal(outcome: LpOutcome, what: &str) -> Result<(Rational, Vec<Rational>), Error> {
    match outcome {
        LpOutcome::Optimal { value, assignment } => Ok((value, assignment)),
        LpOutcome::Infeasible => Err(Error::MalformedLp(format!("{what} reported infeasible"))),
        LpOutcome::Unbounded => Err(Error::MalformedLp(format!("{what} reported unbounded"))),
    }
}

fn mechanism_from_assignment(
    n: usize,
    alpha: &Rational,
    assignment: &[Rational],
) -> Result<Mechanism, Error> {
    let m = n + 1;
    let entries = assignment[..m * m].to_vec();
    Mechanism::new(n, Some(alpha.clone()), RMatrix::new(m, m, entries)?)
}

/// The exactly optimal alpha-DP mechanism for one consumer (minimizing the
/// worst-case expected loss over its side-information set).
pub fn optimal_mechanism(
    n: usize,
    alpha: &Rational,
    profile: &ConsumerProfile,
) -> Result<OptimalMechanismResult, Error> {
    require_open_unit(alpha)?;
    if profile.n() != n {
        return Err(Error::DimensionMismatch {
            left_rows: n + 1,
            left_cols: n + 1,
            right_rows: profile.n() + 1,
            right_cols: profile.n() + 1,
        });
    }
    let lp = mechanism_lp(n, alpha, profile);
    let (_, assignment) = expect_optimal(solve_lp(&lp)?, "optimal-mechanism LP")?;
    let mechanism = mechanism_from_assignment(n, alpha, &assignment)?;
    debug_assert!(check_dp(&mechanism, alpha).is_ok());
    // At the optimum d equals the worst-case loss of the returned vertex.
    let loss = max_loss(&mechanism, profile)?;
    debug_assert_eq!(loss, assignment[(n + 1) * (n + 1)]);
    Ok(OptimalMechanismResult { mechanism, loss })
}

/// Lexicographic variant: among mechanisms optimal for the profile, picks
/// one minimizing the secondary objective sum_{i,r} x[i][r] * |i-r|.
///
/// This is the tie-breaking used when inspecting optima with
/// [`row_pattern_diagnostic`]; the primary loss is unchanged.
pub fn optimal_mechanism_lex(
    n: usize,
    alpha: &Rational,
    profile: &ConsumerProfile,
) -> Result<OptimalMechanismResult, Error> {
    let first = optimal_mechanism(n, alpha, profile)?;
    let m = n + 1;
    let num_vars = m * m;
    let mut constraints = dp_polytope_constraints(n, alpha, num_vars);
    // Per-input losses stay within the phase-one optimum.
    for &i in profile.side_info() {
        let mut coeffs = vec![Rational::zero(); num_vars];
        for r in 0..m {
            coeffs[i * m + r] = profile.loss().get(i, r).clone();
        }
        constraints.push(Constraint::new(coeffs, Relation::Le, first.loss.clone()));
    }
    let objective = (0..m * m)
        .map(|v| Rational::from_integer((v / m).abs_diff(v % m) as i64))
        .collect();
    let lp = LinearProgram {
        objective,
        constraints,
        num_vars,
        nonneg: vec![true; num_vars],
    };
    let (_, assignment) = expect_optimal(solve_lp(&lp)?, "lexicographic refinement LP")?;
    let mechanism = mechanism_from_assignment(n, alpha, &assignment)?;
    let loss = max_loss(&mechanism, profile)?;
    debug_assert_eq!(loss, first.loss);
    Ok(OptimalMechanismResult { mechanism, loss })
}

/// The consumer's exactly optimal post-processing of a deployed mechanism,
/// with the induced mechanism and its loss.
pub fn optimal_interaction(
    deployed: &Mechanism,
    profile: &ConsumerProfile,
) -> Result<OptimalInteractionResult, Error> {
    let n = deployed.n();
    if profile.n() != n {
        return Err(Error::DimensionMismatch {
            left_rows: n + 1,
            left_cols: n + 1,
            right_rows: profile.n() + 1,
            right_cols: profile.n() + 1,
        });
    }
    let m = n + 1;
    let num_vars = m * m + 1;
    let d_idx = m * m;
    // Variable (r, r') is T[r][r']; the induced loss row for input i has
    // coefficient y[i][r] * l(i, r') on it.
    let mut constraints = profile
        .side_info()
        .iter()
        .map(|&i| {
            let mut coeffs = vec![Rational::zero(); num_vars];
            coeffs[d_idx] = Rational::one();
            for r in 0..m {
                let y = deployed.mass(i, r);
                if y.is_zero() {
                    continue;
                }
                for rp in 0..m {
                    let w = y * profile.loss().get(i, rp);
                    if !w.is_zero() {
                        coeffs[r * m + rp] = &coeffs[r * m + rp] - &w;
                    }
                }
            }
            Constraint::new(coeffs, Relation::Ge, Rational::zero())
        })
        .collect::<Vec<_>>();
    for r in 0..m {
        let mut coeffs = vec![Rational::zero(); num_vars];
        for rp in 0..m {
            coeffs[r * m + rp] = Rational::one();
        }
        constraints.push(Constraint::new(coeffs, Relation::Eq, Rational::one()));
    }
    let mut objective = vec![Rational::zero(); num_vars];
    objective[d_idx] = Rational::one();
    let lp = LinearProgram {
        objective,
        constraints,
        num_vars,
        nonneg: vec![true; num_vars],
    };
    let (_, assignment) = expect_optimal(solve_lp(&lp)?, "optimal-interaction LP")?;
    let post = PostProcess::new(RMatrix::new(m, m, assignment[..m * m].to_vec())?)?;
    let induced = Mechanism::new(n, None, deployed.matrix().mat_mul(post.matrix())?)?;
    let loss = max_loss(&induced, profile)?;
    debug_assert_eq!(loss, assignment[d_idx]);
    Ok(OptimalInteractionResult { post, induced, loss })
}

/// Shape of one adjacent row pair against the saturated-ratio pattern:
/// a maximal prefix of columns with alpha*x[i][j] = x[i+1][j], a maximal
/// suffix with x[i][j] = alpha*x[i+1][j], and at most one free column
/// between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowPairPattern {
    pub row: usize,
    /// Last 0-indexed column of the maximal prefix, -1 when empty.
    pub prefix_end: i64,
    /// First 0-indexed column of the maximal suffix, n+1 when empty.
    pub suffix_start: i64,
    /// suffix_start - prefix_end <= 2, the shape an optimum can be
    /// perturbed into.
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowPatternReport {
    pub alpha: Rational,
    pub pairs: Vec<RowPairPattern>,
    pub all_match: bool,
}

/// Diagnostic only: reports, per adjacent row pair, how far the mechanism
/// is from the saturated prefix/suffix pattern. Nothing is asserted; some
/// optimum has this shape, not necessarily every one.
pub fn row_pattern_diagnostic(m: &Mechanism, alpha: &Rational) -> RowPatternReport {
    let cols = m.n() + 1;
    let mut pairs = Vec::with_capacity(m.n());
    for i in 0..m.n() {
        let mut prefix_len = 0;
        while prefix_len < cols
            && alpha * m.mass(i, prefix_len) == *m.mass(i + 1, prefix_len)
        {
            prefix_len += 1;
        }
        let mut suffix_len = 0;
        while suffix_len < cols
            && *m.mass(i, cols - 1 - suffix_len) == alpha * m.mass(i + 1, cols - 1 - suffix_len)
        {
            suffix_len += 1;
        }
        let prefix_end = prefix_len as i64 - 1;
        let suffix_start = (cols - suffix_len) as i64;
        pairs.push(RowPairPattern {
            row: i,
            prefix_end,
            suffix_start,
            matches: suffix_start - prefix_end <= 2,
        });
    }
    let all_match = pairs.iter().all(|p| p.matches);
    RowPatternReport {
        alpha: alpha.clone(),
        pairs,
        all_match,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{geometric_restricted, LossKind};
    use crate::rational::rat;

    #[test]
    fn n1_zero_one_loss_recovers_geometric() {
        let profile = ConsumerProfile::full(1, LossKind::ZeroOne);
        let result = optimal_mechanism(1, &rat(1, 2), &profile).unwrap();
        // Hand analysis: DP forces both off-diagonal masses to
        // alpha/(1+alpha) = 1/3; the optimum is the geometric mechanism.
        assert_eq!(result.loss, rat(1, 3));
        assert_eq!(
            result.mechanism.matrix(),
            geometric_restricted(1, &rat(1, 2)).unwrap().matrix()
        );
    }

    #[test]
    fn zero_loss_profile_has_zero_optimum() {
        let m = 3 + 1;
        let zero_loss = RMatrix::new(m, m, vec![Rational::zero(); m * m]).unwrap();
        let profile = ConsumerProfile::new(3, zero_loss, (0..=3).collect()).unwrap();
        let result = optimal_mechanism(3, &rat(1, 3), &profile).unwrap();
        assert_eq!(result.loss, Rational::zero());
    }

    #[test]
    fn endpoint_alpha_rejected() {
        let profile = ConsumerProfile::full(1, LossKind::Abs);
        assert!(optimal_mechanism(1, &Rational::zero(), &profile).is_err());
        assert!(optimal_mechanism(1, &Rational::one(), &profile).is_err());
    }

    #[test]
    fn interaction_on_own_optimum_keeps_loss() {
        let alpha = rat(1, 3);
        let profile = ConsumerProfile::full(2, LossKind::Abs);
        let opt = optimal_mechanism(2, &alpha, &profile).unwrap();
        let inter = optimal_interaction(&opt.mechanism, &profile).unwrap();
        // Identity post-processing is feasible, so loss cannot grow; the
        // induced mechanism stays alpha-DP, so loss cannot shrink either.
        assert_eq!(inter.loss, opt.loss);
    }

    #[test]
    fn interaction_with_constant_mechanism_reaches_game_value() {
        // Constant rows make the induced mechanism a free choice of one
        // output distribution q; mixed q can beat every deterministic
        // reinterpretation. Both bounds of the certificate are verified
        // here before asserting the LP value.
        let rows: Vec<Vec<Rational>> = (0..4)
            .map(|_| vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)])
            .collect();
        let deployed =
            Mechanism::new(3, None, RMatrix::from_rows(rows).unwrap()).unwrap();
        let profile = ConsumerProfile::full(3, LossKind::Abs);

        // Primal certificate q = (0, 1/2, 1/2, 0): worst loss 3/2.
        let q = [rat(0, 1), rat(1, 2), rat(1, 2), rat(0, 1)];
        let mut primal_worst = Rational::zero();
        for i in 0..=3usize {
            let loss_i: Rational = (0..=3usize)
                .map(|rp| &q[rp] * &Rational::from_integer(i.abs_diff(rp) as i64))
                .sum();
            primal_worst = primal_worst.max(loss_i);
        }
        assert_eq!(primal_worst, rat(3, 2));
        // Dual certificate lambda = (1/2 on i=0, 1/2 on i=3): every column
        // has average loss (|0-r'| + |3-r'|)/2 = 3/2, a matching lower bound.
        for rp in 0..=3usize {
            let avg = (Rational::from_integer(rp as i64)
                + Rational::from_integer(3 - rp as i64))
                / rat(2, 1);
            assert_eq!(avg, rat(3, 2));
        }

        let inter = optimal_interaction(&deployed, &profile).unwrap();
        assert_eq!(inter.loss, rat(3, 2));
        // Strictly below the best deterministic reinterpretation (loss 2).
        assert!(inter.loss < rat(2, 1));
    }

    #[test]
    fn interaction_with_constant_mechanism_singleton_side_info() {
        let rows: Vec<Vec<Rational>> = (0..4)
            .map(|_| vec![rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)])
            .collect();
        let deployed =
            Mechanism::new(3, None, RMatrix::from_rows(rows).unwrap()).unwrap();
        let profile =
            ConsumerProfile::with_loss_kind(3, LossKind::Abs, [2usize].into_iter().collect())
                .unwrap();
        // The consumer knows the answer is 2 and reinterprets everything
        // as 2; the loss collapses to l(2,2) = 0.
        let inter = optimal_interaction(&deployed, &profile).unwrap();
        assert_eq!(inter.loss, Rational::zero());
    }

    #[test]
    fn interaction_improves_on_raw_geometric_with_side_info() {
        let deployed = geometric_restricted(3, &rat(1, 4)).unwrap();
        let profile =
            ConsumerProfile::with_loss_kind(3, LossKind::Abs, [2usize, 3].into_iter().collect())
                .unwrap();
        let raw = max_loss(&deployed, &profile).unwrap();
        let inter = optimal_interaction(&deployed, &profile).unwrap();
        assert!(inter.loss < raw, "{} !< {}", inter.loss, raw);
    }

    #[test]
    fn optimal_losses_agree_smoke() {
        // Universal optimality at one grid point; the acceptance suite
        // sweeps the full grid.
        let alpha = rat(1, 4);
        let profile = ConsumerProfile::full(3, LossKind::Abs);
        let opt = optimal_mechanism(3, &alpha, &profile).unwrap();
        let g = geometric_restricted(3, &alpha).unwrap();
        let inter = optimal_interaction(&g, &profile).unwrap();
        assert_eq!(opt.loss, inter.loss);
    }

    #[test]
    fn row_pattern_of_geometric_is_tight() {
        let g = geometric_restricted(3, &rat(1, 2)).unwrap();
        let report = row_pattern_diagnostic(&g, &rat(1, 2));
        assert!(report.all_match);
        for p in &report.pairs {
            // Prefix runs through column i, suffix starts right after.
            assert_eq!(p.prefix_end, p.row as i64);
            assert_eq!(p.suffix_start, p.row as i64 + 1);
        }
    }

    #[test]
    fn row_pattern_of_uniform_fails_everywhere() {
        let rows: Vec<Vec<Rational>> = (0..3).map(|_| vec![rat(1, 3); 3]).collect();
        let u = Mechanism::new(2, None, RMatrix::from_rows(rows).unwrap()).unwrap();
        let report = row_pattern_diagnostic(&u, &rat(1, 2));
        assert!(report.pairs.iter().all(|p| !p.matches));
    }

    #[test]
    fn row_pattern_recorded_on_lex_optimum() {
        let profile = ConsumerProfile::full(2, LossKind::Abs);
        let result = optimal_mechanism_lex(2, &rat(1, 2), &profile).unwrap();
        let report = row_pattern_diagnostic(&result.mechanism, &rat(1, 2));
        // Recorded, not asserted: some optimum has this shape, not necessarily this one.
        eprintln!(
            "lex optimum pattern (n=2, alpha=1/2, abs, S full): {:?}",
            report.pairs
        );
    }
}
