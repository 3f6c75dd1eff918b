//! Correlated release at multiple privacy levels.
//!
//! One true result is released at privacy levels alpha_1 < ... < alpha_k by
//! chaining: the first stage samples from the geometric mechanism at
//! alpha_1, and each later result re-perturbs the previous one through the
//! add-privacy post-processing step, so the marginal of stage i is exactly
//! the geometric mechanism at alpha_i. Because the chaining noise never
//! touches the database, any colluding subset of consumers learns no more
//! than its least-private member; the audit verifies that exactly, on the
//! full joint distribution.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::derivability::{add_privacy, PostProcess};
use crate::error::Error;
use crate::mechanism::{geometric_restricted, sample_row};
use crate::rational::Rational;
use crate::rng::SplitMix64;

/// Size caps keeping exact joint tables enumerable.
const MAX_LEVELS: usize = 4;
const MAX_N: usize = 8;

/// A verified chain of release steps.
///
/// `steps[0]` is the geometric mechanism at alpha_1 itself; `steps[i]` for
/// i >= 1 is the post-processing step from level i to level i+1. The
/// invariant `G(alpha_1) * T_2 * ... * T_i = G(alpha_i)` is recomputed
/// exactly during construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseLadder {
    n: usize,
    alphas: Vec<Rational>,
    steps: Vec<PostProcess>,
}

impl ReleaseLadder {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Rational] {
        &self.alphas
    }

    pub fn steps(&self) -> &[PostProcess] {
        &self.steps
    }
}

/// One replayable multi-level release.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseRecord {
    pub true_result: usize,
    pub seed: u64,
    pub results: Vec<usize>,
}

/// Builds and verifies the ladder for strictly increasing alphas in (0,1).
pub fn build_ladder(n: usize, alphas: &[Rational]) -> Result<ReleaseLadder, Error> {
    if alphas.is_empty() {
        return Err(Error::NonIncreasingAlphas {
            index: 0,
            value: Rational::zero(),
        });
    }
    for (idx, alpha) in alphas.iter().enumerate() {
        if !alpha.is_positive() || *alpha >= Rational::one() {
            return Err(Error::AlphaOutOfRange {
                alpha: alpha.clone(),
                allowed: "(0,1)",
            });
        }
        if idx > 0 && alpha <= &alphas[idx - 1] {
            return Err(Error::NonIncreasingAlphas {
                index: idx,
                value: alpha.clone(),
            });
        }
    }

    let first = geometric_restricted(n, &alphas[0])?;
    let mut steps = vec![PostProcess::new(first.matrix().clone())?];
    for idx in 1..alphas.len() {
        steps.push(add_privacy(n, &alphas[idx - 1], &alphas[idx])?);
    }

    // Recompute the chained products against the geometric target at every
    // level; add_privacy already verified each step, this checks the chain.
    let mut product = steps[0].matrix().clone();
    for (idx, alpha) in alphas.iter().enumerate() {
        if idx > 0 {
            product = product.mat_mul(steps[idx].matrix())?;
        }
        let target = geometric_restricted(n, alpha)?;
        if &product != target.matrix() {
            return Err(Error::WitnessVerification {
                row: idx,
                col: 0,
                detail: format!("ladder product at level {} is not G(alpha_{})", idx + 1, idx + 1),
            });
        }
    }

    Ok(ReleaseLadder {
        n,
        alphas: alphas.to_vec(),
        steps,
    })
}

/// Runs the chain once: r_1 sampled from the geometric row of the true
/// result, each later r_i from row r_{i-1} of step i. Deterministic under
/// the seed.
pub fn release(
    ladder: &ReleaseLadder,
    true_result: usize,
    seed: u64,
) -> Result<ReleaseRecord, Error> {
    if true_result > ladder.n {
        return Err(Error::ResultOutOfRange {
            got: true_result,
            max: ladder.n,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut current = true_result;
    let mut results = Vec::with_capacity(ladder.levels());
    for step in &ladder.steps {
        current = sample_row(step.matrix().row(current), &mut rng);
        results.push(current);
    }
    Ok(ReleaseRecord {
        true_result,
        seed,
        results,
    })
}

/// Exact joint law of (r_1, ..., r_k) for one true result.
///
/// Outcomes are indexed base (n+1) with r_1 as the most significant digit.
#[derive(Clone, PartialEq, Eq)]
pub struct JointTable {
    n: usize,
    levels: usize,
    probs: Vec<Rational>,
}

impl JointTable {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn prob_by_index(&self, index: usize) -> &Rational {
        &self.probs[index]
    }

    pub fn prob(&self, outcome: &[usize]) -> &Rational {
        assert_eq!(outcome.len(), self.levels);
        &self.probs[self.encode(outcome)]
    }

    fn encode(&self, outcome: &[usize]) -> usize {
        outcome
            .iter()
            .fold(0, |acc, &r| acc * (self.n + 1) + r)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.levels];
        for slot in out.iter_mut().rev() {
            *slot = index % (self.n + 1);
            index /= self.n + 1;
        }
        out
    }

    /// Marginal law of the coordinates in `keep` (0-indexed levels,
    /// strictly increasing), still indexed base (n+1).
    pub fn marginal(&self, keep: &[usize]) -> Vec<Rational> {
        let m = self.n + 1;
        let mut out = vec![Rational::zero(); m.pow(keep.len() as u32)];
        for (index, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let full = self.decode(index);
            let reduced = keep.iter().fold(0, |acc, &lvl| acc * m + full[lvl]);
            out[reduced] = &out[reduced] + p;
        }
        out
    }
}

impl fmt::Debug for JointTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JointTable(n={}, levels={}, outcomes={})",
            self.n,
            self.levels,
            self.probs.len()
        )
    }
}

fn check_size_cap(ladder: &ReleaseLadder) -> Result<(), Error> {
    if ladder.levels() > MAX_LEVELS || ladder.n > MAX_N {
        return Err(Error::SizeCap {
            what: "joint distribution",
            detail: format!(
                "k = {} levels, n = {} (caps: k <= {MAX_LEVELS}, n <= {MAX_N})",
                ladder.levels(),
                ladder.n
            ),
        });
    }
    Ok(())
}

/// P(r_1..r_k | i) = G(alpha_1)[i][r_1] * prod_j T_j[r_{j-1}][r_j], exact.
pub fn joint_distribution(
    ladder: &ReleaseLadder,
    true_result: usize,
) -> Result<JointTable, Error> {
    check_size_cap(ladder)?;
    if true_result > ladder.n {
        return Err(Error::ResultOutOfRange {
            got: true_result,
            max: ladder.n,
        });
    }
    let m = ladder.n + 1;
    let k = ladder.levels();
    let mut probs = vec![Rational::zero(); m.pow(k as u32)];
    let mut outcome = vec![0usize; k];
    for (index, slot) in probs.iter_mut().enumerate() {
        let mut rem = index;
        for pos in (0..k).rev() {
            outcome[pos] = rem % m;
            rem /= m;
        }
        let mut p = ladder.steps[0].matrix().get(true_result, outcome[0]).clone();
        for j in 1..k {
            if p.is_zero() {
                break;
            }
            p = p * ladder.steps[j].matrix().get(outcome[j - 1], outcome[j]);
        }
        *slot = p;
    }
    Ok(JointTable {
        n: ladder.n,
        levels: k,
        probs,
    })
}

/// Audit of one colluding subset: the DP bound it must satisfy and the
/// tightest two-sided ratio observed across all outcomes and all adjacent
/// input pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetAudit {
    /// 1-indexed levels forming the colluding set C.
    pub levels: Vec<usize>,
    /// alpha at the smallest index in C: the bound the joint law must meet.
    pub bound: Rational,
    /// min over outcomes of min(ratio, 1/ratio); ok iff >= bound.
    pub worst_ratio: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub ok: bool,
    /// The smallest two-sided ratio seen over every audited subset.
    pub worst_ratio: Rational,
    pub subsets: Vec<SubsetAudit>,
}

/// Enumerated colluding subsets: exhaustive up to 3 levels, otherwise the
/// full set plus singletons.
fn audit_subsets(k: usize) -> Vec<Vec<usize>> {
    if k <= 3 {
        (1..1usize << k)
            .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect())
            .collect()
    } else {
        let mut subsets: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
        subsets.push((0..k).collect());
        subsets
    }
}

/// Verifies collusion resistance on exact joint tables: for every audited
/// subset C and every adjacent input pair, the joint law of (r_c)_{c in C}
/// satisfies the two-sided DP ratio bound at alpha_{min(C)}.
pub fn collusion_audit(ladder: &ReleaseLadder) -> Result<AuditReport, Error> {
    check_size_cap(ladder)?;
    let tables: Vec<JointTable> = (0..=ladder.n)
        .map(|i| joint_distribution(ladder, i))
        .collect::<Result<_, _>>()?;

    let mut subsets = Vec::new();
    let mut overall_ok = true;
    let mut overall_worst: Option<Rational> = None;
    for keep in audit_subsets(ladder.levels()) {
        let bound = ladder.alphas[keep[0]].clone();
        let marginals: Vec<Vec<Rational>> =
            tables.iter().map(|t| t.marginal(&keep)).collect();
        let mut worst: Option<Rational> = None;
        let mut subset_ok = true;
        for i in 0..ladder.n {
            for (p, q) in marginals[i].iter().zip(&marginals[i + 1]) {
                match (p.is_zero(), q.is_zero()) {
                    (true, true) => continue,
                    (true, false) | (false, true) => {
                        // One-sided zero mass: no finite ratio satisfies DP.
                        subset_ok = false;
                        worst = Some(Rational::zero());
                    }
                    (false, false) => {
                        let ratio = p / q;
                        let two_sided = ratio.clone().min(ratio.recip());
                        if two_sided < bound {
                            subset_ok = false;
                        }
                        worst = Some(match worst {
                            Some(w) => w.min(two_sided),
                            None => two_sided,
                        });
                    }
                }
            }
        }
        let worst_ratio = worst.unwrap_or_else(Rational::one);
        overall_worst = Some(match overall_worst {
            Some(w) => w.min(worst_ratio.clone()),
            None => worst_ratio.clone(),
        });
        overall_ok &= subset_ok;
        subsets.push(SubsetAudit {
            levels: keep.iter().map(|i| i + 1).collect(),
            bound,
            worst_ratio,
            ok: subset_ok,
        });
    }

    Ok(AuditReport {
        ok: overall_ok,
        worst_ratio: overall_worst.unwrap_or_else(Rational::one),
        subsets,
    })
}

/// The computational content of collusion resistance: the conditional law
/// of (r_2..r_k) given r_1 must not depend on the true result. Compares the
/// conditionals computed from exact joint tables across all inputs.
pub fn conditional_factorization_holds(ladder: &ReleaseLadder) -> Result<bool, Error> {
    check_size_cap(ladder)?;
    if ladder.levels() == 1 {
        return Ok(true);
    }
    let m = ladder.n + 1;
    let tables: Vec<JointTable> = (0..=ladder.n)
        .map(|i| joint_distribution(ladder, i))
        .collect::<Result<_, _>>()?;
    let tail_size = m.pow((ladder.levels() - 1) as u32);
    for r1 in 0..m {
        let mut reference: Option<Vec<Rational>> = None;
        for table in &tables {
            let first_marginal = {
                let mut acc = Rational::zero();
                for tail in 0..tail_size {
                    acc = acc + table.prob_by_index(r1 * tail_size + tail);
                }
                acc
            };
            if first_marginal.is_zero() {
                continue; // r1 unreachable from this input
            }
            let conditional: Vec<Rational> = (0..tail_size)
                .map(|tail| table.prob_by_index(r1 * tail_size + tail) / &first_marginal)
                .collect();
            match &reference {
                None => reference = Some(conditional),
                Some(expected) => {
                    if expected != &conditional {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}
