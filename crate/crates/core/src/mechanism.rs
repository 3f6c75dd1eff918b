//! Oblivious mechanisms for count queries, minimax consumers, and the
//! geometric mechanism.
//!
//! A mechanism for a count query with range {0..n} is an (n+1)x(n+1)
//! row-stochastic matrix: entry (i, r) is the probability of releasing r
//! when the true result is i. Differential privacy is the two-sided ratio
//! bound between adjacent rows; verification is exact.

use std::collections::BTreeSet;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::matrix::RMatrix;
use crate::rational::Rational;
use crate::rng::SplitMix64;

/// A row-stochastic release mechanism over outputs {0..n}.
///
/// `alpha_claimed` is an annotation carried by files; verification never
/// trusts it and always recomputes via [`check_dp`].
#[derive(Clone, PartialEq, Eq)]
pub struct Mechanism {
    n: usize,
    alpha_claimed: Option<Rational>,
    matrix: RMatrix,
}

impl Mechanism {
    pub fn new(
        n: usize,
        alpha_claimed: Option<Rational>,
        matrix: RMatrix,
    ) -> Result<Self, Error> {
        if matrix.rows() != n + 1 || matrix.cols() != n + 1 {
            return Err(Error::DimensionMismatch {
                left_rows: n + 1,
                left_cols: n + 1,
                right_rows: matrix.rows(),
                right_cols: matrix.cols(),
            });
        }
        matrix.check_row_stochastic()?;
        Ok(Mechanism {
            n,
            alpha_claimed,
            matrix,
        })
    }

    /// Maximum query result; the matrix is (n+1)x(n+1).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha_claimed(&self) -> Option<&Rational> {
        self.alpha_claimed.as_ref()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    /// Probability of releasing `output` on true result `input`.
    pub fn mass(&self, input: usize, output: usize) -> &Rational {
        self.matrix.get(input, output)
    }
}

impl fmt::Debug for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mechanism(n={}) {:?}", self.n, self.matrix)
    }
}

#[derive(Serialize, Deserialize)]
struct MechanismWire {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Rational>,
    matrix: RMatrix,
}

impl Serialize for Mechanism {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MechanismWire {
            n: self.n,
            alpha: self.alpha_claimed.clone(),
            matrix: self.matrix.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mechanism {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = MechanismWire::deserialize(deserializer)?;
        Mechanism::new(wire.n, wire.alpha, wire.matrix).map_err(de::Error::custom)
    }
}

/// The three loss shapes used throughout: |i-r|, (i-r)^2, and 0/1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Abs,
    Square,
    ZeroOne,
}

impl LossKind {
    pub fn matrix(self, n: usize) -> RMatrix {
        let rows = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|r| {
                        let d = i.abs_diff(r) as i64;
                        match self {
                            LossKind::Abs => Rational::from_integer(d),
                            LossKind::Square => Rational::from_integer(d * d),
                            LossKind::ZeroOne => Rational::from_integer((d != 0) as i64),
                        }
                    })
                    .collect()
            })
            .collect();
        RMatrix::from_rows(rows).unwrap()
    }
}

/// A minimax information consumer: a monotone loss matrix l(i, r) plus the
/// side-information set S of query results it knows are possible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsumerProfile {
    n: usize,
    loss: RMatrix,
    side_info: BTreeSet<usize>,
}

impl ConsumerProfile {
    pub fn new(n: usize, loss: RMatrix, side_info: BTreeSet<usize>) -> Result<Self, Error> {
        if loss.rows() != n + 1 || loss.cols() != n + 1 {
            return Err(Error::DimensionMismatch {
                left_rows: n + 1,
                left_cols: n + 1,
                right_rows: loss.rows(),
                right_cols: loss.cols(),
            });
        }
        validate_monotone_loss(&loss)?;
        if side_info.is_empty() || side_info.iter().any(|&s| s > n) {
            return Err(Error::BadSideInfo {
                max: n,
                got: side_info.into_iter().collect(),
            });
        }
        Ok(ConsumerProfile { n, loss, side_info })
    }

    pub fn with_loss_kind(
        n: usize,
        kind: LossKind,
        side_info: BTreeSet<usize>,
    ) -> Result<Self, Error> {
        ConsumerProfile::new(n, kind.matrix(n), side_info)
    }

    /// Profile with side-information = the full range {0..n}.
    pub fn full(n: usize, kind: LossKind) -> Self {
        ConsumerProfile::with_loss_kind(n, kind, (0..=n).collect()).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn loss(&self) -> &RMatrix {
        &self.loss
    }

    pub fn side_info(&self) -> &BTreeSet<usize> {
        &self.side_info
    }
}

/// l(i, r) must be >= 0 and non-decreasing as r moves away from i on
/// either side.
fn validate_monotone_loss(loss: &RMatrix) -> Result<(), Error> {
    for i in 0..loss.rows() {
        for r in 0..loss.cols() {
            let v = loss.get(i, r);
            if v.is_negative() {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: r,
                    value: v.clone(),
                });
            }
        }
        // Walk right of the diagonal, then left; loss must not decrease.
        for r in i..loss.cols().saturating_sub(1) {
            if loss.get(i, r) > loss.get(i, r + 1) {
                return Err(Error::NonMonotoneLoss {
                    row: i,
                    nearer: r,
                    farther: r + 1,
                    nearer_val: loss.get(i, r).clone(),
                    farther_val: loss.get(i, r + 1).clone(),
                });
            }
        }
        for r in (1..=i).rev() {
            if loss.get(i, r) > loss.get(i, r - 1) {
                return Err(Error::NonMonotoneLoss {
                    row: i,
                    nearer: r,
                    farther: r - 1,
                    nearer_val: loss.get(i, r).clone(),
                    farther_val: loss.get(i, r - 1).clone(),
                });
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ProfileWire {
    n: usize,
    loss: RMatrix,
    side_info: Vec<usize>,
}

impl Serialize for ConsumerProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProfileWire {
            n: self.n,
            loss: self.loss.clone(),
            side_info: self.side_info.iter().copied().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConsumerProfile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = ProfileWire::deserialize(deserializer)?;
        ConsumerProfile::new(wire.n, wire.loss, wire.side_info.into_iter().collect())
            .map_err(de::Error::custom)
    }
}

/// One replayable draw from a mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub seed: u64,
    pub true_result: usize,
    pub output: usize,
}

/// Verdict of the exact differential-privacy check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DpReport {
    Ok,
    /// The two-sided ratio bound fails between rows (row, row+1) at `col`.
    /// `mass_row` is x[row][col], `mass_next` is x[row+1][col]; at least one
    /// of the inequalities mass_next >= alpha*mass_row and
    /// mass_row >= alpha*mass_next is violated.
    Violation {
        alpha: Rational,
        row: usize,
        col: usize,
        mass_row: Rational,
        mass_next: Rational,
    },
}

impl DpReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, DpReport::Ok)
    }
}

impl fmt::Display for DpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DpReport::Ok => write!(f, "ok"),
            DpReport::Violation {
                alpha,
                row,
                col,
                mass_row,
                mass_next,
            } => write!(
                f,
                "violation at rows ({},{}) column {}: x[{}][{}] = {}, x[{}][{}] = {}, \
                 alpha*x[{}][{}] = {}, alpha*x[{}][{}] = {}",
                row,
                row + 1,
                col,
                row,
                col,
                mass_row,
                row + 1,
                col,
                mass_next,
                row,
                col,
                alpha * mass_row,
                row + 1,
                col,
                alpha * mass_next,
            ),
        }
    }
}

/// Two-sided geometric pmf: Pr[Z = z] = (1-alpha)/(1+alpha) * alpha^|z|.
///
/// Requires 0 < alpha < 1; the endpoints only make sense for the
/// range-restricted form.
pub fn geometric_full_pmf(alpha: &Rational, z: i64) -> Result<Rational, Error> {
    if !alpha.is_positive() || *alpha >= Rational::one() {
        return Err(Error::AlphaOutOfRange {
            alpha: alpha.clone(),
            allowed: "(0,1)",
        });
    }
    let scale = &(Rational::one() - alpha) / &(Rational::one() + alpha);
    Ok(scale * alpha.pow(z.unsigned_abs() as u32))
}

/// The range-restricted geometric mechanism G_{n,alpha}.
///
/// Mass below 0 collapses onto output 0 and mass above n onto output n:
/// boundary columns carry alpha^|z-k| / (1+alpha), interior columns
/// (1-alpha) alpha^|z-k| / (1+alpha). At alpha = 0 this is the identity
/// (convention 0^0 = 1); at alpha = 1 every row is [1/2, 0, .., 0, 1/2].
pub fn geometric_restricted(n: usize, alpha: &Rational) -> Result<Mechanism, Error> {
    if n == 0 {
        return Err(Error::RangeTooSmall(n));
    }
    if alpha.is_negative() || *alpha > Rational::one() {
        return Err(Error::AlphaOutOfRange {
            alpha: alpha.clone(),
            allowed: "[0,1]",
        });
    }
    let one = Rational::one();
    let boundary = (&one / &(&one + alpha)).clone();
    let interior = &(&one - alpha) / &(&one + alpha);
    let rows = (0..=n)
        .map(|k| {
            (0..=n)
                .map(|z| {
                    let coef = if z == 0 || z == n { &boundary } else { &interior };
                    coef * &alpha.pow(z.abs_diff(k) as u32)
                })
                .collect()
        })
        .collect();
    Mechanism::new(n, Some(alpha.clone()), RMatrix::from_rows(rows)?)
}

/// Exact differential-privacy verification.
///
/// Ok iff for every i in {0..n-1} and every output r:
/// x[i+1][r] >= alpha*x[i][r] and x[i][r] >= alpha*x[i+1][r].
pub fn check_dp(m: &Mechanism, alpha: &Rational) -> DpReport {
    for i in 0..m.n() {
        for r in 0..=m.n() {
            let lo = m.mass(i, r);
            let hi = m.mass(i + 1, r);
            if hi < &(alpha * lo) || lo < &(alpha * hi) {
                return DpReport::Violation {
                    alpha: alpha.clone(),
                    row: i,
                    col: r,
                    mass_row: lo.clone(),
                    mass_next: hi.clone(),
                };
            }
        }
    }
    DpReport::Ok
}

/// One seeded draw: inverse-CDF over the exact row distribution, walking
/// columns left to right with a uniform rational in [0,1).
pub fn sample(m: &Mechanism, true_result: usize, seed: u64) -> Result<SampleTrace, Error> {
    if true_result > m.n() {
        return Err(Error::ResultOutOfRange {
            got: true_result,
            max: m.n(),
        });
    }
    let mut rng = SplitMix64::new(seed);
    let output = sample_row(m.matrix().row(true_result), &mut rng);
    Ok(SampleTrace {
        seed,
        true_result,
        output,
    })
}

/// Draws one column index from a probability row using the next unit draw.
pub(crate) fn sample_row(row: &[Rational], rng: &mut SplitMix64) -> usize {
    let u = rng.next_unit();
    let mut cum = Rational::zero();
    for (idx, p) in row.iter().enumerate() {
        cum = cum + p;
        if u < cum {
            return idx;
        }
    }
    // Row sums to exactly 1 and u < 1, so we cannot fall through.
    row.len() - 1
}

/// Worst-case expected loss over the side-information set:
/// max_{i in S} sum_r l(i,r) * x[i][r].
pub fn max_loss(m: &Mechanism, profile: &ConsumerProfile) -> Result<Rational, Error> {
    if m.n() != profile.n() {
        return Err(Error::DimensionMismatch {
            left_rows: m.n() + 1,
            left_cols: m.n() + 1,
            right_rows: profile.n() + 1,
            right_cols: profile.n() + 1,
        });
    }
    let mut worst: Option<Rational> = None;
    for &i in profile.side_info() {
        let mut acc = Rational::zero();
        for r in 0..=m.n() {
            acc = acc + profile.loss().get(i, r) * m.mass(i, r);
        }
        worst = Some(match worst {
            Some(w) => w.max(acc),
            None => acc,
        });
    }
    // side_info is validated nonempty.
    Ok(worst.unwrap())
}
