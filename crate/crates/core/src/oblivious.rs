//! Reduction of database-indexed mechanisms to oblivious ones.
//!
//! A database-indexed mechanism assigns an output distribution to every
//! database in D^n rather than to every count. Averaging the rows of each
//! count-equivalence class yields an oblivious mechanism that keeps the
//! same differential-privacy level and never increases the minimax loss.
//! This module enumerates tiny database spaces exhaustively and certifies
//! both claims exactly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::matrix::RMatrix;
use crate::mechanism::{check_dp, max_loss, ConsumerProfile, Mechanism};
use crate::rational::Rational;

/// Enumeration cap: |D|^n may not exceed 4096 (12 bits at |D| = 2).
const MAX_DATABASES: usize = 4096;

/// All databases with `n_rows` rows over a row domain of `row_domain_size`
/// values, counted by a predicate that holds on `predicate_true` values.
///
/// Databases are indexed 0..|D|^n, the index digits in base |D| being the
/// row values (most significant digit = row 0).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseSpace {
    row_domain_size: usize,
    n_rows: usize,
    predicate_true: BTreeSet<usize>,
}

impl DatabaseSpace {
    pub fn new(
        row_domain_size: usize,
        n_rows: usize,
        predicate_true: BTreeSet<usize>,
    ) -> Result<Self, Error> {
        if row_domain_size == 0 || row_domain_size > 3 {
            return Err(Error::BadRowDomain(row_domain_size));
        }
        if n_rows == 0 {
            return Err(Error::RangeTooSmall(0));
        }
        if let Some(&v) = predicate_true.iter().find(|&&v| v >= row_domain_size) {
            return Err(Error::BadPredicateValue {
                value: v,
                domain: row_domain_size,
            });
        }
        let count = row_domain_size
            .checked_pow(n_rows as u32)
            .filter(|&c| c <= MAX_DATABASES);
        if count.is_none() {
            return Err(Error::SizeCap {
                what: "database space",
                detail: format!(
                    "|D|^n = {row_domain_size}^{n_rows} exceeds {MAX_DATABASES}"
                ),
            });
        }
        Ok(DatabaseSpace {
            row_domain_size,
            n_rows,
            predicate_true,
        })
    }

    pub fn row_domain_size(&self) -> usize {
        self.row_domain_size
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn predicate_true(&self) -> &BTreeSet<usize> {
        &self.predicate_true
    }

    pub fn database_count(&self) -> usize {
        self.row_domain_size.pow(self.n_rows as u32)
    }

    pub fn rows_of(&self, db: usize) -> Vec<usize> {
        let mut rows = vec![0; self.n_rows];
        let mut rem = db;
        for slot in rows.iter_mut().rev() {
            *slot = rem % self.row_domain_size;
            rem /= self.row_domain_size;
        }
        rows
    }

    /// The count query result f(d): how many rows satisfy the predicate.
    pub fn count(&self, db: usize) -> usize {
        self.rows_of(db)
            .into_iter()
            .filter(|v| self.predicate_true.contains(v))
            .count()
    }

    /// Databases differing from `db` in exactly one row.
    pub fn neighbors(&self, db: usize) -> Vec<usize> {
        let rows = self.rows_of(db);
        let mut out = Vec::with_capacity(self.n_rows * (self.row_domain_size - 1));
        // Positional weight of row p in the database index.
        let mut weight = vec![1usize; self.n_rows];
        for p in (0..self.n_rows.saturating_sub(1)).rev() {
            weight[p] = weight[p + 1] * self.row_domain_size;
        }
        for p in 0..self.n_rows {
            for v in 0..self.row_domain_size {
                if v != rows[p] {
                    let delta = (v as isize - rows[p] as isize) * weight[p] as isize;
                    out.push((db as isize + delta) as usize);
                }
            }
        }
        out
    }
}

/// A mechanism with one output row per database.
#[derive(Clone, PartialEq, Eq)]
pub struct DbMechanism {
    space: DatabaseSpace,
    matrix: RMatrix,
}

impl DbMechanism {
    pub fn new(space: DatabaseSpace, matrix: RMatrix) -> Result<Self, Error> {
        if matrix.rows() != space.database_count() || matrix.cols() != space.n_rows() + 1 {
            return Err(Error::DimensionMismatch {
                left_rows: space.database_count(),
                left_cols: space.n_rows() + 1,
                right_rows: matrix.rows(),
                right_cols: matrix.cols(),
            });
        }
        matrix.check_row_stochastic()?;
        Ok(DbMechanism { space, matrix })
    }

    pub fn space(&self) -> &DatabaseSpace {
        &self.space
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }
}

impl fmt::Debug for DbMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DbMechanism(|D|={}, n={}) {:?}",
            self.space.row_domain_size, self.space.n_rows, self.matrix
        )
    }
}

#[derive(Serialize, Deserialize)]
struct DbMechanismWire {
    n: usize,
    row_domain: usize,
    predicate_true_values: Vec<usize>,
    matrix: RMatrix,
}

impl Serialize for DbMechanism {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DbMechanismWire {
            n: self.space.n_rows,
            row_domain: self.space.row_domain_size,
            predicate_true_values: self.space.predicate_true.iter().copied().collect(),
            matrix: self.matrix.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DbMechanism {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = DbMechanismWire::deserialize(deserializer)?;
        let space = DatabaseSpace::new(
            wire.row_domain,
            wire.n,
            wire.predicate_true_values.into_iter().collect(),
        )
        .map_err(de::Error::custom)?;
        DbMechanism::new(space, wire.matrix).map_err(de::Error::custom)
    }
}

/// Verdict of the database-level DP check over all neighbor pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DbDpReport {
    Ok,
    Violation {
        alpha: Rational,
        db_a: usize,
        db_b: usize,
        col: usize,
        mass_a: Rational,
        mass_b: Rational,
    },
}

impl DbDpReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, DbDpReport::Ok)
    }
}

/// Checks alpha-DP over every pair of databases differing in one row.
pub fn check_db_dp(m: &DbMechanism, alpha: &Rational) -> DbDpReport {
    let space = m.space();
    for db in 0..space.database_count() {
        for nb in space.neighbors(db) {
            if nb < db {
                continue; // each unordered pair once
            }
            for col in 0..=space.n_rows() {
                let a = m.matrix().get(db, col);
                let b = m.matrix().get(nb, col);
                if b < &(alpha * a) || a < &(alpha * b) {
                    return DbDpReport::Violation {
                        alpha: alpha.clone(),
                        db_a: db,
                        db_b: nb,
                        col,
                        mass_a: a.clone(),
                        mass_b: b.clone(),
                    };
                }
            }
        }
    }
    DbDpReport::Ok
}

/// Averages each count-equivalence class into one row, producing the
/// oblivious mechanism. Errors if some count in 0..=n is unreachable.
pub fn obliviousify(m: &DbMechanism) -> Result<Mechanism, Error> {
    let space = m.space();
    let n = space.n_rows();
    let cols = n + 1;
    let mut sums: Vec<Vec<Rational>> = vec![vec![Rational::zero(); cols]; cols];
    let mut class_sizes = vec![0usize; cols];
    for db in 0..space.database_count() {
        let class = space.count(db);
        class_sizes[class] += 1;
        for col in 0..cols {
            sums[class][col] = &sums[class][col] + m.matrix().get(db, col);
        }
    }
    let mut rows = Vec::with_capacity(cols);
    for (class, (row_sum, size)) in sums.into_iter().zip(class_sizes).enumerate() {
        if size == 0 {
            return Err(Error::UnreachableCount(class));
        }
        let size = Rational::from_integer(size as i64);
        rows.push(row_sum.into_iter().map(|v| v / &size).collect());
    }
    Mechanism::new(n, None, RMatrix::from_rows(rows)?)
}

/// Exact certificate that the reduction preserved privacy and did not
/// increase the minimax loss.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// The averaged mechanism passes check_dp at the same alpha.
    pub dp_preserved: bool,
    pub oblivious_loss: Rational,
    /// Worst-case loss of the original over databases whose count lies in
    /// the side-information set.
    pub db_worst_loss: Rational,
    /// oblivious_loss <= db_worst_loss, exactly.
    pub loss_dominated: bool,
}

/// Runs the reduction and both certificates; the input must
/// already be alpha-DP at the database level.
pub fn reduction_audit(
    m: &DbMechanism,
    alpha: &Rational,
    profile: &ConsumerProfile,
) -> Result<ReductionReport, Error> {
    match check_db_dp(m, alpha) {
        DbDpReport::Ok => {}
        DbDpReport::Violation { db_a, db_b, col, .. } => {
            return Err(Error::NotDifferentiallyPrivate {
                alpha: alpha.clone(),
                row: db_a,
                next_row: db_b,
                col,
            })
        }
    }
    let space = m.space();
    if profile.n() != space.n_rows() {
        return Err(Error::DimensionMismatch {
            left_rows: space.n_rows() + 1,
            left_cols: space.n_rows() + 1,
            right_rows: profile.n() + 1,
            right_cols: profile.n() + 1,
        });
    }

    let oblivious = obliviousify(m)?;
    let dp_preserved = check_dp(&oblivious, alpha).is_ok();
    let oblivious_loss = max_loss(&oblivious, profile)?;

    let mut db_worst: Option<Rational> = None;
    for db in 0..space.database_count() {
        let count = space.count(db);
        if !profile.side_info().contains(&count) {
            continue;
        }
        let mut acc = Rational::zero();
        for col in 0..=space.n_rows() {
            acc = acc + profile.loss().get(count, col) * m.matrix().get(db, col);
        }
        db_worst = Some(match db_worst {
            Some(w) => w.max(acc),
            None => acc,
        });
    }
    // Every count is reachable (obliviousify succeeded) and S is nonempty,
    // so some database contributed.
    let db_worst_loss = db_worst.expect("side-information set covers a reachable count");

    let loss_dominated = oblivious_loss <= db_worst_loss;
    Ok(ReductionReport {
        dp_preserved,
        oblivious_loss,
        db_worst_loss,
        loss_dominated,
    })
}
