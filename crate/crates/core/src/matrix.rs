//! Dense matrices over exact rationals.
//!
//! Matrices are immutable values; every operation returns a fresh matrix and
//! nothing here ever rounds. The determinant runs fraction-free
//! (Bareiss elimination over the integer numerators after clearing
//! denominators) so intermediate values stay polynomial in size.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::rational::Rational;

/// A rows x cols matrix of [`Rational`] entries, row-major.
///
/// JSON form: `{"rows": R, "cols": C, "entries": [["p/q", ...], ...]}` with
/// one inner array per row.
#[derive(Clone, PartialEq, Eq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, Error> {
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                got: entries.len(),
            });
        }
        Ok(RMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, Error> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::EntryCount {
                    rows: nrows,
                    cols: ncols,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        RMatrix::new(nrows, ncols, entries)
    }

    /// Convenience for tests and fixtures: entries given as `(num, den)` pairs.
    pub fn from_i64_rows(rows: &[&[(i64, i64)]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&(n, d)| Rational::new(n, d)).collect())
            .collect();
        RMatrix::from_rows(rows).expect("ragged literal matrix")
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Rational::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = Rational::one();
        }
        RMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &Rational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        &self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Rational] {
        assert!(row < self.rows, "row out of bounds");
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Result<Vec<Rational>, Error> {
        if col >= self.cols {
            return Err(Error::ColumnOutOfRange {
                index: col,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self.get(i, col).clone()).collect())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Exact matrix product.
    pub fn mat_mul(&self, other: &RMatrix) -> Result<RMatrix, Error> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Rational::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc + a * other.get(k, j);
                }
                entries.push(acc);
            }
        }
        RMatrix::new(self.rows, other.cols, entries)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    ///
    /// Each row is first scaled by the lcm of its denominators so the
    /// elimination runs over integers; the row scales divide back out at
    /// the end.
    pub fn det(&self) -> Result<Rational, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Rational::one());
        }

        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.row(i);
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            let int_row = row
                .iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect();
            scale *= &lcm;
            a.push(int_row);
        }

        let mut sign = 1i8;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(swap) => {
                        a.swap(k, swap);
                        sign = -sign;
                    }
                    None => return Ok(Rational::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    // Bareiss guarantees exact divisibility by the previous pivot.
                    a[i][j] = num / &prev;
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }

        let mut det_int = a[n - 1][n - 1].clone();
        if sign < 0 {
            det_int = -det_int;
        }
        Ok(Rational::from_big(det_int, scale))
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<RMatrix, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Augmented system [self | I], reduced in place.
        let mut work: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                let mut row: Vec<Rational> = self.row(i).to_vec();
                row.extend((0..n).map(|j| {
                    if i == j {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                }));
                row
            })
            .collect();

        for col in 0..n {
            let pivot_row = match (col..n).find(|&i| !work[i][col].is_zero()) {
                Some(r) => r,
                None => {
                    return Err(Error::Singular {
                        det: Rational::zero(),
                    })
                }
            };
            work.swap(col, pivot_row);
            let pivot = work[col][col].clone();
            for v in &mut work[col] {
                *v = &*v / &pivot;
            }
            for i in 0..n {
                if i == col || work[i][col].is_zero() {
                    continue;
                }
                let factor = work[i][col].clone();
                for j in 0..2 * n {
                    let delta = &factor * &work[col][j];
                    work[i][j] = &work[i][j] - &delta;
                }
            }
        }

        let entries = work.into_iter().flat_map(|row| row.into_iter().skip(n)).collect();
        RMatrix::new(n, n, entries)
    }

    /// Copy of `self` with column `col` replaced by `replacement`.
    pub fn replace_column(&self, col: usize, replacement: &[Rational]) -> Result<RMatrix, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if col >= self.cols {
            return Err(Error::ColumnOutOfRange {
                index: col,
                cols: self.cols,
            });
        }
        if replacement.len() != self.rows {
            return Err(Error::EntryCount {
                rows: self.rows,
                cols: 1,
                got: replacement.len(),
            });
        }
        let mut out = self.clone();
        for (i, value) in replacement.iter().enumerate() {
            out.entries[i * out.cols + col] = value.clone();
        }
        Ok(out)
    }

    /// True when every entry is >= 0 and each row sums to exactly 1.
    pub fn is_row_stochastic(&self) -> bool {
        self.check_row_stochastic().is_ok()
    }

    pub(crate) fn check_row_stochastic(&self) -> Result<(), Error> {
        for i in 0..self.rows {
            let mut sum = Rational::zero();
            for j in 0..self.cols {
                let v = self.get(i, j);
                if v.is_negative() {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v.clone(),
                    });
                }
                sum = sum + v;
            }
            if sum != Rational::one() {
                return Err(Error::RowSum { row: i, sum });
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct RMatrixWire {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Rational>>,
}

impl Serialize for RMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = RMatrixWire {
            rows: self.rows,
            cols: self.cols,
            entries: (0..self.rows).map(|i| self.row(i).to_vec()).collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = RMatrixWire::deserialize(deserializer)?;
        if wire.entries.len() != wire.rows {
            return Err(de::Error::custom(format!(
                "expected {} rows, got {}",
                wire.rows,
                wire.entries.len()
            )));
        }
        for (i, row) in wire.entries.iter().enumerate() {
            if row.len() != wire.cols {
                return Err(de::Error::custom(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    wire.cols
                )));
            }
        }
        RMatrix::from_rows(wire.entries).map_err(de::Error::custom)
    }
}
