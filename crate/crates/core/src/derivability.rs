//! Derivability from the geometric mechanism.
//!
//! A mechanism x is derivable from y when x = y * T for a row-stochastic
//! post-processing matrix T. Against the geometric mechanism there is an
//! exact characterization: every three consecutive entries (x1, x2, x3) of
//! every column must satisfy (1 + alpha^2) x2 >= alpha (x1 + x3). The
//! independent cross-check computes each witness entry by Cramer's rule
//! over column-replaced geometric matrices and tests the determinant signs.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::matrix::RMatrix;
use crate::mechanism::{check_dp, geometric_restricted, DpReport, Mechanism};
use crate::rational::Rational;

/// A row-stochastic reinterpretation of outputs (the consumer's T).
#[derive(Clone, PartialEq, Eq)]
pub struct PostProcess {
    size: usize,
    matrix: RMatrix,
}

impl PostProcess {
    pub fn new(matrix: RMatrix) -> Result<Self, Error> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        matrix.check_row_stochastic()?;
        Ok(PostProcess {
            size: matrix.rows(),
            matrix,
        })
    }

    pub fn identity(size: usize) -> Self {
        PostProcess {
            size,
            matrix: RMatrix::identity(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }
}

impl fmt::Debug for PostProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PostProcess(size={}) {:?}", self.size, self.matrix)
    }
}

#[derive(Serialize, Deserialize)]
struct PostProcessWire {
    size: usize,
    matrix: RMatrix,
}

impl Serialize for PostProcess {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PostProcessWire {
            size: self.size,
            matrix: self.matrix.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PostProcess {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = PostProcessWire::deserialize(deserializer)?;
        let pp = PostProcess::new(wire.matrix).map_err(de::Error::custom)?;
        if pp.size != wire.size {
            return Err(de::Error::custom(format!(
                "declared size {} does not match matrix size {}",
                wire.size, pp.size
            )));
        }
        Ok(pp)
    }
}

/// Outcome of a derivability check.
///
/// When derivable, `witness` satisfies geometric * witness = input exactly.
/// When not, the violation locates the offending column and consecutive
/// triple (rows `row`, `row+1`, `row+2` for the triple check; for the
/// Cramer cross-check, `row` is the witness row whose entry went negative
/// and `margin` is that negative entry).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivabilityReport {
    Derivable { witness: PostProcess },
    NotDerivable {
        column: usize,
        row: usize,
        margin: Rational,
    },
}

#[derive(Serialize, Deserialize)]
struct TripleViolationWire {
    column: usize,
    row: usize,
    margin: Rational,
}

#[derive(Serialize, Deserialize)]
struct DerivabilityWire {
    derivable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<PostProcess>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<TripleViolationWire>,
}

impl Serialize for DerivabilityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            DerivabilityReport::Derivable { witness } => DerivabilityWire {
                derivable: true,
                witness: Some(witness.clone()),
                violation: None,
            },
            DerivabilityReport::NotDerivable { column, row, margin } => DerivabilityWire {
                derivable: false,
                witness: None,
                violation: Some(TripleViolationWire {
                    column: *column,
                    row: *row,
                    margin: margin.clone(),
                }),
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DerivabilityReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = DerivabilityWire::deserialize(deserializer)?;
        match (wire.derivable, wire.witness, wire.violation) {
            (true, Some(witness), None) => Ok(DerivabilityReport::Derivable { witness }),
            (false, None, Some(v)) => Ok(DerivabilityReport::NotDerivable {
                column: v.column,
                row: v.row,
                margin: v.margin,
            }),
            _ => Err(de::Error::custom(
                "derivable reports carry exactly a witness; negative ones exactly a violation",
            )),
        }
    }
}

impl DerivabilityReport {
    pub fn is_derivable(&self) -> bool {
        matches!(self, DerivabilityReport::Derivable { .. })
    }

    pub fn witness(&self) -> Option<&PostProcess> {
        match self {
            DerivabilityReport::Derivable { witness } => Some(witness),
            DerivabilityReport::NotDerivable { .. } => None,
        }
    }
}

/// The characterization margin for one consecutive column triple:
/// (1 + alpha^2) * x2 - alpha * (x1 + x3).
///
/// The triple passes iff the margin is >= 0 (ties count as derivable); this
/// is the grouping-free form of (x2 - alpha*x1) >= alpha*(x3 - alpha*x2).
pub fn triple_margin(
    x1: &Rational,
    x2: &Rational,
    x3: &Rational,
    alpha: &Rational,
) -> Rational {
    (Rational::one() + alpha * alpha) * x2 - alpha * &(x1 + x3)
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

fn require_dp(m: &Mechanism, alpha: &Rational) -> Result<(), Error> {
    match check_dp(m, alpha) {
        DpReport::Ok => Ok(()),
        DpReport::Violation { row, col, .. } => Err(Error::NotDifferentiallyPrivate {
            alpha: alpha.clone(),
            row,
            next_row: row + 1,
            col,
        }),
    }
}

/// Builds the witness T = G^{-1} * m and verifies it reconstructs m.
fn build_witness(
    g: &Mechanism,
    m: &Mechanism,
    entries: RMatrix,
) -> Result<PostProcess, Error> {
    let witness = PostProcess::new(entries)?;
    let product = g.matrix().mat_mul(witness.matrix())?;
    if &product != m.matrix() {
        for i in 0..product.rows() {
            for j in 0..product.cols() {
                if product.get(i, j) != m.matrix().get(i, j) {
                    return Err(Error::WitnessVerification {
                        row: i,
                        col: j,
                        detail: format!(
                            "product entry {} != mechanism entry {}",
                            product.get(i, j),
                            m.matrix().get(i, j)
                        ),
                    });
                }
            }
        }
    }
    Ok(witness)
}

/// Decides derivability from G_{n,alpha} by the triple condition, columns
/// scanned left to right.
///
/// Requires m to be alpha-DP (the characterization is stated for DP
/// mechanisms); when derivable, the witness is computed as G^{-1} * m and
/// re-verified before return.
pub fn check_derivable(m: &Mechanism, alpha: &Rational) -> Result<DerivabilityReport, Error> {
    require_open_unit(alpha)?;
    require_dp(m, alpha)?;
    let n = m.n();
    for col in 0..=n {
        // Triples need three rows; n = 1 has none and is always derivable.
        for top in 0..(n + 1).saturating_sub(2) {
            let margin = triple_margin(
                m.mass(top, col),
                m.mass(top + 1, col),
                m.mass(top + 2, col),
                alpha,
            );
            if margin.is_negative() {
                return Ok(DerivabilityReport::NotDerivable {
                    column: col,
                    row: top,
                    margin,
                });
            }
        }
    }
    let g = geometric_restricted(n, alpha)?;
    let witness_entries = g.matrix().inverse()?.mat_mul(m.matrix())?;
    Ok(DerivabilityReport::Derivable {
        witness: build_witness(&g, m, witness_entries)?,
    })
}

/// Independent derivability oracle via Cramer's rule.
///
/// Each witness entry t[i][j] is det(G with column i replaced by m's column
/// j) divided by det(G); the mechanism is derivable iff all entries are
/// >= 0. Scans columns left to right, then rows.
pub fn cramer_oracle(m: &Mechanism, alpha: &Rational) -> Result<DerivabilityReport, Error> {
    require_open_unit(alpha)?;
    require_dp(m, alpha)?;
    let n = m.n();
    let g = geometric_restricted(n, alpha)?;
    let det_g = g.matrix().det()?;
    if !det_g.is_positive() {
        // det(G) > 0 for all alpha in (0,1); hitting this means G itself
        // is broken, not the input.
        return Err(Error::Singular { det: det_g });
    }

    let mut witness_rows = vec![vec![Rational::zero(); n + 1]; n + 1];
    for j in 0..=n {
        let target_col = m.matrix().column(j)?;
        for i in 0..=n {
            let replaced = g.matrix().replace_column(i, &target_col)?;
            let entry = &replaced.det()? / &det_g;
            if entry.is_negative() {
                return Ok(DerivabilityReport::NotDerivable {
                    column: j,
                    row: i,
                    margin: entry,
                });
            }
            witness_rows[i][j] = entry;
        }
    }
    let witness_entries = RMatrix::from_rows(witness_rows)?;
    Ok(DerivabilityReport::Derivable {
        witness: build_witness(&g, m, witness_entries)?,
    })
}

/// The ladder step T with G_{n,alpha} * T = G_{n,beta}, for alpha <= beta.
///
/// Post-processing can only add privacy; alpha > beta is an error.
pub fn add_privacy(n: usize, alpha: &Rational, beta: &Rational) -> Result<PostProcess, Error> {
    require_open_unit(alpha)?;
    require_open_unit(beta)?;
    if alpha > beta {
        return Err(Error::CannotRemovePrivacy {
            alpha: alpha.clone(),
            beta: beta.clone(),
        });
    }
    let g_alpha = geometric_restricted(n, alpha)?;
    let g_beta = geometric_restricted(n, beta)?;
    let entries = g_alpha.matrix().inverse()?.mat_mul(g_beta.matrix())?;
    build_witness(&g_alpha, &g_beta, entries)
}
