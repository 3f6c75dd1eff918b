//! Shared fixtures and oracles for the integration suites.

use std::path::PathBuf;

use geomech::matrix::RMatrix;
use geomech::mechanism::Mechanism;
use geomech::rational::Rational;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// The shipped 1/2-DP mechanism that is not derivable from G_{3,1/2}.
pub fn load_non_derivable_fixture() -> Mechanism {
    let raw = std::fs::read_to_string(fixture_path("non_derivable_half_dp.json"))
        .expect("fixtures/non_derivable_half_dp.json present");
    serde_json::from_str(&raw).expect("fixture parses and validates")
}

/// Symmetric k x k matrix with entries alpha^|i-j|.
pub fn symm_power_matrix(k: usize, alpha: &Rational) -> RMatrix {
    let rows = (0..k)
        .map(|i| (0..k).map(|j| alpha.pow(i.abs_diff(j) as u32)).collect())
        .collect();
    RMatrix::from_rows(rows).unwrap()
}

/// Naive cofactor-expansion determinant; independent oracle for k <= 6.
#[allow(dead_code)]
pub fn cofactor_det(m: &RMatrix) -> Rational {
    let n = m.rows();
    assert!(m.is_square() && n <= 6);
    if n == 1 {
        return m.get(0, 0).clone();
    }
    let mut acc = Rational::zero();
    for j in 0..n {
        if m.get(0, j).is_zero() {
            continue;
        }
        let minor_rows: Vec<Vec<Rational>> = (1..n)
            .map(|i| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m.get(i, c).clone())
                    .collect()
            })
            .collect();
        let minor = RMatrix::from_rows(minor_rows).unwrap();
        let term = m.get(0, j) * &cofactor_det(&minor);
        if j % 2 == 0 {
            acc = acc + term;
        } else {
            acc = acc - term;
        }
    }
    acc
}
