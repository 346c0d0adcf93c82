//! JSON problem files.

use std::fs;
use std::path::Path;

use lqmf::{Matrix64, ProblemData64, ProblemParts};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::report::{ser_mat, ser_num, ser_nums, ser_opt_mat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(rename = "A", serialize_with = "ser_mat")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", serialize_with = "ser_mat")]
    pub b: Vec<Vec<f64>>,
    #[serde(
        rename = "D",
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_opt_mat"
    )]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q", serialize_with = "ser_mat")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R", serialize_with = "ser_mat")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "Gamma", serialize_with = "ser_mat")]
    pub gamma: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_nums")]
    pub eta: Vec<f64>,
    #[serde(serialize_with = "ser_nums")]
    pub x0: Vec<f64>,
    #[serde(serialize_with = "ser_num")]
    pub rho: f64,
}

fn matrix(field: &str, rows: &[Vec<f64>], expected: (usize, usize)) -> Result<Matrix64, Failure> {
    let found_cols = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != found_cols) {
        return Err(Failure::input(format!(
            "field `{field}`: row {i} has {} entries, row 0 has {found_cols}",
            row.len()
        )));
    }
    let found = (rows.len(), found_cols);
    if found != expected {
        return Err(Failure::input(format!(
            "field `{field}`: expected {}x{}, found {}x{}",
            expected.0, expected.1, found.0, found.1
        )));
    }
    if found.0 == 0 || found.1 == 0 {
        return Ok(Matrix64::zeros(expected.0, expected.1));
    }
    Matrix64::from_rows(rows).map_err(|e| Failure::input(format!("field `{field}`: {e}")))
}

fn vector(field: &str, v: &[f64], n: usize) -> Result<Vec<f64>, Failure> {
    if v.len() != n {
        return Err(Failure::input(format!(
            "field `{field}`: expected {n} entries, found {}",
            v.len()
        )));
    }
    Ok(v.to_vec())
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("cannot parse {}: {e}", path.display())))
    }

    /// Checks the declared dimensions and builds the problem data.
    pub fn to_problem(&self) -> Result<ProblemData64, Failure> {
        let n = self.n;
        if n == 0 {
            return Err(Failure::input(
                "field `n`: state dimension must be at least 1",
            ));
        }
        let n1 = self
            .n1
            .unwrap_or_else(|| self.b.first().map_or(0, Vec::len));
        let d = match &self.d {
            Some(rows) => {
                let n2 = self.n2.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
                Some(matrix("D", rows, (n, n2))?)
            }
            None => None,
        };
        let parts = ProblemParts {
            a: matrix("A", &self.a, (n, n))?,
            b: matrix("B", &self.b, (n, n1))?,
            d,
            q: matrix("Q", &self.q, (n, n))?,
            r: matrix("R", &self.r, (n1, n1))?,
            gamma: matrix("Gamma", &self.gamma, (n, n))?,
            eta: vector("eta", &self.eta, n)?,
            rho: self.rho,
            x0: vector("x0", &self.x0, n)?,
        };
        ProblemData64::new(parts).map_err(Failure::from)
    }

    pub fn from_problem(p: &ProblemData64) -> Self {
        Self {
            n: p.n(),
            n1: Some(p.n1()),
            n2: p.n2(),
            a: p.a().to_rows(),
            b: p.b().to_rows(),
            d: p.d().map(Matrix64::to_rows),
            q: p.q().to_rows(),
            r: p.r().to_rows(),
            gamma: p.gamma().to_rows(),
            eta: p.eta().to_vec(),
            x0: p.x0().to_vec(),
            rho: p.rho(),
        }
    }
}
