//! Report serialization. Every number is written as `{:.16e}` (17
//! significant digits), which round-trips `f64` exactly.

use std::io::Write;

use lqmf::Matrix64;
use num_complex::Complex64;
use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A number serialized in fixed exponent notation; non-finite values
/// become `null`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = if self.0.is_finite() {
            fmt_num(self.0)
        } else {
            "null".to_string()
        };
        RawValue::from_string(text)
            .map_err(S::Error::custom)?
            .serialize(s)
    }
}

pub fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

pub fn rows(m: &Matrix64) -> Vec<Vec<Num>> {
    (0..m.rows()).map(|i| nums(m.row(i))).collect()
}

#[derive(Debug, Serialize)]
pub struct Eig {
    pub re: Num,
    pub im: Num,
}

pub fn spectrum(ev: &[Complex64]) -> Vec<Eig> {
    ev.iter()
        .map(|z| Eig {
            re: Num(z.re),
            im: Num(z.im),
        })
        .collect()
}

pub fn ser_num<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    Num(*x).serialize(s)
}

pub fn ser_nums<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    nums(v).serialize(s)
}

pub fn ser_mat<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    m.iter().map(|r| nums(r)).collect::<Vec<_>>().serialize(s)
}

pub fn ser_opt_mat<S: Serializer>(m: &Option<Vec<Vec<f64>>>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => ser_mat(m, s),
        None => s.serialize_none(),
    }
}

/// Pretty JSON to `out`, followed by a newline.
pub fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}
