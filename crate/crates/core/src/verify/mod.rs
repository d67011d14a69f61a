//! Verifiers: exact checks of inequalities with explicit constants, and
//! ratio reports for bounds that only hold up to an unspecified constant.

mod bounds;
mod chen;
mod cover;
mod improvement;
mod sequence;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::project::{dyadic_refine, project, projection_size, PointSet};
use crate::subspace::Subspace;

pub use bounds::{bound_hypotheses, bound_report, divisor_scan, epsilon0, BoundOutcome, BoundSpec, DivisorScan};
pub use chen::{chen_verify, ChenOutcome, ChenRow};
pub use cover::{line_cover_check, LineCover, SliceCover};
pub use improvement::{improvement_hypotheses, Decision, HypothesisCheck, ImprovementHypotheses};
pub use sequence::{sequence_reduce, Rule, SequenceOutcome, Step};

/// The JSON document every verifier run produces.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub rows: Vec<Value>,
    pub pass: Option<bool>,
    pub timing_ms: u64,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Report {
            command: command.into(),
            params: Map::new(),
            seed,
            rows: Vec::new(),
            pass: None,
            timing_ms: 0,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.to_owned(), to_value(value));
        self
    }

    pub fn push_row(&mut self, row: impl Serialize) {
        self.rows.push(to_value(row));
    }

    /// Folds one more check into `pass`.
    pub fn record(&mut self, ok: bool) {
        self.pass = Some(self.pass.unwrap_or(true) && ok);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain JSON")
    }

    /// The JSON with `timing_ms` zeroed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.timing_ms = 0;
        r.to_json()
    }

    /// One CSV record per row; columns are the union of the row keys.
    pub fn to_csv(&self) -> Result<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.rows {
            match row {
                Value::Object(m) => {
                    for k in m.keys() {
                        if !cols.contains(k) {
                            cols.push(k.clone());
                        }
                    }
                }
                _ => {
                    if !cols.iter().any(|c| c == "value") {
                        cols.push("value".into());
                    }
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Range(format!("csv: {e}"));
        w.write_record(&cols).map_err(io)?;
        for row in &self.rows {
            let rec: Vec<String> = cols
                .iter()
                .map(|c| match row {
                    Value::Object(m) => m.get(c).map(cell).unwrap_or_default(),
                    other if c == "value" => cell(other),
                    _ => String::new(),
                })
                .collect();
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Range(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// An exact rational parameter, written `a/b`, an integer, or a decimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frac(pub Ratio<i64>);

impl Frac {
    pub fn new(num: i64, den: i64) -> Self {
        Frac(Ratio::new(num, den))
    }

    pub fn integer(v: i64) -> Self {
        Frac(Ratio::from_integer(v))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn is_positive(self) -> bool {
        self.0.is_positive()
    }
}

impl FromStr for Frac {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Range(format!("{s:?} is not a rational number"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Frac::new(n, d));
        }
        if let Some((w, f)) = s.split_once('.') {
            if f.is_empty() || f.len() > 12 || !f.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = w.starts_with('-');
            let whole: i64 = if w.is_empty() || w == "-" {
                0
            } else {
                w.parse().map_err(|_| bad())?
            };
            let den = 10i64.pow(f.len() as u32);
            let frac: i64 = f.parse().map_err(|_| bad())?;
            let num = whole.abs() * den + frac;
            return Ok(Frac::new(if neg { -num } else { num }, den));
        }
        Ok(Frac::integer(s.parse().map_err(|_| bad())?))
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Frac {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Frac {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Frac::integer(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Whether `∏ b^e` over `lhs` is at most `∏ b^e` over `rhs`, for rational
/// exponents, decided exactly by raising both sides to the common denominator.
pub(crate) fn pow_le(lhs: &[(u128, Frac)], rhs: &[(u128, Frac)]) -> bool {
    let l = lhs.iter().chain(rhs).fold(1i64, |acc, (_, e)| acc.lcm(e.0.denom()));
    let mut left = BigUint::from(1u32);
    let mut right = BigUint::from(1u32);
    let mut mul = |side_left: bool, base: u128, e: Frac| {
        let k = (e.0 * l).to_integer();
        let (target, k) = match (side_left, k >= 0) {
            (true, true) | (false, false) => (&mut left, k.unsigned_abs()),
            _ => (&mut right, k.unsigned_abs()),
        };
        *target *= BigUint::from(base).pow(k.to_u32().expect("small exponent"));
    };
    for &(b, e) in lhs {
        mul(true, b, e);
    }
    for &(b, e) in rhs {
        mul(false, b, e);
    }
    left <= right
}

pub(crate) fn fpow(base: f64, e: Frac) -> f64 {
    base.powf(e.to_f64())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionBound {
    pub cap_projection: usize,
    pub m1: usize,
    pub m2: usize,
    pub holds: bool,
}

/// `|π^{W1 ∩ W2}(K)| <= |π^{W1}(K)| |π^{W2}(K)|`.
pub fn intersection_bound_check(k: &PointSet, w1: &Subspace, w2: &Subspace) -> Result<IntersectionBound> {
    let cap = w1.intersect(w2)?;
    let m1 = projection_size(k, w1)?;
    let m2 = projection_size(k, w2)?;
    let c = projection_size(k, &cap)?;
    Ok(IntersectionBound {
        cap_projection: c,
        m1,
        m2,
        holds: c as u128 <= m1 as u128 * m2 as u128,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma37 {
    pub size: usize,
    pub m1: usize,
    pub m2: usize,
    pub fiber_square_sum: u128,
    pub lhs: u128,
    pub rhs: u128,
    pub slack: u128,
    pub holds: bool,
}

/// `|K|^3 <= |π^{W1}(K)| |π^{W2}(K)| Σ |K ∩ (x + W1 + W2)|^2` for transverse `W1, W2`.
pub fn lemma37_check(k: &PointSet, w1: &Subspace, w2: &Subspace) -> Result<Lemma37> {
    if !w1.is_transverse(w2)? {
        return Err(Error::NotTransverse);
    }
    let m1 = projection_size(k, w1)?;
    let m2 = projection_size(k, w2)?;
    let sum = w1.sum(w2)?;
    let squares: u128 = project(k, &sum)?
        .fiber_sizes()
        .iter()
        .map(|&f| (f as u128) * (f as u128))
        .sum();
    let of = || Error::Overflow("lemma display");
    let n = k.len() as u128;
    let lhs = n.checked_pow(3).ok_or_else(of)?;
    let rhs = (m1 as u128)
        .checked_mul(m2 as u128)
        .and_then(|v| v.checked_mul(squares))
        .ok_or_else(of)?;
    Ok(Lemma37 {
        size: k.len(),
        m1,
        m2,
        fiber_square_sum: squares,
        lhs,
        rhs,
        slack: rhs.saturating_sub(lhs),
        holds: lhs <= rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumBound {
    pub size: usize,
    pub refined_size: usize,
    pub level: u32,
    pub m1: usize,
    pub m2: usize,
    pub sum_projection: usize,
    pub mass_ok: bool,
    pub bound_ok: bool,
    pub holds: bool,
}

/// Dyadic refinement along `W1 + W2` followed by the two checks
/// `|K'| (⌊log2|K|⌋ + 1) >= |K|` and `|π^{W1+W2}(K')| |K'| <= 4 M1 M2`.
pub fn sum_bound_check(k: &PointSet, w1: &Subspace, w2: &Subspace) -> Result<SumBound> {
    if !w1.is_transverse(w2)? {
        return Err(Error::NotTransverse);
    }
    let sum = w1.sum(w2)?;
    let (refined, level) = dyadic_refine(k, &sum)?;
    let m1 = projection_size(k, w1)?;
    let m2 = projection_size(k, w2)?;
    let image = projection_size(&refined, &sum)?;
    let kk = k.len() as u128;
    let kr = refined.len() as u128;
    let mass_ok = kr * (kk.ilog2() as u128 + 1) >= kk;
    let bound_ok = image as u128 * kr <= 4 * m1 as u128 * m2 as u128;
    Ok(SumBound {
        size: k.len(),
        refined_size: refined.len(),
        level,
        m1,
        m2,
        sum_projection: image,
        mass_ok,
        bound_ok,
        holds: mass_ok && bound_ok,
    })
}
