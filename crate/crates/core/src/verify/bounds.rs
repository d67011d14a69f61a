use std::collections::BTreeMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use super::{fpow, pow_le, Frac};
use crate::error::{Error, Result};
use crate::families::{common_intersection, is_nondegenerate, SubspaceFamily};
use crate::incidence::grosu_regime;
use crate::project::{projection_size, PointSet};
use crate::subspace::Subspace;

/// A lower bound for `max_{W ∈ E} |π^W(K)|` that holds up to an unspecified constant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum BoundSpec {
    /// `|E| p^{m - m(n-m)}`, read off the first exceptional-set estimate.
    ChenInduced {
        #[serde(default = "one")]
        m: usize,
    },
    /// Hyperplanes: `min{|K|^{1/n} |E|^{1/(4n(n-1))}, |K|^{1/(n-1)}}`.
    Line,
    /// `|K|^{m/n} |E|^ε` for non-degenerate `E ⊆ Gr(n, n-m)`, `0 < ε < ε0(n)`.
    Bourgain { m: usize, epsilon: Frac },
    /// `|K|^{d/(1+d(n-m))} (|E| / p^{m(n-m)-m})^ε`.
    Improvement {
        m: usize,
        d: usize,
        delta: Frac,
        epsilon: Frac,
    },
    /// Planar: `min{|K|^{1/2} |E|^{1/2}, |K|}`.
    Planar {
        #[serde(default = "tenth")]
        delta: Frac,
    },
    /// Planar: `max{|K|^{1/2}|E|^{1/6}, |K|^{2/5}|E|^{2/5}, |E|}`.
    Lpv,
}

fn one() -> usize {
    1
}

fn tenth() -> Frac {
    Frac::new(1, 10)
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::ChenInduced { .. } => "chen-induced",
            BoundSpec::Line => "line",
            BoundSpec::Bourgain { .. } => "bourgain",
            BoundSpec::Improvement { .. } => "improvement",
            BoundSpec::Planar { .. } => "planar",
            BoundSpec::Lpv => "lpv",
        }
    }

    /// The member dimension the spec expects in `F_p^n`, after range checks.
    pub fn member_dim(&self, n: usize) -> Result<usize> {
        let bad = |m: String| Err(Error::SpecMismatch(format!("{}: {m}", self.name())));
        let codim = |m: usize| {
            if m == 0 || m >= n {
                bad(format!("m = {m} not in [1, {}]", n.saturating_sub(1)))
            } else {
                Ok(n - m)
            }
        };
        match *self {
            BoundSpec::ChenInduced { m } => codim(m),
            BoundSpec::Line => {
                if n < 2 {
                    return bad("needs n >= 2".into());
                }
                Ok(n - 1)
            }
            BoundSpec::Bourgain { m, epsilon } => {
                if n < 2 {
                    return bad("needs n >= 2".into());
                }
                let e0 = epsilon0(n);
                if !epsilon.is_positive() || epsilon >= e0 {
                    return bad(format!("epsilon = {epsilon} not in (0, {e0})"));
                }
                codim(m)
            }
            BoundSpec::Improvement { m, d, delta, epsilon } => {
                if d == 0 || !delta.is_positive() || !epsilon.is_positive() {
                    return bad("needs d >= 1, delta > 0, epsilon > 0".into());
                }
                codim(m)
            }
            BoundSpec::Planar { delta } => {
                if n != 2 {
                    return bad(format!("planar bound needs n = 2, got {n}"));
                }
                if !delta.is_positive() || delta >= Frac::integer(1) {
                    return bad(format!("delta = {delta} not in (0, 1)"));
                }
                Ok(1)
            }
            BoundSpec::Lpv => {
                if n != 2 {
                    return bad(format!("planar bound needs n = 2, got {n}"));
                }
                Ok(1)
            }
        }
    }
}

/// `1 / (4n(n-1)(2n)^{n-2})`.
pub fn epsilon0(n: usize) -> Frac {
    let n = n as i64;
    Frac::new(1, 4 * n * (n - 1) * (2 * n).pow((n - 2) as u32))
}

fn ser_display<S: Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundOutcome {
    pub spec: &'static str,
    pub size: usize,
    pub family_size: usize,
    pub max_projection: usize,
    #[serde(serialize_with = "ser_display")]
    pub witness: Subspace,
    pub bound: f64,
    pub ratio: f64,
    /// Hypotheses of the statement, each decided exactly.
    pub hypotheses: BTreeMap<String, bool>,
    pub hypotheses_hold: bool,
    /// Informational flags that are not hypotheses.
    pub notes: BTreeMap<String, bool>,
}

type Flags = BTreeMap<String, bool>;

/// Hypotheses and informational notes for `spec` on a set of `size` points.
pub fn bound_hypotheses(size: usize, e: &SubspaceFamily, spec: &BoundSpec, budget: u128) -> Result<(Flags, Flags)> {
    let a = e.ambient();
    let (n, p) = (a.n, a.p.get() as u128);
    let want = spec.member_dim(n)?;
    if e.member_dim() != want {
        return Err(Error::SpecMismatch(format!(
            "{} expects members of dimension {want}, family has {}",
            spec.name(),
            e.member_dim()
        )));
    }
    let (k, ef) = (size as u128, e.len() as u128);
    let ni = n as i64;
    let mut h = Flags::new();
    let mut notes = Flags::new();
    let one = Frac::integer(1);
    match *spec {
        BoundSpec::ChenInduced { m } => {
            h.insert(
                "set_at_most_p_m".into(),
                pow_le(&[(k, one)], &[(p, Frac::integer(m as i64))]),
            );
        }
        BoundSpec::Line => {
            h.insert("no_common_line".into(), common_intersection(e)?.is_zero());
            h.insert(
                "size_condition".into(),
                pow_le(
                    &[(k, one), (ef, Frac::new(2 * ni + 1, 4 * (ni - 1)))],
                    &[(p, Frac::integer(ni))],
                ),
            );
        }
        BoundSpec::Bourgain { m, .. } => {
            let nn = ni.pow((n - 2) as u32);
            h.insert("nondegenerate".into(), is_nondegenerate(e, budget)?.holds);
            h.insert(
                "size_condition".into(),
                pow_le(
                    &[(k, one), (ef, Frac::new(2 * ni + 1, 4 * (ni - 1) * nn))],
                    &[(p, Frac::integer(ni))],
                ),
            );
            h.insert(
                "family_vs_set".into(),
                pow_le(&[(ef, Frac::new(1, 4 * nn))], &[(k, one)]),
            );
            notes.insert("m_coprime_to_n".into(), m.gcd(&n) == 1);
        }
        BoundSpec::Improvement { m, d, delta, .. } => {
            let e_exp = (m * (n - m) - m + d - 1) as i64;
            h.insert(
                "family_size".into(),
                pow_le(&[(2, one), (p, Frac::integer(e_exp))], &[(ef, one)]),
            );
            h.insert("set_at_least_p_delta".into(), pow_le(&[(p, delta)], &[(k, one)]));
            h.insert(
                "set_at_most_p_d_plus_1_minus_delta".into(),
                pow_le(&[(k, one)], &[(p, Frac(Frac::integer(d as i64 + 1).0 - delta.0))]),
            );
        }
        BoundSpec::Planar { delta } => {
            h.insert("family_at_least_2".into(), ef >= 2);
            h.insert("family_at_most_set".into(), ef <= k);
            h.insert(
                "set_at_most_p_1_minus_delta".into(),
                pow_le(&[(k, one)], &[(p, Frac(one.0 - delta.0))]),
            );
            notes.insert(
                "grosu_regime".into(),
                grosu_regime(k as u64, ef as u64, &p.to_string())?,
            );
        }
        BoundSpec::Lpv => {
            h.insert("sqrt_set_at_most_family".into(), k <= ef * ef);
            h.insert("family_at_most_set".into(), ef <= k);
            h.insert("set_at_most_p".into(), k <= p);
        }
    }
    Ok((h, notes))
}

fn bound_value(size: usize, e: &SubspaceFamily, spec: &BoundSpec) -> f64 {
    let n = e.ambient().n;
    let p = e.ambient().p.get() as f64;
    let (k, ef) = (size as f64, e.len() as f64);
    let nf = n as f64;
    match *spec {
        BoundSpec::ChenInduced { m } => ef * p.powi(m as i32 - (m * (n - m)) as i32),
        BoundSpec::Line => {
            let a = k.powf(1.0 / nf) * ef.powf(1.0 / (4.0 * nf * (nf - 1.0)));
            a.min(k.powf(1.0 / (nf - 1.0)))
        }
        BoundSpec::Bourgain { m, epsilon } => k.powf(m as f64 / nf) * fpow(ef, epsilon),
        BoundSpec::Improvement { m, d, epsilon, .. } => {
            let d = d as f64;
            let base = ef / p.powi((m * (n - m) - m) as i32);
            k.powf(d / (1.0 + d * (n - m) as f64)) * fpow(base, epsilon)
        }
        BoundSpec::Planar { .. } => (k * ef).sqrt().min(k),
        BoundSpec::Lpv => (k.sqrt() * ef.powf(1.0 / 6.0)).max(k.powf(0.4) * ef.powf(0.4)).max(ef),
    }
}

/// `max_{W ∈ E} |π^W(K)|` against the bound named by `spec`.
pub fn bound_report(k: &PointSet, e: &SubspaceFamily, spec: &BoundSpec, budget: u128) -> Result<BoundOutcome> {
    k.ambient().check(e.ambient())?;
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    if e.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let (hypotheses, notes) = bound_hypotheses(k.len(), e, spec, budget)?;
    let members: Vec<&Subspace> = e.iter().collect();
    let sizes: Vec<usize> = members
        .par_iter()
        .map(|w| projection_size(k, w))
        .collect::<Result<_>>()?;
    let (best, &max) = sizes
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, s)| **s)
        .expect("nonempty");
    let bound = bound_value(k.len(), e, spec);
    Ok(BoundOutcome {
        spec: spec.name(),
        size: k.len(),
        family_size: e.len(),
        max_projection: max,
        witness: members[best].clone(),
        bound,
        ratio: max as f64 / bound,
        hypotheses_hold: hypotheses.values().all(|&v| v),
        hypotheses,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorRow {
    pub m: usize,
    pub nondegenerate: bool,
    pub ratio: f64,
    /// Whether the ratio reached 1.
    pub held: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorConsistency {
    pub d: usize,
    /// The tested `m` not divisible by `d`.
    pub constrained: Vec<usize>,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorScan {
    pub rows: Vec<DivisorRow>,
    pub divisors: Vec<DivisorConsistency>,
    /// Divisors `d != 1` of `n` for which every constrained `m` held.
    pub consistent: Vec<usize>,
}

/// For each divisor `d != 1` of `n`: did the bound hold at every tested `m`
/// with `d ∤ m`?
pub fn divisor_scan(
    k: &PointSet,
    by_m: &BTreeMap<usize, SubspaceFamily>,
    epsilon: Frac,
    budget: u128,
) -> Result<DivisorScan> {
    let n = k.ambient().n;
    let mut rows = Vec::with_capacity(by_m.len());
    for (&m, e) in by_m {
        let r = bound_report(k, e, &BoundSpec::Bourgain { m, epsilon }, budget)?;
        rows.push(DivisorRow {
            m,
            nondegenerate: r.hypotheses["nondegenerate"],
            ratio: r.ratio,
            held: r.ratio >= 1.0,
        });
    }
    let divisors: Vec<DivisorConsistency> = (2..=n)
        .filter(|d| n % d == 0)
        .map(|d| {
            let constrained: Vec<usize> = rows.iter().filter(|r| r.m % d != 0).map(|r| r.m).collect();
            let consistent = rows.iter().filter(|r| r.m % d != 0).all(|r| r.held);
            DivisorConsistency {
                d,
                constrained,
                consistent,
            }
        })
        .collect();
    let consistent = divisors.iter().filter(|c| c.consistent).map(|c| c.d).collect();
    Ok(DivisorScan {
        rows,
        divisors,
        consistent,
    })
}
