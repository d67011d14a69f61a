//! Point-line incidences in `F_p^2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexSet;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fflinalg::{Ambient, Prime, Vector};
use crate::gen::product_set;
use crate::project::{project, PointSet};
use crate::subspace::Subspace;

/// The line `ax + by + c = 0`, scaled so the first nonzero of `(a, b)` is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlanarLine {
    a: u32,
    b: u32,
    c: u32,
    p: Prime,
}

impl PlanarLine {
    pub fn new(p: Prime, a: i64, b: i64, c: i64) -> Result<Self> {
        let (a, b, c) = (p.reduce(a), p.reduce(b), p.reduce(c));
        let lead = if a != 0 { a } else { b };
        if lead == 0 {
            return Err(Error::Range("a line needs (a, b) != (0, 0)".into()));
        }
        let s = p.inv(lead)?;
        Ok(PlanarLine {
            a: p.mul(a, s),
            b: p.mul(b, s),
            c: p.mul(c, s),
            p,
        })
    }

    /// The line `point + span{direction}`.
    pub fn through(point: &Vector, direction: &Vector) -> Result<Self> {
        point.ambient().check(direction.ambient())?;
        let amb = point.ambient();
        if amb.n != 2 {
            return Err(Error::AmbientMismatch(format!("lines live in F_p^2, not {amb}")));
        }
        let p = amb.p;
        let (dx, dy) = (direction.coords()[0], direction.coords()[1]);
        let (a, b) = (dy, p.neg(dx));
        let (x, y) = (point.coords()[0], point.coords()[1]);
        let c = p.neg(p.add(p.mul(a, x), p.mul(b, y)));
        PlanarLine::new(p, a as i64, b as i64, c as i64)
    }

    pub fn coefficients(&self) -> (u32, u32, u32) {
        (self.a, self.b, self.c)
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    fn eval(&self, x: u32, y: u32) -> u32 {
        let p = self.p;
        p.add(p.mul(self.a, x), p.mul(self.b, y))
    }

    pub fn contains(&self, q: &Vector) -> bool {
        let c = q.coords();
        q.ambient().n == 2 && q.ambient().p == self.p && self.p.add(self.eval(c[0], c[1]), self.c) == 0
    }
}

impl fmt::Display for PlanarLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.a, self.b, self.c)
    }
}

impl Serialize for PlanarLine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A set of distinct lines over one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFamily {
    p: Prime,
    lines: IndexSet<PlanarLine>,
}

impl LineFamily {
    pub fn new(p: Prime) -> Self {
        LineFamily {
            p,
            lines: IndexSet::new(),
        }
    }

    /// All `p^2 + p` lines of `F_p^2`.
    pub fn all(p: Prime) -> Self {
        let mut l = LineFamily::new(p);
        let q = p.get() as i64;
        for c in 0..q {
            l.lines.insert(PlanarLine::new(p, 1, 0, c).expect("valid"));
            for a in 0..q {
                l.lines.insert(PlanarLine::new(p, a, 1, c).expect("valid"));
            }
        }
        l
    }

    pub fn insert(&mut self, line: PlanarLine) -> Result<bool> {
        if line.p != self.p {
            return Err(Error::MixedModulus(self.p.get(), line.p.get()));
        }
        Ok(self.lines.insert(line))
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &PlanarLine> {
        self.lines.iter()
    }

    pub fn contains(&self, line: &PlanarLine) -> bool {
        self.lines.contains(line)
    }

    /// Parses `"a b c, a b c, ..."`; each triple is normalized on load.
    pub fn parse(literal: &str, p: Prime) -> Result<Self> {
        let mut l = LineFamily::new(p);
        let mut offset = 0;
        for part in literal.split(',') {
            let col0 = offset + 1;
            offset += part.len() + 1;
            if part.trim().is_empty() {
                continue;
            }
            let mut coef = Vec::with_capacity(3);
            let mut pos = 0;
            for tok in part.split_whitespace() {
                let at = part[pos..].find(tok).map(|i| i + pos).unwrap_or(pos);
                pos = at + tok.len();
                let v: i64 = tok
                    .parse()
                    .map_err(|_| Error::parse(1, col0 + at, format!("expected an integer, got {tok:?}")))?;
                coef.push(v);
            }
            if coef.len() != 3 {
                return Err(Error::parse(
                    1,
                    col0,
                    format!("expected 3 coefficients, got {}", coef.len()),
                ));
            }
            let line =
                PlanarLine::new(p, coef[0], coef[1], coef[2]).map_err(|e| Error::parse(1, col0, e.to_string()))?;
            l.lines.insert(line);
        }
        Ok(l)
    }
}

impl fmt::Display for LineFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.lines.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

fn check_planar(points: &PointSet, lines: &LineFamily) -> Result<()> {
    let a = points.ambient();
    if a.n != 2 || a.p != lines.p {
        return Err(Error::AmbientMismatch(format!(
            "points in {a}, lines over F_{}^2",
            lines.p
        )));
    }
    Ok(())
}

/// `I(P, L)`: for each direction class of lines, bucket the points by
/// `ax + by` once and read off every line of that class.
pub fn incidences(points: &PointSet, lines: &LineFamily) -> Result<u64> {
    check_planar(points, lines)?;
    let mut groups: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for l in &lines.lines {
        groups.entry((l.a, l.b)).or_default().push(l.c);
    }
    let p = lines.p;
    let pts: Vec<(u32, u32)> = points.iter().map(|v| (v.coords()[0], v.coords()[1])).collect();
    Ok(groups
        .into_par_iter()
        .map(|((a, b), cs)| {
            let mut hist = vec![0u64; p.get() as usize];
            for &(x, y) in &pts {
                hist[p.add(p.mul(a, x), p.mul(b, y)) as usize] += 1;
            }
            cs.iter().map(|&c| hist[p.neg(c) as usize]).sum::<u64>()
        })
        .sum())
}

/// `I(P, L)` by checking every pair.
pub fn incidences_direct(points: &PointSet, lines: &LineFamily) -> Result<u64> {
    check_planar(points, lines)?;
    let lines: Vec<&PlanarLine> = lines.iter().collect();
    Ok(lines
        .par_iter()
        .map(|l| points.iter().filter(|q| l.contains(q)).count() as u64)
        .sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct StevensFlags {
    pub a_le_b: bool,
    pub ab2_le_l3: bool,
    /// `|A||L| <= p^2` with constant 1; the true hypothesis has an implicit constant.
    pub al_le_p2: bool,
    /// `|A||L|` within a factor 4 of `p^2` either way.
    pub near_threshold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StevensReport {
    pub size_a: usize,
    pub size_b: usize,
    pub lines: usize,
    pub incidences: u64,
    pub bound: f64,
    pub ratio: f64,
    pub flags: StevensFlags,
}

/// `I(A × B, L)` against `|A|^{3/4}|B|^{1/2}|L|^{3/4} + |L|`.
pub fn stevens_report(a: &BTreeSet<u32>, b: &BTreeSet<u32>, lines: &LineFamily) -> Result<StevensReport> {
    let p = lines.p;
    let grid = product_set(p, &[a.clone(), b.clone()])?;
    let i = incidences(&grid, lines)?;
    let (na, nb, nl) = (a.len() as f64, b.len() as f64, lines.len() as f64);
    let bound = na.powf(0.75) * nb.sqrt() * nl.powf(0.75) + nl;
    let ratio = if bound > 0.0 { i as f64 / bound } else { 0.0 };
    let (ua, ub, ul) = (a.len() as u128, b.len() as u128, lines.len() as u128);
    let p2 = (p.get() as u128).pow(2);
    let al = ua * ul;
    Ok(StevensReport {
        size_a: a.len(),
        size_b: b.len(),
        lines: lines.len(),
        incidences: i,
        bound,
        ratio,
        flags: StevensFlags {
            a_le_b: ua <= ub,
            ab2_le_l3: ua * ub * ub <= ul * ul * ul,
            al_le_p2: al <= p2,
            near_threshold: 4 * al >= p2 && al <= 4 * p2,
        },
    })
}

/// The translates of `direction` meeting the planar `slice`, one per fiber.
pub fn slice_lines(slice: &PointSet, direction: &Subspace) -> Result<LineFamily> {
    let a = slice.ambient();
    a.check(direction.ambient())?;
    if a.n != 2 {
        return Err(Error::AmbientMismatch(format!("slices live in F_p^2, not {a}")));
    }
    if direction.dim() != 1 {
        return Err(Error::Range(format!(
            "direction must be a line, got dimension {}",
            direction.dim()
        )));
    }
    let d = direction.basis_vectors().swap_remove(0);
    let mut out = LineFamily::new(a.p);
    for r in project(slice, direction)?.representatives() {
        out.lines.insert(PlanarLine::through(r, &d)?);
    }
    Ok(out)
}

/// A value `v` or a tower `b_0^(b_1^(…^v))`, as parsed from `18^(6^(2^11))`.
#[derive(Clone, Debug, PartialEq)]
struct Tower {
    bases: Vec<BigUint>,
    top: BigRational,
}

fn parse_tower(text: &str) -> Result<Tower> {
    let bad = |m: &str| Error::MalformedTower(format!("{text:?}: {m}"));
    let flat: String = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
        .collect();
    let opens = text.matches('(').count();
    if opens != text.matches(')').count() {
        return Err(bad("unbalanced parentheses"));
    }
    if flat.is_empty() {
        return Err(bad("empty"));
    }
    let items: Vec<&str> = flat.split('^').collect();
    let (top, bases) = items.split_last().expect("nonempty");
    let mut parsed = Vec::with_capacity(bases.len());
    for b in bases {
        let v: BigUint = b.parse().map_err(|_| bad(&format!("base {b:?} is not an integer")))?;
        if v < BigUint::from(2u32) {
            return Err(bad("bases must be at least 2"));
        }
        parsed.push(v);
    }
    let top = match top.split_once('/') {
        Some((n, d)) => {
            let n: BigUint = n.parse().map_err(|_| bad("bad numerator"))?;
            let d: BigUint = d.parse().map_err(|_| bad("bad denominator"))?;
            if d.is_zero() {
                return Err(bad("zero denominator"));
            }
            BigRational::new(n.into(), d.into())
        }
        None => BigRational::from_integer(
            top.parse::<BigUint>()
                .map_err(|_| bad(&format!("{top:?} is not a number")))?
                .into(),
        ),
    };
    Ok(Tower { bases: parsed, top })
}

/// `b_0^(b_1^(…^top))` if it has at most `cap_bits` bits.
fn capped_tower(bases: &[u64], top: &BigUint, cap_bits: u64) -> Option<BigUint> {
    let Some((&b, rest)) = bases.split_first() else {
        return (top.bits() <= cap_bits).then(|| top.clone());
    };
    let e = capped_tower(rest, top, 64)?.to_u64()?;
    // b >= 2, so b^e has at least e bits
    if e > cap_bits {
        return None;
    }
    let v = BigUint::from(b).pow(e as u32);
    (v.bits() <= cap_bits).then_some(v)
}

const GROSU_BASES: [u64; 3] = [18, 6, 2];
const EVAL_CAP_BITS: u64 = 1 << 24;

/// Whether `size_p, size_l <= (log_2 log_6 log_18 p - 1) / 5`, decided exactly
/// from a tower description of `p`.
pub fn grosu_regime(size_p: u64, size_l: u64, tower: &str) -> Result<bool> {
    let t = parse_tower(tower)?;
    // s <= (x - 1)/5  <=>  5s + 1 <= log_2 log_6 log_18 p  <=>  18^(6^(2^(5s+1))) <= p
    let r = BigUint::from(size_p.max(size_l)) * 5u32 + 1u32;
    let matched = t
        .bases
        .iter()
        .zip(GROSU_BASES)
        .take_while(|(b, g)| **b == BigUint::from(*g))
        .count();
    let value = if matched == t.bases.len() {
        t.top.clone()
    } else {
        let bases: Vec<u64> = t.bases[matched..]
            .iter()
            .map(|b| b.to_u64())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::MalformedTower(format!("{tower:?}: base too large")))?;
        if !t.top.is_integer() {
            return Err(Error::MalformedTower(format!(
                "{tower:?}: fractional exponent only allowed atop 18^6^2"
            )));
        }
        let top = t.top.to_integer().to_biguint().expect("nonnegative");
        let v = capped_tower(&bases, &top, EVAL_CAP_BITS)
            .ok_or_else(|| Error::MalformedTower(format!("{tower:?}: too large to evaluate")))?;
        BigRational::from_integer(v.into())
    };
    // compare the remaining part of 18^(6^(2^r)) against `value`
    let floor = value.floor().to_integer().to_biguint().expect("nonnegative");
    let cap = floor.bits().max(1);
    let needed = capped_tower(&GROSU_BASES[matched..], &r, cap);
    Ok(match needed {
        None => false,
        Some(n) => BigRational::from_integer(n.into()) <= value,
    })
}

/// `(log_2 log_6 log_18 p - 1) / 5` for a tower ending in `18^6^2^x`.
pub fn grosu_threshold(tower: &str) -> Result<Option<BigRational>> {
    let t = parse_tower(tower)?;
    let shape: Vec<BigUint> = GROSU_BASES.iter().map(|&b| BigUint::from(b)).collect();
    if t.bases == shape {
        Ok(Some((t.top - BigRational::one()) / BigRational::from_integer(5.into())))
    } else {
        Ok(None)
    }
}

/// Planar coordinates of a point set sitting in a 2-dimensional frame.
pub fn planar(points: impl IntoIterator<Item = (u32, u32)>, p: Prime) -> Result<PointSet> {
    let a = Ambient::new(p.get(), 2)?;
    PointSet::from_vectors(
        a,
        points
            .into_iter()
            .map(|(x, y)| Vector::from_residues(a, vec![x, y]))
            .collect::<Result<Vec<_>>>()?,
    )
}
