//! Families of equal-dimension subspaces: non-degeneracy, non-concentration,
//! and the sum / intersection / complement constructions.

use indexmap::IndexSet;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fflinalg::Ambient;
use crate::grassmann::{self, GrassmannCursor};
use crate::subspace::{parse_literal, Subspace};

/// Chunk length used when scanning a Grassmannian in parallel.
pub(crate) const SCAN_CHUNK: usize = 4096;

/// A deduplicated set of subspaces of one dimension, kept in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceFamily {
    ambient: Ambient,
    member_dim: usize,
    members: IndexSet<Subspace>,
}

impl SubspaceFamily {
    pub fn new(ambient: Ambient, member_dim: usize) -> Result<Self> {
        if member_dim > ambient.n {
            return Err(Error::Range(format!(
                "member dimension {member_dim} exceeds n = {}",
                ambient.n
            )));
        }
        Ok(SubspaceFamily {
            ambient,
            member_dim,
            members: IndexSet::new(),
        })
    }

    pub fn from_members(
        ambient: Ambient,
        member_dim: usize,
        members: impl IntoIterator<Item = Subspace>,
    ) -> Result<Self> {
        let mut f = Self::new(ambient, member_dim)?;
        for w in members {
            f.insert(w)?;
        }
        Ok(f)
    }

    /// Adds a member; returns `false` if it was already present.
    pub fn insert(&mut self, w: Subspace) -> Result<bool> {
        self.ambient.check(w.ambient())?;
        if w.dim() != self.member_dim {
            return Err(Error::MixedDimension {
                expected: self.member_dim,
                found: w.dim(),
            });
        }
        Ok(self.members.insert(w))
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn member_dim(&self) -> usize {
        self.member_dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Subspace> {
        self.members.iter()
    }

    pub fn members(&self) -> &IndexSet<Subspace> {
        &self.members
    }

    pub fn contains(&self, w: &Subspace) -> bool {
        self.members.contains(w)
    }

    /// Parses the family file format:
    ///
    /// ```text
    /// p 5
    /// n 3
    /// m 1
    /// 1 0 0
    /// 0 1 2
    /// ```
    ///
    /// `m` is the member dimension; each further line is a subspace literal.
    /// Blank lines and `#` comments are skipped. Returns the family and the
    /// line numbers of duplicate members.
    pub fn parse(text: &str) -> Result<(Self, Vec<usize>)> {
        let mut lines = numbered_lines(text);
        let p = header(&mut lines, "p")?;
        let n = header(&mut lines, "n")?;
        let m = header(&mut lines, "m")?;
        let ambient = Ambient::new(p as u32, n).map_err(|e| Error::parse(1, 1, e.to_string()))?;
        let mut family = Self::new(ambient, m).map_err(|e| Error::parse(3, 1, e.to_string()))?;
        let mut dupes = Vec::new();
        for (no, line) in lines {
            let w = parse_literal(line, ambient, no, 1)?;
            if w.dim() != m {
                return Err(Error::parse(
                    no,
                    1,
                    format!("subspace has dimension {}, family expects {m}", w.dim()),
                ));
            }
            if !family.insert(w)? {
                dupes.push(no);
            }
        }
        Ok((family, dupes))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("p {}\nn {}\nm {}\n", self.ambient.p, self.ambient.n, self.member_dim);
        for w in &self.members {
            s.push_str(&w.to_string());
            s.push('\n');
        }
        s
    }
}

impl<'a> IntoIterator for &'a SubspaceFamily {
    type Item = &'a Subspace;
    type IntoIter = indexmap::set::Iter<'a, Subspace>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim_end()))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub(crate) fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<usize> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::parse(0, 1, format!("missing `{key}` header")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::parse(no, 1, format!("expected `{key} <value>`")));
    }
    let value = parts
        .next()
        .ok_or_else(|| Error::parse(no, key.len() + 2, "missing value"))?;
    let col = line.find(value).unwrap_or(0) + 1;
    let v = value
        .parse()
        .map_err(|_| Error::parse(no, col, format!("expected an integer, got {value:?}")))?;
    if let Some(extra) = parts.next() {
        let col = line.rfind(extra).unwrap_or(0) + 1;
        return Err(Error::parse(no, col, "unexpected trailing token"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Nondegeneracy {
    pub holds: bool,
    /// A complementary-dimension subspace meeting every member, when one exists.
    pub witness: Option<Subspace>,
}

/// Runs `test` on every `V` in `Gr(n, dim)` and returns the first `V` (in
/// enumeration order) for which it fails.
///
/// Each worker carries a `usize` of scratch state (seeded by `init`) that
/// `test` may use to remember which member worked last.
pub(crate) fn first_failure<S, F>(
    ambient: Ambient,
    dim: usize,
    budget: u128,
    init: S,
    test: F,
) -> Result<Option<Subspace>>
where
    S: Fn() -> usize + Sync + Send,
    F: Fn(&mut usize, &Subspace) -> bool + Sync + Send,
{
    grassmann::check_budget(ambient.n, dim, ambient.p, budget)?;
    let mut cursor = GrassmannCursor::new(ambient, dim)?;
    loop {
        let chunk: Vec<Subspace> = cursor.by_ref().take(SCAN_CHUNK).collect();
        if chunk.is_empty() {
            return Ok(None);
        }
        let hit = chunk
            .par_iter()
            .map_init(&init, |cache, v| test(cache, v))
            .position_first(|ok| !ok);
        if let Some(i) = hit {
            return Ok(Some(chunk[i].clone()));
        }
    }
}

/// Whether every `V` in `Gr(n, n - m)` is transverse to some member.
pub fn is_nondegenerate(e: &SubspaceFamily, budget: u128) -> Result<Nondegeneracy> {
    let a = e.ambient;
    let members: Vec<&Subspace> = e.iter().collect();
    let witness = first_failure(
        a,
        a.n - e.member_dim,
        budget,
        || 0,
        |cache, v| {
            if members.is_empty() {
                return false;
            }
            if members[*cache].meets_trivially(v) {
                return true;
            }
            match members.iter().position(|w| w.meets_trivially(v)) {
                Some(i) => {
                    *cache = i;
                    true
                }
                None => false,
            }
        },
    )?;
    Ok(Nondegeneracy {
        holds: witness.is_none(),
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Nonconcentration {
    pub holds: bool,
    pub worst: Subspace,
    pub worst_count: usize,
}

/// Checks `|{W in E : W ∩ V != 0}| <= p^{-kappa} |E|` for every
/// `V in Gr(n, n - m)`, exactly. Reports the first maximizing `V`.
pub fn nonconcentration_check(e: &SubspaceFamily, kappa: Ratio<i64>, budget: u128) -> Result<Nonconcentration> {
    if e.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let a = e.ambient;
    let dim = a.n - e.member_dim;
    grassmann::check_budget(a.n, dim, a.p, budget)?;
    let members: Vec<&Subspace> = e.iter().collect();
    let mut worst: Option<(Subspace, usize)> = None;
    let mut cursor = GrassmannCursor::new(a, dim)?;
    loop {
        let chunk: Vec<Subspace> = cursor.by_ref().take(SCAN_CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let counts: Vec<usize> = chunk
            .par_iter()
            .map(|v| members.iter().filter(|w| !w.meets_trivially(v)).count())
            .collect();
        for (v, c) in chunk.into_iter().zip(counts) {
            if worst.as_ref().is_none_or(|(_, best)| c > *best) {
                worst = Some((v, c));
            }
        }
    }
    let (worst, worst_count) = worst.expect("Gr(n, k) is never empty");
    let holds = scaled_count_le(worst_count, a.p.get(), kappa, e.len());
    Ok(Nonconcentration {
        holds,
        worst,
        worst_count,
    })
}

/// Exact test of `count * p^kappa <= total` for rational `kappa = a / b`.
fn scaled_count_le(count: usize, p: u32, kappa: Ratio<i64>, total: usize) -> bool {
    // raise both sides to the power b > 0: count^b * p^a <= total^b
    let (num, den) = (*kappa.numer(), *kappa.denom());
    let b = den as u32;
    let a = num.unsigned_abs() as u32;
    let mut lhs = BigUint::from(count).pow(b);
    let mut rhs = BigUint::from(total).pow(b);
    let pa = BigUint::from(p).pow(a);
    if kappa.is_positive() {
        lhs *= pa;
    } else if !pa.is_one() {
        rhs *= pa;
    }
    lhs <= rhs
}

/// Intersection of all members.
pub fn common_intersection(e: &SubspaceFamily) -> Result<Subspace> {
    let mut it = e.iter();
    let first = it.next().ok_or(Error::EmptyFamily)?.clone();
    it.try_fold(first, |acc, w| if acc.is_zero() { Ok(acc) } else { acc.intersect(w) })
}

/// `{W1 + W2 : W1 in E1, W2 in E2, W1 ∩ W2 = 0}`.
pub fn sum_family(e1: &SubspaceFamily, e2: &SubspaceFamily) -> Result<SubspaceFamily> {
    e1.ambient.check(e2.ambient)?;
    let (m1, m2, n) = (e1.member_dim, e2.member_dim, e1.ambient.n);
    if m1 + m2 >= n {
        return Err(Error::DimOverflow(m1, m2, n));
    }
    let mut out = SubspaceFamily::new(e1.ambient, m1 + m2)?;
    for w1 in e1 {
        for w2 in e2 {
            if w1.meets_trivially(w2) {
                out.insert(w1.sum(w2)?)?;
            }
        }
    }
    Ok(out)
}

/// `{W1 ∩ W2 : W1 in E1, W2 in E2, dim(W1 ∩ W2) = m1 + m2 - n}`.
pub fn cap_family(e1: &SubspaceFamily, e2: &SubspaceFamily) -> Result<SubspaceFamily> {
    e1.ambient.check(e2.ambient)?;
    let (m1, m2, n) = (e1.member_dim, e2.member_dim, e1.ambient.n);
    if m1 + m2 <= n {
        return Err(Error::DimUnderflow(m1, m2, n));
    }
    let target = m1 + m2 - n;
    let mut out = SubspaceFamily::new(e1.ambient, target)?;
    for w1 in e1 {
        for w2 in e2 {
            let i = w1.intersect(w2)?;
            if i.dim() == target {
                out.insert(i)?;
            }
        }
    }
    Ok(out)
}

/// `{W^⊥ : W in E}`.
pub fn perp_family(e: &SubspaceFamily) -> SubspaceFamily {
    SubspaceFamily {
        ambient: e.ambient,
        member_dim: e.ambient.n - e.member_dim,
        members: e.iter().map(Subspace::perp).collect(),
    }
}

/// All `C(n, m)` coordinate subspaces `span{e_i : i in I}`, `|I| = m`.
pub fn coordinate_family(ambient: Ambient, m: usize) -> Result<SubspaceFamily> {
    if m > ambient.n {
        return Err(Error::Range(format!("dimension {m} not in [0, {}]", ambient.n)));
    }
    let mut out = SubspaceFamily::new(ambient, m)?;
    for idx in grassmann::pivot_patterns(ambient.n, m) {
        out.insert(Subspace::coordinate(ambient, &idx)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{sample_uniform, DEFAULT_BUDGET};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn amb(p: u32, n: usize) -> Ambient {
        Ambient::new(p, n).unwrap()
    }

    fn fam(a: Ambient, m: usize, lits: &[&str]) -> SubspaceFamily {
        SubspaceFamily::from_members(a, m, lits.iter().map(|l| Subspace::parse(l, a).unwrap())).unwrap()
    }

    /// Oracle: non-degeneracy straight from the definition, no caching.
    fn nondegenerate_oracle(e: &SubspaceFamily) -> bool {
        let a = e.ambient();
        GrassmannCursor::new(a, a.n - e.member_dim())
            .unwrap()
            .all(|v| e.iter().any(|w| w.intersect(&v).unwrap().is_zero()))
    }

    #[test]
    fn family_rejects_mixed_dimensions() {
        let a = amb(3, 3);
        let mut f = SubspaceFamily::new(a, 1).unwrap();
        assert!(f.insert(Subspace::parse("1 0 0", a).unwrap()).unwrap());
        assert!(!f.insert(Subspace::parse("2 0 0", a).unwrap()).unwrap());
        assert!(matches!(
            f.insert(Subspace::parse("1 0 0; 0 1 0", a).unwrap()),
            Err(Error::MixedDimension { expected: 1, found: 2 })
        ));
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn nondegeneracy_examples() {
        for p in [2, 3, 5] {
            let a = amb(p, 2);
            let e = fam(a, 1, &["1 0", "0 1"]);
            assert!(is_nondegenerate(&e, DEFAULT_BUDGET).unwrap().holds);
            let e = fam(a, 1, &["1 0"]);
            let r = is_nondegenerate(&e, DEFAULT_BUDGET).unwrap();
            assert!(!r.holds);
            assert_eq!(r.witness.unwrap(), Subspace::parse("1 0", a).unwrap());
        }
        let a = amb(2, 4);
        for m in 0..=4 {
            let e = coordinate_family(a, m).unwrap();
            assert!(is_nondegenerate(&e, DEFAULT_BUDGET).unwrap().holds, "m = {m}");
        }
        assert_eq!(coordinate_family(a, 2).unwrap().len(), 6);
    }

    #[test]
    fn empty_family_is_degenerate() {
        let a = amb(3, 2);
        let e = SubspaceFamily::new(a, 1).unwrap();
        let r = is_nondegenerate(&e, DEFAULT_BUDGET).unwrap();
        assert!(!r.holds);
        assert!(r.witness.is_some());
    }

    #[test]
    fn budget_is_enforced() {
        let a = amb(5, 4);
        let e = coordinate_family(a, 2).unwrap();
        assert!(matches!(
            is_nondegenerate(&e, 100),
            Err(Error::Budget {
                needed: 806,
                budget: 100
            })
        ));
    }

    #[test]
    fn nondegeneracy_matches_oracle_on_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, n) in [(2, 3), (3, 3), (2, 4)] {
            let a = amb(p, n);
            for m in 1..n {
                for size in 1..6 {
                    let members = (0..size).map(|_| sample_uniform(a, m, &mut rng).unwrap());
                    let e = SubspaceFamily::from_members(a, m, members).unwrap();
                    let r = is_nondegenerate(&e, DEFAULT_BUDGET).unwrap();
                    assert_eq!(r.holds, nondegenerate_oracle(&e));
                    if let Some(v) = r.witness {
                        assert!(e.iter().all(|w| !w.is_transverse(&v).unwrap()));
                    }
                }
            }
        }
    }

    #[test]
    fn nonconcentration_examples() {
        let a = amb(3, 2);
        let single = fam(a, 1, &["1 0"]);
        let r = nonconcentration_check(&single, Ratio::new(1, 10), DEFAULT_BUDGET).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_count, 1);

        let all = SubspaceFamily::from_members(a, 1, GrassmannCursor::new(a, 1).unwrap()).unwrap();
        // log_3 4 ≈ 1.26
        let r = nonconcentration_check(&all, Ratio::new(5, 4), DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_count, 1);
        let r = nonconcentration_check(&all, Ratio::new(13, 10), DEFAULT_BUDGET).unwrap();
        assert!(!r.holds);
        assert!(nonconcentration_check(&SubspaceFamily::new(a, 1).unwrap(), Ratio::one(), DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn nonconcentration_implies_nondegeneracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = amb(3, 3);
        for size in 1..12 {
            let members = (0..size).map(|_| sample_uniform(a, 1, &mut rng).unwrap());
            let e = SubspaceFamily::from_members(a, 1, members).unwrap();
            for kappa in [Ratio::new(1, 4), Ratio::new(1, 2), Ratio::new(1, 1)] {
                let nc = nonconcentration_check(&e, kappa, DEFAULT_BUDGET).unwrap();
                if nc.holds {
                    assert!(is_nondegenerate(&e, DEFAULT_BUDGET).unwrap().holds);
                }
            }
        }
    }

    #[test]
    fn scaled_count_is_exact() {
        // 3 * 2^(1/2) ≈ 4.24
        assert!(scaled_count_le(3, 2, Ratio::new(1, 2), 5));
        assert!(!scaled_count_le(3, 2, Ratio::new(1, 2), 4));
        assert!(scaled_count_le(4, 2, Ratio::new(-1, 1), 2));
        assert!(scaled_count_le(0, 7, Ratio::new(3, 1), 0));
    }

    #[test]
    fn common_intersection_examples() {
        let a = amb(5, 3);
        let w = Subspace::parse("1 2 0; 0 0 1", a).unwrap();
        let e = SubspaceFamily::from_members(a, 2, [w.clone()]).unwrap();
        assert_eq!(common_intersection(&e).unwrap(), w);
        let e = coordinate_family(a, 2).unwrap();
        assert!(common_intersection(&e).unwrap().is_zero());

        let a = amb(3, 3);
        let e1 = Subspace::parse("1 0 0", a).unwrap();
        let through_e1 = GrassmannCursor::new(a, 2)
            .unwrap()
            .filter(|h| h.contains_subspace(&e1).unwrap());
        let e = SubspaceFamily::from_members(a, 2, through_e1).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(common_intersection(&e).unwrap(), e1);
        assert!(matches!(
            common_intersection(&SubspaceFamily::new(a, 2).unwrap()),
            Err(Error::EmptyFamily)
        ));
    }

    #[test]
    fn hyperplane_families_common_intersection_iff_nondegenerate() {
        for (p, n) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            let a = amb(p, n);
            let hyperplanes: Vec<Subspace> = GrassmannCursor::new(a, n - 1).unwrap().collect();
            let h = hyperplanes.len();
            for i in 0..h {
                for j in i..h {
                    for k in j..h {
                        let e =
                            SubspaceFamily::from_members(a, n - 1, [i, j, k].map(|x| hyperplanes[x].clone())).unwrap();
                        assert_eq!(
                            common_intersection(&e).unwrap().is_zero(),
                            is_nondegenerate(&e, DEFAULT_BUDGET).unwrap().holds
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sum_family_examples() {
        let a = amb(3, 3);
        let lines = coordinate_family(a, 1).unwrap();
        let s = sum_family(&lines, &lines).unwrap();
        assert_eq!(s, coordinate_family(a, 2).unwrap());
        assert_eq!(s.len(), 3);

        let zero = SubspaceFamily::from_members(a, 0, [Subspace::zero(a)]).unwrap();
        assert_eq!(sum_family(&zero, &lines).unwrap(), lines);

        let e1 = fam(a, 1, &["1 0 0"]);
        assert!(sum_family(&e1, &e1).unwrap().is_empty());
        let planes = coordinate_family(a, 2).unwrap();
        assert!(matches!(sum_family(&e1, &planes), Err(Error::DimOverflow(1, 2, 3))));
    }

    #[test]
    fn cap_family_examples() {
        let a = amb(3, 3);
        let planes = coordinate_family(a, 2).unwrap();
        let c = cap_family(&planes, &planes).unwrap();
        assert_eq!(c.len(), 3);
        let lines = coordinate_family(a, 1).unwrap();
        assert!(c.iter().all(|w| lines.contains(w)));

        let full = SubspaceFamily::from_members(a, 3, [Subspace::full(a)]).unwrap();
        assert_eq!(cap_family(&full, &planes).unwrap(), planes);

        let h = fam(a, 2, &["1 0 0; 0 1 0"]);
        assert!(cap_family(&h, &h).unwrap().is_empty());
        assert!(matches!(cap_family(&lines, &planes), Err(Error::DimUnderflow(1, 2, 3))));
    }

    #[test]
    fn perp_family_examples() {
        let a = amb(3, 3);
        let lines = coordinate_family(a, 1).unwrap();
        let pl = perp_family(&lines);
        assert_eq!(pl.member_dim(), 2);
        let planes = coordinate_family(a, 2).unwrap();
        assert_eq!(pl.len(), 3);
        assert!(pl.iter().all(|w| planes.contains(w)));
        assert_eq!(perp_family(&pl), lines);
    }

    #[test]
    fn coordinate_family_examples() {
        let a = amb(7, 3);
        let e = coordinate_family(a, 1).unwrap();
        let lits: Vec<String> = e.iter().map(|w| w.to_string()).collect();
        assert_eq!(lits, ["1 0 0", "0 1 0", "0 0 1"]);
        let full = coordinate_family(a, 3).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full.iter().next().unwrap(), &Subspace::full(a));
        assert!(coordinate_family(a, 4).is_err());
    }

    #[test]
    fn family_file_round_trip() {
        let a = amb(5, 3);
        let e = coordinate_family(a, 2).unwrap();
        let (back, dupes) = SubspaceFamily::parse(&e.to_text()).unwrap();
        assert_eq!(back, e);
        assert!(dupes.is_empty());

        let text = "p 5\nn 3\nm 1\n1 0 0\n# comment\n2 0 0\n0 1 0\n";
        let (f, dupes) = SubspaceFamily::parse(text).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(dupes, vec![6]);

        match SubspaceFamily::parse("p 5\nn 3\nm 1\n1 0 0; 0 1 0\n") {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match SubspaceFamily::parse("p 6\nn 3\nm 1\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match SubspaceFamily::parse("p 5\nq 3\n") {
            Err(Error::Parse { line: 2, column: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
