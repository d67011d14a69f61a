use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::families::{first_failure, SubspaceFamily};
use crate::fflinalg::{Ambient, Vector};
use crate::grassmann::{self, GrassmannCursor};
use crate::subspace::Subspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Exact answer from exhaustive search.
    Exhaustive,
    /// Sufficient condition: the `k` busiest lines cannot cover `E`.
    TopK,
    /// Sufficient condition from subspace counts alone.
    Counting,
    Undecided,
}

fn ser_subspaces<S: Serializer>(v: &Option<Vec<Subspace>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(ws) => s.collect_seq(ws.iter().map(|w| w.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisCheck {
    pub holds: Option<bool>,
    pub decided_by: Decision,
    /// Lines (first hypothesis) or a subspace (second) on which it fails.
    #[serde(serialize_with = "ser_subspaces")]
    pub witness: Option<Vec<Subspace>>,
}

impl HypothesisCheck {
    fn decided(holds: bool, by: Decision, witness: Option<Vec<Subspace>>) -> Self {
        HypothesisCheck {
            holds: Some(holds),
            decided_by: by,
            witness,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImprovementHypotheses {
    pub k: usize,
    pub d: usize,
    pub members: usize,
    /// Every set of at most `k` lines is avoided entirely by some member.
    pub lines: HypothesisCheck,
    /// Every subspace of dimension at most `d` is transverse to some member.
    pub subspaces: HypothesisCheck,
}

/// Lines of `w` as subspaces of the ambient space.
fn lines_in(w: &Subspace) -> Result<Vec<Subspace>> {
    let a = w.ambient();
    if w.is_zero() {
        return Ok(Vec::new());
    }
    let small = Ambient::new(a.p.get(), w.dim())?;
    let basis = w.basis_vectors();
    GrassmannCursor::new(small, 1)?
        .map(|line| {
            let c = line.basis().row(0);
            let v = basis
                .iter()
                .zip(c)
                .try_fold(Vector::zero(a), |acc, (b, &ci)| acc.add(&b.scale(ci)))?;
            Subspace::from_vectors(&[v], a)
        })
        .collect()
}

struct Search<'a> {
    members: &'a [Subspace],
    lines: Vec<Vec<Subspace>>,
    nodes: u128,
    budget: u128,
}

impl Search<'_> {
    /// A set of at most `depth` more lines which, added to `chosen`, meets
    /// every member in a line; `Err` when the node budget runs out.
    fn hitting(&mut self, chosen: &mut Vec<Subspace>, depth: usize) -> std::result::Result<bool, ()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        let unhit = self
            .members
            .iter()
            .enumerate()
            .filter(|(_, w)| !chosen.iter().any(|l| w.contains_subspace(l).unwrap_or(false)))
            .min_by_key(|(_, w)| w.dim());
        let Some((i, _)) = unhit else { return Ok(true) };
        if depth == 0 {
            return Ok(false);
        }
        for l in self.lines[i].clone() {
            chosen.push(l);
            if self.hitting(chosen, depth - 1)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

fn check_lines(members: &[Subspace], a: Ambient, k: usize, budget: u128) -> Result<HypothesisCheck> {
    let lines = members.iter().map(lines_in).collect::<Result<Vec<_>>>()?;
    let mut search = Search {
        members,
        lines,
        nodes: 0,
        budget,
    };
    let mut chosen = Vec::new();
    if let Ok(found) = search.hitting(&mut chosen, k) {
        return Ok(if found {
            HypothesisCheck::decided(false, Decision::Exhaustive, Some(chosen))
        } else {
            HypothesisCheck::decided(true, Decision::Exhaustive, None)
        });
    }
    // A line lies in c(ℓ) members; if the k largest c(ℓ) sum below |E| no k lines cover E.
    let total = members.len() as u128;
    let all_lines = grassmann::count(a.n, 1, a.p)?;
    if all_lines.saturating_mul(total) <= budget {
        let mut c: Vec<u128> = GrassmannCursor::new(a, 1)?
            .map(|l| {
                members
                    .iter()
                    .filter(|w| w.contains_subspace(&l).unwrap_or(false))
                    .count() as u128
            })
            .collect();
        c.sort_unstable_by(|x, y| y.cmp(x));
        if c.iter().take(k).sum::<u128>() < total {
            return Ok(HypothesisCheck::decided(true, Decision::TopK, None));
        }
    }
    // Without enumerating lines: a line lies in at most |Gr(n-1, j-1)| members of dimension j.
    let mut per_line = 0u128;
    for j in 1..=a.n {
        let here = members.iter().filter(|w| w.dim() == j).count() as u128;
        if here > 0 {
            per_line += here.min(grassmann::count(a.n - 1, j - 1, a.p)?);
        }
    }
    if (k as u128).saturating_mul(per_line) < total {
        return Ok(HypothesisCheck::decided(true, Decision::Counting, None));
    }
    Ok(HypothesisCheck {
        holds: None,
        decided_by: Decision::Undecided,
        witness: None,
    })
}

fn check_subspaces(members: &[Subspace], a: Ambient, d: usize, budget: u128) -> Result<HypothesisCheck> {
    // monotone in V, so dimension exactly d suffices
    match first_failure(a, d, budget, || 0, |_, v| members.iter().any(|w| w.meets_trivially(v))) {
        Ok(None) => return Ok(HypothesisCheck::decided(true, Decision::Exhaustive, None)),
        Ok(Some(v)) => return Ok(HypothesisCheck::decided(false, Decision::Exhaustive, Some(vec![v]))),
        Err(Error::Budget { .. }) => {}
        Err(e) => return Err(e),
    }
    // every V of dimension d meets exactly |Gr(n,j)| - p^{jd}|Gr(n-d,j)| members of Gr(n,j)
    for j in 0..=a.n {
        let here = members.iter().filter(|w| w.dim() == j).count() as u128;
        if here == 0 {
            continue;
        }
        let meeting = grassmann::count(a.n, j, a.p)? - grassmann::count_transverse(a.n, j, d, a.p)?;
        if here > meeting {
            return Ok(HypothesisCheck::decided(true, Decision::Counting, None));
        }
    }
    Ok(HypothesisCheck {
        holds: None,
        decided_by: Decision::Undecided,
        witness: None,
    })
}

/// The two structural hypotheses on a mixed-dimension family `E`.
///
/// The line hypothesis is read as: for every set `S` of at most `k` lines
/// there is `W ∈ E` with `W ∩ ℓ = 0` for all `ℓ ∈ S`.
pub fn improvement_hypotheses(
    families: &[SubspaceFamily],
    k: usize,
    d: usize,
    budget: u128,
) -> Result<ImprovementHypotheses> {
    let a = families
        .first()
        .map(SubspaceFamily::ambient)
        .ok_or(Error::EmptyFamily)?;
    for f in families {
        a.check(f.ambient())?;
    }
    if k == 0 {
        return Err(Error::Range("k must be at least 1".into()));
    }
    if d == 0 || d >= a.n {
        return Err(Error::Range(format!("d = {d} not in [1, {}]", a.n.saturating_sub(1))));
    }
    let mut members: Vec<Subspace> = Vec::new();
    for w in families.iter().flat_map(SubspaceFamily::iter) {
        if !members.contains(w) {
            members.push(w.clone());
        }
    }
    Ok(ImprovementHypotheses {
        k,
        d,
        members: members.len(),
        lines: check_lines(&members, a, k, budget)?,
        subspaces: check_subspaces(&members, a, d, budget)?,
    })
}
