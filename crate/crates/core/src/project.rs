//! Quotient projections `x -> x + W` of point sets, and the objects built
//! from their fibers: translate covers, exceptional sets, slices, dyadic
//! refinement, bounding products and the hyperplane "nice basis".

use std::collections::{BTreeSet, HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::{header, numbered_lines, SubspaceFamily, SCAN_CHUNK};
use crate::fflinalg::{invert, Ambient, Matrix, Vector};
use crate::grassmann::{self, GrassmannCursor};
use crate::subspace::{parse_vector, Subspace};

/// A finite set of points in `F_p^n`, deduplicated, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    ambient: Ambient,
    points: IndexSet<Vector>,
}

impl PointSet {
    pub fn new(ambient: Ambient) -> Self {
        PointSet {
            ambient,
            points: IndexSet::new(),
        }
    }

    pub fn from_vectors(ambient: Ambient, vs: impl IntoIterator<Item = Vector>) -> Result<Self> {
        let mut k = PointSet::new(ambient);
        for v in vs {
            k.insert(v)?;
        }
        Ok(k)
    }

    /// Convenience constructor from integer coordinates (reduced mod `p`).
    pub fn from_coords(ambient: Ambient, pts: &[&[i64]]) -> Result<Self> {
        let vs = pts
            .iter()
            .map(|c| Vector::new(ambient, c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_vectors(ambient, vs)
    }

    /// Every point of a subspace.
    pub fn from_subspace(w: &Subspace) -> Self {
        PointSet {
            ambient: w.ambient(),
            points: w.elements().into_iter().collect(),
        }
    }

    /// Returns `false` if the point was already present.
    pub fn insert(&mut self, v: Vector) -> Result<bool> {
        self.ambient.check(v.ambient())?;
        Ok(self.points.insert(v))
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, v: &Vector) -> bool {
        self.points.contains(v)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Vector> {
        self.points.iter()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.points.iter().all(|v| other.contains(v))
    }

    /// Parses the point-set file format: `p <p>`, `n <n>`, then one point per
    /// line. Returns the set and the line numbers of duplicate points.
    pub fn parse(text: &str) -> Result<(Self, Vec<usize>)> {
        let mut lines = numbered_lines(text);
        let p = header(&mut lines, "p")?;
        let n = header(&mut lines, "n")?;
        let ambient = Ambient::new(p as u32, n).map_err(|e| Error::parse(1, 1, e.to_string()))?;
        let mut k = PointSet::new(ambient);
        let mut dupes = Vec::new();
        for (no, line) in lines {
            if !k.insert(parse_vector(line, ambient, no, 1)?)? {
                dupes.push(no);
            }
        }
        Ok((k, dupes))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("p {}\nn {}\n", self.ambient.p, self.ambient.n);
        for v in &self.points {
            s.push_str(&v.to_string());
            s.push('\n');
        }
        s
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Vector;
    type IntoIter = indexmap::set::Iter<'a, Vector>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// The image `π^W(K)` with its fibers `K ∩ (x + W)`.
#[derive(Clone, Debug)]
pub struct ProjectionImage {
    subspace: Subspace,
    fibers: IndexMap<Vector, PointSet>,
}

impl ProjectionImage {
    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// `|π^W(K)|`.
    pub fn size(&self) -> usize {
        self.fibers.len()
    }

    /// Canonical coset representatives; `{r + W}` is a minimal translate cover of `K`.
    pub fn representatives(&self) -> impl Iterator<Item = &Vector> {
        self.fibers.keys()
    }

    pub fn fibers(&self) -> &IndexMap<Vector, PointSet> {
        &self.fibers
    }

    pub fn into_fibers(self) -> IndexMap<Vector, PointSet> {
        self.fibers
    }

    pub fn fiber_sizes(&self) -> Vec<usize> {
        self.fibers.values().map(PointSet::len).collect()
    }
}

/// The element of `x + W` that vanishes on every pivot column of `W`.
pub fn coset_rep(x: &Vector, w: &Subspace) -> Result<Vector> {
    w.reduce(x)
}

pub fn project(k: &PointSet, w: &Subspace) -> Result<ProjectionImage> {
    k.ambient.check(w.ambient())?;
    let mut fibers: IndexMap<Vector, PointSet> = IndexMap::new();
    for x in k {
        let r = w.reduce(x)?;
        fibers
            .entry(r)
            .or_insert_with(|| PointSet::new(k.ambient))
            .points
            .insert(x.clone());
    }
    Ok(ProjectionImage {
        subspace: w.clone(),
        fibers,
    })
}

/// `|π^W(K)|` without materializing fibers.
pub fn projection_size(k: &PointSet, w: &Subspace) -> Result<usize> {
    k.ambient.check(w.ambient())?;
    Ok(projection_size_unchecked(k, w))
}

pub(crate) fn projection_size_unchecked(k: &PointSet, w: &Subspace) -> usize {
    let a = k.ambient;
    if w.is_zero() {
        return k.len();
    }
    if w.dim() == a.n {
        return usize::from(!k.is_empty());
    }
    let p = a.p.get() as u128;
    let mut buf = vec![0u32; a.n];
    if a.size().is_some() {
        let mut seen: HashSet<u128> = HashSet::with_capacity(k.len());
        for x in k {
            buf.copy_from_slice(x.coords());
            w.reduce_raw(&mut buf);
            seen.insert(buf.iter().fold(0u128, |acc, &c| acc * p + c as u128));
        }
        seen.len()
    } else {
        let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(k.len());
        for x in k {
            buf.copy_from_slice(x.coords());
            w.reduce_raw(&mut buf);
            seen.insert(buf.clone());
        }
        seen.len()
    }
}

/// `|π^W(K)|` for every `W` in `Gr(n, dim)`, in enumeration order.
pub fn projection_profile(k: &PointSet, dim: usize, budget: u128) -> Result<Vec<(Subspace, usize)>> {
    let a = k.ambient;
    grassmann::check_budget(a.n, dim, a.p, budget)?;
    let mut cursor = GrassmannCursor::new(a, dim)?;
    let mut out = Vec::new();
    loop {
        let chunk: Vec<Subspace> = cursor.by_ref().take(SCAN_CHUNK).collect();
        if chunk.is_empty() {
            return Ok(out);
        }
        let sizes: Vec<usize> = chunk.par_iter().map(|w| projection_size_unchecked(k, w)).collect();
        out.extend(chunk.into_iter().zip(sizes));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExceptionalMode {
    /// `|π^W(K)| <= threshold`.
    AtMost(u64),
    /// `|π^W(K)| != p^m`.
    NotFull,
}

/// Members `W` of `Gr(n, n - m)` with small projections, by exhaustive scan.
pub fn exceptional_set(k: &PointSet, m: usize, mode: ExceptionalMode, budget: u128) -> Result<SubspaceFamily> {
    let a = k.ambient;
    if m == 0 || m >= a.n {
        return Err(Error::Range(format!("m = {m} not in [1, {}]", a.n.saturating_sub(1))));
    }
    if mode == ExceptionalMode::AtMost(0) {
        return Err(Error::Range("threshold must be at least 1".into()));
    }
    let full = a.p.pow(m as u32).ok_or(Error::Overflow("p^m"))?;
    let mut out = SubspaceFamily::new(a, a.n - m)?;
    for (w, size) in projection_profile(k, a.n - m, budget)? {
        let hit = match mode {
            ExceptionalMode::AtMost(t) => size as u64 <= t,
            ExceptionalMode::NotFull => size as u128 != full,
        };
        if hit {
            out.insert(w)?;
        }
    }
    Ok(out)
}

/// A basis `v_1..v_n` with `v_i ∈ W_j ⟺ i ≠ j` for hyperplanes `W_1..W_n`
/// with trivial common intersection. `v_i` is the canonical generator of the
/// line `∩_{j≠i} W_j`.
pub fn nice_basis(ws: &[Subspace]) -> Result<Vec<Vector>> {
    let a = ws
        .first()
        .map(Subspace::ambient)
        .ok_or_else(|| Error::Range("no hyperplanes given".into()))?;
    if ws.len() != a.n {
        return Err(Error::Range(format!("expected {} hyperplanes, got {}", a.n, ws.len())));
    }
    for (index, w) in ws.iter().enumerate() {
        a.check(w.ambient())?;
        if w.dim() + 1 != a.n {
            return Err(Error::NotHyperplanes { index, dim: w.dim() });
        }
    }
    let all = ws.iter().skip(1).try_fold(ws[0].clone(), |acc, w| acc.intersect(w))?;
    if !all.is_zero() {
        let line = Subspace::from_vectors(&all.basis_vectors()[..1], a)?;
        return Err(Error::CommonLine(line));
    }
    let mut out = Vec::with_capacity(a.n);
    for i in 0..a.n {
        let mut acc = Subspace::full(a);
        for (j, w) in ws.iter().enumerate() {
            if j != i {
                acc = acc.intersect(w)?;
            }
        }
        // n - 1 hyperplanes meet in dimension >= 1, and the line avoids W_i
        debug_assert_eq!(acc.dim(), 1);
        out.push(acc.basis_vectors().swap_remove(0));
    }
    Ok(out)
}

/// Keeps the fibers of `π^W` whose size class `[2^l, 2^{l+1})` carries the
/// most points (ties go to the smaller `l`). Returns the kept points and `l`.
pub fn dyadic_refine(k: &PointSet, w: &Subspace) -> Result<(PointSet, u32)> {
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    let image = project(k, w)?;
    let mut mass: HashMap<u32, usize> = HashMap::new();
    for f in image.fibers.values() {
        *mass.entry(f.len().ilog2()).or_default() += f.len();
    }
    let (&level, _) = mass
        .iter()
        .max_by(|(la, ma), (lb, mb)| ma.cmp(mb).then(lb.cmp(la)))
        .expect("nonempty");
    let mut kept = PointSet::new(k.ambient);
    let keep: HashSet<&Vector> = image
        .fibers
        .iter()
        .filter(|(_, f)| f.len().ilog2() == level)
        .map(|(r, _)| r)
        .collect();
    for x in k {
        if keep.contains(&w.reduce(x)?) {
            kept.points.insert(x.clone());
        }
    }
    Ok((kept, level))
}

/// The slices `K ∩ (x + U)`, keyed by canonical representative.
pub fn slice_decompose(k: &PointSet, u: &Subspace) -> Result<IndexMap<Vector, PointSet>> {
    Ok(project(k, u)?.into_fibers())
}

/// Coordinates of every point of `K` in the given frame (rows of the result
/// follow the order of `K`).
pub fn frame_coordinates(k: &PointSet, frame: &[Vector]) -> Result<Vec<Vec<u32>>> {
    let a = k.ambient;
    if frame.len() != a.n {
        return Err(Error::NotABasis);
    }
    let f = Matrix::from_vectors(a, frame)?;
    let inv = invert(&f).ok_or(Error::NotABasis)?;
    // x = c F  =>  c = x F^{-1}
    let p = a.p;
    Ok(k.iter()
        .map(|x| {
            (0..a.n)
                .map(|j| {
                    x.coords()
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (i, &xi)| p.add(acc, p.mul(xi, inv.get(i, j))))
                })
                .collect()
        })
        .collect())
}

/// The coordinate sets `A_1, ..., A_n` of `K` in the frame, so that
/// `K ⊆ A_1 × … × A_n`.
pub fn bounding_product(k: &PointSet, frame: &[Vector]) -> Result<Vec<BTreeSet<u32>>> {
    let coords = frame_coordinates(k, frame)?;
    let mut out = vec![BTreeSet::new(); k.ambient.n];
    for c in coords {
        for (set, v) in out.iter_mut().zip(c) {
            set.insert(v);
        }
    }
    Ok(out)
}
