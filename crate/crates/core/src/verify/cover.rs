use std::collections::BTreeMap;

use indexmap::IndexSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::SubspaceFamily;
use crate::fflinalg::{Ambient, Vector};
use crate::incidence::{incidences, slice_lines, LineFamily};
use crate::project::{bounding_product, frame_coordinates, nice_basis, projection_size, PointSet};
use crate::subspace::Subspace;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceCover {
    /// Frame coordinates of the slice off the chosen plane.
    pub offset: Vec<u32>,
    pub size: usize,
    /// `|L_{x,W}|` for each chosen `W`, in order.
    pub lines: Vec<usize>,
    /// `|L_x|`, the union over the chosen `W`.
    pub union_lines: usize,
    /// `I(K_x, L_x)`.
    pub incidences: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineCover {
    pub size: usize,
    /// The `n` members with trivial common intersection.
    pub hyperplanes: Vec<Subspace>,
    /// Coordinates of the nice basis `v_1..v_n`.
    pub frame: Vec<Vec<u32>>,
    /// Zero-based indices `(i, j)` of the plane `U = span{v_i, v_j}`.
    pub plane: (usize, usize),
    /// `|A_1|, ..., |A_n|` for the product hull `K ⊆ A_1 × … × A_n`.
    pub product: Vec<usize>,
    /// `|A_i| = |π^{W_i}(K)|` for every `i`.
    pub product_ok: bool,
    pub max_projection: usize,
    /// Members used, one per distinct direction `W ∩ U`.
    pub chosen: Vec<Subspace>,
    pub slices: Vec<SliceCover>,
    pub holds: bool,
}

/// `n` members of `E` with trivial intersection, picked greedily in `E` order.
fn pick_hyperplanes(e: &SubspaceFamily) -> Result<Vec<Subspace>> {
    let a = e.ambient();
    let mut acc = Subspace::full(a);
    let mut out = Vec::new();
    for w in e {
        if acc.is_zero() {
            break;
        }
        let next = acc.intersect(w)?;
        if next.dim() < acc.dim() {
            acc = next;
            out.push(w.clone());
        }
    }
    if !acc.is_zero() {
        let line = Subspace::from_vectors(&acc.basis_vectors()[..1], a)?;
        return Err(Error::CommonLine(line));
    }
    Ok(out)
}

/// Rebuilds the translate covers of the planar slices used to bound
/// projections onto hyperplanes, and checks every counting step exactly.
///
/// The plane `U = span{v_i, v_j}` is chosen as in the argument: `v_i` is
/// avoided by the most members, then `v_j` maximises the number of distinct
/// lines `W ∩ U` among those members.
pub fn line_cover_check(k: &PointSet, e: &SubspaceFamily) -> Result<LineCover> {
    let a = k.ambient();
    a.check(e.ambient())?;
    if a.n < 2 {
        return Err(Error::Range("line covers need dimension at least 2".into()));
    }
    if e.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    for (index, w) in e.iter().enumerate() {
        if w.dim() + 1 != a.n {
            return Err(Error::NotHyperplanes { index, dim: w.dim() });
        }
    }
    let hyperplanes = pick_hyperplanes(e)?;
    let frame = nice_basis(&hyperplanes)?;
    let product: Vec<usize> = bounding_product(k, &frame)?.iter().map(|s| s.len()).collect();
    let mut product_ok = true;
    for (w, &ai) in hyperplanes.iter().zip(&product) {
        product_ok &= projection_size(k, w)? == ai;
    }
    let max_projection = e
        .iter()
        .map(|w| projection_size(k, w))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("nonempty family");

    let i = (0..a.n)
        .max_by_key(|&i| {
            (
                e.iter().filter(|w| !w.contains(&frame[i]).unwrap_or(true)).count(),
                usize::MAX - i,
            )
        })
        .expect("n >= 2");
    let avoiding: Vec<&Subspace> = e.iter().filter(|w| !w.contains(&frame[i]).unwrap_or(true)).collect();
    let mut best: Option<(usize, IndexSet<Subspace>, Vec<Subspace>)> = None;
    for j in (0..a.n).filter(|&j| j != i) {
        let u = Subspace::from_vectors(&[frame[i].clone(), frame[j].clone()], a)?;
        let mut dirs = IndexSet::new();
        let mut chosen = Vec::new();
        for w in &avoiding {
            if dirs.insert(w.intersect(&u)?) {
                chosen.push((*w).clone());
            }
        }
        if best.as_ref().is_none_or(|(_, d, _)| dirs.len() > d.len()) {
            best = Some((j, dirs, chosen));
        }
    }
    let (j, dirs, chosen) = best.expect("n >= 2");

    // everything below happens in frame coordinates
    let plane = Ambient::new(a.p.get(), 2)?;
    let dir_pts = PointSet::from_vectors(a, dirs.iter().map(|d| d.basis_vectors().swap_remove(0)))?;
    let planar_dirs = frame_coordinates(&dir_pts, &frame)?
        .into_iter()
        .map(|c| Subspace::from_vectors(&[Vector::from_residues(plane, vec![c[i], c[j]])?], plane))
        .collect::<Result<Vec<_>>>()?;
    let mut slices: BTreeMap<Vec<u32>, PointSet> = BTreeMap::new();
    for c in frame_coordinates(k, &frame)? {
        let offset: Vec<u32> = (0..a.n).filter(|&l| l != i && l != j).map(|l| c[l]).collect();
        slices
            .entry(offset)
            .or_insert_with(|| PointSet::new(plane))
            .insert(Vector::from_residues(plane, vec![c[i], c[j]])?)?;
    }

    let mut covers = Vec::with_capacity(slices.len());
    for (offset, slice) in slices {
        let mut union = LineFamily::new(a.p);
        let mut lines = Vec::with_capacity(planar_dirs.len());
        let mut ok = true;
        for (d, w) in planar_dirs.iter().zip(&chosen) {
            let l = slice_lines(&slice, d)?;
            // each point lies on exactly one translate, and a translate of W
            // meets x + U in at most one of these lines
            ok &= incidences(&slice, &l)? == slice.len() as u64;
            ok &= l.len() <= projection_size(k, w)?;
            lines.push(l.len());
            for line in l.iter() {
                union.insert(line.clone())?;
            }
        }
        let inc = incidences(&slice, &union)?;
        // distinct directions give disjoint line sets
        ok &= union.len() == lines.iter().sum::<usize>();
        ok &= inc == (slice.len() * chosen.len()) as u64;
        covers.push(SliceCover {
            offset,
            size: slice.len(),
            lines,
            union_lines: union.len(),
            incidences: inc,
            holds: ok,
        });
    }
    // at most ∏_{l ≠ i, j} |A_l| slices are nonempty
    let slice_cap: u128 = (0..a.n)
        .filter(|&l| l != i && l != j)
        .map(|l| product[l] as u128)
        .product();
    let holds = product_ok && covers.len() as u128 <= slice_cap && covers.iter().all(|c| c.holds);
    Ok(LineCover {
        size: k.len(),
        hyperplanes,
        frame: frame.iter().map(|v| v.coords().to_vec()).collect(),
        plane: (i, j),
        product,
        product_ok,
        max_projection,
        chosen,
        slices: covers,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::coordinate_family;
    use crate::gen::{random_family, random_pointset, Rng};
    use rand::Rng as _;

    #[test]
    fn coordinate_hyperplanes_of_the_grid() {
        let a = Ambient::new(3, 3).unwrap();
        let e = coordinate_family(a, 2).unwrap();
        let k = PointSet::from_subspace(&Subspace::full(a));
        let r = line_cover_check(&k, &e).unwrap();
        assert!(r.holds);
        assert_eq!(r.product, vec![3, 3, 3]);
        assert_eq!(r.slices.len(), 3);
        // only one coordinate hyperplane avoids v_i, so one direction
        assert_eq!(r.chosen.len(), 1);
        assert!(r
            .slices
            .iter()
            .all(|s| s.size == 9 && s.lines == vec![3] && s.incidences == 9));
    }

    #[test]
    fn planar_case_uses_one_slice() {
        let a = Ambient::new(5, 2).unwrap();
        let all_lines =
            SubspaceFamily::from_members(a, 1, crate::grassmann::GrassmannCursor::new(a, 1).unwrap()).unwrap();
        let k = PointSet::from_coords(a, &[&[0, 0], &[1, 2], &[3, 3], &[4, 1]]).unwrap();
        let r = line_cover_check(&k, &all_lines).unwrap();
        assert!(r.holds);
        assert_eq!(r.slices.len(), 1);
        assert!(r.slices[0].offset.is_empty());
        // every line but span{v_i} avoids v_i, giving p distinct directions
        assert_eq!(r.chosen.len(), 5);
        assert_eq!(r.slices[0].incidences, 4 * 5);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let a = Ambient::new(3, 3).unwrap();
        let k = PointSet::from_coords(a, &[&[1, 1, 1]]).unwrap();
        let e1 = Subspace::parse("1 0 0; 0 1 0", a).unwrap();
        let e2 = Subspace::parse("1 0 0; 0 0 1", a).unwrap();
        let e = SubspaceFamily::from_members(a, 2, [e1, e2]).unwrap();
        match line_cover_check(&k, &e) {
            Err(Error::CommonLine(l)) => assert_eq!(l, Subspace::parse("1 0 0", a).unwrap()),
            other => panic!("{other:?}"),
        }
        let lines = coordinate_family(a, 1).unwrap();
        assert!(matches!(
            line_cover_check(&k, &lines),
            Err(Error::NotHyperplanes { .. })
        ));
        let planes = coordinate_family(a, 2).unwrap();
        assert!(matches!(
            line_cover_check(&PointSet::new(a), &planes),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn random_instances_hold() {
        let mut rng = Rng::new(23);
        for _ in 0..60 {
            let p = [3u32, 5, 7][rng.gen_range(0..3)];
            let n = rng.gen_range(2..=4);
            let cap = (p as usize).pow(n as u32).min(60);
            let k = random_pointset(n, p, rng.gen_range(1..=cap), &mut rng).unwrap();
            let e = random_family(n, n - 1, p, rng.gen_range(n..=(3 * n).min(p as usize + 1)), &mut rng).unwrap();
            match line_cover_check(&k, &e) {
                Ok(r) => {
                    assert!(r.holds, "{r:?}");
                    let total: usize = r.slices.iter().map(|s| s.size).sum();
                    assert_eq!(total, k.len());
                }
                Err(Error::CommonLine(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}
