use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::project::{projection_profile, PointSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChenRow {
    /// Exceptional sets are `{W : |π^W(K)| <= threshold}` (or `!= p^m` for
    /// the third statement, where this is `p^m`).
    pub threshold: u128,
    pub count: u128,
    /// Both sides of the integer form of the inequality.
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChenOutcome {
    pub statement: u8,
    pub size: usize,
    pub m: usize,
    /// Whether the size hypothesis of the statement holds; rows are empty otherwise.
    pub hypothesis: bool,
    pub rows: Vec<ChenRow>,
    /// `None` when the hypothesis fails and the check is skipped.
    pub pass: Option<bool>,
}

fn big(v: u128) -> BigUint {
    BigUint::from(v)
}

/// Exhaustive check of the three exceptional-set estimates for `Gr(n, n - m)`.
///
/// With `|K| = p^s` each estimate is rewritten without fractional powers:
/// 1. at every achievable size `j` with `10 j <= |K|`:
///    `#{|π^W K| <= j} <= 5 j p^{m(n-m)-m}`;
/// 2. `2 #{|π^W K| <= ⌊p^m/10⌋} |K| <= p^{m(n-m)+m}`;
/// 3. `#{|π^W K| != p^m} |K| <= 4 p^{m(n-m)+2m}`.
pub fn chen_verify(k: &PointSet, m: usize, statement: u8, budget: u128) -> Result<ChenOutcome> {
    let a = k.ambient();
    let n = a.n;
    if m == 0 || m >= n {
        return Err(Error::Range(format!("m = {m} not in [1, {}]", n.saturating_sub(1))));
    }
    if !(1..=3).contains(&statement) {
        return Err(Error::Range(format!("statement must be 1, 2 or 3, got {statement}")));
    }
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    let p = BigUint::from(a.p.get());
    let pm = p.pow(m as u32);
    let size = big(k.len() as u128);
    let hypothesis = match statement {
        1 => size <= pm,
        2 => size > pm,
        _ => size > &pm * &pm,
    };
    let mut out = ChenOutcome {
        statement,
        size: k.len(),
        m,
        hypothesis,
        rows: Vec::new(),
        pass: None,
    };
    if !hypothesis {
        return Ok(out);
    }
    let mut sizes: Vec<u128> = projection_profile(k, n - m, budget)?
        .into_iter()
        .map(|(_, s)| s as u128)
        .collect();
    sizes.sort_unstable();
    let at_most = |t: u128| sizes.partition_point(|&s| s <= t) as u128;
    let e = (m * (n - m)) as u32;
    let mut push = |threshold: u128, count: u128, lhs: BigUint, rhs: BigUint| {
        out.rows.push(ChenRow {
            threshold,
            count,
            holds: lhs <= rhs,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        });
    };
    match statement {
        1 => {
            let mut js = sizes.clone();
            js.dedup();
            let base = p.pow(e - m as u32);
            for j in js.into_iter().filter(|&j| 10 * j <= k.len() as u128) {
                let c = at_most(j);
                push(j, c, big(c), big(5 * j) * &base);
            }
        }
        2 => {
            let t = (&pm / 10u32).try_into().map_err(|_| Error::Overflow("p^m / 10"))?;
            let c = at_most(t);
            push(t, c, big(2 * c) * &size, p.pow(e + m as u32));
        }
        _ => {
            let full: u128 = (&pm).try_into().map_err(|_| Error::Overflow("p^m"))?;
            let c = sizes.iter().filter(|&&s| s != full).count() as u128;
            push(full, c, big(c) * &size, big(4) * p.pow(e + 2 * m as u32));
        }
    }
    out.pass = Some(out.rows.iter().all(|r| r.holds));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fflinalg::Ambient;
    use crate::gen::{random_pointset, Rng};
    use crate::grassmann::GrassmannCursor;
    use crate::project::projection_size;
    use crate::subspace::Subspace;
    use rand::Rng as _;

    /// Independent oracle: the statement-1 inequality at every real `t` on a
    /// fine grid, in floating point with a safety margin away from ties.
    fn statement1_on_grid(k: &PointSet, m: usize) -> bool {
        let a = k.ambient();
        let (n, p) = (a.n, a.p.get() as f64);
        let sizes: Vec<f64> = GrassmannCursor::new(a, n - m)
            .unwrap()
            .map(|w| projection_size(k, &w).unwrap() as f64)
            .collect();
        let s = (k.len() as f64).ln() / p.ln();
        (1..=2000).all(|i| {
            let t = s * i as f64 / 2000.0;
            let thr = p.powf(t) / 10.0;
            let count = sizes.iter().filter(|&&x| x <= thr + 1e-12).count() as f64;
            count <= 0.5 * p.powf((m * (n - m)) as f64 - (m as f64 - t)) + 1e-9
        })
    }

    #[test]
    fn full_space_passes_every_statement() {
        for (p, n) in [(3u32, 2usize), (3, 3), (5, 2)] {
            let a = Ambient::new(p, n).unwrap();
            let k = PointSet::from_subspace(&Subspace::full(a));
            for m in 1..n {
                for st in 1..=3 {
                    let r = chen_verify(&k, m, st, 1_000_000).unwrap();
                    assert_ne!(r.pass, Some(false));
                    if r.hypothesis {
                        assert!(r.rows.iter().all(|row| row.count == 0 || st == 1));
                    }
                }
            }
        }
    }

    #[test]
    fn grid_at_p3_has_no_room_for_statement_three() {
        // |K| = 9 = p^{2m}, so s = 2m and the statement does not apply
        let a = Ambient::new(3, 2).unwrap();
        let k = PointSet::from_subspace(&Subspace::full(a));
        let r = chen_verify(&k, 1, 3, 1_000_000).unwrap();
        assert!(!r.hypothesis);
        assert_eq!(r.pass, None);
        let r = chen_verify(&k, 1, 2, 1_000_000).unwrap();
        assert!(r.hypothesis);
        assert_eq!(r.rows[0].threshold, 0);
        assert_eq!(r.pass, Some(true));
    }

    #[test]
    fn statement_three_counts_exactly() {
        // F_3^3 minus a point: s > 2m for m = 1
        let a = Ambient::new(3, 3).unwrap();
        let mut pts = Subspace::full(a).elements();
        pts.pop();
        let k = PointSet::from_vectors(a, pts).unwrap();
        let r = chen_verify(&k, 1, 3, 1_000_000).unwrap();
        assert!(r.hypothesis);
        // every hyperplane still projects onto all of F_3
        assert_eq!(r.rows[0].count, 0);
        assert_eq!(r.rows[0].rhs, (4 * 3u128.pow(4)).to_string());
    }

    #[test]
    fn statement_one_at_small_sizes() {
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let k = random_pointset(3, 5, rng.gen_range(1..=5), &mut rng).unwrap();
            let r = chen_verify(&k, 1, 1, 1_000_000).unwrap();
            assert_eq!(r.pass, Some(true));
            // |K| <= 5 < 10: no breakpoint lies in (0, s]
            assert!(r.rows.is_empty());
        }
    }

    /// `size` points spread over `j` translates of a random line.
    fn on_translates(n: usize, p: u32, j: usize, size: usize, rng: &mut Rng) -> PointSet {
        let a = Ambient::new(p, n).unwrap();
        let line = crate::grassmann::sample_uniform(a, 1, rng).unwrap();
        let d = line.basis_vectors().swap_remove(0);
        let mut offsets = PointSet::new(a);
        while offsets.len() < j {
            let x = random_pointset(n, p, 1, rng).unwrap().iter().next().unwrap().clone();
            if !offsets.iter().any(|o| line.contains(&o.sub(&x).unwrap()).unwrap()) {
                offsets.insert(x).unwrap();
            }
        }
        let mut k = PointSet::new(a);
        while k.len() < size {
            let o = offsets.iter().nth(rng.gen_range(0..j)).unwrap();
            k.insert(o.add(&d.scale(rng.gen_range(0..p))).unwrap()).unwrap();
        }
        k
    }

    #[test]
    fn breakpoints_agree_with_grid_oracle() {
        let mut rng = Rng::new(6);
        for (p, n, m) in [(11u32, 2usize, 1usize), (13, 2, 1), (5, 3, 2), (7, 3, 2)] {
            let cap = (p as usize).pow(m as u32);
            for _ in 0..15 {
                let size = rng.gen_range(10..=cap);
                let k = random_pointset(n, p, size, &mut rng).unwrap();
                let r = chen_verify(&k, m, 1, 1_000_000).unwrap();
                assert_eq!(r.pass, Some(true));
                assert!(statement1_on_grid(&k, m));
            }
        }
        // sets on few translates of a line have small projections along it
        for (p, n) in [(11u32, 2usize), (13, 2), (11, 3), (13, 3)] {
            let m = n - 1;
            for j in 1..=3usize {
                if j * p as usize > (p as usize).pow(m as u32) {
                    continue;
                }
                for _ in 0..5 {
                    let size = rng.gen_range(10 * j..=j * p as usize);
                    let k = on_translates(n, p, j, size, &mut rng);
                    let r = chen_verify(&k, m, 1, 1_000_000).unwrap();
                    assert!(!r.rows.is_empty());
                    assert_eq!(r.pass, Some(true));
                    assert!(statement1_on_grid(&k, m));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = Ambient::new(3, 2).unwrap();
        let k = PointSet::from_coords(a, &[&[0, 0]]).unwrap();
        assert!(chen_verify(&k, 0, 1, 100).is_err());
        assert!(chen_verify(&k, 2, 1, 100).is_err());
        assert!(chen_verify(&k, 1, 4, 100).is_err());
        assert!(matches!(
            chen_verify(&PointSet::new(a), 1, 1, 100),
            Err(Error::EmptySet)
        ));
        let big = PointSet::from_coords(Ambient::new(101, 4).unwrap(), &[&[0, 0, 0, 0]]).unwrap();
        assert!(matches!(chen_verify(&big, 2, 1, 1000), Err(Error::Budget { .. })));
    }
}
