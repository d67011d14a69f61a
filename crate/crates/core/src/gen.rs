//! Seeded generators for point sets and subspace families.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families::SubspaceFamily;
use crate::fflinalg::{Ambient, Prime, Vector};
use crate::grassmann::{self, GrassmannCursor};
use crate::project::PointSet;
use crate::subspace::Subspace;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A splittable deterministic generator: ChaCha8 keyed by a 64-bit seed.
///
/// `child(i)` depends only on the parent seed and `i`, never on how much of
/// the parent stream has been consumed.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, index: u64) -> Rng {
        Rng::new(splitmix64(
            self.seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))),
        ))
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

fn random_vector(a: Ambient, rng: &mut Rng) -> Vector {
    let p = a.p.get();
    Vector::from_residues(a, (0..a.n).map(|_| rng.gen_range(0..p)).collect()).expect("in range")
}

/// `size` distinct uniform points of `F_p^n`.
pub fn random_pointset(n: usize, p: u32, size: usize, rng: &mut Rng) -> Result<PointSet> {
    let a = Ambient::new(p, n)?;
    let total = a
        .size()
        .filter(|&t| t <= usize::MAX as u128)
        .ok_or(Error::Overflow("p^n"))? as usize;
    if size > total {
        return Err(Error::Range(format!("size {size} exceeds p^n = {total}")));
    }
    if 2 * size <= total {
        let mut k = PointSet::new(a);
        while k.len() < size {
            k.insert(random_vector(a, rng))?;
        }
        return Ok(k);
    }
    let mut skip = HashSet::new();
    while skip.len() < total - size {
        skip.insert(random_vector(a, rng));
    }
    PointSet::from_vectors(
        a,
        Subspace::full(a).elements().into_iter().filter(|v| !skip.contains(v)),
    )
}

/// `A_1 × … × A_n`, in lexicographic order.
pub fn product_set(p: Prime, sets: &[BTreeSet<u32>]) -> Result<PointSet> {
    let a = Ambient::new(p.get(), sets.len())?;
    for s in sets {
        if let Some(&bad) = s.iter().find(|&&x| x >= p.get()) {
            return Err(Error::Range(format!("{bad} is not a residue mod {p}")));
        }
    }
    let mut k = PointSet::new(a);
    if sets.iter().any(BTreeSet::is_empty) {
        return Ok(k);
    }
    let lists: Vec<Vec<u32>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
    let mut idx = vec![0usize; lists.len()];
    loop {
        let c = idx.iter().zip(&lists).map(|(&i, l)| l[i]).collect();
        k.insert(Vector::from_residues(a, c)?)?;
        let mut j = lists.len();
        loop {
            if j == 0 {
                return Ok(k);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `K = span{e_1, …, e_{d+1}}` and `E` = every line inside `K`; each `W ∈ E`
/// has `|π^W(K)| = p^d`.
pub fn extremal_pair(d: usize, n: usize, p: u32) -> Result<(PointSet, SubspaceFamily)> {
    if d == 0 || d >= n {
        return Err(Error::Range(format!("need 1 <= d <= n - 1, got d = {d}, n = {n}")));
    }
    let a = Ambient::new(p, n)?;
    let span = Subspace::coordinate(a, &(0..=d).collect::<Vec<_>>())?;
    let k = PointSet::from_subspace(&span);
    let small = Ambient::new(p, d + 1)?;
    let mut e = SubspaceFamily::new(a, 1)?;
    for line in GrassmannCursor::new(small, 1)? {
        let mut c = line.basis().row(0).to_vec();
        c.resize(n, 0);
        e.insert(Subspace::from_vectors(&[Vector::from_residues(a, c)?], a)?)?;
    }
    Ok((k, e))
}

/// `size` distinct uniform members of `Gr(n, m)`.
pub fn random_family(n: usize, m: usize, p: u32, size: usize, rng: &mut Rng) -> Result<SubspaceFamily> {
    let a = Ambient::new(p, n)?;
    let total = grassmann::count(n, m, a.p)?;
    if size as u128 > total {
        return Err(Error::Range(format!("size {size} exceeds |Gr({n},{m})| = {total}")));
    }
    let mut e = SubspaceFamily::new(a, m)?;
    if 2 * size as u128 <= total {
        while e.len() < size {
            e.insert(grassmann::sample_uniform(a, m, rng)?)?;
        }
        return Ok(e);
    }
    let mut skip = HashSet::new();
    while (skip.len() as u128) < total - size as u128 {
        skip.insert(grassmann::sample_uniform(a, m, rng)?);
    }
    for w in GrassmannCursor::new(a, m)? {
        if !skip.contains(&w) {
            e.insert(w)?;
        }
    }
    Ok(e)
}
