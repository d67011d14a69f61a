//! Counting, enumerating and sampling `Gr(n, m)` over `F_p`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fflinalg::{Ambient, Matrix, Prime};
use crate::subspace::Subspace;

/// Default cap on the number of subspaces any exhaustive scan may visit.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

fn check_range(n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(Error::Range(format!("dimension {m} not in [0, {n}]")));
    }
    Ok(())
}

/// The Gaussian binomial `[n choose m]_p`: the number of `m`-dimensional
/// subspaces of `F_p^n`.
pub fn count(n: usize, m: usize, p: Prime) -> Result<u128> {
    check_range(n, m)?;
    let q = p.get() as u128;
    let pow = |e: usize| q.checked_pow(e as u32).ok_or(Error::Overflow("Gaussian binomial"));
    // after step j the running value is [n choose j]_p, so every division is exact
    let mut acc: u128 = 1;
    for j in 1..=m {
        let num = pow(n - j + 1)? - 1;
        let den = pow(j)? - 1;
        acc = acc.checked_mul(num).ok_or(Error::Overflow("Gaussian binomial"))? / den;
    }
    Ok(acc)
}

/// Fails with [`Error::Budget`] when `Gr(n, m)` is larger than `budget`.
pub fn check_budget(n: usize, m: usize, p: Prime, budget: u128) -> Result<u128> {
    let needed = count(n, m, p)?;
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    Ok(needed)
}

/// Streams every element of `Gr(n, m)` exactly once.
///
/// Pivot patterns are visited in lexicographic order; within a pattern the
/// free entries (right of a pivot, outside pivot columns) count like an
/// odometer with the last free entry moving fastest.
#[derive(Clone, Debug)]
pub struct GrassmannCursor {
    ambient: Ambient,
    pattern: Vec<usize>,
    free: Vec<(usize, usize)>,
    values: Vec<u32>,
    done: bool,
    single_pattern: bool,
}

impl GrassmannCursor {
    pub fn new(ambient: Ambient, m: usize) -> Result<Self> {
        check_range(ambient.n, m)?;
        let pattern: Vec<usize> = (0..m).collect();
        Ok(Self::at_pattern(ambient, pattern, false))
    }

    /// Only the subspaces with the given pivot columns (a Schubert cell).
    pub fn for_pattern(ambient: Ambient, pattern: Vec<usize>) -> Result<Self> {
        if pattern.windows(2).any(|w| w[0] >= w[1]) || pattern.last().is_some_and(|&c| c >= ambient.n) {
            return Err(Error::Range(format!("invalid pivot pattern {pattern:?}")));
        }
        Ok(Self::at_pattern(ambient, pattern, true))
    }

    fn at_pattern(ambient: Ambient, pattern: Vec<usize>, single_pattern: bool) -> Self {
        let free = free_positions(ambient.n, &pattern);
        GrassmannCursor {
            ambient,
            values: vec![0; free.len()],
            pattern,
            free,
            done: false,
            single_pattern,
        }
    }

    fn current(&self) -> Subspace {
        let (m, n) = (self.pattern.len(), self.ambient.n);
        let mut data = vec![0u32; m * n];
        for (r, &c) in self.pattern.iter().enumerate() {
            data[r * n + c] = 1;
        }
        for (&(r, c), &v) in self.free.iter().zip(&self.values) {
            data[r * n + c] = v;
        }
        let basis = Matrix::from_raw(self.ambient.p, m, n, data);
        Subspace::from_rref_unchecked(self.ambient, self.pattern.clone(), basis)
    }

    fn advance(&mut self) {
        let p = self.ambient.p.get();
        for v in self.values.iter_mut().rev() {
            *v += 1;
            if *v < p {
                return;
            }
            *v = 0;
        }
        if self.single_pattern || !next_combination(&mut self.pattern, self.ambient.n) {
            self.done = true;
            return;
        }
        self.free = free_positions(self.ambient.n, &self.pattern);
        self.values = vec![0; self.free.len()];
    }
}

impl Iterator for GrassmannCursor {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        let out = self.current();
        self.advance();
        Some(out)
    }
}

fn free_positions(n: usize, pattern: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (r, &c) in pattern.iter().enumerate() {
        for j in c + 1..n {
            if !pattern.contains(&j) {
                out.push((r, j));
            }
        }
    }
    out
}

/// Next `m`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let m = c.len();
    let Some(i) = (0..m).rev().find(|&i| c[i] < n - m + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..m {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn pivot_patterns(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m > n {
        return Vec::new();
    }
    let mut c: Vec<usize> = (0..m).collect();
    let mut out = vec![c.clone()];
    while next_combination(&mut c, n) {
        out.push(c.clone());
    }
    out
}

pub fn enumerate(n: usize, m: usize, p: Prime) -> Result<GrassmannCursor> {
    GrassmannCursor::new(Ambient { p, n }, m)
}

/// Uniform element of `Gr(n, m)`: uniform `m x n` matrices are drawn until
/// one has full rank, then canonicalized. Every subspace is the row space of
/// exactly `|GL_m(F_p)|` such matrices.
pub fn sample_uniform<R: Rng + ?Sized>(ambient: Ambient, m: usize, rng: &mut R) -> Result<Subspace> {
    check_range(ambient.n, m)?;
    let p = ambient.p.get();
    loop {
        let data: Vec<u32> = (0..m * ambient.n).map(|_| rng.gen_range(0..p)).collect();
        let mat = Matrix::from_raw(ambient.p, m, ambient.n, data);
        let w = Subspace::from_matrix(ambient, mat);
        if w.dim() == m {
            return Ok(w);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    Enumeration,
    TransverseIdentity,
}

/// Number of `m`-dimensional subspaces meeting `V` nontrivially, together
/// with the reference bound `p^{m' - 1 + (m - 1)(n - m)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectingCount {
    pub exact: u128,
    pub bound_exponent: i64,
    pub method: CountMethod,
    #[serde(skip)]
    p: Prime,
}

impl IntersectingCount {
    /// The bound as a float (it is fractional when the exponent is negative).
    pub fn bound(&self) -> f64 {
        (self.p.get() as f64).powi(self.bound_exponent as i32)
    }

    /// Exact test of `exact <= factor * p^bound_exponent`.
    pub fn within(&self, factor: u128) -> bool {
        let p = self.p.get() as u128;
        if self.bound_exponent >= 0 {
            match p
                .checked_pow(self.bound_exponent as u32)
                .and_then(|b| b.checked_mul(factor))
            {
                Some(rhs) => self.exact <= rhs,
                None => true,
            }
        } else {
            let scale = p.pow((-self.bound_exponent) as u32);
            self.exact.saturating_mul(scale) <= factor
        }
    }
}

fn intersecting_bound_exponent(n: usize, m: usize, mv: usize) -> i64 {
    mv as i64 - 1 + (m as i64 - 1) * (n as i64 - m as i64)
}

/// `|{W in Gr(n, m) : W ∩ V = 0}| = p^{m m'} [n - m' choose m]_p`.
pub fn count_transverse(n: usize, m: usize, mv: usize, p: Prime) -> Result<u128> {
    if m + mv > n {
        return Err(Error::Range(format!("m + dim V = {} exceeds n = {n}", m + mv)));
    }
    let scale = p.pow((m * mv) as u32).ok_or(Error::Overflow("transverse count"))?;
    count(n - mv, m, p)?
        .checked_mul(scale)
        .ok_or(Error::Overflow("transverse count"))
}

/// Counts by walking all of `Gr(n, m)`.
pub fn count_intersecting_by_enumeration(v: &Subspace, m: usize) -> Result<u128> {
    let a = v.ambient();
    if m + v.dim() > a.n {
        return Err(Error::Range(format!("m + dim V = {} exceeds n = {}", m + v.dim(), a.n)));
    }
    Ok(GrassmannCursor::new(a, m)?.filter(|w| !w.meets_trivially(v)).count() as u128)
}

pub fn count_intersecting(v: &Subspace, m: usize) -> Result<IntersectingCount> {
    let a = v.ambient();
    let (n, mv) = (a.n, v.dim());
    if m + mv > n {
        return Err(Error::Range(format!("m + dim V = {} exceeds n = {n}", m + mv)));
    }
    let total = count(n, m, a.p)?;
    let (exact, method) = if total <= DEFAULT_BUDGET {
        (count_intersecting_by_enumeration(v, m)?, CountMethod::Enumeration)
    } else {
        (
            total - count_transverse(n, m, mv, a.p)?,
            CountMethod::TransverseIdentity,
        )
    };
    Ok(IntersectingCount {
        exact,
        bound_exponent: intersecting_bound_exponent(n, m, mv),
        method,
        p: a.p,
    })
}

/// Lower bound on the rejection sampler's acceptance rate,
/// `prod_{i=1}^{m} (1 - p^{i - 1 - m})`.
pub fn acceptance_lower_bound(m: usize, p: Prime) -> f64 {
    (1..=m)
        .map(|i| 1.0 - (p.get() as f64).powi(i as i32 - 1 - m as i32))
        .product()
}
