//! Arithmetic in `F_p` and exact matrix routines.
//!
//! Coordinates are stored as raw residues (`u32` in `[0, p)`) next to the
//! modulus they belong to. Moduli are capped below `2^15`, so every product
//! of two residues fits comfortably in 32 bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_MODULUS: u32 = 1 << 15;

/// A prime modulus `p < 2^15`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u32) -> Result<Self> {
        if p >= MAX_MODULUS {
            return Err(Error::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        (a * b) % self.0
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(self, a: u32) -> Result<u32> {
        let a = a % self.0;
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.0 as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce(t0))
    }

    /// `p^e` as a `u128`, if it fits.
    pub fn pow(self, e: u32) -> Option<u128> {
        (self.0 as u128).checked_pow(e)
    }
}

impl TryFrom<u32> for Prime {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u32 {
    fn from(p: Prime) -> u32 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The ambient space `F_p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ambient {
    pub p: Prime,
    pub n: usize,
}

impl Ambient {
    pub fn new(p: u32, n: usize) -> Result<Self> {
        Ok(Ambient { p: Prime::new(p)?, n })
    }

    /// Number of points `p^n`, if it fits.
    pub fn size(self) -> Option<u128> {
        self.p.pow(self.n as u32)
    }

    pub(crate) fn check(self, other: Ambient) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AmbientMismatch(format!(
                "F_{}^{} vs F_{}^{}",
                self.p, self.n, other.p, other.n
            )))
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.p, self.n)
    }
}

/// A single field element with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scalar {
    value: u32,
    modulus: Prime,
}

impl Scalar {
    pub fn new(value: i64, modulus: Prime) -> Self {
        Scalar {
            value: modulus.reduce(value),
            modulus,
        }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> Prime {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inv(self) -> Result<Scalar> {
        Ok(Scalar {
            value: self.modulus.inv(self.value)?,
            modulus: self.modulus,
        })
    }

    fn same(self, other: Scalar) -> Result<Prime> {
        if self.modulus == other.modulus {
            Ok(self.modulus)
        } else {
            Err(Error::MixedModulus(self.modulus.get(), other.modulus.get()))
        }
    }

    pub fn try_add(self, other: Scalar) -> Result<Scalar> {
        let p = self.same(other)?;
        Ok(Scalar {
            value: p.add(self.value, other.value),
            modulus: p,
        })
    }

    pub fn try_sub(self, other: Scalar) -> Result<Scalar> {
        let p = self.same(other)?;
        Ok(Scalar {
            value: p.sub(self.value, other.value),
            modulus: p,
        })
    }

    pub fn try_mul(self, other: Scalar) -> Result<Scalar> {
        let p = self.same(other)?;
        Ok(Scalar {
            value: p.mul(self.value, other.value),
            modulus: p,
        })
    }
}

/// Multiplicative inverse of a scalar.
pub fn mod_inv(a: Scalar) -> Result<Scalar> {
    a.inv()
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

/// A point of `F_p^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vector {
    ambient: Ambient,
    coords: Vec<u32>,
}

impl Vector {
    /// Builds a vector from integers, reducing each one mod `p`.
    pub fn new(ambient: Ambient, coords: &[i64]) -> Result<Self> {
        if coords.len() != ambient.n {
            return Err(Error::AmbientMismatch(format!(
                "vector of length {} in {}",
                coords.len(),
                ambient
            )));
        }
        Ok(Vector {
            ambient,
            coords: coords.iter().map(|&c| ambient.p.reduce(c)).collect(),
        })
    }

    /// Builds a vector from residues already in `[0, p)`.
    pub fn from_residues(ambient: Ambient, coords: Vec<u32>) -> Result<Self> {
        if coords.len() != ambient.n {
            return Err(Error::AmbientMismatch(format!(
                "vector of length {} in {}",
                coords.len(),
                ambient
            )));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= ambient.p.get()) {
            return Err(Error::Range(format!("coordinate {c} not in [0, {})", ambient.p)));
        }
        Ok(Vector { ambient, coords })
    }

    pub fn from_scalars(scalars: &[Scalar]) -> Result<Self> {
        let p = scalars
            .first()
            .map(|s| s.modulus())
            .ok_or_else(|| Error::Range("empty scalar list carries no modulus".into()))?;
        let mut coords = Vec::with_capacity(scalars.len());
        for s in scalars {
            if s.modulus() != p {
                return Err(Error::MixedModulus(p.get(), s.modulus().get()));
            }
            coords.push(s.value());
        }
        Ok(Vector {
            ambient: Ambient { p, n: scalars.len() },
            coords,
        })
    }

    pub(crate) fn from_raw(ambient: Ambient, coords: Vec<u32>) -> Self {
        debug_assert_eq!(coords.len(), ambient.n);
        Vector { ambient, coords }
    }

    pub fn zero(ambient: Ambient) -> Self {
        Vector {
            ambient,
            coords: vec![0; ambient.n],
        }
    }

    /// The `i`-th standard basis vector (0-based).
    pub fn unit(ambient: Ambient, i: usize) -> Self {
        let mut v = Vector::zero(ambient);
        v.coords[i] = 1;
        v
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn scalar(&self, i: usize) -> Scalar {
        Scalar {
            value: self.coords[i],
            modulus: self.ambient.p,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.ambient.check(other.ambient)?;
        let p = self.ambient.p;
        Ok(Vector {
            ambient: self.ambient,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| p.add(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.ambient.check(other.ambient)?;
        let p = self.ambient.p;
        Ok(Vector {
            ambient: self.ambient,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| p.sub(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: u32) -> Vector {
        let p = self.ambient.p;
        Vector {
            ambient: self.ambient,
            coords: self.coords.iter().map(|&a| p.mul(a, c % p.get())).collect(),
        }
    }

    /// The standard bilinear form `sum x_i y_i`.
    pub fn dot(&self, other: &Vector) -> Result<u32> {
        self.ambient.check(other.ambient)?;
        Ok(dot(self.ambient.p, &self.coords, &other.coords))
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

pub(crate) fn dot(p: Prime, a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| p.add(acc, p.mul(x, y)))
}

/// A dense matrix over `F_p`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    p: Prime,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Matrix {
    pub fn zeros(p: Prime, rows: usize, cols: usize) -> Self {
        Matrix {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: Prime, n: usize) -> Self {
        let mut m = Matrix::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from integer rows, reducing entries mod `p`.
    pub fn from_rows(p: Prime, cols: usize, rows: &[Vec<i64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Range(format!(
                    "ragged matrix: row of length {} where {} expected",
                    row.len(),
                    cols
                )));
            }
            data.extend(row.iter().map(|&v| p.reduce(v)));
        }
        Ok(Matrix {
            p,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Stacks vectors as rows; all must share the ambient.
    pub fn from_vectors(ambient: Ambient, vs: &[Vector]) -> Result<Self> {
        let mut data = Vec::with_capacity(vs.len() * ambient.n);
        for v in vs {
            ambient.check(v.ambient())?;
            data.extend_from_slice(v.coords());
        }
        Ok(Matrix {
            p: ambient.p,
            rows: vs.len(),
            cols: ambient.n,
            data,
        })
    }

    pub(crate) fn from_raw(p: Prime, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { p, rows, cols, data }
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u32]> {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |r| self.row(r))
    }

    /// `M v` for a column vector `v` of length `cols`.
    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        self.row_iter().map(|row| dot(self.p, row, v)).collect()
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &Matrix) -> Result<Matrix> {
        if self.p != other.p {
            return Err(Error::MixedModulus(self.p.get(), other.p.get()));
        }
        if self.cols != other.cols {
            return Err(Error::Range(format!(
                "cannot stack {} columns on {}",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            p: self.p,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Keeps only the first `k` rows.
    pub(crate) fn truncate_rows(mut self, k: usize) -> Matrix {
        self.data.truncate(k * self.cols);
        self.rows = k.min(self.rows);
        self
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.row_iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// Output of [`rref`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    /// Reduced row echelon form, same shape as the input; zero rows last.
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// Gauss-Jordan elimination to the unique reduced row echelon form.
pub fn rref(m: &Matrix) -> Rref {
    let mut r = m.clone();
    let pivots = rref_in_place(&mut r);
    Rref {
        rank: pivots.len(),
        matrix: r,
        pivots,
    }
}

pub(crate) fn rref_in_place(m: &mut Matrix) -> Vec<usize> {
    let (rows, cols, p) = (m.rows, m.cols, m.p);
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&r| m.data[r * cols + col] != 0) else {
            continue;
        };
        if pr != rank {
            for k in 0..cols {
                m.data.swap(pr * cols + k, rank * cols + k);
            }
        }
        let inv = p.inv(m.data[rank * cols + col]).expect("pivot is nonzero");
        for k in col..cols {
            let x = &mut m.data[rank * cols + k];
            *x = p.mul(*x, inv);
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let f = m.data[r * cols + col];
            if f == 0 {
                continue;
            }
            for k in col..cols {
                let sub = p.mul(f, m.data[rank * cols + k]);
                let x = &mut m.data[r * cols + k];
                *x = p.sub(*x, sub);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    pivots
}

/// Rank without keeping the reduced matrix around.
pub fn rank(m: &Matrix) -> usize {
    let mut r = m.clone();
    rref_in_place(&mut r).len()
}

/// RREF-canonical basis of the right null space `{v : M v = 0}`.
pub fn kernel(m: &Matrix) -> Matrix {
    let Rref { matrix, pivots, rank } = rref(m);
    let p = m.p;
    let cols = m.cols;
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut data = Vec::with_capacity(free.len() * cols);
    for &f in &free {
        let mut v = vec![0u32; cols];
        v[f] = 1;
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = p.neg(matrix.get(i, f));
        }
        data.extend(v);
    }
    let mut k = Matrix::from_raw(p, cols - rank, cols, data);
    rref_in_place(&mut k);
    k
}

/// Inverse of a square matrix, or `None` if singular.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let p = m.p;
    let mut aug = Matrix::zeros(p, n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            aug.data[r * 2 * n + c] = m.get(r, c);
        }
        aug.data[r * 2 * n + n + r] = 1;
    }
    let pivots = rref_in_place(&mut aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    let mut out = Matrix::zeros(p, n, n);
    for r in 0..n {
        for c in 0..n {
            out.data[r * n + c] = aug.data[r * 2 * n + n + c];
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: u32) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn primes_are_validated() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(32749).is_ok());
        assert!(matches!(Prime::new(1), Err(Error::NotPrime(1))));
        assert!(matches!(Prime::new(9), Err(Error::NotPrime(9))));
        assert!(matches!(Prime::new(40009), Err(Error::ModulusTooLarge(_))));
    }

    #[test]
    fn inverse_examples() {
        for q in [2, 3, 5, 7, 101] {
            assert_eq!(mod_inv(Scalar::new(1, p(q))).unwrap().value(), 1);
        }
        assert_eq!(mod_inv(Scalar::new(2, p(5))).unwrap().value(), 3);
        assert!(matches!(mod_inv(Scalar::new(0, p(7))), Err(Error::ZeroInverse)));
    }

    #[test]
    fn inverse_is_an_involution() {
        for q in [2, 3, 5, 7, 11, 13, 257, 32749] {
            let q = p(q);
            for a in (1..q.get()).step_by(((q.get() / 50) as usize).max(1)) {
                let s = Scalar::new(a as i64, q);
                let i = s.inv().unwrap();
                assert_eq!(s.try_mul(i).unwrap().value(), 1);
                assert_eq!(i.inv().unwrap(), s);
            }
        }
    }

    #[test]
    fn mixed_moduli_are_rejected() {
        let a = Scalar::new(1, p(3));
        let b = Scalar::new(1, p(5));
        assert!(matches!(a.try_add(b), Err(Error::MixedModulus(3, 5))));
        assert!(matches!(Vector::from_scalars(&[a, b]), Err(Error::MixedModulus(3, 5))));
    }

    #[test]
    fn rref_examples() {
        let id = Matrix::identity(p(5), 3);
        let r = rref(&id);
        assert_eq!(r.matrix, id);
        assert_eq!(r.rank, 3);
        assert_eq!(r.pivots, vec![0, 1, 2]);

        let z = Matrix::zeros(p(5), 2, 3);
        let r = rref(&z);
        assert_eq!(r.matrix, z);
        assert_eq!(r.rank, 0);

        let m = Matrix::from_rows(p(3), 2, &[vec![1, 1], vec![1, 2]]).unwrap();
        let r = rref(&m);
        assert_eq!(r.matrix, Matrix::identity(p(3), 2));
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn kernel_examples() {
        let k = kernel(&Matrix::identity(p(5), 3));
        assert_eq!(k.rows(), 0);
        assert_eq!(k.cols(), 3);

        let k = kernel(&Matrix::zeros(p(3), 1, 2));
        assert_eq!(k, Matrix::identity(p(3), 2));

        let k = kernel(&Matrix::from_rows(p(3), 2, &[vec![1, 1]]).unwrap());
        assert_eq!(k, Matrix::from_rows(p(3), 2, &[vec![1, 2]]).unwrap());
    }

    #[test]
    fn invert_round_trip() {
        let m = Matrix::from_rows(p(7), 3, &[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]]).unwrap();
        let inv = invert(&m).unwrap();
        for c in 0..3 {
            let col: Vec<u32> = (0..3).map(|r| inv.get(r, c)).collect();
            let prod = m.mul_vec(&col);
            for (r, v) in prod.into_iter().enumerate() {
                assert_eq!(v, u32::from(r == c));
            }
        }
        let singular = Matrix::from_rows(p(7), 2, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(invert(&singular).is_none());
    }
}
