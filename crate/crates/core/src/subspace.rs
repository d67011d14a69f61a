//! Linear subspaces of `F_p^n` in canonical form.
//!
//! A [`Subspace`] always stores its basis in reduced row echelon form, so two
//! subspaces are equal exactly when their representations are equal.

use std::fmt;

use crate::error::{Error, Result};
use crate::fflinalg::{self, kernel, rref_in_place, Ambient, Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    ambient: Ambient,
    pivots: Vec<usize>,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: Ambient) -> Self {
        Subspace {
            ambient,
            pivots: Vec::new(),
            basis: Matrix::zeros(ambient.p, 0, ambient.n),
        }
    }

    pub fn full(ambient: Ambient) -> Self {
        Subspace {
            ambient,
            pivots: (0..ambient.n).collect(),
            basis: Matrix::identity(ambient.p, ambient.n),
        }
    }

    /// Span of the given vectors.
    pub fn from_vectors(vs: &[Vector], ambient: Ambient) -> Result<Self> {
        let m = Matrix::from_vectors(ambient, vs)?;
        Ok(Self::from_matrix(ambient, m))
    }

    /// Row space of `m`.
    pub fn from_matrix(ambient: Ambient, mut m: Matrix) -> Self {
        debug_assert_eq!(m.cols(), ambient.n);
        debug_assert_eq!(m.modulus(), ambient.p);
        let pivots = rref_in_place(&mut m);
        let basis = m.truncate_rows(pivots.len());
        Subspace { ambient, pivots, basis }
    }

    /// Wraps a matrix already known to be in RREF with no zero rows.
    pub(crate) fn from_rref_unchecked(ambient: Ambient, pivots: Vec<usize>, basis: Matrix) -> Self {
        debug_assert_eq!(pivots.len(), basis.rows());
        Subspace { ambient, pivots, basis }
    }

    /// Coordinate subspace spanned by the standard basis vectors at `indices`.
    pub fn coordinate(ambient: Ambient, indices: &[usize]) -> Result<Self> {
        let vs = indices
            .iter()
            .map(|&i| {
                if i < ambient.n {
                    Ok(Vector::unit(ambient, i))
                } else {
                    Err(Error::Range(format!("coordinate index {i} in {ambient}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_vectors(&vs, ambient)
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn codim(&self) -> usize {
        self.ambient.n - self.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vector> {
        self.basis
            .row_iter()
            .map(|r| Vector::from_raw(self.ambient, r.to_vec()))
            .collect()
    }

    /// Reduces raw coordinates against the basis. The result is zero at every
    /// pivot column and is the same for all members of a coset.
    pub(crate) fn reduce_raw(&self, coords: &mut [u32]) {
        let p = self.ambient.p;
        for (row, &pc) in self.basis.row_iter().zip(&self.pivots) {
            let f = coords[pc];
            if f == 0 {
                continue;
            }
            for (x, &b) in coords.iter_mut().zip(row).skip(pc) {
                *x = p.sub(*x, p.mul(f, b));
            }
        }
    }

    /// Canonical representative of `v + W`: the member vanishing on the
    /// pivot columns of `W`.
    pub fn reduce(&self, v: &Vector) -> Result<Vector> {
        self.ambient.check(v.ambient())?;
        let mut c = v.coords().to_vec();
        self.reduce_raw(&mut c);
        Ok(Vector::from_raw(self.ambient, c))
    }

    pub fn contains(&self, v: &Vector) -> Result<bool> {
        Ok(self.reduce(v)?.is_zero())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        self.ambient.check(other.ambient)?;
        Ok(other.basis.row_iter().all(|r| {
            let mut c = r.to_vec();
            self.reduce_raw(&mut c);
            c.iter().all(|&x| x == 0)
        }))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.ambient.check(other.ambient)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let m = self.basis.stack(&other.basis)?;
        Ok(Subspace::from_matrix(self.ambient, m))
    }

    /// Orthogonal complement under `<x, y> = sum x_i y_i`.
    pub fn perp(&self) -> Subspace {
        let k = kernel(&self.basis);
        // kernel() already returns an RREF basis without zero rows
        let pivots = leading_columns(&k);
        Subspace::from_rref_unchecked(self.ambient, pivots, k)
    }

    /// `W1 ∩ W2`, computed as `(W1^⊥ + W2^⊥)^⊥`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.ambient.check(other.ambient)?;
        Ok(self.perp().sum(&other.perp())?.perp())
    }

    /// `W ∩ V = 0`, decided by `dim(W + V) = dim W + dim V`.
    pub fn is_transverse(&self, other: &Subspace) -> Result<bool> {
        self.ambient.check(other.ambient)?;
        Ok(self.meets_trivially(other))
    }

    pub(crate) fn meets_trivially(&self, other: &Subspace) -> bool {
        let (a, b) = (self.dim(), other.dim());
        if a == 0 || b == 0 {
            return true;
        }
        if a + b > self.ambient.n {
            return false;
        }
        // reduce the smaller basis against the larger one, then check rank
        let (big, small) = if a >= b { (self, other) } else { (other, self) };
        let mut data = Vec::with_capacity(small.dim() * self.ambient.n);
        for r in small.basis.row_iter() {
            let mut c = r.to_vec();
            big.reduce_raw(&mut c);
            data.extend(c);
        }
        let m = Matrix::from_raw(self.ambient.p, small.dim(), self.ambient.n, data);
        fflinalg::rank(&m) == small.dim()
    }

    /// Every element, listed by brute force. Only meant for small oracles.
    pub fn elements(&self) -> Vec<Vector> {
        let p = self.ambient.p;
        let d = self.dim();
        let mut out = Vec::new();
        let mut coeffs = vec![0u32; d];
        loop {
            let mut v = vec![0u32; self.ambient.n];
            for (row, &c) in self.basis.row_iter().zip(&coeffs) {
                for (x, &b) in v.iter_mut().zip(row) {
                    *x = p.add(*x, p.mul(c, b));
                }
            }
            out.push(Vector::from_raw(self.ambient, v));
            let mut i = 0;
            loop {
                if i == d {
                    return out;
                }
                coeffs[i] += 1;
                if coeffs[i] < p.get() {
                    break;
                }
                coeffs[i] = 0;
                i += 1;
            }
        }
    }

    /// Parses a literal such as `"1 0 0; 0 1 0"`. The empty literal is the
    /// zero subspace.
    pub fn parse(literal: &str, ambient: Ambient) -> Result<Subspace> {
        parse_literal(literal, ambient, 1, 1)
    }
}

pub(crate) fn leading_columns(m: &Matrix) -> Vec<usize> {
    m.row_iter()
        .map(|r| r.iter().position(|&x| x != 0).expect("no zero rows"))
        .collect()
}

/// Parses a subspace literal, reporting positions relative to `line`/`col0`.
pub(crate) fn parse_literal(literal: &str, ambient: Ambient, line: usize, col0: usize) -> Result<Subspace> {
    let mut vs = Vec::new();
    let mut offset = 0;
    for part in literal.split(';') {
        let col = col0 + offset;
        offset += part.len() + 1;
        if part.trim().is_empty() {
            if literal.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(line, col, "empty basis vector"));
        }
        vs.push(parse_vector(part, ambient, line, col)?);
    }
    Subspace::from_vectors(&vs, ambient)
}

pub(crate) fn parse_vector(text: &str, ambient: Ambient, line: usize, col0: usize) -> Result<Vector> {
    let mut coords = Vec::with_capacity(ambient.n);
    let mut pos = 0;
    for tok in text.split_whitespace() {
        let at = text[pos..].find(tok).map(|i| i + pos).unwrap_or(pos);
        pos = at + tok.len();
        let v: u32 = tok
            .parse()
            .map_err(|_| Error::parse(line, col0 + at, format!("expected an integer, got {tok:?}")))?;
        if v >= ambient.p.get() {
            return Err(Error::parse(
                line,
                col0 + at,
                format!("coordinate {v} not in [0, {})", ambient.p),
            ));
        }
        coords.push(v);
    }
    if coords.len() != ambient.n {
        return Err(Error::parse(
            line,
            col0,
            format!("expected {} coordinates, got {}", ambient.n, coords.len()),
        ));
    }
    Ok(Vector::from_raw(ambient, coords))
}

impl fmt::Display for Subspace {
    /// Literal form, e.g. `1 0 2; 0 1 1`. The zero subspace prints as the
    /// zero vector so that it round-trips through [`Subspace::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return Vector::zero(self.ambient).fmt(f);
        }
        self.basis.fmt(f)
    }
}

impl serde::Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
