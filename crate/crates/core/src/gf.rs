//! Arithmetic over F_p and linear algebra over F_p^n.
//!
//! Group elements have two representations: [`GroupElement`] holds the
//! coordinates, and a [`Space`] maps elements to dense indices (little-endian
//! base-p digits, coordinate 0 least significant). Hot loops work on indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of F_p, always reduced into `0..p`.
pub type FieldScalar = u32;

/// Hard cap on the size of an enumerable group.
pub const MAX_GROUP_SIZE: usize = 1 << 22;

/// An odd prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) || (3..).step_by(2).take_while(|d| d * d <= p).any(|d| p.is_multiple_of(d)) {
            return Err(Error::NotOddPrime(p));
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.0
    }

    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.0 - b) % self.0
    }

    pub fn neg(self, a: u32) -> u32 {
        (self.0 - a) % self.0
    }

    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1 % self.0;
        a %= self.0;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(!a.is_multiple_of(self.0));
        self.pow(a, self.0 as u64 - 2)
    }

    /// Reduces a signed integer into `0..p`.
    pub fn reduce(self, a: i64) -> u32 {
        a.rem_euclid(self.0 as i64) as u32
    }

    /// Half of 2 mod p, i.e. the inverse of 2.
    pub fn half(self) -> u32 {
        self.inv(2)
    }
}

/// A vector in F_p^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<FieldScalar>);

impl GroupElement {
    pub fn zero(n: usize) -> Self {
        GroupElement(vec![0; n])
    }

    /// The standard basis vector e_i.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        GroupElement(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn coords(&self) -> &[FieldScalar] {
        &self.0
    }

    pub fn dot(&self, p: Prime, other: &[FieldScalar]) -> FieldScalar {
        dot(p, &self.0, other)
    }

    pub fn add(&self, p: Prime, other: &GroupElement) -> GroupElement {
        GroupElement(self.0.iter().zip(&other.0).map(|(&a, &b)| p.add(a, b)).collect())
    }

    pub fn scale(&self, p: Prime, c: FieldScalar) -> GroupElement {
        GroupElement(self.0.iter().map(|&a| p.mul(a, c)).collect())
    }
}

pub fn dot(p: Prime, a: &[FieldScalar], b: &[FieldScalar]) -> FieldScalar {
    let s: u64 = a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64).sum();
    (s % p.get() as u64) as u32
}

/// A general matrix over F_p, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldScalar>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<FieldScalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(cols: usize, rows: &[GroupElement]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension { expected: cols, got: r.len() });
            }
            data.extend_from_slice(&r.0);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldScalar {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[FieldScalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    /// Reduced row echelon form; returns the nonzero rows.
    pub fn rref_rows(&self, p: Prime) -> Vec<Vec<FieldScalar>> {
        let mut m: Vec<Vec<FieldScalar>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == m.len() {
                break;
            }
            let Some(sel) = (pivot_row..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(pivot_row, sel);
            let inv = p.inv(m[pivot_row][col]);
            for v in m[pivot_row].iter_mut() {
                *v = p.mul(*v, inv);
            }
            let pivot = m[pivot_row].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != pivot_row && row[col] != 0 {
                    let c = row[col];
                    for (v, &pv) in row.iter_mut().zip(&pivot) {
                        *v = p.sub(*v, p.mul(c, pv));
                    }
                }
            }
            pivot_row += 1;
        }
        m.truncate(pivot_row);
        m
    }
}

/// A symmetric n×n matrix over F_p.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<FieldScalar>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries already reduced mod p.
    pub fn new(n: usize, entries: Vec<FieldScalar>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: entries.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(SymMatrix { n, entries })
    }

    pub fn from_rows(rows: &[Vec<FieldScalar>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension { expected: n, got: r.len() });
            }
            entries.extend_from_slice(r);
        }
        Self::new(n, entries)
    }

    pub fn zero(n: usize) -> Self {
        SymMatrix { n, entries: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1; n])
    }

    pub fn diag(d: &[FieldScalar]) -> Self {
        let n = d.len();
        let mut entries = vec![0; n * n];
        for (i, &v) in d.iter().enumerate() {
            entries[i * n + i] = v;
        }
        SymMatrix { n, entries }
    }

    /// Uniformly random symmetric matrix.
    pub fn random<R: rand::Rng>(p: Prime, n: usize, rng: &mut R) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(0..p.get());
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        SymMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> FieldScalar {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[FieldScalar] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<FieldScalar>> {
        self.entries.chunks(self.n.max(1)).take(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn check_range(&self, p: Prime) -> Result<()> {
        match self.entries.iter().find(|&&e| e >= p.get()) {
            Some(&value) => Err(Error::EntryOutOfRange { value, p: p.get() }),
            None => Ok(()),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix { rows: self.n, cols: self.n, data: self.entries.clone() }
    }

    /// Σ λ_i M_i.
    pub fn combination(p: Prime, n: usize, coeffs: &[FieldScalar], ms: &[SymMatrix]) -> SymMatrix {
        let mut acc = vec![0u64; n * n];
        for (&c, m) in coeffs.iter().zip(ms) {
            if c != 0 {
                for (a, &e) in acc.iter_mut().zip(&m.entries) {
                    *a += c as u64 * e as u64;
                }
            }
        }
        SymMatrix { n, entries: acc.into_iter().map(|a| (a % p.get() as u64) as u32).collect() }
    }

    /// M·x.
    pub fn apply(&self, p: Prime, x: &[FieldScalar]) -> Vec<FieldScalar> {
        (0..self.n).map(|i| dot(p, &self.entries[i * self.n..(i + 1) * self.n], x)).collect()
    }

    /// x^T M y.
    pub fn bilinear(&self, p: Prime, x: &[FieldScalar], y: &[FieldScalar]) -> FieldScalar {
        let mut s: u64 = 0;
        for (i, &xi) in x.iter().enumerate().take(self.n) {
            if xi == 0 {
                continue;
            }
            let row = &self.entries[i * self.n..(i + 1) * self.n];
            let r: u64 = row.iter().zip(y).map(|(&m, &v)| m as u64 * v as u64).sum();
            s += xi as u64 * (r % p.get() as u64);
        }
        (s % p.get() as u64) as u32
    }
}

/// Rank over F_p by row reduction.
pub fn mat_rank(p: Prime, m: &Matrix) -> usize {
    m.rref_rows(p).len()
}

/// Basis of ker(U)^⊥, which for symmetric U is its row space.
pub fn orth_complement_basis(p: Prime, u: &SymMatrix) -> Vec<GroupElement> {
    u.to_matrix().rref_rows(p).into_iter().map(GroupElement).collect()
}

/// Incremental echelon basis used for independence tests.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<FieldScalar>)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, p: Prime, v: &[FieldScalar]) -> Vec<FieldScalar> {
        let mut v = v.to_vec();
        for (pc, row) in &self.rows {
            let c = v[*pc];
            if c != 0 {
                for (a, &b) in v.iter_mut().zip(row) {
                    *a = p.sub(*a, p.mul(c, b));
                }
            }
        }
        v
    }

    pub fn contains(&self, p: Prime, v: &[FieldScalar]) -> bool {
        self.reduce(p, v).iter().all(|&c| c == 0)
    }

    /// Adds `v` if independent; returns whether it was added.
    pub fn insert(&mut self, p: Prime, v: &[FieldScalar]) -> bool {
        let mut r = self.reduce(p, v);
        let Some(pc) = r.iter().position(|&c| c != 0) else {
            return false;
        };
        let inv = p.inv(r[pc]);
        for a in r.iter_mut() {
            *a = p.mul(*a, inv);
        }
        for (_, row) in self.rows.iter_mut() {
            let c = row[pc];
            if c != 0 {
                for (a, &b) in row.iter_mut().zip(&r) {
                    *a = p.sub(*a, p.mul(c, b));
                }
            }
        }
        self.rows.push((pc, r));
        true
    }
}

/// Whether the vectors are linearly independent.
pub fn independent(p: Prime, vs: &[GroupElement]) -> bool {
    let mut basis = EchelonBasis::new();
    vs.iter().all(|v| basis.insert(p, &v.0))
}

/// Greedily appends vectors of `v`, in order, that are independent of the
/// current list.
pub fn extend_to_independent(p: Prime, l: &[GroupElement], v: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut basis = EchelonBasis::new();
    for x in l {
        if !basis.insert(p, &x.0) {
            return Err(Error::Dependent);
        }
    }
    let mut out = l.to_vec();
    for x in v {
        if basis.insert(p, &x.0) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// Dense indexing of F_p^n.
#[derive(Clone, Debug)]
pub struct Space {
    p: Prime,
    n: usize,
    size: usize,
    digits: Vec<FieldScalar>,
}

impl Space {
    pub fn new(p: Prime, n: usize) -> Result<Self> {
        let mut size: usize = 1;
        for _ in 0..n {
            size = size
                .checked_mul(p.get() as usize)
                .filter(|&s| s <= MAX_GROUP_SIZE)
                .ok_or(Error::EnumerationCap { size: (p.get() as u128).pow(n as u32), cap: MAX_GROUP_SIZE as u128 })?;
        }
        let mut digits = vec![0; size * n];
        for i in 0..size {
            let mut r = i;
            for k in 0..n {
                digits[i * n + k] = (r % p.get() as usize) as u32;
                r /= p.get() as usize;
            }
        }
        Ok(Space { p, n, size, digits })
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// |G| = p^n.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coords(&self, i: usize) -> &[FieldScalar] {
        &self.digits[i * self.n..(i + 1) * self.n]
    }

    pub fn element(&self, i: usize) -> GroupElement {
        GroupElement(self.coords(i).to_vec())
    }

    pub fn encode(&self, coords: &[FieldScalar]) -> usize {
        coords.iter().rev().fold(0usize, |acc, &c| acc * self.p.get() as usize + c as usize)
    }

    pub fn index_of(&self, x: &GroupElement) -> Result<usize> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        if let Some(&value) = x.0.iter().find(|&&c| c >= self.p.get()) {
            return Err(Error::EntryOutOfRange { value, p: self.p.get() });
        }
        Ok(self.encode(&x.0))
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let p = self.p.get() as usize;
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut idx = 0;
        for k in (0..self.n).rev() {
            idx = idx * p + (ca[k] as usize + cb[k] as usize) % p;
        }
        idx
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        let p = self.p.get() as usize;
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut idx = 0;
        for k in (0..self.n).rev() {
            idx = idx * p + (ca[k] as usize + p - cb[k] as usize) % p;
        }
        idx
    }

    pub fn neg(&self, a: usize) -> usize {
        self.sub(0, a)
    }

    pub fn dot(&self, a: usize, v: &[FieldScalar]) -> FieldScalar {
        dot(self.p, self.coords(a), v)
    }

    /// x^T M y on indices.
    pub fn bilinear(&self, m: &SymMatrix, x: usize, y: usize) -> FieldScalar {
        m.bilinear(self.p, self.coords(x), self.coords(y))
    }

    /// Addition table for small groups; `None` when it would be too large.
    pub fn add_table(&self) -> Option<Vec<u32>> {
        if self.size > 1 << 12 {
            return None;
        }
        let mut t = vec![0u32; self.size * self.size];
        for a in 0..self.size {
            for b in 0..self.size {
                t[a * self.size + b] = self.add(a, b) as u32;
            }
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Prime {
        Prime::new(3).unwrap()
    }

    #[test]
    fn primes() {
        assert!(Prime::new(2).is_err());
        assert!(Prime::new(9).is_err());
        assert!(Prime::new(1).is_err());
        assert_eq!(Prime::new(7).unwrap().get(), 7);
        let p = Prime::new(5).unwrap();
        assert_eq!(p.mul(p.inv(3), 3), 1);
        assert_eq!(p.reduce(-7), 3);
    }

    #[test]
    fn rank_examples() {
        let p = p3();
        let m = SymMatrix::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(mat_rank(p, &m.to_matrix()), 1);
        assert_eq!(mat_rank(p, &SymMatrix::zero(3).to_matrix()), 0);
        assert_eq!(mat_rank(p, &SymMatrix::identity(4).to_matrix()), 4);
    }

    #[test]
    fn orth_complement_examples() {
        let p = p3();
        assert!(orth_complement_basis(p, &SymMatrix::zero(2)).is_empty());
        assert_eq!(orth_complement_basis(p, &SymMatrix::identity(3)).len(), 3);
        let u = SymMatrix::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(orth_complement_basis(p, &u), vec![GroupElement(vec![1, 2])]);
    }

    #[test]
    fn extend_examples() {
        let p = p3();
        assert!(extend_to_independent(p, &[], &[]).unwrap().is_empty());
        let e1 = GroupElement::unit(3, 0);
        assert_eq!(extend_to_independent(p, std::slice::from_ref(&e1), std::slice::from_ref(&e1)).unwrap(), vec![e1.clone()]);
        let out = extend_to_independent(
            p,
            &[GroupElement(vec![1, 0, 0])],
            &[GroupElement(vec![1, 1, 0]), GroupElement(vec![2, 2, 0])],
        )
        .unwrap();
        assert_eq!(out, vec![GroupElement(vec![1, 0, 0]), GroupElement(vec![1, 1, 0])]);
        assert_eq!(
            extend_to_independent(p, &[e1.clone(), e1.scale(p, 2)], &[]),
            Err(Error::Dependent)
        );
    }

    #[test]
    fn encoding_is_little_endian() {
        let s = Space::new(p3(), 3).unwrap();
        assert_eq!(s.encode(&[1, 0, 0]), 1);
        assert_eq!(s.encode(&[0, 1, 0]), 3);
        assert_eq!(s.encode(&[2, 2, 2]), 26);
        for i in 0..s.size() {
            assert_eq!(s.encode(s.coords(i)), i);
        }
        let a = s.encode(&[1, 2, 0]);
        let b = s.encode(&[2, 2, 1]);
        assert_eq!(s.coords(s.add(a, b)), &[0, 1, 1]);
        assert_eq!(s.add(s.sub(a, b), b), a);
    }

    #[test]
    fn symmetric_check() {
        assert_eq!(SymMatrix::from_rows(&[vec![1, 2], vec![0, 1]]), Err(Error::NotSymmetric));
    }
}
