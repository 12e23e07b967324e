//! Quadratic factors B = (L, Q), their atoms, rank, ρ-matrix deletion and
//! rank refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{extend_to_independent, EchelonBasis, independent, mat_rank, orth_complement_basis, FieldScalar, GroupElement, Prime, Space, SymMatrix};
use crate::growth::GrowthFunction;

/// Largest number of coefficient tuples `factor_rank` will enumerate (3^12).
pub const MAX_COMBINATIONS: u64 = 531_441;

/// Label (a, b) ∈ F_p^ℓ × F_p^q of an atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomLabel {
    pub a: Vec<FieldScalar>,
    pub b: Vec<FieldScalar>,
}

impl AtomLabel {
    pub fn new(a: Vec<FieldScalar>, b: Vec<FieldScalar>) -> Self {
        AtomLabel { a, b }
    }

    pub fn zero(l: usize, q: usize) -> Self {
        AtomLabel { a: vec![0; l], b: vec![0; q] }
    }

    /// Dense code: base-p digits, linear part first.
    pub fn code(&self, p: Prime) -> usize {
        self.a.iter().chain(&self.b).rev().fold(0, |acc, &d| acc * p.get() as usize + d as usize)
    }

    pub fn from_code(p: Prime, l: usize, q: usize, mut code: usize) -> Self {
        let mut digits = Vec::with_capacity(l + q);
        for _ in 0..l + q {
            digits.push((code % p.get() as usize) as u32);
            code /= p.get() as usize;
        }
        let b = digits.split_off(l);
        AtomLabel { a: digits, b }
    }
}

impl std::fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a: Vec<String> = self.a.iter().map(|d| d.to_string()).collect();
        let b: Vec<String> = self.b.iter().map(|d| d.to_string()).collect();
        write!(f, "({}|{})", a.join(" "), b.join(" "))
    }
}

/// ψ(x) = x^T M x + r·x + c.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticPolynomial {
    pub m: SymMatrix,
    pub r: GroupElement,
    pub c: FieldScalar,
}

impl QuadraticPolynomial {
    pub fn eval(&self, space: &Space, x: usize) -> FieldScalar {
        let p = space.p();
        let xs = space.coords(x);
        p.add(p.add(self.m.bilinear(p, xs, xs), self.r.dot(p, xs)), self.c)
    }
}

/// A quadratic factor: ordered independent vectors L and ordered distinct
/// symmetric matrices Q.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticFactor {
    p: Prime,
    n: usize,
    linear: Vec<GroupElement>,
    quadratic: Vec<SymMatrix>,
}

/// A nontrivial combination U = Σ λ_i M_i of low rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowRankCombination {
    pub coeffs: Vec<FieldScalar>,
    pub u: SymMatrix,
    pub rank: usize,
}

impl QuadraticFactor {
    pub fn new(p: Prime, n: usize, linear: Vec<GroupElement>, quadratic: Vec<SymMatrix>) -> Result<Self> {
        for v in &linear {
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
            if let Some(&value) = v.0.iter().find(|&&c| c >= p.get()) {
                return Err(Error::EntryOutOfRange { value, p: p.get() });
            }
        }
        if !independent(p, &linear) {
            return Err(Error::Dependent);
        }
        for (i, m) in quadratic.iter().enumerate() {
            if m.n() != n {
                return Err(Error::Dimension { expected: n, got: m.n() });
            }
            m.check_range(p)?;
            if quadratic[..i].contains(m) {
                return Err(Error::DuplicateMatrix(i));
            }
        }
        Ok(QuadraticFactor { p, n, linear, quadratic })
    }

    pub fn trivial(p: Prime, n: usize) -> Self {
        QuadraticFactor { p, n, linear: vec![], quadratic: vec![] }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linear(&self) -> &[GroupElement] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[SymMatrix] {
        &self.quadratic
    }

    pub fn l(&self) -> usize {
        self.linear.len()
    }

    pub fn q(&self) -> usize {
        self.quadratic.len()
    }

    /// (ℓ, q).
    pub fn complexity(&self) -> (usize, usize) {
        (self.l(), self.q())
    }

    pub fn is_trivial(&self) -> bool {
        self.linear.is_empty() && self.quadratic.is_empty()
    }

    /// Number of labels, p^(ℓ+q).
    pub fn num_labels(&self) -> usize {
        (self.p.get() as usize).pow((self.l() + self.q()) as u32)
    }

    pub fn check_label(&self, e: &AtomLabel) -> Result<()> {
        if e.a.len() != self.l() || e.b.len() != self.q() || e.a.iter().chain(&e.b).any(|&d| d >= self.p.get()) {
            return Err(Error::LabelMismatch { l: self.l(), q: self.q() });
        }
        Ok(())
    }

    /// β_L(x) = (x·r_1, …, x·r_ℓ).
    pub fn beta_l(&self, x: &[FieldScalar]) -> Vec<FieldScalar> {
        self.linear.iter().map(|r| r.dot(self.p, x)).collect()
    }

    /// β_Q(x, y) = (x^T M_1 y, …, x^T M_q y).
    pub fn beta_q(&self, x: &[FieldScalar], y: &[FieldScalar]) -> Vec<FieldScalar> {
        self.quadratic.iter().map(|m| m.bilinear(self.p, x, y)).collect()
    }

    /// β_B(x) = (β_L(x), β_Q(x, x)).
    pub fn atom_label_of(&self, x: &[FieldScalar]) -> AtomLabel {
        AtomLabel { a: self.beta_l(x), b: self.beta_q(x, x) }
    }

    pub fn label_code_of(&self, space: &Space, x: usize) -> usize {
        let p = self.p.get() as usize;
        let xs = space.coords(x);
        let mut code = 0;
        for m in self.quadratic.iter().rev() {
            code = code * p + m.bilinear(self.p, xs, xs) as usize;
        }
        for r in self.linear.iter().rev() {
            code = code * p + r.dot(self.p, xs) as usize;
        }
        code
    }

    /// Label code of every element of G.
    pub fn label_table(&self, space: &Space) -> Vec<usize> {
        (0..space.size()).map(|x| self.label_code_of(space, x)).collect()
    }

    /// Elements of B(e), ascending.
    pub fn enumerate_atom(&self, space: &Space, e: &AtomLabel) -> Result<Vec<usize>> {
        self.check_label(e)?;
        let code = e.code(self.p);
        Ok((0..space.size()).filter(|&x| self.label_code_of(space, x) == code).collect())
    }

    /// All atoms, indexed by label code; empty atoms included.
    pub fn atoms(&self, space: &Space) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_labels()];
        for x in 0..space.size() {
            out[self.label_code_of(space, x)].push(x);
        }
        out
    }

    pub fn label(&self, code: usize) -> AtomLabel {
        AtomLabel::from_code(self.p, self.l(), self.q(), code)
    }

    fn combinations(&self) -> Result<u64> {
        let total = (self.p.get() as u64).checked_pow(self.q() as u32).filter(|&t| t <= MAX_COMBINATIONS);
        total.ok_or(Error::QuadraticTooLarge { p: self.p.get(), q: self.q(), cap: MAX_COMBINATIONS })
    }

    /// Coefficient tuple number `k` in lexicographic order (λ_1 most significant).
    fn coeffs(&self, mut k: u64) -> Vec<FieldScalar> {
        let mut c = vec![0; self.q()];
        for slot in c.iter_mut().rev() {
            *slot = (k % self.p.get() as u64) as u32;
            k /= self.p.get() as u64;
        }
        c
    }

    /// Minimal rank of a nontrivial combination of Q; n when q = 0.
    pub fn rank(&self) -> Result<usize> {
        if self.q() == 0 {
            return Ok(self.n);
        }
        let total = self.combinations()?;
        let mut best = self.n;
        for k in 1..total {
            let u = SymMatrix::combination(self.p, self.n, &self.coeffs(k), &self.quadratic);
            best = best.min(mat_rank(self.p, &u.to_matrix()));
            if best == 0 {
                break;
            }
        }
        Ok(best)
    }

    /// Whether rank ≥ ρ(ℓ+q). Always true when q = 0 and ρ(ℓ) ≤ n.
    pub fn meets_demand(&self, rho: &GrowthFunction) -> Result<bool> {
        Ok(!rho.exceeds(self.l() + self.q(), self.rank()?))
    }

    /// First combination in lexicographic order with rank below `demand`.
    pub fn low_rank_combination(&self, rho: &GrowthFunction) -> Result<Option<LowRankCombination>> {
        if self.q() == 0 {
            return Ok(None);
        }
        let total = self.combinations()?;
        let x = self.l() + self.q();
        for k in 1..total {
            let coeffs = self.coeffs(k);
            let u = SymMatrix::combination(self.p, self.n, &coeffs, &self.quadratic);
            let rank = mat_rank(self.p, &u.to_matrix());
            if rho.exceeds(x, rank) {
                return Ok(Some(LowRankCombination { coeffs, u, rank }));
            }
        }
        Ok(None)
    }

    /// Applies a deletion along a given combination: drops the highest-index
    /// matrix with nonzero coefficient and extends L by the row space of U.
    pub fn delete_along(&self, comb: &LowRankCombination) -> Result<QuadraticFactor> {
        let j = comb
            .coeffs
            .iter()
            .rposition(|&c| c != 0)
            .ok_or_else(|| Error::Invalid("combination is trivial".into()))?;
        let linear = extend_to_independent(self.p, &self.linear, &orth_complement_basis(self.p, &comb.u))?;
        let mut quadratic = self.quadratic.clone();
        quadratic.remove(j);
        Ok(QuadraticFactor { p: self.p, n: self.n, linear, quadratic })
    }

    /// One ρ-matrix deletion.
    pub fn rho_matrix_delete(&self, rho: &GrowthFunction) -> Result<QuadraticFactor> {
        match self.low_rank_combination(rho)? {
            Some(comb) => self.delete_along(&comb),
            None => Err(Error::NoLowRankCombination(rho.eval_int((self.l() + self.q()) as i64).to_string())),
        }
    }

    /// Deletes until rank ≥ ρ(ℓ+q) or q = 0. Returns every intermediate factor,
    /// starting with `self`.
    pub fn rank_refine_trace(&self, rho: &GrowthFunction) -> Result<Vec<QuadraticFactor>> {
        let mut trace = vec![self.clone()];
        loop {
            let cur = trace.last().expect("nonempty");
            match cur.low_rank_combination(rho)? {
                Some(comb) => {
                    let next = cur.delete_along(&comb)?;
                    trace.push(next);
                }
                None => return Ok(trace),
            }
        }
    }

    /// Rank refinement; returns the refined factor and the number of deletions.
    pub fn rank_refine(&self, rho: &GrowthFunction) -> Result<(QuadraticFactor, usize)> {
        let mut trace = self.rank_refine_trace(rho)?;
        let count = trace.len() - 1;
        Ok((trace.pop().expect("nonempty"), count))
    }

    /// Whether every atom of `self` lies inside an atom of `other`.
    pub fn refines(&self, space: &Space, other: &QuadraticFactor) -> bool {
        let mut image: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        (0..space.size()).all(|x| {
            let a = self.label_code_of(space, x);
            let b = other.label_code_of(space, x);
            *image.entry(a).or_insert(b) == b
        })
    }

    /// The factor with `r` appended to L when independent of L, and `m`
    /// appended to Q when outside the span of Q. A matrix inside the span
    /// leaves every atom unchanged, so skipping it keeps q small.
    pub fn with_additions(&self, r: Option<&GroupElement>, m: Option<&SymMatrix>) -> Result<QuadraticFactor> {
        let linear = match r {
            Some(r) => extend_to_independent(self.p, &self.linear, std::slice::from_ref(r))?,
            None => self.linear.clone(),
        };
        let mut quadratic = self.quadratic.clone();
        if let Some(m) = m {
            let mut span = EchelonBasis::new();
            for q in &quadratic {
                span.insert(self.p, q.entries());
            }
            if !span.contains(self.p, m.entries()) {
                quadratic.push(m.clone());
            }
        }
        QuadraticFactor::new(self.p, self.n, linear, quadratic)
    }

    /// A random factor with exactly `l` independent vectors and `q` distinct
    /// matrices (l ≤ n, q ≤ p^{n(n+1)/2}).
    pub fn random<R: rand::Rng>(space: &Space, l: usize, q: usize, rng: &mut R) -> Result<QuadraticFactor> {
        if l > space.n() {
            return Err(Error::Invalid(format!("cannot draw {l} independent vectors in dimension {}", space.n())));
        }
        let mut linear = Vec::with_capacity(l);
        while linear.len() < l {
            let v = space.element(rng.gen_range(0..space.size()));
            let mut trial = linear.clone();
            trial.push(v);
            if independent(space.p(), &trial) {
                linear = trial;
            }
        }
        let mut quadratic: Vec<SymMatrix> = Vec::with_capacity(q);
        while quadratic.len() < q {
            let m = SymMatrix::random(space.p(), space.n(), rng);
            if !quadratic.contains(&m) {
                quadratic.push(m);
            }
        }
        QuadraticFactor::new(space.p(), space.n(), linear, quadratic)
    }

    /// Union of several factors: L spans all linear parts in order, Q keeps
    /// the first occurrence of each distinct matrix.
    pub fn union<'a>(p: Prime, n: usize, factors: impl IntoIterator<Item = &'a QuadraticFactor>) -> Result<QuadraticFactor> {
        let mut linear = Vec::new();
        let mut quadratic: Vec<SymMatrix> = Vec::new();
        for f in factors {
            linear = extend_to_independent(p, &linear, &f.linear)?;
            for m in &f.quadratic {
                if !quadratic.contains(m) {
                    quadratic.push(m.clone());
                }
            }
        }
        QuadraticFactor::new(p, n, linear, quadratic)
    }
}
