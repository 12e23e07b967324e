//! Binary strings, the τ and f_σ recursions, (ρ,σ)-chains
//! and exhaustive checks of the chain bounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::QuadraticFactor;
use crate::gf::{mat_rank, orth_complement_basis, EchelonBasis, GroupElement, Space, SymMatrix};
pub use crate::growth::GrowthFunction;
use crate::par::Exec;

/// A string over {−1, +1}.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryString(pub Vec<i8>);

impl BinaryString {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::Invalid("binary strings hold only +1 and -1".into()));
        }
        Ok(BinaryString(bits))
    }

    /// The `index`-th string of length `len`: bit j is +1 iff bit j of `index` is set.
    pub fn from_index(len: usize, index: u64) -> Self {
        BinaryString((0..len).map(|j| if index >> j & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// σ ∧ v.
    pub fn push(&self, v: i8) -> Self {
        let mut bits = self.0.clone();
        bits.push(v);
        BinaryString(bits)
    }

    pub fn concat(&self, other: &BinaryString) -> Self {
        BinaryString(self.0.iter().chain(&other.0).copied().collect())
    }

    /// σ restricted to its first `i` entries.
    pub fn prefix(&self, i: usize) -> Self {
        BinaryString(self.0[..i].to_vec())
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Invalid(format!("bad character {c:?} in binary string"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(BinaryString)
    }
}

/// Sum of the entries.
pub fn disc(s: &BinaryString) -> i64 {
    s.0.iter().map(|&b| b as i64).sum()
}

/// Number of +1 entries.
pub fn ones_count(s: &BinaryString) -> usize {
    s.0.iter().filter(|&&b| b == 1).count()
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// τ_i(x, y): τ_0 = x, τ_{j+1} = τ_j + ρ(τ_j + y − j).
pub fn tau(rho: &GrowthFunction, i: usize, x: i64, y: i64) -> BigRational {
    let mut t = int(x);
    for j in 0..i {
        let arg = &t + int(y - j as i64);
        t = &t + rho.eval(&arg);
    }
    t
}

/// One step of the f_σ recursion.
pub fn f_step(rho: &GrowthFunction, (a, b): (BigRational, BigRational), v: i8) -> (BigRational, BigRational) {
    if v == 1 {
        (a + BigRational::one(), b + BigRational::one())
    } else {
        let grow = rho.eval(&(&a + &b));
        (a + grow, b - BigRational::one())
    }
}

/// f_σ, starting from f_<> = (0, 0).
pub fn f_sigma(rho: &GrowthFunction, s: &BinaryString) -> (BigRational, BigRational) {
    s.0.iter().fold((BigRational::zero(), BigRational::zero()), |acc, &v| f_step(rho, acc, v))
}

/// Closed-form bounds ((2C)^{(m−k)d^{m−k}}(2k)^{d^{m−k}}, 2k − m).
pub fn corollary_chain_bound(c: &BigRational, d: u32, m: usize, k: usize) -> Result<(BigRational, BigRational)> {
    if m == 0 || k > m {
        return Err(Error::Invalid("need m >= 1 and 0 <= k <= m".into()));
    }
    let j = (m - k) as u32;
    let dj = (d as usize).pow(j);
    let two_c = int(2) * c;
    let l_bound = num_traits::pow(two_c, (m - k) * dj) * num_traits::pow(int(2 * k as i64), dj);
    Ok((l_bound, int(2 * k as i64 - m as i64)))
}

/// A chain of factors B_0, …, B_m driven by σ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainRecord {
    pub sigma: BinaryString,
    pub factors: Vec<QuadraticFactor>,
}

/// Outcome of `check_chain`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainCheck {
    pub valid: bool,
    pub failure: Option<String>,
}

impl ChainCheck {
    fn fail(msg: String) -> Self {
        ChainCheck { valid: false, failure: Some(msg) }
    }
}

fn contains_all<T: PartialEq>(big: &[T], small: &[T]) -> bool {
    small.iter().all(|v| big.contains(v))
}

fn span_of(p: crate::gf::Prime, vs: &[GroupElement]) -> EchelonBasis {
    let mut b = EchelonBasis::new();
    for v in vs {
        b.insert(p, &v.0);
    }
    b
}

/// Whether `next` is a ρ-matrix deletion of `cur` along some low-rank
/// combination.
pub fn is_rho_deletion(rho: &GrowthFunction, cur: &QuadraticFactor, next: &QuadraticFactor) -> Result<bool> {
    let p = cur.p();
    let q = cur.q();
    if q == 0 || next.q() + 1 != q || !contains_all(next.linear(), cur.linear()) {
        return Ok(false);
    }
    let total = (p.get() as u64)
        .checked_pow(q as u32)
        .filter(|&t| t <= crate::factors::MAX_COMBINATIONS)
        .ok_or(Error::QuadraticTooLarge { p: p.get(), q, cap: crate::factors::MAX_COMBINATIONS })?;
    let next_span = span_of(p, next.linear());
    for k in 1..total {
        let mut coeffs = vec![0; q];
        let mut r = k;
        for slot in coeffs.iter_mut().rev() {
            *slot = (r % p.get() as u64) as u32;
            r /= p.get() as u64;
        }
        let u = SymMatrix::combination(p, cur.n(), &coeffs, cur.quadratic());
        if !rho.exceeds(cur.l() + q, mat_rank(p, &u.to_matrix())) {
            continue;
        }
        let rows = orth_complement_basis(p, &u);
        let mut target = span_of(p, cur.linear());
        for r in &rows {
            target.insert(p, &r.0);
        }
        let spans_match = target.dim() == next.l() && rows.iter().all(|r| next_span.contains(p, &r.0));
        if !spans_match {
            continue;
        }
        for j in (0..q).filter(|&j| coeffs[j] != 0) {
            let mut rest = cur.quadratic().to_vec();
            rest.remove(j);
            if rest == next.quadratic() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Validates a chain step by step and then the bounds q_i ≤ disc(σ|[i]),
/// ℓ_i ≤ a_i, q_i ≤ b_i.
pub fn check_chain(space: &Space, rho: &GrowthFunction, c: &ChainRecord) -> Result<ChainCheck> {
    if c.factors.len() != c.sigma.len() + 1 {
        return Ok(ChainCheck::fail("need one more factor than sigma entries".into()));
    }
    if !c.factors[0].is_trivial() {
        return Ok(ChainCheck::fail("first factor is not trivial".into()));
    }
    for (i, &v) in c.sigma.0.iter().enumerate() {
        let (cur, next) = (&c.factors[i], &c.factors[i + 1]);
        if v == 1 {
            let ok = next.l() <= cur.l() + 1
                && next.q() <= cur.q() + 1
                && contains_all(next.linear(), cur.linear())
                && contains_all(next.quadratic(), cur.quadratic())
                && next.refines(space, cur);
            if !ok {
                return Ok(ChainCheck::fail(format!("step {i} is not a valid addition")));
            }
        } else if !is_rho_deletion(rho, cur, next)? {
            return Ok(ChainCheck::fail(format!("step {i} is not a valid rho-matrix deletion")));
        }
    }
    let mut ab = (BigRational::zero(), BigRational::zero());
    for i in 0..=c.sigma.len() {
        if i > 0 {
            ab = f_step(rho, ab, c.sigma.0[i - 1]);
        }
        let (l, q) = c.factors[i].complexity();
        if q as i64 > disc(&c.sigma.prefix(i)) || int(l as i64) > ab.0 || int(q as i64) > ab.1 {
            return Ok(ChainCheck::fail(format!("chain bound fails at prefix {i}")));
        }
    }
    Ok(ChainCheck { valid: true, failure: None })
}

/// Boolean form of `check_chain`.
pub fn validate_chain(space: &Space, rho: &GrowthFunction, c: &ChainRecord) -> bool {
    check_chain(space, rho, c).map(|r| r.valid).unwrap_or(false)
}

fn random_vector<R: Rng>(space: &Space, rng: &mut R) -> GroupElement {
    space.element(rng.gen_range(0..space.size()))
}

/// v v^T, a matrix of rank at most one.
fn rank_one(space: &Space, v: &GroupElement) -> SymMatrix {
    let p = space.p();
    let n = space.n();
    let e = (0..n * n).map(|k| p.mul(v.0[k / n], v.0[k % n])).collect();
    SymMatrix::new(n, e).expect("symmetric by construction")
}

/// Random valid chain of `steps` steps. Additions draw a random vector and
/// matrix (kept when independent / new), sometimes a rank-one matrix so that
/// a deletion becomes available; deletions follow `rho_matrix_delete`.
pub fn random_chain<R: Rng>(space: &Space, rho: &GrowthFunction, steps: usize, rng: &mut R) -> Result<ChainRecord> {
    let mut factors = vec![QuadraticFactor::trivial(space.p(), space.n())];
    let mut sigma = BinaryString::default();
    for _ in 0..steps {
        let cur = factors.last().expect("nonempty").clone();
        let can_delete = cur.q() > 0 && cur.q() <= 6 && cur.low_rank_combination(rho)?.is_some();
        if can_delete && rng.gen_bool(0.5) {
            factors.push(cur.rho_matrix_delete(rho)?);
            sigma = sigma.push(-1);
            continue;
        }
        let r = random_vector(space, rng);
        let m = if rng.gen_bool(0.4) { rank_one(space, &random_vector(space, rng)) } else { SymMatrix::random(space.p(), space.n(), rng) };
        let r = rng.gen_bool(0.6).then_some(r);
        let m = (cur.q() < 6 && rng.gen_bool(0.8)).then_some(m);
        factors.push(cur.with_additions(r.as_ref(), m.as_ref())?);
        sigma = sigma.push(1);
    }
    Ok(ChainRecord { sigma, factors })
}

/// Counterexample tallies from the exhaustive bound checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LemmaTally {
    pub checked: u64,
    pub violations: u64,
}

impl LemmaTally {
    fn merge(parts: Vec<LemmaTally>) -> LemmaTally {
        parts.into_iter().fold(LemmaTally::default(), |a, b| LemmaTally {
            checked: a.checked + b.checked,
            violations: a.violations + b.violations,
        })
    }
}

fn all_strings(len: usize) -> impl Iterator<Item = BinaryString> {
    (0..1u64 << len).map(move |i| BinaryString::from_index(len, i))
}

/// Domination of f_σ is preserved by appending any μ, with equal second
/// coordinates staying equal; pairs of length t and μ with t + |μ| ≤ `max_len`.
pub fn check_seq1(rho: &GrowthFunction, max_len: usize, exec: Exec) -> LemmaTally {
    let mut parts = Vec::new();
    for t in 0..max_len {
        let fs: Vec<(BigRational, BigRational)> = all_strings(t).map(|s| f_sigma(rho, &s)).collect();
        let pairs: Vec<(usize, usize)> = (0..fs.len())
            .flat_map(|i| (0..fs.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| fs[i].0 <= fs[j].0 && fs[i].1 <= fs[j].1)
            .collect();
        let depth = max_len - t;
        parts.extend(exec.map_items(&pairs, |&(i, j)| {
            let mut tally = LemmaTally::default();
            let equal_b = fs[i].1 == fs[j].1;
            let mut stack = vec![(fs[i].clone(), fs[j].clone(), 0usize)];
            while let Some((f1, f2, d)) = stack.pop() {
                if d > 0 {
                    tally.checked += 1;
                    let bad = f1.0 > f2.0 || f1.1 > f2.1 || (equal_b && f1.1 != f2.1);
                    tally.violations += bad as u64;
                }
                if d < depth {
                    for v in [1i8, -1] {
                        stack.push((f_step(rho, f1.clone(), v), f_step(rho, f2.clone(), v), d + 1));
                    }
                }
            }
            tally
        }));
    }
    LemmaTally::merge(parts)
}

/// Swapping an adjacent (−1, 1) to (1, −1) keeps b and does not lower a.
pub fn check_seq2(rho: &GrowthFunction, max_len: usize, exec: Exec) -> LemmaTally {
    let strings: Vec<BinaryString> = (2..=max_len).flat_map(all_strings).collect();
    LemmaTally::merge(exec.map_items(&strings, |s| {
        let mut tally = LemmaTally::default();
        let (a, b) = f_sigma(rho, s);
        for i in 0..s.len() - 1 {
            if s.0[i] == -1 && s.0[i + 1] == 1 {
                let mut phi = s.clone();
                phi.0.swap(i, i + 1);
                let (a2, b2) = f_sigma(rho, &phi);
                tally.checked += 1;
                tally.violations += (a > a2 || b != b2) as u64;
            }
        }
        tally
    }))
}

/// The front-loaded string θ with the same ones-count maximizes a and keeps b.
pub fn check_seq3(rho: &GrowthFunction, max_len: usize, exec: Exec) -> LemmaTally {
    let strings: Vec<BinaryString> = (1..=max_len).flat_map(all_strings).collect();
    LemmaTally::merge(exec.map_items(&strings, |s| {
        let k = ones_count(s);
        let theta = BinaryString((0..s.len()).map(|i| if i < k { 1 } else { -1 }).collect());
        let (a, b) = f_sigma(rho, s);
        let (at, bt) = f_sigma(rho, &theta);
        LemmaTally { checked: 1, violations: (a > at || b != bt) as u64 }
    }))
}

/// For disc(σ) ≥ 0: b = 2k − m ≥ 0 and 0 ≤ a ≤ τ_{m−k}(k, k) ≤ closed form.
pub fn check_seq4(rho: &GrowthFunction, c: &BigRational, d: u32, max_len: usize, exec: Exec) -> LemmaTally {
    let strings: Vec<BinaryString> = (1..=max_len).flat_map(all_strings).filter(|s| disc(s) >= 0).collect();
    LemmaTally::merge(exec.map_items(&strings, |s| {
        let (m, k) = (s.len(), ones_count(s));
        let (a, b) = f_sigma(rho, s);
        let t = tau(rho, m - k, k as i64, k as i64);
        let (closed, qb) = corollary_chain_bound(c, d, m, k).expect("m >= 1");
        let ok = b == qb && b >= BigRational::zero() && a >= BigRational::zero() && a <= t && t <= closed;
        LemmaTally { checked: 1, violations: !ok as u64 }
    }))
}

/// τ_i(x, y) ≤ 2^{ik^i}·C^{ik^i}·(x+y)^{k^i} for i ≤ `max_i`, 0 ≤ x ≤ `max_xy`,
/// i ≤ y ≤ `max_xy`.
pub fn check_tau_bound(rho: &GrowthFunction, c: &BigRational, k: u32, max_i: usize, max_xy: i64) -> LemmaTally {
    let mut tally = LemmaTally::default();
    for i in 0..=max_i {
        let ki = (k as usize).pow(i as u32);
        let factor = num_traits::pow(int(2) * c, i * ki);
        for x in 0..=max_xy {
            for y in i as i64..=max_xy {
                let bound = &factor * num_traits::pow(int(x + y), ki);
                tally.checked += 1;
                tally.violations += (tau(rho, i, x, y) > bound) as u64;
            }
        }
    }
    tally
}
