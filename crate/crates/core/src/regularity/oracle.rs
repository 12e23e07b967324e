//! Search for a quadratic phase correlating with a function on an atom.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::RegularityConfig;
use crate::error::{Error, Result};
use crate::factors::QuadraticPolynomial;
use crate::gf::{GroupElement, Space, SymMatrix};
use crate::gowers::{dft, BoundedFunction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// Every polynomial when the count fits `exhaustive_cap`, else randomized.
    #[default]
    Exhaustive,
    Randomized,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(OracleKind::Exhaustive),
            "randomized" => Ok(OracleKind::Randomized),
            _ => Err(Error::Invalid(format!("unknown oracle '{s}'"))),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::Exhaustive => "exhaustive",
            OracleKind::Randomized => "randomized",
        })
    }
}

/// A polynomial ψ and |Σ_{x∈B} f(x)e(ψ(x)/p)|/|B|.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseWitness {
    pub poly: QuadraticPolynomial,
    pub correlation: f64,
}

fn roots(p: u32) -> Vec<Complex64> {
    (0..p).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64)).collect()
}

/// |Σ_{x∈atom} f(x)e(ψ(x)/p)| / |atom|.
pub fn correlation(space: &Space, f: &BoundedFunction, atom: &[usize], psi: &QuadraticPolynomial) -> Result<f64> {
    if atom.is_empty() {
        return Err(Error::DegenerateLabel("empty atom".into()));
    }
    let w = roots(space.p().get());
    let s: Complex64 = atom.iter().map(|&x| w[psi.eval(space, x) as usize] * f.value(x)).sum();
    Ok(s.norm() / atom.len() as f64)
}

/// Number of upper-triangular entries.
fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Per-element monomials x_i x_j (i ≤ j), doubled off the diagonal, so that
/// x^T M x = Σ m_ij·mono_ij.
struct Monomials {
    n: usize,
    p: u32,
    mono: Vec<u32>,
}

impl Monomials {
    fn new(space: &Space) -> Self {
        let p = space.p();
        let n = space.n();
        let mut mono = Vec::with_capacity(space.size() * tri(n));
        for x in 0..space.size() {
            let c = space.coords(x);
            for i in 0..n {
                for j in i..n {
                    let v = p.mul(c[i], c[j]);
                    mono.push(if i == j { v } else { p.mul(2, v) });
                }
            }
        }
        Monomials { n, p: p.get(), mono }
    }

    fn form(&self, upper: &[u32], x: usize) -> usize {
        let t = tri(self.n);
        let m = &self.mono[x * t..(x + 1) * t];
        (upper.iter().zip(m).map(|(a, b)| a * b).sum::<u32>() % self.p) as usize
    }
}

fn upper_from_code(n: usize, p: u32, mut code: u64) -> Vec<u32> {
    let mut up = vec![0; tri(n)];
    for slot in up.iter_mut() {
        *slot = (code % p as u64) as u32;
        code /= p as u64;
    }
    up
}

fn sym_from_upper(n: usize, up: &[u32]) -> SymMatrix {
    let mut e = vec![0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            e[i * n + j] = up[k];
            e[j * n + i] = up[k];
            k += 1;
        }
    }
    SymMatrix::new(n, e).expect("symmetric by construction")
}

/// For a fixed quadratic part, the linear part maximizing the correlation
/// (first maximum in index order) and the correlation itself.
fn best_for(space: &Space, mono: &Monomials, w: &[Complex64], f: &BoundedFunction, atom: &[usize], upper: &[u32]) -> (usize, f64) {
    let mut g = vec![Complex64::new(0.0, 0.0); space.size()];
    for &x in atom {
        g[x] = w[mono.form(upper, x)] * f.value(x);
    }
    let spectrum = dft(space, &g);
    let mut best = (0, -1.0);
    for (r, z) in spectrum.iter().enumerate() {
        let v = z.norm();
        if v > best.1 {
            best = (r, v);
        }
    }
    (best.0, best.1 / atom.len() as f64)
}

/// Whether the exhaustive search over all p^{n(n+1)/2+n+1} polynomials fits
/// the cap.
pub(crate) fn exhaustive_feasible(space: &Space, cap: u128) -> bool {
    let e = (tri(space.n()) + space.n() + 1) as u32;
    (space.p().get() as u128).checked_pow(e).is_some_and(|c| c <= cap)
}

/// The best polynomial found by the configured search, whether or not it
/// clears the threshold. `salt` decorrelates the random streams of distinct
/// cells.
pub fn best_correlation(space: &Space, f: &BoundedFunction, atom: &[usize], config: &RegularityConfig, salt: u64) -> Result<InverseWitness> {
    if atom.is_empty() {
        return Err(Error::DegenerateLabel("empty atom".into()));
    }
    let n = space.n();
    let p = space.p().get();
    let mono = Monomials::new(space);
    let w = roots(p);
    let uppers: Vec<Vec<u32>> = if config.oracle == OracleKind::Exhaustive && exhaustive_feasible(space, config.exhaustive_cap) {
        let total = (p as u64).pow(tri(n) as u32);
        (0..total).map(|k| upper_from_code(n, p, k)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut v = vec![vec![0; tri(n)]];
        for _ in 1..config.attempts.max(1) {
            let mut up = vec![0; tri(n)];
            let support = rng.gen_range(1..=tri(n).min(3));
            for _ in 0..support {
                up[rng.gen_range(0..tri(n))] = rng.gen_range(1..p);
            }
            v.push(up);
        }
        v
    };
    let results = config.exec.map_items(&uppers, |up| best_for(space, &mono, &w, f, atom, up));
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1 > results[best].1 {
            best = i;
        }
    }
    let (r, corr) = results[best];
    let poly = QuadraticPolynomial { m: sym_from_upper(n, &uppers[best]), r: GroupElement(space.coords(r).to_vec()), c: 0 };
    Ok(InverseWitness { poly, correlation: corr })
}

/// A witness with correlation ≥ δ^C/C and > 0, or `None`.
pub fn inverse_oracle(space: &Space, f: &BoundedFunction, atom: &[usize], delta: f64, config: &RegularityConfig, salt: u64) -> Result<Option<InverseWitness>> {
    let w = best_correlation(space, f, atom, config, salt)?;
    Ok((w.correlation > 0.0 && w.correlation >= config.threshold(delta)).then_some(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Prime;

    fn space(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn correlation_trivial_cases() {
        let s = space(2);
        let all: Vec<usize> = (0..9).collect();
        let zero = QuadraticPolynomial { m: SymMatrix::zero(2), r: GroupElement::zero(2), c: 0 };
        let one = BoundedFunction::constant_int(&s, 1, 1).unwrap();
        assert!((correlation(&s, &one, &all, &zero).unwrap() - 1.0).abs() < 1e-12);
        let z = BoundedFunction::constant_int(&s, 0, 1).unwrap();
        assert_eq!(correlation(&s, &z, &all, &zero).unwrap(), 0.0);
        assert!(inverse_oracle(&s, &z, &all, 0.3, &RegularityConfig::default(), 0).unwrap().is_none());
    }

    #[test]
    fn exhaustive_recovers_planted_phase() {
        let s = space(2);
        let psi0 = QuadraticPolynomial { m: SymMatrix::identity(2), r: GroupElement(vec![1, 0]), c: 0 };
        let vals: Vec<f64> = (0..9).map(|x| (2.0 * std::f64::consts::PI * psi0.eval(&s, x) as f64 / 3.0).cos()).collect();
        let f = BoundedFunction::from_values(&s, vals).unwrap();
        let all: Vec<usize> = (0..9).collect();
        assert!(correlation(&s, &f, &all, &psi0).unwrap() >= 0.5);
        let w = best_correlation(&s, &f, &all, &RegularityConfig::default(), 0).unwrap();
        assert!(w.correlation >= 0.5 - 1e-12);
        let direct = correlation(&s, &f, &all, &w.poly).unwrap();
        assert!((direct - w.correlation).abs() < 1e-9);
    }

    #[test]
    fn feasibility_threshold() {
        assert!(exhaustive_feasible(&space(3), 10_000_000));
        assert!(!exhaustive_feasible(&space(4), 10_000_000));
    }
}
