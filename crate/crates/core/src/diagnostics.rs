//! Observed-versus-predicted sizes for high-rank factors, and brute-force
//! counts for the two explicit linear-independence inequalities.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::Result;
use crate::factors::{AtomLabel, QuadraticFactor};
use crate::gf::{mat_rank, FieldScalar, GroupElement, Matrix, Prime, Space};
use crate::localnorms::{omega_count, omega_predicted, omega_tuples, preimage_intersection, FactorForms, LocalLabelTuple};
use crate::par::Exec;

/// One observed/predicted pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeRow {
    pub lemma: &'static str,
    pub key: String,
    pub observed: f64,
    pub predicted: f64,
    pub ratio: f64,
}

impl SizeRow {
    fn new(lemma: &'static str, key: String, observed: f64, predicted: f64) -> Self {
        SizeRow { lemma, key, observed, predicted, ratio: observed / predicted }
    }
}

fn powf(p: Prime, e: i64) -> f64 {
    (p.get() as f64).powi(e as i32)
}

fn fmt_digits(v: &[FieldScalar]) -> String {
    v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
}

/// Atom sizes against p^{n−ℓ−q}, fibre sizes of β_Q against p^{2n−q},
/// |Ω_B| against p^{4n−4ℓ−7q}, and the two-variable normalized fibre
/// expectation E_{x∈B(a),y∈B(a′)} μ_{β_Q^{-1}(b)}(x, y) against 1.
pub fn size_lemma_rows(space: &Space, factor: &QuadraticFactor, exec: Exec) -> Result<Vec<SizeRow>> {
    let p = space.p();
    let n = space.n() as i64;
    let (l, q) = factor.complexity();
    let forms = FactorForms::new(space, factor);
    let mut rows = Vec::new();
    let atoms = factor.atoms(space);
    for (code, atom) in atoms.iter().enumerate() {
        let key = factor.label(code).to_string();
        rows.push(SizeRow::new("atom-size", key.clone(), atom.len() as f64, powf(p, n - l as i64 - q as i64)));
        let omega = omega_count(&forms, &factor.label(code), exec)?;
        rows.push(SizeRow::new("omega-size", key, omega as f64, omega_predicted(p, space.n(), l, q)));
    }
    let g = space.size();
    let fibres = (p.get() as usize).pow(q as u32);
    let counts = exec.map(g, |x| {
        let mut c = vec![0u64; fibres];
        for y in 0..g {
            let code = forms.beta_q(x, y).iter().rev().fold(0, |acc, &v| acc * p.get() as usize + v as usize);
            c[code] += 1;
        }
        c
    });
    let mut fibre = vec![0u64; fibres];
    for c in &counts {
        for (t, v) in fibre.iter_mut().zip(c) {
            *t += v;
        }
    }
    let digits = |mut code: usize| -> Vec<FieldScalar> {
        (0..q)
            .map(|_| {
                let d = (code % p.get() as usize) as u32;
                code /= p.get() as usize;
                d
            })
            .collect()
    };
    for (code, &size) in fibre.iter().enumerate() {
        rows.push(SizeRow::new("beta-fibre", fmt_digits(&digits(code)), size as f64, powf(p, 2 * n - q as i64)));
    }
    for (ca, xa) in atoms.iter().enumerate() {
        for (cb, yb) in atoms.iter().enumerate() {
            if xa.is_empty() || yb.is_empty() {
                continue;
            }
            for (code, &size) in fibre.iter().enumerate() {
                if size == 0 {
                    continue;
                }
                let b = digits(code);
                let hits = xa.iter().map(|&x| yb.iter().filter(|&&y| forms.beta_is(x, y, &b)).count()).sum::<usize>();
                let expectation = hits as f64 * (g * g) as f64 / size as f64 / (xa.len() * yb.len()) as f64;
                let key = format!("{} {} [{}]", factor.label(ca), factor.label(cb), fmt_digits(&b));
                rows.push(SizeRow::new("fibre-expectation", key, expectation, 1.0));
            }
        }
    }
    Ok(rows)
}

/// Whether L ∪ {M w : M ∈ Q, w ∈ ws}, taken as a list, is linearly
/// independent (a zero or repeated vector makes it dependent).
pub fn family_independent(space: &Space, factor: &QuadraticFactor, ws: &[usize]) -> bool {
    let p = space.p();
    let mut rows: Vec<GroupElement> = factor.linear().to_vec();
    for &w in ws {
        for m in factor.quadratic() {
            rows.push(GroupElement(m.apply(p, space.coords(w))));
        }
    }
    if rows.is_empty() {
        return true;
    }
    if rows.len() > space.n() {
        return false;
    }
    let len = rows.len();
    let m = Matrix::from_rows(space.n(), &rows).expect("rows have length n");
    mat_rank(p, &m) == len
}

/// A brute-force count against an explicit bound c·p^e.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub count: u64,
    pub constant: u64,
    pub exponent: i64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: &'static str, p: Prime, count: u64, constant: u64, exponent: i64) -> Self {
        // count ≤ c·p^e, compared as count·p^{max(−e,0)} ≤ c·p^{max(e,0)}.
        let pb = BigInt::from(p.get());
        let lhs = BigInt::from(count) * num_traits::pow(pb.clone(), (-exponent).max(0) as usize);
        let rhs = BigInt::from(constant) * num_traits::pow(pb, exponent.max(0) as usize);
        InequalityCheck { name, count, constant, exponent, holds: lhs <= rhs }
    }
}

/// #{x : L ∪ {Mw : w ∈ S} ∪ {Mx} dependent} ≤ p^{n+ℓ+(k+1)q−r}, for a set S
/// whose own family is independent.
pub fn badcount1(space: &Space, factor: &QuadraticFactor, s: &[usize]) -> Result<Option<InequalityCheck>> {
    if !family_independent(space, factor, s) {
        return Ok(None);
    }
    let r = factor.rank()? as i64;
    let mut ws = s.to_vec();
    ws.push(0);
    let count = (0..space.size())
        .filter(|&x| {
            *ws.last_mut().expect("nonempty") = x;
            !family_independent(space, factor, &ws)
        })
        .count() as u64;
    let (l, q) = factor.complexity();
    let e = space.n() as i64 + l as i64 + (s.len() as i64 + 1) * q as i64 - r;
    Ok(Some(InequalityCheck::new("badcount1", space.p(), count, 1, e)))
}

/// #{(w_1..w_4) ∈ G⁴ : L ∪ {M w_i} dependent} ≤ 14·p^{4n+ℓ+4q−r}.
pub fn omegagood(space: &Space, factor: &QuadraticFactor, exec: Exec) -> Result<InequalityCheck> {
    let r = factor.rank()? as i64;
    let g = space.size();
    let counts = exec.map(g, |w1| {
        let mut c = 0u64;
        for w2 in 0..g {
            for w3 in 0..g {
                for w4 in 0..g {
                    if !family_independent(space, factor, &[w1, w2, w3, w4]) {
                        c += 1;
                    }
                }
            }
        }
        c
    });
    let (l, q) = factor.complexity();
    let e = 4 * space.n() as i64 + l as i64 + 4 * q as i64 - r;
    Ok(InequalityCheck::new("omegagood", space.p(), counts.into_iter().sum(), 14, e))
}

/// Preimage sizes |Ψ^{-1}(t) ∩ K₂₂₂(d)| over Ω_{B(Σ(d))}: the largest
/// against p^{2n−2ℓ−3q}, and the mean over tuples whose family is
/// independent against p^{2n−2ℓ−11q}.
pub fn preimage_size_rows(space: &Space, factor: &QuadraticFactor, d: &LocalLabelTuple, e: &AtomLabel, max_tuples: usize) -> Result<Vec<SizeRow>> {
    let p = space.p();
    let forms = FactorForms::new(space, factor);
    let (l, q) = factor.complexity();
    let n = space.n() as i64;
    let mut max = 0usize;
    let mut indep = (0usize, 0usize);
    for t in omega_tuples(&forms, e)?.into_iter().take(max_tuples) {
        let size = preimage_intersection(&forms, d, e, t[0], t[1], t[2], t[3])?.len();
        max = max.max(size);
        if family_independent(space, factor, &t) {
            indep.0 += size;
            indep.1 += 1;
        }
    }
    let key = format!("{e}");
    let mut rows = vec![SizeRow::new("preimage-max", key.clone(), max as f64, powf(p, 2 * n - 2 * l as i64 - 3 * q as i64))];
    if indep.1 > 0 {
        let mean = indep.0 as f64 / indep.1 as f64;
        rows.push(SizeRow::new("preimage-independent-mean", key, mean, powf(p, 2 * n - 2 * l as i64 - 11 * q as i64)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::SymMatrix;

    fn space(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn trivial_factor_sizes_are_exact() {
        let s = space(2);
        let t = QuadraticFactor::trivial(s.p(), 2);
        let rows = size_lemma_rows(&s, &t, Exec::Sequential).unwrap();
        assert!(rows.iter().all(|r| (r.ratio - 1.0).abs() < 1e-12), "{rows:?}");
    }

    #[test]
    fn independence_of_families() {
        let s = space(2);
        let f = QuadraticFactor::new(s.p(), 2, vec![], vec![SymMatrix::identity(2)]).unwrap();
        assert!(!family_independent(&s, &f, &[0]));
        assert!(family_independent(&s, &f, &[1]));
        assert!(!family_independent(&s, &f, &[1, 2]));
        assert!(family_independent(&s, &f, &[1, 3]));
    }

    #[test]
    fn inequalities_hold_on_small_case() {
        let s = space(2);
        let f = QuadraticFactor::new(s.p(), 2, vec![], vec![SymMatrix::identity(2)]).unwrap();
        let b = badcount1(&s, &f, &[]).unwrap().unwrap();
        assert_eq!(b.count, 1);
        assert!(b.holds);
        assert!(omegagood(&s, &f, Exec::Sequential).unwrap().holds);
    }
}
