//! Brute-force VC- and VC₂-dimension of subsets of F_p^n under addition.
//!
//! Shifting every a_i by t and every b (or c) by −t preserves the sums, so
//! a_1 = 0 (and b_1 = 0 for VC₂) without loss of generality. Permuting the
//! a_i permutes the patterns, so the remaining a_i are taken increasing.

use serde::Serialize;

pub use crate::set::SubsetOfG;
use crate::error::{Error, Result};
use crate::gf::Space;
use crate::par::Exec;

/// Largest k the searches accept.
pub const KMAX_CAP: usize = 3;

/// a_1..a_k and, for each pattern S ⊆ [k] (bit i set iff i ∈ S), a b_S.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VcWitness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// a_1..a_k, b_1..b_k and, for each S ⊆ [k]² (bit i·k + j set iff
/// (i, j) ∈ S), a c_S.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Vc2Witness {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

/// Increasing tuples (0, x_2, …, x_k) with 0 < x_2 < … < x_k < size.
fn anchored_tuples(size: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0];
    fn rec(size: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(0) + 1;
        for x in start..size {
            cur.push(x);
            rec(size, k, cur, out);
            cur.pop();
        }
    }
    if k > 0 {
        rec(size, k, &mut cur, &mut out);
    }
    out
}

fn check_k(k: usize) -> Result<()> {
    if k > KMAX_CAP {
        return Err(Error::KTooLarge(k));
    }
    Ok(())
}

/// For each pattern of the points `pts` shifted by t, the first t realizing it.
fn pattern_shifts(space: &Space, a: &SubsetOfG, pts: &[usize]) -> Option<Vec<usize>> {
    let patterns = 1usize << pts.len();
    let mut first = vec![usize::MAX; patterns];
    let mut found = 0;
    for t in 0..space.size() {
        let pat = pts.iter().enumerate().fold(0, |acc, (i, &x)| acc | (a.contains(space.add(x, t)) as usize) << i);
        if first[pat] == usize::MAX {
            first[pat] = t;
            found += 1;
            if found == patterns {
                return Some(first);
            }
        }
    }
    None
}

/// A VC witness of size k, the first in search order.
pub fn vc_witness(space: &Space, a: &SubsetOfG, k: usize, exec: Exec) -> Result<Option<VcWitness>> {
    check_k(k)?;
    if k == 0 {
        return Ok(Some(VcWitness { a: vec![], b: vec![0] }));
    }
    if (1usize << k) > space.size() {
        return Ok(None);
    }
    let tuples = anchored_tuples(space.size(), k);
    let found = exec.map_items(&tuples, |t| pattern_shifts(space, a, t));
    Ok(tuples.into_iter().zip(found).find_map(|(t, f)| f.map(|b| VcWitness { a: t, b })))
}

pub fn vc_dim_at_least(space: &Space, a: &SubsetOfG, k: usize) -> Result<bool> {
    Ok(vc_witness(space, a, k, Exec::default())?.is_some())
}

/// A VC₂ witness of size k, the first in search order.
pub fn vc2_witness(space: &Space, a: &SubsetOfG, k: usize, exec: Exec) -> Result<Option<Vc2Witness>> {
    check_k(k)?;
    if k == 0 {
        return Ok(Some(Vc2Witness { a: vec![], b: vec![], c: vec![0] }));
    }
    if (1u128 << (k * k)) > space.size() as u128 {
        return Ok(None);
    }
    let tuples = anchored_tuples(space.size(), k);
    // Transposing the grid permutes the patterns, so a ≤ b lexicographically.
    let grids: Vec<(usize, usize)> = (0..tuples.len()).flat_map(|i| (i..tuples.len()).map(move |j| (i, j))).collect();
    let found = exec.map_items(&grids, |&(i, j)| {
        let sums: Vec<usize> = tuples[i].iter().flat_map(|&x| tuples[j].iter().map(move |&y| space.add(x, y))).collect();
        pattern_shifts(space, a, &sums)
    });
    Ok(grids
        .into_iter()
        .zip(found)
        .find_map(|((i, j), f)| f.map(|c| Vc2Witness { a: tuples[i].clone(), b: tuples[j].clone(), c })))
}

pub fn vc2_dim_at_least(space: &Space, a: &SubsetOfG, k: usize) -> Result<bool> {
    Ok(vc2_witness(space, a, k, Exec::default())?.is_some())
}

/// Largest k ≤ kmax with a witness; `saturated` when k = kmax, in which case
/// the true value may be larger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimReport<W> {
    pub value: usize,
    pub saturated: bool,
    pub witness: Option<W>,
}

pub fn vc_dim(space: &Space, a: &SubsetOfG, kmax: usize, exec: Exec) -> Result<DimReport<VcWitness>> {
    check_k(kmax)?;
    let mut best = DimReport { value: 0, saturated: kmax == 0, witness: None };
    for k in 1..=kmax {
        match vc_witness(space, a, k, exec)? {
            Some(w) => best = DimReport { value: k, saturated: k == kmax, witness: Some(w) },
            None => break,
        }
    }
    Ok(best)
}

pub fn vc2_dim(space: &Space, a: &SubsetOfG, kmax: usize, exec: Exec) -> Result<DimReport<Vc2Witness>> {
    check_k(kmax)?;
    let mut best = DimReport { value: 0, saturated: kmax == 0, witness: None };
    for k in 1..=kmax {
        match vc2_witness(space, a, k, exec)? {
            Some(w) => best = DimReport { value: k, saturated: k == kmax, witness: Some(w) },
            None => break,
        }
    }
    Ok(best)
}

/// Whether `w` really shatters: a_i + b_j + c_S ∈ A iff (i, j) ∈ S.
pub fn check_vc2_witness(space: &Space, a: &SubsetOfG, w: &Vc2Witness) -> bool {
    let k = w.a.len();
    w.b.len() == k
        && w.c.len() == 1 << (k * k)
        && w.c.iter().enumerate().all(|(s, &c)| {
            (0..k).all(|i| (0..k).all(|j| a.contains(space.add(space.add(w.a[i], w.b[j]), c)) == (s >> (i * k + j) & 1 == 1)))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Prime;

    fn space(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn trivial_sets() {
        let s = space(2);
        for a in [SubsetOfG::empty(&s), SubsetOfG::full(&s)] {
            assert!(!vc_dim_at_least(&s, &a, 1).unwrap());
            assert!(!vc2_dim_at_least(&s, &a, 1).unwrap());
            assert_eq!(vc2_dim(&s, &a, 2, Exec::Sequential).unwrap().value, 0);
        }
    }

    #[test]
    fn proper_subsets_have_vc_dim_one() {
        let s = space(2);
        let line = SubsetOfG::from_elements(&s, &[0, 1, 2]).unwrap();
        assert!(vc_dim_at_least(&s, &line, 1).unwrap());
        assert!(vc2_dim_at_least(&s, &line, 1).unwrap());
    }

    #[test]
    fn refuses_large_k() {
        let s = space(1);
        assert_eq!(vc2_dim(&s, &SubsetOfG::empty(&s), 4, Exec::Sequential), Err(Error::KTooLarge(4)));
    }

    #[test]
    fn witnesses_check_out() {
        let s = space(3);
        let a = SubsetOfG::from_elements(&s, &[0, 1, 4, 5, 9, 13, 17, 20, 22, 26]).unwrap();
        if let Some(w) = vc2_witness(&s, &a, 2, Exec::Sequential).unwrap() {
            assert!(check_vc2_witness(&s, &a, &w));
        }
        let w = vc2_witness(&s, &a, 1, Exec::Sequential).unwrap().unwrap();
        assert!(check_vc2_witness(&s, &a, &w));
    }
}
