//! Seeded test-set generators.

use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{FieldScalar, GroupElement, Space, SymMatrix};
use quadreg::set::SubsetOfG;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    /// Each element independently with probability `density`.
    Random { density: f64 },
    AtomUnion { factor: QuadraticFactor, labels: Vec<AtomLabel> },
    /// {x : x^T M x = value}.
    QuadraticVariety { m: SymMatrix, value: FieldScalar },
    /// {x : x·r_i = a_i for all i}.
    Coset { vectors: Vec<GroupElement>, offsets: Vec<FieldScalar> },
}

pub fn generate_set(space: &Space, kind: &SetKind, seed: u64) -> anyhow::Result<SubsetOfG> {
    let p = space.p();
    let member: Vec<bool> = match kind {
        SetKind::Random { density } => {
            anyhow::ensure!((0.0..=1.0).contains(density), "density must lie in [0, 1]");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..space.size()).map(|_| rng.gen_bool(*density)).collect()
        }
        SetKind::AtomUnion { factor, labels } => {
            let mut member = vec![false; space.size()];
            for e in labels {
                for x in factor.enumerate_atom(space, e)? {
                    member[x] = true;
                }
            }
            member
        }
        SetKind::QuadraticVariety { m, value } => {
            anyhow::ensure!(m.n() == space.n(), "matrix size differs from n");
            m.check_range(p)?;
            (0..space.size()).map(|x| space.bilinear(m, x, x) == value % p.get()).collect()
        }
        SetKind::Coset { vectors, offsets } => {
            anyhow::ensure!(vectors.len() == offsets.len(), "need one offset per vector");
            anyhow::ensure!(vectors.iter().all(|v| v.len() == space.n()), "vector length differs from n");
            (0..space.size())
                .map(|x| vectors.iter().zip(offsets).all(|(r, &a)| space.dot(x, &r.0) == a % p.get()))
                .collect()
        }
    };
    Ok(SubsetOfG::from_membership(space, member)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use quadreg::gf::Prime;

    fn space() -> Space {
        Space::new(Prime::new(3).unwrap(), 2).unwrap()
    }

    #[test]
    fn coset_is_hyperplane() {
        let s = space();
        let kind = SetKind::Coset { vectors: vec![GroupElement(vec![1, 0])], offsets: vec![1] };
        let a = generate_set(&s, &kind, 0).unwrap();
        assert_eq!(a.elements(), vec![1, 4, 7]);
    }

    #[test]
    fn random_is_reproducible() {
        let s = space();
        let kind = SetKind::Random { density: 0.5 };
        assert_eq!(generate_set(&s, &kind, 7).unwrap(), generate_set(&s, &kind, 7).unwrap());
    }

    #[test]
    fn atom_union_is_exact() {
        let s = space();
        let f = QuadraticFactor::new(s.p(), 2, vec![], vec![SymMatrix::identity(2)]).unwrap();
        let labels = vec![AtomLabel::new(vec![], vec![0])];
        let a = generate_set(&s, &SetKind::AtomUnion { factor: f.clone(), labels: labels.clone() }, 0).unwrap();
        assert_eq!(a.elements(), f.enumerate_atom(&s, &labels[0]).unwrap());
        let v = generate_set(&s, &SetKind::QuadraticVariety { m: SymMatrix::identity(2), value: 0 }, 0).unwrap();
        assert_eq!(v, a);
    }
}
