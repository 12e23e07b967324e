//! Values computed once by the independent oracles in this file, then frozen.

use num_bigint::BigInt;
use num_rational::BigRational;
use quadreg::chains::{f_sigma, tau, GrowthFunction};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{GroupElement, Prime, Space, SymMatrix};
use quadreg::gowers::{u3_eighth, BoundedFunction};
use quadreg::localnorms::{omega_count, FactorForms};
use quadreg::Exec;

fn space(n: usize) -> Space {
    Space::new(Prime::new(3).unwrap(), n).unwrap()
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Cube points x + ω·h, computed on coordinates.
fn cube(x: &[u32], h: [&[u32]; 3]) -> Vec<Vec<u32>> {
    (0..8)
        .map(|w: usize| (0..x.len()).map(|i| (x[i] + (0..3).filter(|&j| w >> j & 1 == 1).map(|j| h[j][i]).sum::<u32>()) % 3).collect())
        .collect()
}

fn coords(n: usize, mut i: usize) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let d = (i % 3) as u32;
            i /= 3;
            d
        })
        .collect()
}

/// Number of cubes of G with all eight points in `inside`.
fn cubes_inside(n: usize, inside: impl Fn(&[u32]) -> bool) -> u64 {
    let g = 3usize.pow(n as u32);
    let pts: Vec<Vec<u32>> = (0..g).map(|i| coords(n, i)).collect();
    let mut count = 0;
    for x in &pts {
        for h1 in &pts {
            for h2 in &pts {
                for h3 in &pts {
                    count += cube(x, [h1, h2, h3]).iter().all(|y| inside(y)) as u64;
                }
            }
        }
    }
    count
}

#[test]
fn hyperplane_indicator_norm() {
    let s = space(2);
    let member: Vec<bool> = (0..9).map(|i| coords(2, i)[0] == 0).collect();
    let oracle = cubes_inside(2, |y| y[0] == 0);
    assert_eq!(oracle, 81);
    assert_eq!(u3_eighth(&s, &BoundedFunction::indicator(&s, &member).unwrap(), Exec::Sequential), 81.0);
}

#[test]
fn omega_of_sum_of_squares() {
    // |Ω_B| for B = {x : x·x = b}, b = 0, 1, 2.
    let frozen = [(2, [1u64, 64, 64]), (3, [801, 168, 3264])];
    for (n, want) in frozen {
        let s = space(n);
        let f = QuadraticFactor::new(s.p(), n, vec![], vec![SymMatrix::identity(n)]).unwrap();
        let forms = FactorForms::new(&s, &f);
        for b in 0..3u32 {
            let got = omega_count(&forms, &AtomLabel::new(vec![], vec![b]), Exec::Sequential).unwrap();
            let oracle = cubes_inside(n, |y| y.iter().map(|v| v * v).sum::<u32>() % 3 == b);
            assert_eq!(got, oracle, "n={n} b={b}");
            assert_eq!(got, want[b as usize], "n={n} b={b}");
        }
    }
}

#[test]
fn omega_of_planted_factor() {
    let s = space(2);
    let f = QuadraticFactor::new(s.p(), 2, vec![GroupElement::unit(2, 0)], vec![SymMatrix::identity(2)]).unwrap();
    let forms = FactorForms::new(&s, &f);
    for a in 0..3u32 {
        for b in 0..3u32 {
            let got = omega_count(&forms, &AtomLabel::new(vec![a], vec![b]), Exec::Sequential).unwrap();
            let oracle = cubes_inside(2, |y| y[0] == a && (y[0] * y[0] + y[1] * y[1]) % 3 == b);
            assert_eq!(got, oracle, "label ({a}|{b})");
        }
    }
}

#[test]
fn chain_recursions_by_hand() {
    let x = GrowthFunction::linear(1);
    // (0,0) → (1,1) → (2,2) → (2+ρ(4), 1)
    assert_eq!(f_sigma(&x, &"++-".parse().unwrap()), (int(6), int(1)));
    // (0,0) → (0+ρ(0), −1) → (1, 0)
    assert_eq!(f_sigma(&x, &"-+".parse().unwrap()), (int(1), int(0)));
    // τ_1 = 1 + 2·(1+3) = 9, τ_2 = 9 + 2·(9+3−1) = 31
    let two_x = GrowthFunction::linear(2);
    assert_eq!(tau(&two_x, 2, 1, 3), int(31));
    // x²: τ_1 = 2 + (2+2)² = 18
    assert_eq!(tau(&GrowthFunction::poly(1, 2), 1, 2, 2), int(18));
}
