//! Global U² and U³ norms.
//!
//! Three engines compute ‖f‖⁸_{U³} = Σ_{G⁴} π_f:
//! * `u3_eighth_naive` enumerates G⁴ directly;
//! * `u3_eighth_fast` sums ‖g_h‖⁴_{U²} over h with g_h(x) = f(x)f(x+h), each
//!   U² norm taken through a DFT over Z_p^n;
//! * `u3_eighth_exact` uses the same decomposition with integer
//!   autocorrelations, for functions stored as integers over a common
//!   denominator.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::gf::Space;
use crate::par::Exec;

/// Largest G⁴ the naive engine will enumerate.
pub const NAIVE_CAP: u128 = 1 << 24;

/// Integer numerators over a shared positive denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledInts {
    pub den: i64,
    pub nums: Vec<i64>,
}

/// A function G → [−1, 1], stored densely by element index.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedFunction {
    values: Vec<f64>,
    exact: Option<ScaledInts>,
}

impl BoundedFunction {
    pub fn from_values(space: &Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::Dimension { expected: space.size(), got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::ValueOutOfRange(v));
        }
        Ok(BoundedFunction { values, exact: None })
    }

    /// f = nums / den, kept exact.
    pub fn from_rational(space: &Space, nums: Vec<i64>, den: i64) -> Result<Self> {
        if nums.len() != space.size() {
            return Err(Error::Dimension { expected: space.size(), got: nums.len() });
        }
        if den <= 0 {
            return Err(Error::Invalid("denominator must be positive".into()));
        }
        if let Some(&v) = nums.iter().find(|v| v.abs() > den) {
            return Err(Error::ValueOutOfRange(v as f64 / den as f64));
        }
        let values = nums.iter().map(|&v| v as f64 / den as f64).collect();
        Ok(BoundedFunction { values, exact: Some(ScaledInts { den, nums }) })
    }

    pub fn constant_int(space: &Space, c: i64, den: i64) -> Result<Self> {
        Self::from_rational(space, vec![c; space.size()], den)
    }

    pub fn indicator(space: &Space, member: &[bool]) -> Result<Self> {
        Self::from_rational(space, member.iter().map(|&b| b as i64).collect(), 1)
    }

    pub fn indicator_of(space: &Space, elements: &[usize]) -> Result<Self> {
        let mut member = vec![false; space.size()];
        for &x in elements {
            *member.get_mut(x).ok_or(Error::Invalid(format!("element {x} outside G")))? = true;
        }
        Self::indicator(space, &member)
    }

    /// (1_A − α_P)·1_P with α_P = |A∩P|/|P|, stored over the denominator |P|.
    pub fn balanced_on(space: &Space, a: &[bool], cell: &[usize]) -> Result<Self> {
        let size = cell.len() as i64;
        if size == 0 {
            return Self::constant_int(space, 0, 1);
        }
        let hits = cell.iter().filter(|&&x| a[x]).count() as i64;
        let mut nums = vec![0; space.size()];
        for &x in cell {
            nums[x] = if a[x] { size - hits } else { -hits };
        }
        Self::from_rational(space, nums, size)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn exact(&self) -> Option<&ScaledInts> {
        self.exact.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise product with an indicator.
    pub fn restrict(&self, member: &[bool]) -> Self {
        let values = self.values.iter().zip(member).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        let exact = self.exact.as_ref().map(|e| ScaledInts {
            den: e.den,
            nums: e.nums.iter().zip(member).map(|(&v, &m)| if m { v } else { 0 }).collect(),
        });
        BoundedFunction { values, exact }
    }

    pub fn restrict_to(&self, elements: &[usize]) -> Self {
        let mut member = vec![false; self.values.len()];
        for &x in elements {
            member[x] = true;
        }
        self.restrict(&member)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// The cube product Π_{ω∈{0,1}³} f(x + ω·h).
pub fn pi_f(space: &Space, f: &BoundedFunction, x: usize, h: [usize; 3]) -> f64 {
    let mut acc = 1.0;
    for w in 0..8usize {
        let mut y = x;
        for (i, &hi) in h.iter().enumerate() {
            if w >> i & 1 == 1 {
                y = space.add(y, hi);
            }
        }
        acc *= f.value(y);
    }
    acc
}

fn naive_guard(space: &Space, power: u32) -> Result<()> {
    let size = (space.size() as u128).pow(power);
    if size > NAIVE_CAP {
        return Err(Error::EnumerationCap { size, cap: NAIVE_CAP });
    }
    Ok(())
}

fn cube_sum<T, F>(space: &Space, exec: Exec, value: F) -> Vec<T>
where
    T: Copy + Send + Sync + std::ops::Mul<Output = T> + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync + Send,
{
    let n = space.size();
    let table = space.add_table();
    let add = |a: usize, b: usize| match &table {
        Some(t) => t[a * n + b] as usize,
        None => space.add(a, b),
    };
    exec.map(n, |x| {
        (0..n * n)
            .map(|k| {
                let x1 = add(x, k / n);
                let x2 = add(x, k % n);
                let x12 = add(x1, k % n);
                let base = value(x) * value(x1) * value(x2) * value(x12);
                let s: T = (0..n)
                    .map(|h3| value(add(x, h3)) * value(add(x1, h3)) * value(add(x2, h3)) * value(add(x12, h3)))
                    .sum();
                base * s
            })
            .sum()
    })
}

/// Σ_{G⁴} π_f by direct enumeration.
pub fn u3_eighth_naive(space: &Space, f: &BoundedFunction, exec: Exec) -> Result<f64> {
    naive_guard(space, 4)?;
    Ok(cube_sum(space, exec, |x| f.value(x)).into_iter().sum())
}

/// Σ_{G⁴} π_f by direct enumeration in exact arithmetic; `None` for
/// functions without an integer representation.
pub fn u3_eighth_naive_exact(space: &Space, f: &BoundedFunction, exec: Exec) -> Result<Option<BigRational>> {
    naive_guard(space, 4)?;
    let Some(e) = f.exact() else { return Ok(None) };
    let s: i128 = cube_sum(space, exec, |x| e.nums[x] as i128).into_iter().sum();
    Ok(Some(BigRational::new(BigInt::from(s), num_traits::pow(BigInt::from(e.den), 8))))
}

/// Σ_{x,h1,h2} f(x)f(x+h1)f(x+h2)f(x+h1+h2) by direct enumeration.
pub fn u2_fourth_naive(space: &Space, f: &BoundedFunction) -> Result<f64> {
    naive_guard(space, 3)?;
    let n = space.size();
    let mut total = 0.0;
    for x in 0..n {
        for h1 in 0..n {
            let x1 = space.add(x, h1);
            for h2 in 0..n {
                total += f.value(x) * f.value(x1) * f.value(space.add(x, h2)) * f.value(space.add(x1, h2));
            }
        }
    }
    Ok(total)
}

/// Unnormalized character sums ĝ(r) = Σ_x g(x) e(r·x/p), as n passes of
/// length-p transforms.
pub fn dft(space: &Space, g: &[Complex64]) -> Vec<Complex64> {
    let p = space.p().get() as usize;
    let roots: Vec<Complex64> = (0..p).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64)).collect();
    let mut data = g.to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1;
    for _ in 0..space.n() {
        let block = stride * p;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (r, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..p {
                        acc += data[base + j * stride] * roots[(r * j) % p];
                    }
                    *slot = acc;
                }
                for (j, &v) in buf.iter().enumerate() {
                    data[base + j * stride] = v;
                }
            }
        }
        stride = block;
    }
    data
}

fn u2_fourth_of(space: &Space, g: &[f64]) -> f64 {
    let input: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let s: f64 = dft(space, &input).iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
    s / space.size() as f64
}

/// ‖f‖⁴_{U²} through the Fourier identity p^{-n}·Σ_r |f̂(r)|⁴.
pub fn u2_fourth(space: &Space, f: &BoundedFunction) -> f64 {
    u2_fourth_of(space, f.values())
}

/// ‖f‖⁸_{U³} = Σ_h ‖g_h‖⁴_{U²} with g_h(x) = f(x)f(x+h).
pub fn u3_eighth_fast(space: &Space, f: &BoundedFunction, exec: Exec) -> f64 {
    let support: Vec<usize> = (0..space.size()).filter(|&x| f.value(x) != 0.0).collect();
    let per_h = exec.map(space.size(), |h| {
        let mut g = vec![0.0; space.size()];
        let mut any = false;
        for &x in &support {
            let v = f.value(x) * f.value(space.add(x, h));
            if v != 0.0 {
                g[x] = v;
                any = true;
            }
        }
        if any {
            u2_fourth_of(space, &g)
        } else {
            0.0
        }
    });
    per_h.into_iter().sum()
}

/// Exact ‖f‖⁸_{U³} for integer-backed functions: Σ_h Σ_k A_h(k)² where A_h is
/// the autocorrelation of g_h. `None` if `f` has no exact form.
pub fn u3_eighth_exact(space: &Space, f: &BoundedFunction, exec: Exec) -> Option<BigRational> {
    let e = f.exact()?;
    let support: Vec<usize> = (0..space.size()).filter(|&x| e.nums[x] != 0).collect();
    let per_h = exec.map(space.size(), |h| {
        let g: Vec<(usize, i128)> = support
            .iter()
            .filter_map(|&x| {
                let v = e.nums[x] as i128 * e.nums[space.add(x, h)] as i128;
                (v != 0).then_some((x, v))
            })
            .collect();
        if g.is_empty() {
            return 0i128;
        }
        let mut auto = vec![0i128; space.size()];
        for &(x, gx) in &g {
            for &(y, gy) in &g {
                auto[space.sub(y, x)] += gx * gy;
            }
        }
        auto.iter().map(|a| a * a).sum()
    });
    let s: i128 = per_h.into_iter().sum();
    Some(BigRational::new(BigInt::from(s), num_traits::pow(BigInt::from(e.den), 8)))
}

/// ‖f‖⁸_{U³}: exact when `f` is integer-backed and small enough, DFT otherwise.
pub fn u3_eighth(space: &Space, f: &BoundedFunction, exec: Exec) -> f64 {
    if let Some(e) = f.exact() {
        let support = e.nums.iter().filter(|&&v| v != 0).count() as u128;
        if support * support * space.size() as u128 <= 200_000_000 {
            if let Some(v) = u3_eighth_exact(space, f, exec) {
                return v.to_f64().unwrap_or(f64::NAN);
            }
        }
    }
    u3_eighth_fast(space, f, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Prime;

    fn space(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn constants() {
        let s = space(2);
        let one = BoundedFunction::constant_int(&s, 1, 1).unwrap();
        let zero = BoundedFunction::constant_int(&s, 0, 1).unwrap();
        assert_eq!(u3_eighth_naive(&s, &one, Exec::Sequential).unwrap(), 6561.0);
        assert_eq!(u3_eighth_naive(&s, &zero, Exec::Sequential).unwrap(), 0.0);
        assert!((u3_eighth_fast(&s, &one, Exec::Parallel) - 6561.0).abs() < 1e-6);
        assert_eq!(u3_eighth_exact(&s, &one, Exec::Parallel).unwrap(), BigRational::from_integer(6561.into()));
        assert!((u2_fourth(&s, &one) - 729.0).abs() < 1e-9);
        assert_eq!(u2_fourth_naive(&s, &one).unwrap(), 729.0);
        assert_eq!(pi_f(&s, &one, 4, [1, 2, 3]), 1.0);
        let half = BoundedFunction::from_values(&s, vec![0.5; 9]).unwrap();
        assert_eq!(pi_f(&s, &half, 0, [5, 6, 7]), 0.5f64.powi(8));
    }

    #[test]
    fn subgroup_indicator() {
        let s = space(2);
        // H = {x : x_0 = 0}, index 3.
        let member: Vec<bool> = (0..9).map(|x| s.coords(x)[0] == 0).collect();
        let f = BoundedFunction::indicator(&s, &member).unwrap();
        assert_eq!(u3_eighth_naive(&s, &f, Exec::Sequential).unwrap(), 81.0);
        assert_eq!(u3_eighth_exact(&s, &f, Exec::Sequential).unwrap(), BigRational::from_integer(81.into()));
        assert!((u3_eighth_fast(&s, &f, Exec::Sequential) - 81.0).abs() < 1e-9);
        assert_eq!(u2_fourth_naive(&s, &f).unwrap(), 27.0);
        assert!((u2_fourth(&s, &f) - 27.0).abs() < 1e-9);
        let h = s.encode(&[0, 1]);
        let off = s.encode(&[1, 0]);
        assert_eq!(pi_f(&s, &f, h, [h, 0, h]), 1.0);
        assert_eq!(pi_f(&s, &f, h, [off, 0, h]), 0.0);
    }

    #[test]
    fn dft_of_delta_is_flat() {
        let s = space(2);
        let mut g = vec![Complex64::new(0.0, 0.0); 9];
        g[0] = Complex64::new(1.0, 0.0);
        assert!(dft(&s, &g).iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn naive_refuses_large_groups() {
        let s = space(5);
        let one = BoundedFunction::constant_int(&s, 1, 1).unwrap();
        assert!(matches!(u3_eighth_naive(&s, &one, Exec::Parallel), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn range_checks() {
        let s = space(1);
        assert!(BoundedFunction::from_values(&s, vec![0.0, 1.5, 0.0]).is_err());
        assert!(BoundedFunction::from_rational(&s, vec![0, 3, 0], 2).is_err());
    }
}
