//! Growth functions ρ evaluated exactly over the rationals.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An increasing function ρ used as a rank demand.
///
/// Arguments below zero are clamped to zero, so every kind is nondecreasing
/// on the whole line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthFunction {
    /// ρ(x) = K·x.
    Linear(BigRational),
    /// ρ(x) = C·x^d.
    Poly { coef: BigRational, degree: u32 },
    /// Piecewise linear through (i, v_i), extended with the last slope.
    Table(Vec<BigRational>),
}

impl GrowthFunction {
    pub fn linear(k: i64) -> Self {
        GrowthFunction::Linear(BigRational::from_integer(k.into()))
    }

    pub fn poly(c: i64, degree: u32) -> Self {
        GrowthFunction::Poly { coef: BigRational::from_integer(c.into()), degree }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthFunction::Linear(k) if !k.is_positive() => Err(Error::Growth("linear slope must be positive".into())),
            GrowthFunction::Poly { coef, degree } if !coef.is_positive() || *degree == 0 => {
                Err(Error::Growth("poly needs a positive coefficient and degree >= 1".into()))
            }
            GrowthFunction::Table(v) => {
                if v.len() < 2 {
                    return Err(Error::Growth("table needs at least two values".into()));
                }
                if v[0].is_negative() || v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Growth("table values must be nonnegative and increasing".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let x = if x.is_negative() { BigRational::zero() } else { x.clone() };
        match self {
            GrowthFunction::Linear(k) => k * x,
            GrowthFunction::Poly { coef, degree } => coef * num_traits::pow(x, *degree as usize),
            GrowthFunction::Table(v) => {
                let last = v.len() - 1;
                let floor = x.floor().to_integer().to_usize().unwrap_or(usize::MAX);
                let i = floor.min(last - 1);
                let frac = &x - BigRational::from_integer(BigInt::from(i));
                &v[i] + (&v[i + 1] - &v[i]) * frac
            }
        }
    }

    pub fn eval_int(&self, x: i64) -> BigRational {
        self.eval(&BigRational::from_integer(x.into()))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match BigRational::from_float(x) {
            Some(r) => self.eval(&r).to_f64().unwrap_or(f64::INFINITY),
            None => f64::NAN,
        }
    }

    /// Whether `rank < ρ(x)`, compared exactly.
    pub fn exceeds(&self, x: usize, rank: usize) -> bool {
        BigRational::from_integer(rank.into()) < self.eval_int(x as i64)
    }

    /// Polynomial degree, 1 for linear, `None` for tables.
    pub fn degree(&self) -> Option<u32> {
        match self {
            GrowthFunction::Linear(_) => Some(1),
            GrowthFunction::Poly { degree, .. } => Some(*degree),
            GrowthFunction::Table(_) => None,
        }
    }

    /// Leading coefficient of a linear or polynomial ρ.
    pub fn coefficient(&self) -> Option<BigRational> {
        match self {
            GrowthFunction::Linear(k) => Some(k.clone()),
            GrowthFunction::Poly { coef, .. } => Some(coef.clone()),
            GrowthFunction::Table(_) => None,
        }
    }

    /// Checks ρ(x) ≥ x and ρ(x+1) > ρ(x) for integers 1 ≤ x ≤ `upto`.
    pub fn require_dominates_identity(&self, upto: i64) -> Result<()> {
        self.validate()?;
        for x in 1..=upto {
            let v = self.eval_int(x);
            if v < BigRational::from_integer(x.into()) {
                return Err(Error::Growth(format!("rho({x}) < {x}")));
            }
            if self.eval_int(x + 1) <= v {
                return Err(Error::Growth(format!("rho is not increasing at {x}")));
            }
        }
        Ok(())
    }
}

/// Parses `3`, `-2`, `1.25` or `7/4` as an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Growth(format!("cannot parse number {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    s.parse::<BigInt>().map(BigRational::from_integer).map_err(|_| bad())
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl FromStr for GrowthFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').ok_or_else(|| Error::Growth(format!("expected kind:args, got {s:?}")))?;
        let g = match kind.trim() {
            "linear" => GrowthFunction::Linear(parse_rational(args)?),
            "poly" => {
                let (c, d) = args.split_once(',').ok_or_else(|| Error::Growth("poly expects C,d".into()))?;
                let degree = d.trim().parse().map_err(|_| Error::Growth(format!("bad degree {d:?}")))?;
                GrowthFunction::Poly { coef: parse_rational(c)?, degree }
            }
            "table" => GrowthFunction::Table(args.split(',').map(parse_rational).collect::<Result<_>>()?),
            other => return Err(Error::Growth(format!("unknown kind {other:?}"))),
        };
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthFunction::Linear(k) => write!(f, "linear:{}", fmt_rational(k)),
            GrowthFunction::Poly { coef, degree } => write!(f, "poly:{},{}", fmt_rational(coef), degree),
            GrowthFunction::Table(v) => {
                let parts: Vec<String> = v.iter().map(fmt_rational).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn parse_and_eval() {
        let g: GrowthFunction = "linear:1.5".parse().unwrap();
        assert_eq!(g.eval_int(4), q(6, 1));
        assert_eq!(g.to_string(), "linear:3/2");
        let g: GrowthFunction = "poly:3,2".parse().unwrap();
        assert_eq!(g.eval_int(5), q(75, 1));
        assert_eq!(g.eval_int(-5), q(0, 1));
        assert!("poly:0,2".parse::<GrowthFunction>().is_err());
        assert!("cubic:1".parse::<GrowthFunction>().is_err());
    }

    #[test]
    fn table_interpolates_and_extends() {
        let g: GrowthFunction = "table:0,2,5".parse().unwrap();
        assert_eq!(g.eval(&q(1, 2)), q(1, 1));
        assert_eq!(g.eval_int(2), q(5, 1));
        assert_eq!(g.eval_int(4), q(11, 1));
        assert!("table:0,3,2".parse::<GrowthFunction>().is_err());
    }

    #[test]
    fn domination_check() {
        assert!(GrowthFunction::linear(1).require_dominates_identity(50).is_ok());
        let half: GrowthFunction = "linear:1/2".parse().unwrap();
        assert!(half.require_dominates_identity(5).is_err());
    }

    #[test]
    fn exceeds_is_exact() {
        let g: GrowthFunction = "linear:3".parse().unwrap();
        assert!(g.exceeds(1, 2));
        assert!(!g.exceeds(1, 3));
    }
}
