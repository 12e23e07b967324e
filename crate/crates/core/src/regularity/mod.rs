//! The index (energy), the inverse-theorem search oracle, and the global and
//! cylinder decompositions together with the final assembly.

mod assemble;
mod cylinder;
mod global;
mod oracle;

pub use assemble::{assemble_main, AssemblyReport, MainConfig};
pub use cylinder::{cylinder_decompose, energy_step, verify_cylinder, CylinderCell, CylinderOutcome, CylinderVerification, EnergyStep};
pub use global::{global_decompose, GlobalAtom, GlobalOutcome};
pub use oracle::{best_correlation, correlation, inverse_oracle, InverseWitness, OracleKind};

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factors::{AtomLabel, QuadraticFactor};
use crate::gf::Space;
use crate::par::Exec;
use crate::set::SubsetOfG;

/// Knobs shared by both decompositions.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityConfig {
    /// Correlation constant C; the splitting threshold is δ^C/C.
    pub c_inv: u32,
    pub oracle: OracleKind,
    /// Largest polynomial count searched exhaustively.
    pub exhaustive_cap: u128,
    /// Random restarts of the randomized oracle.
    pub attempts: usize,
    pub seed: u64,
    /// Step budget; `None` means ⌈C²δ^{−2C−2}⌉.
    pub max_steps: Option<usize>,
    pub exec: Exec,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            c_inv: 4,
            oracle: OracleKind::Exhaustive,
            exhaustive_cap: 10_000_000,
            attempts: 2000,
            seed: 0,
            max_steps: None,
            exec: Exec::default(),
        }
    }
}

impl RegularityConfig {
    /// δ^C / C.
    pub fn threshold(&self, delta: f64) -> f64 {
        delta.powi(self.c_inv as i32) / self.c_inv as f64
    }

    pub fn step_budget(&self, delta: f64) -> usize {
        self.max_steps.unwrap_or_else(|| {
            let c = self.c_inv as f64;
            let b = (c * c * delta.powf(-2.0 * c - 2.0)).ceil();
            if b.is_finite() && b < 1e6 {
                b as usize
            } else {
                1_000_000
            }
        })
    }

    /// C^{-2}·δ^{2C+2}, exact in δ's binary value.
    pub fn increment_floor(&self, delta: f64) -> BigRational {
        let d = BigRational::from_float(delta).unwrap_or_else(BigRational::zero);
        let c = BigRational::from_integer(BigInt::from(self.c_inv));
        num_traits::pow(d, 2 * self.c_inv as usize + 2) / (&c * &c)
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Uniform iff normP8 = 0 or normP8 < δ⁸.
pub(crate) fn is_uniform(norm_p8: f64, delta: f64) -> bool {
    norm_p8 == 0.0 || norm_p8 < delta.powi(8)
}

/// A partition of G into member lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
}

impl Partition {
    /// Checks that cells are nonempty, disjoint and cover G.
    pub fn new(space: &Space, mut cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; space.size()];
        for c in cells.iter_mut() {
            if c.is_empty() {
                return Err(Error::Invalid("empty cell".into()));
            }
            c.sort_unstable();
            for &x in c.iter() {
                if x >= seen.len() || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::Invalid(format!("element {x} is repeated or outside G")));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Invalid("cells do not cover G".into()));
        }
        cells.sort();
        Ok(Partition { cells })
    }

    pub fn trivial(space: &Space) -> Self {
        Partition { cells: vec![(0..space.size()).collect()] }
    }

    pub fn singletons(space: &Space) -> Self {
        Partition { cells: (0..space.size()).map(|x| vec![x]).collect() }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Whether every cell of `self` lies inside a cell of `coarser`.
    pub fn refines(&self, space: &Space, coarser: &Partition) -> bool {
        let owner = coarser.owner(space);
        self.cells.iter().all(|c| c.iter().all(|&x| owner[x] == owner[c[0]]))
    }

    fn owner(&self, space: &Space) -> Vec<usize> {
        let mut owner = vec![0; space.size()];
        for (i, c) in self.cells.iter().enumerate() {
            for &x in c {
                owner[x] = i;
            }
        }
        owner
    }
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Σ_P |A∩P|²/|P| over the cells, before the p^{-n} prefactor.
fn raw_index<'a>(a: &SubsetOfG, cells: impl IntoIterator<Item = &'a [usize]>) -> BigRational {
    cells.into_iter().map(|c| ratio(a.hits(c).pow(2), c.len())).fold(BigRational::zero(), |s, v| s + v)
}

/// ind(A, P) = p^{-n}·Σ_P α_P²|P|.
pub fn index(space: &Space, a: &SubsetOfG, p: &Partition) -> BigRational {
    raw_index(a, p.cells.iter().map(|c| c.as_slice())) / BigInt::from(space.size())
}

/// Both sides of the Pythagoras identity for a refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pythagoras {
    pub difference: BigRational,
    pub refinement_sum: BigRational,
}

/// ind(A,P′) − ind(A,P) and p^{-n}ΣΣ(α_P − α_{P′})²|P′|, checked equal.
pub fn pythagoras_check(space: &Space, a: &SubsetOfG, coarse: &Partition, fine: &Partition) -> Result<Pythagoras> {
    if !fine.refines(space, coarse) {
        return Err(Error::Invalid("second partition does not refine the first".into()));
    }
    let owner = coarse.owner(space);
    let alpha: Vec<BigRational> = coarse.cells.iter().map(|c| ratio(a.hits(c), c.len())).collect();
    let g = BigInt::from(space.size());
    let sum = fine
        .cells
        .iter()
        .map(|c| {
            let d = ratio(a.hits(c), c.len()) - &alpha[owner[c[0]]];
            &d * &d * BigInt::from(c.len())
        })
        .fold(BigRational::zero(), |s, v| s + v)
        / &g;
    let difference = index(space, a, fine) - index(space, a, coarse);
    if difference != sum {
        return Err(Error::Invalid(format!("Pythagoras identity fails: {difference} vs {sum}")));
    }
    Ok(Pythagoras { difference, refinement_sum: sum })
}

/// Accounting for one refinement step in which each parent cell is split
/// into children.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepAccounting {
    /// ind after − ind before, exact.
    #[serde(skip)]
    pub gain: BigRational,
    /// (p^{-n}·T)² with T = Σ_P Σ_{P′⊆P} |α_{P′} − α_P||P′| over witnessed parents.
    #[serde(skip)]
    pub jensen: BigRational,
    /// (p^{-n}·Σ corr_P|P|)².
    pub correlation_bound: f64,
    /// gain ≥ jensen (exact) and T ≥ Σ corr_P|P| (relative slack 1e-9).
    pub holds: bool,
    /// Pythagoras identity held exactly on this step.
    pub pythagoras: bool,
}

/// Computes the exact gain of splitting `parents[i]` into `children[i]` and
/// compares it with the Jensen bounds at the achieved correlations `corr`.
pub(crate) fn account_split(
    space: &Space,
    a: &SubsetOfG,
    parents: &[&[usize]],
    children: &[Vec<Vec<usize>>],
    corr: &[f64],
) -> StepAccounting {
    let g = BigInt::from(space.size());
    let mut gain = BigRational::zero();
    let mut pyth = BigRational::zero();
    let mut t = BigRational::zero();
    let mut corr_mass = 0.0;
    for ((parent, kids), &c) in parents.iter().zip(children).zip(corr) {
        let alpha = ratio(a.hits(parent), parent.len());
        gain += raw_index(a, kids.iter().map(|k| k.as_slice())) - ratio(a.hits(parent).pow(2), parent.len());
        for k in kids {
            let d = ratio(a.hits(k), k.len()) - &alpha;
            pyth += &d * &d * BigInt::from(k.len());
            t += d.abs() * BigInt::from(k.len());
        }
        corr_mass += c * parent.len() as f64;
    }
    gain /= &g;
    pyth /= &g;
    let tn = &t / &g;
    let jensen = &tn * &tn;
    let t_f = t.to_f64().unwrap_or(f64::INFINITY);
    let correlation_bound = (corr_mass / space.size() as f64).powi(2);
    let holds = gain >= jensen && t_f >= corr_mass * (1.0 - 1e-9);
    StepAccounting { pythagoras: gain == pyth, gain, jensen, correlation_bound, holds }
}

/// One line of a decomposition trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub kind: &'static str,
    pub cells: usize,
    pub index: f64,
    pub index_exact: String,
    pub nonuniform_mass: usize,
    pub deletions: usize,
    pub witnesses: usize,
    pub gain: f64,
    pub jensen_bound: f64,
    pub correlation_bound: f64,
    pub accounting_ok: bool,
}

/// How a decomposition run ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "cells", rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    /// Indices of the non-uniform cells for which the oracle found no witness.
    OracleFailure(Vec<usize>),
    BudgetExceeded,
}

impl RunStatus {
    /// Process exit code: 0, 2 or 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::OracleFailure(_) => 2,
            RunStatus::BudgetExceeded => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::OracleFailure(_) => "oracle-failure",
            RunStatus::BudgetExceeded => "budget-exceeded",
        }
    }
}

/// Groups `members` by their atom label under `factor`, in label order.
pub(crate) fn split_by_atoms(space: &Space, factor: &QuadraticFactor, members: &[usize]) -> Vec<(AtomLabel, Vec<usize>)> {
    let mut groups: BTreeMap<AtomLabel, Vec<usize>> = BTreeMap::new();
    for &x in members {
        groups.entry(factor.atom_label_of(space.coords(x))).or_default().push(x);
    }
    groups.into_iter().collect()
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
