//! Cylinder decomposition: every cell is an atom of its own factor, with a
//! binary string recording how that factor was reached.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::oracle::inverse_oracle;
use super::{account_split, check_delta, fmt_rational, index, is_uniform, split_by_atoms, Partition, RegularityConfig, RunStatus, StepAccounting, TraceRow};
use crate::chains::{disc, ones_count, validate_chain, BinaryString, ChainRecord};
use crate::error::Result;
use crate::factors::{AtomLabel, QuadraticFactor};
use crate::gf::Space;
use crate::gowers::BoundedFunction;
use crate::growth::GrowthFunction;
use crate::localnorms::{norm_p_eighth, FactorForms};
use crate::set::SubsetOfG;

/// One part P of a cylinder partition.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderCell {
    pub factor: Arc<QuadraticFactor>,
    pub label: AtomLabel,
    pub sigma: BinaryString,
    /// B_0, …, B_m with B_m = `factor`.
    pub history: Vec<Arc<QuadraticFactor>>,
    pub members: Vec<usize>,
    pub hits: usize,
    pub density: f64,
    pub norm_p8: f64,
    pub uniform: bool,
    pub rank: usize,
}

impl CylinderCell {
    fn new(a: &SubsetOfG, history: Vec<Arc<QuadraticFactor>>, sigma: BinaryString, label: AtomLabel, members: Vec<usize>) -> Result<Self> {
        let factor = history.last().expect("nonempty history").clone();
        let hits = a.hits(&members);
        Ok(CylinderCell {
            rank: factor.rank()?,
            density: hits as f64 / members.len() as f64,
            factor,
            label,
            sigma,
            history,
            hits,
            members,
            norm_p8: f64::NAN,
            uniform: false,
        })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn chain(&self) -> ChainRecord {
        ChainRecord { sigma: self.sigma.clone(), factors: self.history.iter().map(|f| (**f).clone()).collect() }
    }

    fn balanced(&self, space: &Space, a: &SubsetOfG) -> Result<BoundedFunction> {
        BoundedFunction::balanced_on(space, a.membership(), &self.members)
    }

    /// The cells obtained by replacing this cell's factor with `next`, whose
    /// atoms refine the current one.
    fn split(&self, space: &Space, a: &SubsetOfG, next: QuadraticFactor, step: i8) -> Result<Vec<CylinderCell>> {
        let next = Arc::new(next);
        let mut history = self.history.clone();
        history.push(next.clone());
        let sigma = self.sigma.push(step);
        split_by_atoms(space, &next, &self.members)
            .into_iter()
            .map(|(label, members)| CylinderCell::new(a, history.clone(), sigma.clone(), label, members))
            .collect()
    }
}

fn compute_norms(space: &Space, a: &SubsetOfG, cells: &mut [CylinderCell], delta: f64, config: &RegularityConfig) -> Result<()> {
    let todo: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].norm_p8.is_nan()).collect();
    let norms = config.exec.map_items(&todo, |&i| -> Result<f64> {
        let c = &cells[i];
        if c.hits == 0 || c.hits == c.size() {
            return Ok(0.0);
        }
        let forms = FactorForms::new(space, &c.factor);
        norm_p_eighth(&forms, &c.balanced(space, a)?, &c.label, config.exec)
    });
    for (i, v) in todo.into_iter().zip(norms) {
        let v = v?;
        cells[i].norm_p8 = v;
        cells[i].uniform = is_uniform(v, delta);
    }
    Ok(())
}

fn nonuniform_mass(cells: &[CylinderCell]) -> usize {
    cells.iter().filter(|c| !c.uniform).map(|c| c.size()).sum()
}

/// Result of one type-1 step.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyStep {
    pub cells: Vec<CylinderCell>,
    pub witnesses: usize,
    /// Non-uniform cells without a witness; when nonempty `cells` is the input.
    pub failed: Vec<usize>,
    pub accounting: Option<StepAccounting>,
}

/// Refines every non-uniform cell by the atoms of its factor extended with
/// an oracle witness. Norms must already be computed.
pub fn energy_step(space: &Space, a: &SubsetOfG, cells: Vec<CylinderCell>, delta: f64, config: &RegularityConfig, salt: u64) -> Result<EnergyStep> {
    let targets: Vec<usize> = (0..cells.len()).filter(|&i| !cells[i].uniform).collect();
    let found = config.exec.map_items(&targets, |&i| -> Result<_> {
        let f = cells[i].balanced(space, a)?;
        inverse_oracle(space, &f, &cells[i].members, delta, config, salt.wrapping_add(i as u64))
    });
    let mut witnesses = Vec::with_capacity(targets.len());
    let mut failed = Vec::new();
    for (&i, w) in targets.iter().zip(found) {
        match w? {
            Some(w) => witnesses.push((i, w)),
            None => failed.push(i),
        }
    }
    if !failed.is_empty() || witnesses.is_empty() {
        return Ok(EnergyStep { cells, witnesses: 0, failed, accounting: None });
    }
    let mut replaced: Vec<Option<Vec<CylinderCell>>> = vec![None; cells.len()];
    for (i, w) in &witnesses {
        let next = cells[*i].factor.with_additions(Some(&w.poly.r), Some(&w.poly.m))?;
        replaced[*i] = Some(cells[*i].split(space, a, next, 1)?);
    }
    let parents: Vec<&[usize]> = witnesses.iter().map(|(i, _)| cells[*i].members.as_slice()).collect();
    let children: Vec<Vec<Vec<usize>>> = witnesses
        .iter()
        .map(|(i, _)| replaced[*i].as_ref().expect("split").iter().map(|c| c.members.clone()).collect())
        .collect();
    let corr: Vec<f64> = witnesses.iter().map(|(_, w)| w.correlation).collect();
    let accounting = account_split(space, a, &parents, &children, &corr);
    let mut out = Vec::with_capacity(cells.len());
    for (cell, rep) in cells.into_iter().zip(replaced) {
        match rep {
            Some(kids) => out.extend(kids),
            None => out.push(cell),
        }
    }
    Ok(EnergyStep { cells: out, witnesses: witnesses.len(), failed, accounting: Some(accounting) })
}

/// Everything a cylinder run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderOutcome {
    pub status: RunStatus,
    pub cells: Vec<CylinderCell>,
    pub trace: Vec<TraceRow>,
    /// Accounting of every type-1 step, in order.
    pub accounting: Vec<StepAccounting>,
    pub index: BigRational,
    pub nonuniform_mass: usize,
    /// Final cells with q = 0 whose rank demand ρ(ℓ) exceeds n.
    pub infeasible_rank_cells: usize,
    pub type1_steps: usize,
    pub deletion_steps: usize,
}

impl CylinderOutcome {
    pub fn partition(&self, space: &Space) -> Result<Partition> {
        Partition::new(space, self.cells.iter().map(|c| c.members.clone()).collect())
    }
}

fn cells_index(space: &Space, cells: &[CylinderCell]) -> BigRational {
    let raw = cells
        .iter()
        .map(|c| BigRational::new(BigInt::from(c.hits * c.hits), BigInt::from(c.size())))
        .fold(BigRational::zero(), |s, v| s + v);
    raw / BigInt::from(space.size())
}

/// Alternates deletion passes over low-rank cells and energy steps over
/// non-uniform cells until neither applies.
pub fn cylinder_decompose(space: &Space, a: &SubsetOfG, delta: f64, rho: &GrowthFunction, config: &RegularityConfig) -> Result<CylinderOutcome> {
    check_delta(delta)?;
    rho.validate()?;
    let trivial = Arc::new(QuadraticFactor::trivial(space.p(), space.n()));
    let mut cells = vec![CylinderCell::new(a, vec![trivial], BinaryString::default(), AtomLabel::zero(0, 0), (0..space.size()).collect())?];
    let budget = config.step_budget(delta);
    let limit = delta * space.size() as f64;
    let mut trace = Vec::new();
    let mut accounting = Vec::new();
    let mut type1_steps = 0;
    let mut deletion_steps = 0;
    let mut step = 0;
    let status = loop {
        let low: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].factor.q() > 0 && rho.exceeds(cells[i].factor.l() + cells[i].factor.q(), cells[i].rank)).collect();
        if !low.is_empty() {
            if step >= budget {
                break RunStatus::BudgetExceeded;
            }
            step += 1;
            deletion_steps += 1;
            let mut out = Vec::with_capacity(cells.len());
            for (i, cell) in cells.into_iter().enumerate() {
                if low.binary_search(&i).is_ok() {
                    let next = cell.factor.rho_matrix_delete(rho)?;
                    out.extend(cell.split(space, a, next, -1)?);
                } else {
                    out.push(cell);
                }
            }
            cells = out;
            let ind = cells_index(space, &cells);
            trace.push(row(step, "deletion", &cells, &ind, None, low.len(), 0, None));
            continue;
        }
        compute_norms(space, a, &mut cells, delta, config)?;
        let mass = nonuniform_mass(&cells);
        if mass as f64 <= limit {
            break RunStatus::Converged;
        }
        if step >= budget {
            break RunStatus::BudgetExceeded;
        }
        step += 1;
        let es = energy_step(space, a, cells, delta, config, (step as u64) << 20)?;
        cells = es.cells;
        if !es.failed.is_empty() {
            break RunStatus::OracleFailure(es.failed);
        }
        type1_steps += 1;
        let ind = cells_index(space, &cells);
        trace.push(row(step, "energy", &cells, &ind, Some(mass), 0, es.witnesses, es.accounting.as_ref()));
        accounting.extend(es.accounting);
    };
    compute_norms(space, a, &mut cells, delta, config)?;
    let infeasible_rank_cells = cells.iter().filter(|c| c.factor.q() == 0 && rho.exceeds(c.factor.l(), space.n())).count();
    Ok(CylinderOutcome {
        index: cells_index(space, &cells),
        nonuniform_mass: nonuniform_mass(&cells),
        status,
        cells,
        trace,
        accounting,
        infeasible_rank_cells,
        type1_steps,
        deletion_steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn row(step: usize, kind: &'static str, cells: &[CylinderCell], ind: &BigRational, mass: Option<usize>, deletions: usize, witnesses: usize, acc: Option<&StepAccounting>) -> TraceRow {
    TraceRow {
        step,
        kind,
        cells: cells.len(),
        index: ind.to_f64().unwrap_or(f64::NAN),
        index_exact: fmt_rational(ind),
        nonuniform_mass: mass.unwrap_or(0),
        deletions,
        witnesses,
        gain: acc.map_or(0.0, |a| a.gain.to_f64().unwrap_or(f64::NAN)),
        jensen_bound: acc.map_or(0.0, |a| a.jensen.to_f64().unwrap_or(f64::NAN)),
        correlation_bound: acc.map_or(0.0, |a| a.correlation_bound),
        accounting_ok: acc.is_none_or(|a| a.holds && a.pythagoras),
    }
}

/// Named checks on a finished cylinder run; `failures` lists what broke.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CylinderVerification {
    pub checks: Vec<(&'static str, bool)>,
    pub failures: Vec<String>,
}

impl CylinderVerification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    fn record(&mut self, name: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(format!("{name}: {}", detail()));
        }
        self.checks.push((name, ok));
    }
}

/// Checks the output invariants of `cylinder_decompose`.
pub fn verify_cylinder(space: &Space, a: &SubsetOfG, out: &CylinderOutcome, rho: &GrowthFunction, config: &RegularityConfig, delta: f64) -> CylinderVerification {
    let mut v = CylinderVerification::default();
    let part = out.partition(space);
    v.record("partition", part.is_ok(), || format!("{:?}", part.as_ref().err()));
    let bad_atom = out.cells.iter().position(|c| c.factor.enumerate_atom(space, &c.label).ok().as_ref() != Some(&c.members));
    v.record("cells-are-atoms", bad_atom.is_none(), || format!("cell {bad_atom:?}"));
    if out.status == RunStatus::Converged {
        let low = out.cells.iter().position(|c| c.factor.q() > 0 && rho.exceeds(c.factor.l() + c.factor.q(), c.rank));
        v.record("rank", low.is_none(), || format!("cell {low:?}"));
        let ok = out.nonuniform_mass as f64 <= delta * space.size() as f64;
        v.record("nonuniform-mass", ok, || format!("{}", out.nonuniform_mass));
    }
    let neg = out.cells.iter().position(|c| disc(&c.sigma) < 0);
    v.record("disc", neg.is_none(), || format!("cell {neg:?}"));
    let floor = config.increment_floor(delta);
    let ones = out.cells.iter().map(|c| ones_count(&c.sigma)).max().unwrap_or(0);
    let ok = floor.clone() * BigInt::from(ones) <= out.index;
    v.record("ones-count", ok, || format!("{ones} steps at floor {} vs index {}", fmt_rational(&floor), fmt_rational(&out.index)));
    let bad_chain = out.cells.iter().position(|c| !validate_chain(space, rho, &c.chain()));
    v.record("chains", bad_chain.is_none(), || format!("cell {bad_chain:?}"));
    let bad_acc = out.accounting.iter().position(|s| !(s.holds && s.pythagoras));
    v.record("energy-accounting", bad_acc.is_none(), || format!("type-1 step {bad_acc:?}"));
    let mut prev = index(space, a, &Partition::trivial(space));
    let mut monotone = true;
    for r in &out.trace {
        let cur = parse_rational_pair(&r.index_exact);
        monotone &= cur >= prev;
        prev = cur;
    }
    v.record("index-monotone", monotone, || "index decreased".into());
    v
}

fn parse_rational_pair(s: &str) -> BigRational {
    let (n, d) = s.split_once('/').expect("n/d");
    BigRational::new(n.parse().expect("integer"), d.parse().expect("integer"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{Prime, SymMatrix};

    fn space(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn empty_and_full_sets_stay_trivial() {
        let s = space(2);
        let cfg = RegularityConfig::default();
        for a in [SubsetOfG::empty(&s), SubsetOfG::full(&s)] {
            let out = cylinder_decompose(&s, &a, 0.4, &GrowthFunction::linear(1), &cfg).unwrap();
            assert_eq!(out.status, RunStatus::Converged);
            assert_eq!(out.cells.len(), 1);
            assert!(out.cells[0].sigma.is_empty());
            assert!(out.trace.is_empty());
            assert!(verify_cylinder(&s, &a, &out, &GrowthFunction::linear(1), &cfg, 0.4).passed());
        }
    }

    #[test]
    fn single_quadric_is_already_uniform() {
        let s = space(3);
        let f = QuadraticFactor::new(s.p(), 3, vec![], vec![SymMatrix::identity(3)]).unwrap();
        let a = SubsetOfG::from_elements(&s, &f.enumerate_atom(&s, &AtomLabel::new(vec![], vec![0])).unwrap()).unwrap();
        let rho = GrowthFunction::linear(1);
        let cfg = RegularityConfig::default();
        let out = cylinder_decompose(&s, &a, 0.4, &rho, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        let v = verify_cylinder(&s, &a, &out, &rho, &cfg, 0.4);
        assert!(v.passed(), "{:?}", v.failures);
        // ‖1_A − 1/3‖⁸ / |G|⁴ is below 0.4⁸, so no step is taken.
        let g = BoundedFunction::balanced_on(&s, a.membership(), &(0..27).collect::<Vec<_>>()).unwrap();
        let expected = crate::gowers::u3_eighth_naive(&s, &g, crate::par::Exec::Sequential).unwrap() / 27f64.powi(4);
        assert_eq!(out.cells.len(), 1);
        assert!((out.cells[0].norm_p8 - expected).abs() < 1e-15);
        assert!(expected < 0.4f64.powi(8));
    }

    #[test]
    fn planted_union_becomes_homogeneous() {
        let s = space(3);
        let f = QuadraticFactor::new(s.p(), 3, vec![crate::gf::GroupElement(vec![1, 0, 0])], vec![SymMatrix::identity(3)]).unwrap();
        let mut members = Vec::new();
        for (a, b) in [(0, 1), (2, 2), (1, 0)] {
            members.extend(f.enumerate_atom(&s, &AtomLabel::new(vec![a], vec![b])).unwrap());
        }
        let a = SubsetOfG::from_elements(&s, &members).unwrap();
        let rho = GrowthFunction::linear(1);
        let cfg = RegularityConfig::default();
        let out = cylinder_decompose(&s, &a, 0.4, &rho, &cfg).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert!(out.type1_steps >= 1);
        let v = verify_cylinder(&s, &a, &out, &rho, &cfg, 0.4);
        assert!(v.passed(), "{:?}", v.failures);
        assert!(out.cells.iter().all(|c| c.hits == 0 || c.hits == c.size()));
    }
}
