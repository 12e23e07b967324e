//! Global decomposition: a single factor whose atoms are almost all uniform.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::oracle::inverse_oracle;
use super::{account_split, check_delta, fmt_rational, index, is_uniform, pythagoras_check, split_by_atoms, Partition, RegularityConfig, RunStatus, StepAccounting, TraceRow};
use crate::error::Result;
use crate::factors::{AtomLabel, QuadraticFactor};
use crate::gf::Space;
use crate::gowers::BoundedFunction;
use crate::growth::GrowthFunction;
use crate::localnorms::{norm_p_eighth, FactorForms};
use crate::set::SubsetOfG;

/// A nonempty atom of the output factor.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalAtom {
    pub label: AtomLabel,
    pub members: Vec<usize>,
    pub hits: usize,
    pub norm_p8: f64,
    pub uniform: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalOutcome {
    pub status: RunStatus,
    pub factor: QuadraticFactor,
    pub atoms: Vec<GlobalAtom>,
    pub trace: Vec<TraceRow>,
    pub accounting: Vec<StepAccounting>,
    pub index: BigRational,
    pub nonuniform_mass: usize,
    pub steps: usize,
    pub deletions: usize,
}

impl GlobalOutcome {
    pub fn partition(&self, space: &Space) -> Result<Partition> {
        Partition::new(space, self.atoms.iter().map(|c| c.members.clone()).collect())
    }
}

fn atoms_with_norms(space: &Space, a: &SubsetOfG, factor: &QuadraticFactor, delta: f64, config: &RegularityConfig) -> Result<Vec<GlobalAtom>> {
    let forms = FactorForms::new(space, factor);
    let groups = split_by_atoms(space, factor, &(0..space.size()).collect::<Vec<_>>());
    let norms = config.exec.map_items(&groups, |(label, members)| -> Result<f64> {
        let hits = a.hits(members);
        if hits == 0 || hits == members.len() {
            return Ok(0.0);
        }
        let f = BoundedFunction::balanced_on(space, a.membership(), members)?;
        norm_p_eighth(&forms, &f, label, config.exec)
    });
    groups
        .into_iter()
        .zip(norms)
        .map(|((label, members), v)| {
            let v = v?;
            Ok(GlobalAtom { hits: a.hits(&members), label, members, norm_p8: v, uniform: is_uniform(v, delta) })
        })
        .collect()
}

fn mass(atoms: &[GlobalAtom]) -> usize {
    atoms.iter().filter(|c| !c.uniform).map(|c| c.members.len()).sum()
}

/// Repeatedly adds the witnesses of all non-uniform atoms to one factor and
/// rank-refines it, starting from `start` (or the trivial factor).
pub fn global_decompose(space: &Space, a: &SubsetOfG, delta: f64, rho: &GrowthFunction, config: &RegularityConfig, start: Option<&QuadraticFactor>) -> Result<GlobalOutcome> {
    check_delta(delta)?;
    rho.validate()?;
    let initial = start.cloned().unwrap_or_else(|| QuadraticFactor::trivial(space.p(), space.n()));
    let (mut factor, mut deletions) = initial.rank_refine(rho)?;
    let budget = config.step_budget(delta);
    let mut trace = Vec::new();
    let mut accounting = Vec::new();
    let mut steps = 0;
    let mut atoms = atoms_with_norms(space, a, &factor, delta, config)?;
    let status = loop {
        let m = mass(&atoms);
        if (m as f64) < delta * space.size() as f64 {
            break RunStatus::Converged;
        }
        if steps >= budget {
            break RunStatus::BudgetExceeded;
        }
        let targets: Vec<usize> = (0..atoms.len()).filter(|&i| !atoms[i].uniform).collect();
        let found = config.exec.map_items(&targets, |&i| -> Result<_> {
            let f = BoundedFunction::balanced_on(space, a.membership(), &atoms[i].members)?;
            inverse_oracle(space, &f, &atoms[i].members, delta, config, ((steps as u64) << 20) + i as u64)
        });
        let mut witnesses = Vec::new();
        let mut failed = Vec::new();
        for (&i, w) in targets.iter().zip(found) {
            match w? {
                Some(w) => witnesses.push((i, w)),
                None => failed.push(i),
            }
        }
        if !failed.is_empty() {
            break RunStatus::OracleFailure(failed);
        }
        steps += 1;
        let mut next = factor.clone();
        for (_, w) in &witnesses {
            next = next.with_additions(Some(&w.poly.r), Some(&w.poly.m))?;
        }
        let (next, del) = next.rank_refine(rho)?;
        deletions += del;
        let next_atoms = atoms_with_norms(space, a, &next, delta, config)?;
        let before = Partition::new(space, atoms.iter().map(|c| c.members.clone()).collect())?;
        let after = Partition::new(space, next_atoms.iter().map(|c| c.members.clone()).collect())?;
        let pyth = pythagoras_check(space, a, &before, &after);
        let parents: Vec<&[usize]> = witnesses.iter().map(|(i, _)| atoms[*i].members.as_slice()).collect();
        let children: Vec<Vec<Vec<usize>>> = parents.iter().map(|p| split_by_atoms(space, &next, p).into_iter().map(|g| g.1).collect()).collect();
        let corr: Vec<f64> = witnesses.iter().map(|(_, w)| w.correlation).collect();
        let mut acc = account_split(space, a, &parents, &children, &corr);
        let ind = index(space, a, &after);
        acc.gain = &ind - index(space, a, &before);
        acc.holds = acc.holds && acc.gain >= acc.jensen;
        acc.pythagoras = pyth.is_ok();
        trace.push(TraceRow {
            step: steps,
            kind: "energy",
            cells: next_atoms.len(),
            index: ind.to_f64().unwrap_or(f64::NAN),
            index_exact: fmt_rational(&ind),
            nonuniform_mass: m,
            deletions: del,
            witnesses: witnesses.len(),
            gain: acc.gain.to_f64().unwrap_or(f64::NAN),
            jensen_bound: acc.jensen.to_f64().unwrap_or(f64::NAN),
            correlation_bound: acc.correlation_bound,
            accounting_ok: acc.holds && acc.pythagoras,
        });
        accounting.push(acc);
        factor = next;
        atoms = next_atoms;
    };
    let part = Partition::new(space, atoms.iter().map(|c| c.members.clone()).collect())?;
    Ok(GlobalOutcome {
        status,
        index: index(space, a, &part),
        nonuniform_mass: mass(&atoms),
        factor,
        atoms,
        trace,
        accounting,
        steps,
        deletions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{Prime, SymMatrix};

    #[test]
    fn empty_set_takes_no_steps() {
        let s = Space::new(Prime::new(3).unwrap(), 2).unwrap();
        let out = global_decompose(&s, &SubsetOfG::empty(&s), 0.5, &GrowthFunction::linear(1), &RegularityConfig::default(), None).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert!(out.factor.is_trivial());
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn hint_start_terminates_immediately() {
        let s = Space::new(Prime::new(3).unwrap(), 3).unwrap();
        let b = QuadraticFactor::new(s.p(), 3, vec![], vec![SymMatrix::identity(3)]).unwrap();
        let mut members = b.enumerate_atom(&s, &AtomLabel::new(vec![], vec![1])).unwrap();
        members.extend(b.enumerate_atom(&s, &AtomLabel::new(vec![], vec![2])).unwrap());
        let a = SubsetOfG::from_elements(&s, &members).unwrap();
        let out = global_decompose(&s, &a, 0.5, &GrowthFunction::linear(1), &RegularityConfig::default(), Some(&b)).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.steps, 0);
        assert!(out.atoms.iter().all(|c| c.uniform && (c.hits == 0 || c.hits == c.members.len())));
    }
}
