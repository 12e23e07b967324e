//! JSON and CSV formats. JSON is written with sorted keys.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{GroupElement, Prime, Space, SymMatrix};
use quadreg::regularity::{CylinderOutcome, GlobalOutcome, TraceRow};
use quadreg::set::SubsetOfG;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Serializes through `serde_json::Value`, whose maps keep keys sorted.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_canonical_json(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A subset of F_p^n as sorted element indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFile {
    pub p: u32,
    pub n: usize,
    pub members: Vec<usize>,
}

impl SetFile {
    pub fn from_set(space: &Space, a: &SubsetOfG) -> Self {
        SetFile { p: space.p().get(), n: space.n(), members: a.elements() }
    }

    pub fn space(&self) -> Result<Space> {
        Ok(Space::new(Prime::new(self.p)?, self.n)?)
    }

    pub fn to_set(&self) -> Result<(Space, SubsetOfG)> {
        let space = self.space()?;
        let set = SubsetOfG::from_elements(&space, &self.members)?;
        Ok((space, set))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorFile {
    pub p: u32,
    pub n: usize,
    pub linear: Vec<Vec<u32>>,
    /// Each matrix as a list of rows.
    pub quadratic: Vec<Vec<Vec<u32>>>,
}

impl FactorFile {
    pub fn from_factor(f: &QuadraticFactor) -> Self {
        FactorFile {
            p: f.p().get(),
            n: f.n(),
            linear: f.linear().iter().map(|v| v.0.clone()).collect(),
            quadratic: f.quadratic().iter().map(|m| m.rows()).collect(),
        }
    }

    pub fn to_factor(&self) -> Result<QuadraticFactor> {
        let p = Prime::new(self.p)?;
        let quadratic = self.quadratic.iter().map(|rows| SymMatrix::from_rows(rows)).collect::<quadreg::Result<Vec<_>>>()?;
        let linear = self.linear.iter().map(|v| GroupElement(v.clone())).collect();
        Ok(QuadraticFactor::new(p, self.n, linear, quadratic)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: usize,
    /// Index into `PartitionFile::factors`.
    pub factor: usize,
    pub label: AtomLabel,
    pub sigma: String,
    pub size: usize,
    pub hits: usize,
    pub density: f64,
    #[serde(rename = "normP8")]
    pub norm_p8: f64,
    pub uniform: bool,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub mode: String,
    pub p: u32,
    pub n: usize,
    pub delta: f64,
    pub rho: String,
    pub status: String,
    pub failed_cells: Vec<usize>,
    /// Exact index as "numerator/denominator".
    pub index: String,
    pub nonuniform_mass: usize,
    pub infeasible_rank_cells: usize,
    pub factors: Vec<FactorFile>,
    pub cells: Vec<CellRecord>,
}

fn failed(status: &quadreg::regularity::RunStatus) -> Vec<usize> {
    match status {
        quadreg::regularity::RunStatus::OracleFailure(c) => c.clone(),
        _ => vec![],
    }
}

fn rational(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl PartitionFile {
    pub fn from_cylinder(space: &Space, delta: f64, rho: &str, out: &CylinderOutcome) -> Self {
        let mut factors: Vec<&QuadraticFactor> = Vec::new();
        let cells = out
            .cells
            .iter()
            .enumerate()
            .map(|(id, c)| {
                let factor = factors.iter().position(|f| **f == *c.factor).unwrap_or_else(|| {
                    factors.push(&c.factor);
                    factors.len() - 1
                });
                CellRecord {
                    id,
                    factor,
                    label: c.label.clone(),
                    sigma: c.sigma.to_string(),
                    size: c.size(),
                    hits: c.hits,
                    density: c.density,
                    norm_p8: c.norm_p8,
                    uniform: c.uniform,
                    members: c.members.clone(),
                }
            })
            .collect();
        PartitionFile {
            mode: "cylinder".into(),
            p: space.p().get(),
            n: space.n(),
            delta,
            rho: rho.into(),
            status: out.status.name().into(),
            failed_cells: failed(&out.status),
            index: rational(&out.index),
            nonuniform_mass: out.nonuniform_mass,
            infeasible_rank_cells: out.infeasible_rank_cells,
            factors: factors.into_iter().map(FactorFile::from_factor).collect(),
            cells,
        }
    }

    pub fn from_global(space: &Space, delta: f64, rho: &str, out: &GlobalOutcome) -> Self {
        let cells = out
            .atoms
            .iter()
            .enumerate()
            .map(|(id, c)| CellRecord {
                id,
                factor: 0,
                label: c.label.clone(),
                sigma: String::new(),
                size: c.members.len(),
                hits: c.hits,
                density: c.hits as f64 / c.members.len() as f64,
                norm_p8: c.norm_p8,
                uniform: c.uniform,
                members: c.members.clone(),
            })
            .collect();
        PartitionFile {
            mode: "global".into(),
            p: space.p().get(),
            n: space.n(),
            delta,
            rho: rho.into(),
            status: out.status.name().into(),
            failed_cells: failed(&out.status),
            index: rational(&out.index),
            nonuniform_mass: out.nonuniform_mass,
            infeasible_rank_cells: 0,
            factors: vec![FactorFile::from_factor(&out.factor)],
            cells,
        }
    }

    /// Checks that the cells partition G and that each cell is the atom of
    /// its factor with its label.
    pub fn check(&self) -> Result<()> {
        let space = Space::new(Prime::new(self.p)?, self.n)?;
        let mut seen = vec![false; space.size()];
        for c in &self.cells {
            let f = self.factors.get(c.factor).context("factor index out of range")?.to_factor()?;
            if f.enumerate_atom(&space, &c.label)? != c.members {
                bail!("cell {} is not the atom {} of its factor", c.id, c.label);
            }
            for &x in &c.members {
                if std::mem::replace(&mut seen[x], true) {
                    bail!("element {x} lies in two cells");
                }
            }
        }
        if seen.iter().any(|s| !s) {
            bail!("cells do not cover G");
        }
        Ok(())
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(["step", "kind", "cells", "index", "index_exact", "nonuniform_mass", "deletions", "witnesses", "gain", "jensen_bound", "correlation_bound", "accounting_ok"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_factor_round_trip() {
        let s = Space::new(Prime::new(3).unwrap(), 2).unwrap();
        let a = SubsetOfG::from_elements(&s, &[7, 1, 4]).unwrap();
        let file = SetFile::from_set(&s, &a);
        let back: SetFile = serde_json::from_str(&to_canonical_json(&file).unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_set().unwrap().1, a);

        let f = QuadraticFactor::new(s.p(), 2, vec![GroupElement(vec![1, 2])], vec![SymMatrix::identity(2)]).unwrap();
        let ff = FactorFile::from_factor(&f);
        let back: FactorFile = serde_json::from_str(&to_canonical_json(&ff).unwrap()).unwrap();
        assert_eq!(back.to_factor().unwrap(), f);
    }

    #[test]
    fn keys_are_sorted() {
        let f = FactorFile { p: 3, n: 1, linear: vec![], quadratic: vec![] };
        let text = to_canonical_json(&f).unwrap();
        let keys: Vec<usize> = ["linear", "\"n\"", "\"p\"", "quadratic"].iter().map(|k| text.find(k).unwrap()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
