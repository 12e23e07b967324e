//! From a cylinder partition to one rank-refined factor and a union of its
//! atoms approximating A.

use super::cylinder::{cylinder_decompose, CylinderOutcome};
use super::{split_by_atoms, RegularityConfig, RunStatus};
use crate::error::Result;
use crate::factors::QuadraticFactor;
use crate::gf::Space;
use crate::growth::GrowthFunction;
use crate::set::SubsetOfG;

/// Parameters of the assembly. `epsilon` and `mu` default to the formulas
/// ε = (δ/120)^{k+2} and μ = (ε²/8)^{k²2^{k²}}/2.
#[derive(Clone, Debug, PartialEq)]
pub struct MainConfig {
    pub k: u32,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub regularity: RegularityConfig,
}

impl MainConfig {
    pub fn new(k: u32, regularity: RegularityConfig) -> Self {
        MainConfig { k, epsilon: None, mu: None, regularity }
    }

    pub fn epsilon(&self, delta: f64) -> f64 {
        self.epsilon.unwrap_or_else(|| (delta / 120.0).powi(self.k as i32 + 2))
    }

    /// Clamped below at the smallest positive normal f64.
    pub fn mu(&self, delta: f64) -> f64 {
        let mu = self.mu.unwrap_or_else(|| {
            let e = self.epsilon(delta);
            let k2 = (self.k * self.k) as f64;
            (e * e / 8.0).powf(k2 * 2f64.powf(k2)) / 2.0
        });
        mu.max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssemblyReport {
    pub status: RunStatus,
    pub cylinder: CylinderOutcome,
    pub epsilon: f64,
    pub mu: f64,
    /// Union of every cell's factor, before rank refinement.
    pub union_complexity: (usize, usize),
    pub factor: QuadraticFactor,
    pub deletions: usize,
    /// Union of the atoms of `factor` on which A has density > 1/2.
    pub y: SubsetOfG,
    pub sym_diff: usize,
    pub sym_diff_fraction: f64,
    /// Fraction of G in atoms of `factor` with density < ε or > 1 − ε.
    pub homogeneous_fraction: f64,
    /// Uniform cylinder cells whose density lies in [ε, 1 − ε].
    pub key_violations: Vec<usize>,
}

/// Union of factors; a matrix in the span of those already kept is skipped
/// since it does not change the atoms.
fn union_factor(space: &Space, factors: &[&QuadraticFactor]) -> Result<QuadraticFactor> {
    let mut out = QuadraticFactor::trivial(space.p(), space.n());
    for f in factors {
        for r in f.linear() {
            out = out.with_additions(Some(r), None)?;
        }
        for m in f.quadratic() {
            out = out.with_additions(None, Some(m))?;
        }
    }
    Ok(out)
}

/// Runs the cylinder decomposition at μ, merges the cell factors, refines
/// for rank and reads off Y. The quadratic-complexity reduction step is the
/// identity.
pub fn assemble_main(space: &Space, a: &SubsetOfG, delta: f64, rho: &GrowthFunction, config: &MainConfig) -> Result<AssemblyReport> {
    let epsilon = config.epsilon(delta);
    let mu = config.mu(delta);
    let cylinder = cylinder_decompose(space, a, mu, rho, &config.regularity)?;
    let mut distinct: Vec<&QuadraticFactor> = Vec::new();
    for c in &cylinder.cells {
        if !distinct.contains(&&*c.factor) {
            distinct.push(&c.factor);
        }
    }
    let union = union_factor(space, &distinct)?;
    let (factor, deletions) = union.rank_refine(rho)?;
    let mut member = vec![false; space.size()];
    let mut homogeneous = 0;
    for (_, atom) in split_by_atoms(space, &factor, &(0..space.size()).collect::<Vec<_>>()) {
        let density = a.hits(&atom) as f64 / atom.len() as f64;
        if density > 0.5 {
            for &x in &atom {
                member[x] = true;
            }
        }
        if density < epsilon || density > 1.0 - epsilon {
            homogeneous += atom.len();
        }
    }
    let y = SubsetOfG::from_membership(space, member)?;
    let sym_diff = a.symmetric_difference(&y);
    let key_violations = (0..cylinder.cells.len())
        .filter(|&i| {
            let c = &cylinder.cells[i];
            c.uniform && c.density >= epsilon && c.density <= 1.0 - epsilon
        })
        .collect();
    Ok(AssemblyReport {
        status: cylinder.status.clone(),
        epsilon,
        mu,
        union_complexity: union.complexity(),
        factor,
        deletions,
        sym_diff,
        sym_diff_fraction: sym_diff as f64 / space.size() as f64,
        homogeneous_fraction: homogeneous as f64 / space.size() as f64,
        key_violations,
        y,
        cylinder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Prime;

    #[test]
    fn empty_set_gives_empty_y() {
        let s = Space::new(Prime::new(3).unwrap(), 2).unwrap();
        let cfg = MainConfig::new(1, RegularityConfig::default());
        let r = assemble_main(&s, &SubsetOfG::empty(&s), 0.5, &GrowthFunction::linear(1), &cfg).unwrap();
        assert!(r.y.is_empty());
        assert_eq!(r.sym_diff, 0);
        assert_eq!(r.homogeneous_fraction, 1.0);
    }

    #[test]
    fn default_parameters_follow_formulas() {
        let cfg = MainConfig::new(1, RegularityConfig::default());
        let e = (0.6f64 / 120.0).powi(3);
        assert_eq!(cfg.epsilon(0.6), e);
        assert_eq!(cfg.mu(0.6), (e * e / 8.0).powf(2.0) / 2.0);
    }
}
