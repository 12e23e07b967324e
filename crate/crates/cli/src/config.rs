//! Run configuration shared by the subcommands.

use quadreg::chains::GrowthFunction;
use quadreg::gf::{Prime, Space};
use quadreg::regularity::{OracleKind, RegularityConfig};
use quadreg::Exec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("n must be at least 1")]
    Dimension,
    #[error(transparent)]
    Core(#[from] quadreg::Error),
}

/// Step and search limits.
#[derive(Clone, Debug, PartialEq)]
pub struct Caps {
    pub exhaustive_cap: u128,
    pub max_steps: Option<usize>,
    pub attempts: usize,
}

impl Default for Caps {
    fn default() -> Self {
        let d = RegularityConfig::default();
        Caps { exhaustive_cap: d.exhaustive_cap, max_steps: d.max_steps, attempts: d.attempts }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub p: u32,
    pub n: usize,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub rho: GrowthFunction,
    pub seed: u64,
    pub oracle: OracleKind,
    pub c_inv: u32,
    pub caps: Caps,
}

impl RunConfig {
    pub fn validate(&self) -> Result<Space, ConfigError> {
        let p = Prime::new(self.p)?;
        if self.n == 0 {
            return Err(ConfigError::Dimension);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::Delta(self.delta));
        }
        if let Some(e) = self.epsilon.filter(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(ConfigError::Epsilon(e));
        }
        self.rho.validate()?;
        Ok(Space::new(p, self.n)?)
    }

    pub fn regularity(&self, exec: Exec) -> RegularityConfig {
        RegularityConfig {
            c_inv: self.c_inv,
            oracle: self.oracle,
            exhaustive_cap: self.caps.exhaustive_cap,
            attempts: self.caps.attempts,
            seed: self.seed,
            max_steps: self.caps.max_steps,
            exec,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            p: 3,
            n: 2,
            delta: 0.4,
            epsilon: None,
            rho: GrowthFunction::linear(1),
            seed: 0,
            oracle: OracleKind::Exhaustive,
            c_inv: 4,
            caps: Caps::default(),
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        assert!(matches!(RunConfig { p: 2, ..base() }.validate(), Err(ConfigError::Core(_))));
        assert_eq!(RunConfig { n: 0, ..base() }.validate().err(), Some(ConfigError::Dimension));
        assert_eq!(RunConfig { delta: 1.0, ..base() }.validate().err(), Some(ConfigError::Delta(1.0)));
        assert_eq!(RunConfig { epsilon: Some(0.0), ..base() }.validate().err(), Some(ConfigError::Epsilon(0.0)));
    }
}
