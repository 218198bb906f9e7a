use std::path::Path;

use clap::Args;
use loggrowth::rat::{self, Q};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "LOGGROWTH_CONFIG";

/// Run parameters as they appear on the command line; unset flags fall back to the config
/// file and then to the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigFlags {
    /// JSON config file
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<String>,
    /// Residue characteristic
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Frobenius power, q = p^h
    #[arg(long, global = true)]
    pub h: Option<u32>,
    /// Residue degree of the coefficient field
    #[arg(long, global = true)]
    pub degree: Option<u32>,
    /// p-adic relative precision N
    #[arg(long = "prec", global = true)]
    pub prec: Option<u32>,
    /// Series order T
    #[arg(long = "order", short = 'T', global = true)]
    pub order: Option<usize>,
    /// Ladder base r_0
    #[arg(long, global = true)]
    pub r0: Option<String>,
    /// Ladder depth M
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Classification tolerance
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Snap denominator bound D
    #[arg(long = "max-den", global = true)]
    pub max_den: Option<u64>,
    /// Seed for the randomized cyclic vector search
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Retry budget for the randomized search
    #[arg(long, global = true)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: u64,
    pub h: u32,
    pub degree: u32,
    pub prec: u32,
    pub order: usize,
    pub r0: String,
    pub depth: usize,
    pub tau: f64,
    pub max_den: u64,
    pub seed: u64,
    pub budget: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 5,
            h: 1,
            degree: 1,
            prec: 30,
            order: 4096,
            r0: "1/2".into(),
            depth: 8,
            tau: 0.15,
            max_den: 8,
            seed: 0,
            budget: 50,
        }
    }
}

impl RunConfig {
    pub fn resolve(flags: &ConfigFlags) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Schema(format!("{path}: {e}")))?;
                serde_json::from_str(&text).map_err(|e| CliError::schema_at(path, &e))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = flags.$f.clone() { cfg.$f = v; })* };
        }
        take!(p, h, degree, prec, order, r0, depth, tau, max_den, seed, budget);
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let r0 = self.r0()?;
        if self.h == 0 || self.degree == 0 || self.prec == 0 || self.order == 0 || self.max_den == 0 || self.budget == 0 {
            return Err(CliError::Infeasible("h, degree, prec, order, max-den and budget must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(CliError::Infeasible("tau must be positive".into()));
        }
        if r0 <= rat::zero() {
            return Err(CliError::Infeasible("r0 must be positive".into()));
        }
        Ok(())
    }

    pub fn r0(&self) -> Result<Q, CliError> {
        rat::parse_q(&self.r0).ok_or_else(|| CliError::Infeasible(format!("r0 `{}` is not a rational", self.r0)))
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.h)
    }
}
