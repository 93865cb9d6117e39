//! Fault-model families used in the case studies, and the reference
//! mechanisms the wallet and security-question studies are compared with.

use std::fmt;
use std::str::FromStr;

use crate::credmodel::{AvailabilityVector, CredentialSpec, FaultModel, MAX_CREDENTIALS};
use crate::mechanism::PartialTruthTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Credential 1 may be lost or leaked (0.01 each); the rest may be stolen (0.01).
    Hetero,
    /// Every credential: loss 0.05, leak 0.03, theft 0.01.
    Fig1b,
    /// Regular credentials (loss = leak = 0.01) plus easy-to-lose ones (loss 0.3).
    Wallet,
    /// Regular credentials plus easy-to-leak security questions (leak 0.3).
    Questions,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hetero" => Ok(Family::Hetero),
            "fig1b" => Ok(Family::Fig1b),
            "wallet" => Ok(Family::Wallet),
            "questions" => Ok(Family::Questions),
            _ => Err(Error::Parse(format!("unknown case-study family `{s}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Hetero => "hetero",
            Family::Fig1b => "fig1b",
            Family::Wallet => "wallet",
            Family::Questions => "questions",
        })
    }
}

pub fn regular() -> CredentialSpec {
    CredentialSpec::new(0.98, 0.01, 0.01, 0.0).expect("valid row")
}

pub fn easy_to_lose() -> CredentialSpec {
    CredentialSpec::new(0.7, 0.3, 0.0, 0.0).expect("valid row")
}

pub fn easy_to_leak() -> CredentialSpec {
    CredentialSpec::new(0.7, 0.0, 0.3, 0.0).expect("valid row")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseStudyConfig {
    pub family: Family,
    pub n_regular: usize,
    pub n_weak: usize,
}

impl CaseStudyConfig {
    pub fn new(family: Family, n_regular: usize, n_weak: usize) -> Result<Self> {
        let cfg = Self { family, n_regular, n_weak };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.family, Family::Hetero | Family::Fig1b) && self.n_weak != 0 {
            return Err(Error::OutOfBounds(format!("family {} takes no weak credentials", self.family)));
        }
        let n = self.n();
        if n == 0 || n > MAX_CREDENTIALS {
            return Err(Error::CredentialCount { n, max: MAX_CREDENTIALS });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_regular + self.n_weak
    }

    /// Regular credentials come first, weak ones after.
    pub fn model(&self) -> Result<FaultModel> {
        self.validate()?;
        let creds = match self.family {
            Family::Hetero => (0..self.n_regular)
                .map(|i| {
                    if i == 0 {
                        CredentialSpec::new(0.98, 0.01, 0.01, 0.0)
                    } else {
                        CredentialSpec::new(0.99, 0.0, 0.0, 0.01)
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            Family::Fig1b => vec![CredentialSpec::new(0.91, 0.05, 0.03, 0.01)?; self.n_regular],
            Family::Wallet => weak_after_regular(self.n_regular, self.n_weak, easy_to_lose()),
            Family::Questions => weak_after_regular(self.n_regular, self.n_weak, easy_to_leak()),
        };
        FaultModel::new(creds)
    }

    fn regular_mask(&self) -> u32 {
        (1u32 << self.n_regular) - 1
    }

    fn weak_mask(&self) -> u32 {
        ((1u32 << self.n_weak) - 1) << self.n_regular
    }

    /// The structured mechanism the family's optimum is expected to match:
    /// any weak credential or a `floor(n/2)+1` majority of the regular ones for
    /// wallets, and every question plus `ceil(n/2)` regular credentials for
    /// security questions.
    pub fn reference_table(&self) -> Result<Option<PartialTruthTable>> {
        let (regular, weak) = (self.regular_mask(), self.weak_mask());
        let r = self.n_regular as u32;
        let table = match self.family {
            Family::Wallet => PartialTruthTable::from_fn(self.n(), |x: AvailabilityVector| {
                x.0 & weak != 0 || (x.0 & regular).count_ones() > r / 2
            })?,
            Family::Questions => PartialTruthTable::from_fn(self.n(), |x: AvailabilityVector| {
                x.0 & weak == weak && (x.0 & regular).count_ones() >= r.div_ceil(2)
            })?,
            Family::Hetero | Family::Fig1b => return Ok(None),
        };
        Ok(Some(table))
    }

    /// `k`-of-`n` over the regular credentials only, ignoring the weak ones.
    pub fn regular_threshold(&self, k: u32) -> Result<PartialTruthTable> {
        let regular = self.regular_mask();
        PartialTruthTable::from_fn(self.n(), |x| (x.0 & regular).count_ones() >= k)
    }
}

fn weak_after_regular(n_regular: usize, n_weak: usize, weak: CredentialSpec) -> Vec<CredentialSpec> {
    std::iter::repeat_n(regular(), n_regular)
        .chain(std::iter::repeat_n(weak, n_weak))
        .collect()
}

/// Default search margin: `1e-5` up to nine credentials, `1e-6` beyond.
pub fn default_delta(n: usize) -> f64 {
    if n <= 9 {
        1e-5
    } else {
        1e-6
    }
}
