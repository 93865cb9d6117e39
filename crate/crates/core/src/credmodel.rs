//! Credential fault model and scenario space.
//!
//! Every credential is independently in one of four states. A scenario fixes
//! which credentials the user and the attacker hold; its probability is the
//! product of the per-credential state probabilities.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest credential count accepted by [`FaultModel`].
pub const MAX_CREDENTIALS: usize = 14;

/// Tolerance on the per-credential probability row sum.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CredState {
    /// Available to the user only.
    Safe,
    /// Available to neither player.
    Loss,
    /// Available to both players.
    Leak,
    /// Available to the attacker only.
    Theft,
}

impl CredState {
    pub const ALL: [CredState; 4] = [
        CredState::Safe,
        CredState::Loss,
        CredState::Leak,
        CredState::Theft,
    ];

    /// Availability bits `(user, attacker)` for this state.
    pub fn bits(self) -> (bool, bool) {
        match self {
            CredState::Safe => (true, false),
            CredState::Loss => (false, false),
            CredState::Leak => (true, true),
            CredState::Theft => (false, true),
        }
    }
}

/// Maps a credential's availability to the user and to the attacker to its state.
pub fn state_of(user_bit: bool, attacker_bit: bool) -> CredState {
    match (user_bit, attacker_bit) {
        (true, false) => CredState::Safe,
        (false, false) => CredState::Loss,
        (true, true) => CredState::Leak,
        (false, true) => CredState::Theft,
    }
}

/// Fault probabilities of a single credential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredentialSpec {
    pub p_safe: f64,
    pub p_loss: f64,
    pub p_leak: f64,
    pub p_theft: f64,
}

impl CredentialSpec {
    /// Validates the row and renormalizes it by its sum.
    ///
    /// Each entry must lie in `[0, 1]` and the four entries must sum to 1
    /// within [`ROW_SUM_TOLERANCE`].
    pub fn new(p_safe: f64, p_loss: f64, p_leak: f64, p_theft: f64) -> Result<Self> {
        Self::validated(0, [p_safe, p_loss, p_leak, p_theft])
    }

    fn validated(index: usize, row: [f64; 4]) -> Result<Self> {
        for &value in &row {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { index, value });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::RowSum { index, sum });
        }
        Ok(Self {
            p_safe: row[0] / sum,
            p_loss: row[1] / sum,
            p_leak: row[2] / sum,
            p_theft: row[3] / sum,
        })
    }

    pub fn probability(&self, state: CredState) -> f64 {
        match state {
            CredState::Safe => self.p_safe,
            CredState::Loss => self.p_loss,
            CredState::Leak => self.p_leak,
            CredState::Theft => self.p_theft,
        }
    }

    /// Probability that the user holds this credential (safe or leaked).
    pub fn p_user_has(&self) -> f64 {
        self.p_safe + self.p_leak
    }
}

/// Independent fault probabilities for an ordered set of credentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultModel {
    creds: Vec<CredentialSpec>,
}

impl FaultModel {
    pub fn new(creds: Vec<CredentialSpec>) -> Result<Self> {
        check_credential_count(creds.len())?;
        Ok(Self { creds })
    }

    /// Builds a model from raw `[safe, loss, leak, theft]` rows.
    pub fn from_rows(rows: &[[f64; 4]]) -> Result<Self> {
        let creds = rows
            .iter()
            .enumerate()
            .map(|(i, row)| CredentialSpec::validated(i, *row))
            .collect::<Result<Vec<_>>>()?;
        Self::new(creds)
    }

    /// All credentials share the same fault probabilities.
    pub fn uniform(n: usize, spec: CredentialSpec) -> Result<Self> {
        Self::new(vec![spec; n])
    }

    pub fn n(&self) -> usize {
        self.creds.len()
    }

    pub fn creds(&self) -> &[CredentialSpec] {
        &self.creds
    }

    /// Parses the `safe,loss,leak,theft` CSV format, one row per credential.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let expected = ["safe", "loss", "leak", "theft"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse(format!(
                "expected header `safe,loss,leak,theft`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut creds = Vec::new();
        for (index, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != 4 {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected 4",
                    index + 1,
                    record.len()
                )));
            }
            let mut row = [0.0; 4];
            for (slot, field) in row.iter_mut().zip(record.iter()) {
                *slot = field.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("row {}: `{field}`: {e}", index + 1))
                })?;
            }
            creds.push(CredentialSpec::validated(index, row)?);
        }
        Self::new(creds)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv_reader(text.as_bytes())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("safe,loss,leak,theft\n");
        for c in &self.creds {
            out.push_str(&format!("{},{},{},{}\n", c.p_safe, c.p_loss, c.p_leak, c.p_theft));
        }
        out
    }
}

pub(crate) fn check_credential_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_CREDENTIALS {
        return Err(Error::CredentialCount { n, max: MAX_CREDENTIALS });
    }
    Ok(())
}

/// Availability of every credential to one player; bit `i` is credential `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AvailabilityVector(pub u32);

impl AvailabilityVector {
    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn has(self, credential: usize) -> bool {
        self.0 >> credential & 1 == 1
    }

    /// `self >= other` in the componentwise order.
    pub fn dominates(self, other: AvailabilityVector) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// Renders the vector with credential 1 leftmost.
    pub fn to_bitstring(self, n: usize) -> String {
        (0..n).map(|i| if self.has(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 32 {
            return Err(Error::Parse(format!("bad availability vector `{s}`")));
        }
        let mut bits = 0u32;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return Err(Error::Parse(format!("bad availability vector `{s}`"))),
            }
        }
        Ok(Self(bits))
    }
}

/// A pair of user and attacker availability vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scenario {
    pub user: AvailabilityVector,
    pub attacker: AvailabilityVector,
}

impl Scenario {
    pub fn new(user: u32, attacker: u32) -> Self {
        Self {
            user: AvailabilityVector(user),
            attacker: AvailabilityVector(attacker),
        }
    }

    /// Builds a scenario from per-credential states, credential 1 first.
    pub fn from_states(states: &[CredState]) -> Self {
        let (mut u, mut a) = (0u32, 0u32);
        for (i, s) in states.iter().enumerate() {
            let (ub, ab) = s.bits();
            u |= (ub as u32) << i;
            a |= (ab as u32) << i;
        }
        Self::new(u, a)
    }

    pub fn state(&self, credential: usize) -> CredState {
        state_of(self.user.has(credential), self.attacker.has(credential))
    }

    /// Some credential is held by the user and not by the attacker.
    pub fn is_viable(&self) -> bool {
        self.user.0 & !self.attacker.0 != 0
    }

    /// Integer key `user * 2^n + attacker` used to break probability ties.
    pub fn encode(&self, n: usize) -> u64 {
        ((self.user.0 as u64) << n) | self.attacker.0 as u64
    }

    fn fits(&self, n: usize) -> bool {
        let limit = 1u64 << n;
        (self.user.0 as u64) < limit && (self.attacker.0 as u64) < limit
    }
}

pub fn is_viable(s: &Scenario) -> bool {
    s.is_viable()
}

fn width(s: &Scenario) -> usize {
    (32 - (s.user.0 | s.attacker.0).leading_zeros()) as usize
}

/// Product of the state probabilities of every credential in `s`.
pub fn scenario_probability(model: &FaultModel, s: &Scenario) -> Result<f64> {
    let n = model.n();
    if !s.fits(n) {
        return Err(Error::DimensionMismatch { expected: n, actual: width(s) });
    }
    Ok(product(model, s))
}

fn product(model: &FaultModel, s: &Scenario) -> f64 {
    model
        .creds
        .iter()
        .enumerate()
        .fold(1.0, |acc, (i, c)| acc * c.probability(s.state(i)))
}

/// Viable scenarios with their probabilities, highest probability first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioList {
    n: usize,
    entries: Vec<(Scenario, f64)>,
}

impl ScenarioList {
    /// Sorts `entries` by descending probability, ties by ascending encoding.
    pub fn from_entries(n: usize, mut entries: Vec<(Scenario, f64)>) -> Self {
        entries.sort_by(|(sa, pa), (sb, pb)| {
            pb.total_cmp(pa).then_with(|| sa.encode(n).cmp(&sb.encode(n)))
        });
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(Scenario, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Scenario, f64)> {
        self.entries.iter()
    }

    pub fn positive_count(&self) -> usize {
        self.entries.iter().filter(|(_, p)| *p > 0.0).count()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Lists all viable scenarios of `model`, optionally only those with positive
/// probability, in [`ScenarioList`] order.
pub fn enumerate_viable(model: &FaultModel, drop_zero: bool) -> Result<ScenarioList> {
    let n = model.n();
    check_credential_count(n)?;
    let mut entries = Vec::new();
    if drop_zero {
        // Walk only the states with non-zero probability for each credential.
        let mut stack: Vec<(usize, u32, u32, f64)> = vec![(0, 0, 0, 1.0)];
        while let Some((i, u, a, p)) = stack.pop() {
            if i == n {
                let s = Scenario::new(u, a);
                if s.is_viable() {
                    entries.push((s, p));
                }
                continue;
            }
            let spec = &model.creds[i];
            for state in CredState::ALL {
                let q = spec.probability(state);
                if q > 0.0 {
                    let (ub, ab) = state.bits();
                    stack.push((i + 1, u | (ub as u32) << i, a | (ab as u32) << i, p * q));
                }
            }
        }
        entries.retain(|(_, p)| *p > 0.0);
    } else {
        let size = 1u32 << n;
        for u in 0..size {
            for a in 0..size {
                let s = Scenario::new(u, a);
                if s.is_viable() {
                    entries.push((s, product(model, &s)));
                }
            }
        }
    }
    Ok(ScenarioList::from_entries(n, entries))
}

/// Total probability of the first `k` entries.
pub fn cumulative_top_k(list: &ScenarioList, k: usize) -> f64 {
    list.entries.iter().take(k).map(|(_, p)| p).sum()
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = width(self).max(1);
        write!(f, "({}, {})", self.user.to_bitstring(n), self.attacker.to_bitstring(n))
    }
}
