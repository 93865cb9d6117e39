//! Partial monotone truth tables and the Boolean mechanisms they define.
//!
//! A [`PartialTruthTable`] maps each availability vector to `True`, `False`
//! or `Unset`. The `True` rows are kept upward closed and the `False` rows
//! downward closed, so every table can still be completed to a monotone
//! Boolean function. The mechanism succeeds on a scenario exactly when the
//! user's vector is `True` and the attacker's is `False`, so its profile is
//! the Cartesian product of the two row sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::credmodel::{check_credential_count, AvailabilityVector, FaultModel, Scenario, ScenarioList};
use crate::{Error, Result};

/// Largest credential count for which [`PartialTruthTable::profile_of`] materializes the profile.
pub const MAX_PROFILE_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trit {
    True,
    False,
    Unset,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialTruthTable {
    n: usize,
    rows: Vec<Trit>,
    n_true: usize,
    n_false: usize,
}

impl PartialTruthTable {
    /// Fresh table with only `0^n -> False` and `1^n -> True` set.
    pub fn new_table(n: usize) -> Result<Self> {
        check_credential_count(n)?;
        let size = 1usize << n;
        let mut rows = vec![Trit::Unset; size];
        rows[0] = Trit::False;
        rows[size - 1] = Trit::True;
        Ok(Self { n, rows, n_true: 1, n_false: 1 })
    }

    /// Builds a table from explicit rows, indexed by vector value.
    ///
    /// The rows must already be closed (`True` upward, `False` downward).
    /// Unlike [`new_table`](Self::new_table) this accepts the two constant
    /// functions, which the exhaustive catalog needs.
    pub fn from_trits(n: usize, rows: Vec<Trit>) -> Result<Self> {
        check_credential_count(n)?;
        if rows.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, actual: rows.len() });
        }
        let table = Self::from_rows_unchecked(n, rows);
        table.check_closed()?;
        Ok(table)
    }

    pub(crate) fn from_rows_unchecked(n: usize, rows: Vec<Trit>) -> Self {
        let n_true = rows.iter().filter(|t| **t == Trit::True).count();
        let n_false = rows.iter().filter(|t| **t == Trit::False).count();
        Self { n, rows, n_true, n_false }
    }

    /// Complete table of the Boolean function `f`, which must be monotone.
    pub fn from_fn(n: usize, f: impl Fn(AvailabilityVector) -> bool) -> Result<Self> {
        check_credential_count(n)?;
        let rows = (0..1u32 << n)
            .map(|x| if f(AvailabilityVector(x)) { Trit::True } else { Trit::False })
            .collect();
        Self::from_trits(n, rows)
    }

    /// Complete table whose `True` rows are exactly the vectors above some member of `minimal`.
    pub fn from_minimal_vectors(n: usize, minimal: &[AvailabilityVector]) -> Result<Self> {
        check_credential_count(n)?;
        if let Some(v) = minimal.iter().find(|v| (v.0 as u64) >> n != 0) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: (32 - v.0.leading_zeros()) as usize,
            });
        }
        Self::from_fn(n, |x| minimal.iter().any(|m| x.dominates(*m)))
    }

    /// The `k`-of-`n` threshold function.
    pub fn threshold(n: usize, k: u32) -> Result<Self> {
        Self::from_fn(n, |x| x.count() >= k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Trit] {
        &self.rows
    }

    pub fn get(&self, v: AvailabilityVector) -> Trit {
        self.rows[v.index()]
    }

    /// Value of a complete row; `None` while unset.
    pub fn evaluate(&self, v: AvailabilityVector) -> Option<bool> {
        match self.get(v) {
            Trit::True => Some(true),
            Trit::False => Some(false),
            Trit::Unset => None,
        }
    }

    pub fn true_count(&self) -> usize {
        self.n_true
    }

    pub fn false_count(&self) -> usize {
        self.n_false
    }

    pub fn is_complete(&self) -> bool {
        self.n_true + self.n_false == self.rows.len()
    }

    /// Whether the scenario can be added to the profile: it must not
    /// contradict the table and must not already be in the profile.
    pub fn is_compatible(&self, s: &Scenario) -> bool {
        let user = self.get(s.user);
        let attacker = self.get(s.attacker);
        user != Trit::False
            && attacker != Trit::True
            && (user == Trit::Unset || attacker == Trit::Unset)
    }

    /// `s` is in the current profile.
    pub fn covers(&self, s: &Scenario) -> bool {
        self.get(s.user) == Trit::True && self.get(s.attacker) == Trit::False
    }

    /// Adds `s` to the profile: sets every `x >= user` to `True` and every
    /// `y <= attacker` to `False`.
    pub fn update_with_scenario(&self, s: &Scenario) -> Result<Self> {
        self.check_dims(s)?;
        if !self.is_compatible(s) || !s.is_viable() {
            return Err(Error::IncompatibleScenario);
        }
        let mut next = self.clone();
        let (u, a) = (s.user.0, s.attacker.0);
        for (x, row) in next.rows.iter_mut().enumerate() {
            let x = x as u32;
            if *row == Trit::Unset {
                if x & u == u {
                    *row = Trit::True;
                    next.n_true += 1;
                } else if x & a == x {
                    *row = Trit::False;
                    next.n_false += 1;
                }
            }
        }
        Ok(next)
    }

    fn check_dims(&self, s: &Scenario) -> Result<()> {
        let limit = self.rows.len() as u64;
        if s.user.0 as u64 >= limit || s.attacker.0 as u64 >= limit {
            let actual = (32 - (s.user.0 | s.attacker.0).leading_zeros()) as usize;
            return Err(Error::DimensionMismatch { expected: self.n, actual });
        }
        Ok(())
    }

    /// Upper bound on the number of scenarios any monotone completion can add to the profile.
    pub fn max_profile_additions(&self) -> u64 {
        let size = self.rows.len() as u64;
        let (t, f) = (self.n_true as u64, self.n_false as u64);
        let current = t * f;
        let half = size / 2;
        if t >= f && t >= half {
            t * (size - t) - current
        } else if f >= half {
            f * (size - f) - current
        } else {
            let viable = 4u64.pow(self.n as u32) - 3u64.pow(self.n as u32);
            viable - current
        }
    }

    /// Adds every compatible scenario of `remaining[from_index..]` in order,
    /// then sets all rows still unset to `False`.
    pub fn complete_arbitrarily(&self, remaining: &ScenarioList, from_index: usize) -> Self {
        let mut table = self.clone();
        for (s, _) in remaining.entries().iter().skip(from_index) {
            if table.is_complete() {
                break;
            }
            if table.is_compatible(s) {
                if let Ok(next) = table.update_with_scenario(s) {
                    table = next;
                }
            }
        }
        table.fill_unset_false();
        table
    }

    fn fill_unset_false(&mut self) {
        for row in self.rows.iter_mut() {
            if *row == Trit::Unset {
                *row = Trit::False;
                self.n_false += 1;
            }
        }
    }

    /// Sum of the probabilities of listed scenarios in the profile.
    pub fn success_probability(&self, model: &FaultModel, scenarios: &ScenarioList) -> Result<f64> {
        if model.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: model.n() });
        }
        if scenarios.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: scenarios.n() });
        }
        Ok(self.profile_mass(scenarios, scenarios.len()))
    }

    /// Profile mass over the first `upto` entries of `scenarios`; no dimension checks.
    pub(crate) fn profile_mass(&self, scenarios: &ScenarioList, upto: usize) -> f64 {
        scenarios.entries()[..upto]
            .iter()
            .filter(|(s, _)| self.covers(s))
            .map(|(_, p)| p)
            .sum()
    }

    /// Minimal elements of the `True` set of a complete table, in ascending
    /// order of their bitstrings read as binary numbers (credential 1 most significant).
    pub fn minimal_true_vectors(&self) -> Result<Vec<AvailabilityVector>> {
        if !self.is_complete() {
            return Err(Error::IncompleteTable);
        }
        let minimal = (0..self.rows.len() as u32)
            .filter(|&x| self.rows[x as usize] == Trit::True)
            .filter(|&x| {
                (0..self.n).all(|i| x >> i & 1 == 0 || self.rows[(x & !(1 << i)) as usize] != Trit::True)
            })
            .map(AvailabilityVector);
        let shift = 32 - self.n as u32;
        let mut minimal: Vec<_> = minimal.collect();
        minimal.sort_by_key(|v| v.0.reverse_bits().checked_shr(shift).unwrap_or(0));
        Ok(minimal)
    }

    pub fn summary(&self, model: &FaultModel, scenarios: &ScenarioList) -> Result<MechanismSummary> {
        let success_probability = self.success_probability(model, scenarios)?;
        Ok(MechanismSummary {
            n: self.n,
            minimal_true_vectors: self.minimal_true_vectors()?,
            success_probability,
            failure_probability: 1.0 - success_probability,
        })
    }

    /// The profile `T x F` as an explicit set.
    pub fn profile_of(&self) -> Result<BTreeSet<Scenario>> {
        if self.n > MAX_PROFILE_N {
            return Err(Error::OutOfBounds(format!(
                "profile enumeration supports n <= {MAX_PROFILE_N}, got {}",
                self.n
            )));
        }
        let of = |t: Trit| {
            (0..self.rows.len() as u32)
                .filter(move |&x| self.rows[x as usize] == t)
                .collect::<Vec<_>>()
        };
        let (trues, falses) = (of(Trit::True), of(Trit::False));
        let mut profile = BTreeSet::new();
        for &u in &trues {
            for &a in &falses {
                profile.insert(Scenario::new(u, a));
            }
        }
        Ok(profile)
    }

    /// Verifies the closure invariant by checking every single-bit edge.
    pub fn check_closed(&self) -> Result<()> {
        for x in 0..self.rows.len() {
            for i in 0..self.n {
                let bit = 1 << i;
                if x & bit != 0 {
                    continue;
                }
                let (lo, hi) = (self.rows[x], self.rows[x | bit]);
                if lo == Trit::True && hi != Trit::True {
                    return Err(Error::NotMonotone(format!(
                        "row {} is true but row {} is not",
                        AvailabilityVector(x as u32).to_bitstring(self.n),
                        AvailabilityVector((x | bit) as u32).to_bitstring(self.n)
                    )));
                }
                if hi == Trit::False && lo != Trit::False {
                    return Err(Error::NotMonotone(format!(
                        "row {} is false but row {} is not",
                        AvailabilityVector((x | bit) as u32).to_bitstring(self.n),
                        AvailabilityVector(x as u32).to_bitstring(self.n)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_monotone(&self) -> bool {
        self.check_closed().is_ok()
    }

    /// Mechanism text format: `n=<count>` then one minimal true vector per line.
    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("n={}\n", self.n);
        for v in self.minimal_true_vectors()? {
            out.push_str(&v.to_bitstring(self.n));
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the mechanism text format. The listed vectors must form an antichain.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty mechanism file".into()))?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected `n=<count>` header, got `{header}`")))?;
        check_credential_count(n)?;
        let mut minimal = Vec::new();
        for line in lines {
            if line.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: line.len() });
            }
            minimal.push(AvailabilityVector::from_bitstring(line)?);
        }
        for (i, a) in minimal.iter().enumerate() {
            for (j, b) in minimal.iter().enumerate() {
                if i != j && a.dominates(*b) {
                    return Err(Error::NotMonotone(format!(
                        "{} is not minimal: it lies above {}",
                        a.to_bitstring(n),
                        b.to_bitstring(n)
                    )));
                }
            }
        }
        Self::from_minimal_vectors(n, &minimal)
    }

    /// Rows as a `0`/`1`/`*` string, row 0 first.
    pub fn row_string(&self) -> String {
        self.rows
            .iter()
            .map(|t| match t {
                Trit::True => '1',
                Trit::False => '0',
                Trit::Unset => '*',
            })
            .collect()
    }
}

pub fn new_table(n: usize) -> Result<PartialTruthTable> {
    PartialTruthTable::new_table(n)
}

impl fmt::Display for PartialTruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.minimal_true_vectors() {
            Ok(minimal) => {
                let parts: Vec<_> = minimal.iter().map(|v| v.to_bitstring(self.n)).collect();
                write!(f, "{}", parts.join(","))
            }
            Err(_) => write!(f, "{}", self.row_string()),
        }
    }
}

/// Human-readable description of a complete mechanism.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismSummary {
    pub n: usize,
    #[serde(serialize_with = "serialize_vectors")]
    pub minimal_true_vectors: Vec<AvailabilityVector>,
    pub success_probability: f64,
    pub failure_probability: f64,
}

impl MechanismSummary {
    pub fn bitstrings(&self) -> Vec<String> {
        self.minimal_true_vectors.iter().map(|v| v.to_bitstring(self.n)).collect()
    }
}

fn serialize_vectors<S: serde::Serializer>(
    vectors: &[AvailabilityVector],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    // Bit width is not known here; the widest set bit is enough for a listing.
    let n = vectors.iter().map(|v| 32 - v.0.leading_zeros() as usize).max().unwrap_or(0);
    ser.collect_seq(vectors.iter().map(|v| v.to_bitstring(n.max(1))))
}
