//! Scenario-based branch and bound.
//!
//! Scenarios are visited in descending probability. At each node the search
//! either adds the next scenario to the profile (closing the table upward and
//! downward) or skips it. A branch is cut when even the most probable
//! scenarios that could still be added, capped by
//! [`PartialTruthTable::max_profile_additions`], cannot beat the best complete
//! table by more than `delta`.

use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::credmodel::{enumerate_viable, FaultModel, ScenarioList};
use crate::mechanism::PartialTruthTable;
use crate::{Error, Result};

/// Slack allowed when re-evaluating a stored success probability.
pub const CERTIFY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchParams {
    pub delta: f64,
    pub node_limit: Option<u64>,
    pub drop_zero: bool,
    /// Disables the delta cut. Only useful as a reference run in tests.
    pub pruning: bool,
}

impl SearchParams {
    pub fn new(delta: f64) -> Result<Self> {
        let params = Self { delta, node_limit: None, drop_zero: true, pruning: true };
        params.validate()?;
        Ok(params)
    }

    pub fn with_node_limit(mut self, limit: u64) -> Result<Self> {
        self.node_limit = Some(limit);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if self.node_limit == Some(0) {
            return Err(Error::InvalidNodeLimit);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub branches_pruned: u64,
    pub completions_evaluated: u64,
    pub best_updates: u64,
    /// Length of the scenario list the search walked.
    pub scenarios: usize,
    pub max_depth: usize,
    #[serde(serialize_with = "serialize_secs")]
    pub elapsed: Duration,
}

impl SearchStats {
    /// The deterministic part of the statistics.
    pub fn counts(&self) -> [u64; 6] {
        [
            self.nodes_visited,
            self.branches_pruned,
            self.completions_evaluated,
            self.best_updates,
            self.scenarios as u64,
            self.max_depth as u64,
        ]
    }
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_table: PartialTruthTable,
    pub success_probability: f64,
    pub params: SearchParams,
    pub stats: SearchStats,
    /// False when the node limit stopped the search before it finished.
    pub certified: bool,
}

impl SearchResult {
    pub fn failure_probability(&self) -> f64 {
        1.0 - self.success_probability
    }
}

/// Probabilities of the entries at or after `from_index` that `table` can
/// still take into its profile, in list order (hence descending).
pub fn addable_probabilities(table: &PartialTruthTable, list: &ScenarioList, from_index: usize) -> Vec<f64> {
    list.entries()
        .iter()
        .skip(from_index)
        .filter(|(s, _)| table.is_compatible(s))
        .map(|(_, p)| *p)
        .collect()
}

fn capped_addable_sum(table: &PartialTruthTable, list: &ScenarioList, from_index: usize, cap: u64) -> f64 {
    let mut sum = 0.0;
    let mut taken = 0u64;
    for (s, p) in list.entries().iter().skip(from_index) {
        if taken == cap {
            break;
        }
        if table.is_compatible(s) {
            sum += p;
            taken += 1;
        }
    }
    sum
}

struct Incumbent {
    table: Option<PartialTruthTable>,
    probability: f64,
}

impl Incumbent {
    fn offer(&mut self, table: &PartialTruthTable, probability: f64, stats: &mut SearchStats) {
        // The first complete table is always kept, even at probability 0.
        if self.table.is_none() || probability > self.probability {
            self.table = Some(table.clone());
            self.probability = probability;
            stats.best_updates += 1;
        }
    }
}

/// Finds a complete monotone table within `params.delta` of the best success probability.
pub fn scenario_based_search(model: &FaultModel, params: &SearchParams) -> Result<SearchResult> {
    params.validate()?;
    let list = enumerate_viable(model, params.drop_zero)?;
    search_list(model.n(), &list, params)
}

/// Runs the search over an already enumerated scenario list.
pub fn search_list(n: usize, list: &ScenarioList, params: &SearchParams) -> Result<SearchResult> {
    params.validate()?;
    if list.n() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: list.n() });
    }
    let started = Instant::now();
    let root = PartialTruthTable::new_table(n)?;
    let mut stats = SearchStats { scenarios: list.len(), ..SearchStats::default() };
    let mut best = Incumbent { table: None, probability: 0.0 };
    let mut exhausted = false;

    // Depth-first; the include child is pushed last so it is explored first.
    let mut stack: Vec<(Rc<PartialTruthTable>, usize)> = vec![(Rc::new(root.clone()), 0)];
    while let Some((table, idx)) = stack.pop() {
        if params.node_limit.is_some_and(|limit| stats.nodes_visited >= limit) {
            exhausted = true;
            break;
        }
        stats.nodes_visited += 1;
        stats.max_depth = stats.max_depth.max(idx);

        let success = table.profile_mass(list, list.len());
        if table.is_complete() {
            stats.completions_evaluated += 1;
            best.offer(&table, success, &mut stats);
            continue;
        }

        let cap = table.max_profile_additions();
        let additions = capped_addable_sum(&table, list, idx, cap);
        if additions == 0.0 {
            let completed = table.complete_arbitrarily(list, idx);
            let completed_success = completed.profile_mass(list, list.len());
            stats.completions_evaluated += 1;
            best.offer(&completed, completed_success, &mut stats);
            continue;
        }

        let potential = success + additions;
        if params.pruning && best.probability > 0.0 && best.probability > potential - params.delta {
            stats.branches_pruned += 1;
            continue;
        }

        let (scenario, _) = list.entries()[idx];
        stack.push((Rc::clone(&table), idx + 1));
        if table.is_compatible(&scenario) {
            let included = table.update_with_scenario(&scenario)?;
            stack.push((Rc::new(included), idx + 1));
        }
    }

    let (best_table, success_probability) = match best.table {
        Some(table) => (table, best.probability),
        None => {
            let table = root.complete_arbitrarily(list, 0);
            let p = table.profile_mass(list, list.len());
            (table, p)
        }
    };
    stats.elapsed = started.elapsed();
    Ok(SearchResult {
        best_table,
        success_probability,
        params: *params,
        stats,
        certified: !exhausted,
    })
}

/// Re-checks a result: complete, monotone, and its probability re-evaluates
/// within [`CERTIFY_TOLERANCE`].
pub fn certify(result: &SearchResult, model: &FaultModel) -> bool {
    let table = &result.best_table;
    if table.n() != model.n() || !table.is_complete() || !table.is_monotone() {
        return false;
    }
    let Ok(list) = enumerate_viable(model, true) else {
        return false;
    };
    match table.success_probability(model, &list) {
        Ok(p) => (p - result.success_probability).abs() <= CERTIFY_TOLERANCE,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credmodel::{AvailabilityVector, CredentialSpec, Scenario};
    use crate::baselines::exhaustive_search;
    use crate::mechanism::{new_table, Trit};
    use proptest::prelude::*;

    fn spec(s: f64, l: f64, k: f64, t: f64) -> CredentialSpec {
        CredentialSpec::new(s, l, k, t).unwrap()
    }

    #[test]
    fn or_is_optimal_for_two_lossy_credentials() {
        let m = FaultModel::uniform(2, spec(0.9, 0.1, 0.0, 0.0)).unwrap();
        let r = scenario_based_search(&m, &SearchParams::new(1e-6).unwrap()).unwrap();
        assert!((r.success_probability - 0.99).abs() < 1e-12);
        assert_eq!(r.best_table, PartialTruthTable::threshold(2, 1).unwrap());
        assert!(r.certified);
        assert!(certify(&r, &m));
    }

    #[test]
    fn loss_and_leak_pair_caps_at_point_nine() {
        let m = FaultModel::new(vec![spec(0.9, 0.1, 0.0, 0.0), spec(0.9, 0.0, 0.1, 0.0)]).unwrap();
        let r = scenario_based_search(&m, &SearchParams::new(1e-6).unwrap()).unwrap();
        assert!((r.success_probability - 0.9).abs() < 1e-12);
    }

    #[test]
    fn addable_probability_filter() {
        let m = FaultModel::uniform(2, spec(0.7, 0.1, 0.1, 0.1)).unwrap();
        let list = enumerate_viable(&m, false).unwrap();
        assert_eq!(list.len(), 7);

        let fresh = new_table(2).unwrap();
        let addable = addable_probabilities(&fresh, &list, 0);
        let expected: Vec<f64> = list
            .iter()
            .filter(|(s, _)| *s != Scenario::new(0b11, 0b00))
            .map(|(_, p)| *p)
            .collect();
        assert_eq!(addable, expected);

        // f = c1 is complete: every viable scenario is either covered or contradicts it
        let c1 = PartialTruthTable::from_fn(2, |x| x.has(0)).unwrap();
        assert!(addable_probabilities(&c1, &list, 0).is_empty());
        for (s, _) in list.iter() {
            let covered = c1.covers(s);
            let contradicts = c1.get(s.user) == Trit::False || c1.get(s.attacker) == Trit::True;
            assert!(covered || contradicts);
        }
    }

    #[test]
    fn certify_rejects_corruption() {
        let m = FaultModel::uniform(3, spec(0.9, 0.05, 0.05, 0.0)).unwrap();
        let r = scenario_based_search(&m, &SearchParams::new(1e-9).unwrap()).unwrap();
        assert!(certify(&r, &m));

        let mut bad = r.clone();
        let mut rows = bad.best_table.rows().to_vec();
        let top = rows.len() - 1;
        rows[top] = Trit::False;
        rows[0] = Trit::True;
        bad.best_table = PartialTruthTable::from_rows_unchecked(3, rows);
        assert!(!certify(&bad, &m));

        let mut off = r.clone();
        off.success_probability += 1e-9;
        assert!(!certify(&off, &m));
    }

    #[test]
    fn node_limit_yields_uncertified_result() {
        let m = FaultModel::uniform(4, spec(0.6, 0.15, 0.15, 0.1)).unwrap();
        let params = SearchParams::new(1e-9).unwrap().with_node_limit(3).unwrap();
        let r = scenario_based_search(&m, &params).unwrap();
        assert!(!r.certified);
        assert!(r.best_table.is_complete());
        assert!(r.best_table.is_monotone());
        assert_eq!(r.stats.nodes_visited, 3);
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(SearchParams::new(0.0), Err(Error::InvalidDelta(_))));
        assert!(matches!(SearchParams::new(1.0), Err(Error::InvalidDelta(_))));
        assert!(matches!(SearchParams::new(f64::NAN), Err(Error::InvalidDelta(_))));
        assert!(matches!(
            SearchParams::new(0.1).unwrap().with_node_limit(0),
            Err(Error::InvalidNodeLimit)
        ));
    }

    #[test]
    fn hopeless_model_still_returns_a_complete_table() {
        // The user never holds anything, so every mechanism scores 0.
        let m = FaultModel::uniform(3, spec(0.0, 0.5, 0.25, 0.25)).unwrap();
        let r = scenario_based_search(&m, &SearchParams::new(1e-6).unwrap()).unwrap();
        assert_eq!(r.success_probability, 0.0);
        assert!(r.best_table.is_complete());
        assert!(certify(&r, &m));
    }

    #[test]
    fn single_credential() {
        let m = FaultModel::uniform(1, spec(0.8, 0.1, 0.05, 0.05)).unwrap();
        let r = scenario_based_search(&m, &SearchParams::new(1e-6).unwrap()).unwrap();
        assert!((r.success_probability - 0.8).abs() < 1e-15);
        assert_eq!(r.best_table.minimal_true_vectors().unwrap(), vec![AvailabilityVector(1)]);
    }

    #[test]
    fn deterministic() {
        let m = FaultModel::from_rows(&[
            [0.9, 0.05, 0.03, 0.02],
            [0.8, 0.1, 0.1, 0.0],
            [0.85, 0.0, 0.1, 0.05],
            [0.7, 0.3, 0.0, 0.0],
        ])
        .unwrap();
        let p = SearchParams::new(1e-7).unwrap();
        let a = scenario_based_search(&m, &p).unwrap();
        let b = scenario_based_search(&m, &p).unwrap();
        assert_eq!(a.best_table, b.best_table);
        assert_eq!(a.success_probability.to_bits(), b.success_probability.to_bits());
        assert_eq!(a.stats.counts(), b.stats.counts());
    }

    fn arb_row() -> impl Strategy<Value = [f64; 4]> {
        [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64].prop_map(|w| {
            let sum: f64 = w.iter().sum::<f64>().max(1e-9);
            [w[0] / sum, w[1] / sum, w[2] / sum, 1.0 - (w[0] + w[1] + w[2]) / sum]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn pruning_never_loses_more_than_delta(rows in prop::collection::vec(arb_row(), 2)) {
            let Ok(m) = FaultModel::from_rows(&rows) else { return Ok(()) };
            let pruned = scenario_based_search(&m, &SearchParams::new(1e-9).unwrap()).unwrap();
            let mut full = SearchParams::new(1e-9).unwrap();
            full.pruning = false;
            let unpruned = scenario_based_search(&m, &full).unwrap();
            let (_, optimum) = exhaustive_search(&m).unwrap();
            prop_assert!((unpruned.success_probability - optimum).abs() < 1e-12);
            prop_assert!(pruned.success_probability >= unpruned.success_probability - 1e-9);
            prop_assert_eq!(unpruned.stats.branches_pruned, 0);
        }
    }
}
