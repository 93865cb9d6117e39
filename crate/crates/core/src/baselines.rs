//! Reference points for the search: every monotone Boolean function for small
//! `n`, the symmetric `k`-of-`n` thresholds, and profile dominance.

use crate::credmodel::{enumerate_viable, FaultModel};
use crate::mechanism::{PartialTruthTable, Trit};
use crate::{Error, Result};

/// Largest `n` for which the catalog is built without an explicit override.
pub const MAX_CATALOG_N: usize = 5;
/// Hard ceiling for the catalog, reachable with the override.
pub const MAX_CATALOG_N_OVERRIDE: usize = 6;

/// All monotone Boolean functions of `n` variables, constants included.
#[derive(Debug, Clone)]
pub struct MonotoneCatalog {
    pub n: usize,
    pub tables: Vec<PartialTruthTable>,
}

impl MonotoneCatalog {
    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Catalog members other than the two constants.
    pub fn non_constant(&self) -> impl Iterator<Item = &PartialTruthTable> {
        self.tables.iter().filter(|t| t.true_count() != 0 && t.false_count() != 0)
    }
}

/// Rows in ascending popcount order, ties by value.
fn popcount_order(n: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..1u32 << n).collect();
    order.sort_by_key(|x| (x.count_ones(), *x));
    order
}

/// Walks every monotone assignment, calling `visit` on each complete one.
fn for_each_monotone(n: usize, mut visit: impl FnMut(&[bool])) {
    let order = popcount_order(n);
    let mut rows = vec![false; 1 << n];
    fn go(k: usize, n: usize, order: &[u32], rows: &mut [bool], visit: &mut dyn FnMut(&[bool])) {
        if k == order.len() {
            visit(rows);
            return;
        }
        let x = order[k];
        let forced = (0..n).any(|i| x >> i & 1 == 1 && rows[(x ^ (1 << i)) as usize]);
        if !forced {
            rows[x as usize] = false;
            go(k + 1, n, order, rows, visit);
        }
        rows[x as usize] = true;
        go(k + 1, n, order, rows, visit);
        rows[x as usize] = false;
    }
    go(0, n, &order, &mut rows, &mut visit);
}

/// Number of monotone Boolean functions of `n` variables (the Dedekind number), by enumeration.
pub fn dedekind_count(n: usize) -> Result<u64> {
    if n > MAX_CATALOG_N_OVERRIDE {
        return Err(Error::OutOfBounds(format!("monotone count supports n <= {MAX_CATALOG_N_OVERRIDE}")));
    }
    let mut count = 0u64;
    for_each_monotone(n, |_| count += 1);
    Ok(count)
}

pub fn enumerate_monotone(n: usize) -> Result<MonotoneCatalog> {
    enumerate_monotone_with(n, false)
}

/// Like [`enumerate_monotone`]; `allow_large` lifts the ceiling to `n = 6`.
pub fn enumerate_monotone_with(n: usize, allow_large: bool) -> Result<MonotoneCatalog> {
    let max = if allow_large { MAX_CATALOG_N_OVERRIDE } else { MAX_CATALOG_N };
    if n == 0 || n > max {
        return Err(Error::OutOfBounds(format!("monotone catalog supports 1 <= n <= {max}, got {n}")));
    }
    let mut raw: Vec<Vec<bool>> = Vec::new();
    for_each_monotone(n, |rows| raw.push(rows.to_vec()));
    // lexicographic on the row string, row 0 first
    raw.sort();
    let tables = raw
        .into_iter()
        .map(|rows| {
            let trits = rows.into_iter().map(|b| if b { Trit::True } else { Trit::False }).collect();
            PartialTruthTable::from_trits(n, trits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotoneCatalog { n, tables })
}

/// Best catalog member for `model`; the earliest one wins ties.
pub fn exhaustive_search(model: &FaultModel) -> Result<(PartialTruthTable, f64)> {
    let catalog = enumerate_monotone(model.n())?;
    best_in(model, catalog.tables)
}

fn best_in(model: &FaultModel, tables: Vec<PartialTruthTable>) -> Result<(PartialTruthTable, f64)> {
    let list = enumerate_viable(model, true)?;
    let mut best: Option<(PartialTruthTable, f64)> = None;
    for table in tables {
        let p = table.success_probability(model, &list)?;
        if best.as_ref().is_none_or(|(_, q)| p > *q) {
            best = Some((table, p));
        }
    }
    best.ok_or_else(|| Error::OutOfBounds("empty catalog".into()))
}

/// Best `k`-of-`n` threshold mechanism; the smallest `k` wins ties.
pub fn best_symmetric(model: &FaultModel) -> Result<(u32, f64)> {
    let n = model.n();
    let list = enumerate_viable(model, true)?;
    let mut best = (0u32, f64::NEG_INFINITY);
    for k in 1..=n as u32 {
        let p = PartialTruthTable::threshold(n, k)?.success_probability(model, &list)?;
        if p > best.1 {
            best = (k, p);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Equivalent,
    /// The first table's profile strictly contains the second's.
    FirstStrict,
    /// The second table's profile strictly contains the first's.
    SecondStrict,
    Incomparable,
}

/// Compares the profiles of two complete tables as sets.
pub fn dominance_relation(t1: &PartialTruthTable, t2: &PartialTruthTable) -> Result<Dominance> {
    if t1.n() != t2.n() {
        return Err(Error::DimensionMismatch { expected: t1.n(), actual: t2.n() });
    }
    if !t1.is_complete() || !t2.is_complete() {
        return Err(Error::IncompleteTable);
    }
    let (p1, p2) = (t1.profile_of()?, t2.profile_of()?);
    Ok(match (p1.is_superset(&p2), p2.is_superset(&p1)) {
        (true, true) => Dominance::Equivalent,
        (true, false) => Dominance::FirstStrict,
        (false, true) => Dominance::SecondStrict,
        (false, false) => Dominance::Incomparable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credmodel::{AvailabilityVector, CredentialSpec};

    /// Brute force: every Boolean function on `n` inputs, filtered by the pairwise definition.
    fn brute_monotone(n: usize) -> Vec<Vec<bool>> {
        let size = 1usize << n;
        let mut out = Vec::new();
        for bits in 0u64..1 << size {
            let f = |x: usize| bits >> x & 1 == 1;
            let monotone = (0..size).all(|x| (0..size).all(|y| x & y != y || !f(y) || f(x)));
            if monotone {
                out.push((0..size).map(f).collect());
            }
        }
        out.sort();
        out
    }

    #[test]
    fn dedekind_numbers() {
        let expected = [2u64, 3, 6, 20, 168, 7581];
        for (n, want) in expected.iter().enumerate() {
            assert_eq!(dedekind_count(n).unwrap(), *want, "n={n}");
            if n <= 4 {
                assert_eq!(brute_monotone(n).len() as u64, *want);
            }
        }
    }

    #[test]
    fn catalog_matches_brute_force() {
        for n in 1..=4 {
            let catalog = enumerate_monotone(n).unwrap();
            let rows: Vec<Vec<bool>> = catalog
                .tables
                .iter()
                .map(|t| t.rows().iter().map(|r| *r == Trit::True).collect())
                .collect();
            assert_eq!(rows, brute_monotone(n));
        }
        let one = enumerate_monotone(1).unwrap();
        let strings: Vec<_> = one.tables.iter().map(|t| t.row_string()).collect();
        assert_eq!(strings, vec!["00", "01", "11"]);
        assert_eq!(enumerate_monotone(2).unwrap().len(), 6);
        assert_eq!(enumerate_monotone(3).unwrap().len(), 20);
        assert!(enumerate_monotone(6).is_err());
        assert!(enumerate_monotone(0).is_err());
    }

    #[test]
    fn five_variable_catalog_is_self_consistent() {
        let catalog = enumerate_monotone(5).unwrap();
        assert_eq!(catalog.len(), 7581);
        assert!(catalog.tables.iter().all(|t| t.is_complete() && t.is_monotone()));
        for w in catalog.tables.windows(2) {
            assert!(w[0].row_string() < w[1].row_string());
        }
    }

    fn spec(s: f64, l: f64, k: f64, t: f64) -> CredentialSpec {
        CredentialSpec::new(s, l, k, t).unwrap()
    }

    #[test]
    fn exhaustive_examples() {
        let m = FaultModel::uniform(2, spec(0.9, 0.1, 0.0, 0.0)).unwrap();
        let (t, p) = exhaustive_search(&m).unwrap();
        assert!((p - 0.99).abs() < 1e-12);
        assert_eq!(t, PartialTruthTable::threshold(2, 1).unwrap());

        let m = FaultModel::new(vec![spec(0.9, 0.1, 0.0, 0.0), spec(0.9, 0.0, 0.1, 0.0)]).unwrap();
        let (_, p) = exhaustive_search(&m).unwrap();
        assert!((p - 0.9).abs() < 1e-12);

        let m = FaultModel::uniform(2, spec(1.0, 0.0, 0.0, 0.0)).unwrap();
        let (t, p) = exhaustive_search(&m).unwrap();
        assert_eq!(p, 1.0);
        assert!(t.true_count() > 0 && t.false_count() > 0);
        let list = enumerate_viable(&m, true).unwrap();
        for t in enumerate_monotone(2).unwrap().non_constant() {
            assert_eq!(t.success_probability(&m, &list).unwrap(), 1.0);
        }

        let m = FaultModel::uniform(6, spec(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(matches!(exhaustive_search(&m), Err(Error::OutOfBounds(_))));
    }

    #[test]
    fn symmetric_examples() {
        let m = FaultModel::uniform(2, spec(0.9, 0.1, 0.0, 0.0)).unwrap();
        let (k, p) = best_symmetric(&m).unwrap();
        assert_eq!(k, 1);
        assert!((p - 0.99).abs() < 1e-12);

        // Hand product for leak-prone pairs (s = 0.9, l = 0.1):
        //   OR succeeds iff some credential is safe and none is leaked: 0.81
        //   AND succeeds iff the attacker misses one credential: 1 - 0.01 = 0.99
        let m = FaultModel::uniform(2, spec(0.9, 0.0, 0.1, 0.0)).unwrap();
        let (k, p) = best_symmetric(&m).unwrap();
        assert_eq!(k, 2);
        assert!((p - 0.99).abs() < 1e-12);

        let m = FaultModel::uniform(1, spec(0.85, 0.05, 0.05, 0.05)).unwrap();
        let (k, p) = best_symmetric(&m).unwrap();
        assert_eq!(k, 1);
        assert!((p - 0.85).abs() < 1e-15);
    }

    #[test]
    fn dominance_examples() {
        let and = PartialTruthTable::threshold(2, 2).unwrap();
        let c1 = PartialTruthTable::from_fn(2, |x| x.has(0)).unwrap();
        let zero = PartialTruthTable::from_fn(2, |_| false).unwrap();
        assert_eq!(dominance_relation(&and, &c1).unwrap(), Dominance::Incomparable);
        assert_eq!(dominance_relation(&and, &and).unwrap(), Dominance::Equivalent);
        assert_eq!(dominance_relation(&zero, &and).unwrap(), Dominance::SecondStrict);
        assert_eq!(dominance_relation(&and, &zero).unwrap(), Dominance::FirstStrict);

        let other = PartialTruthTable::threshold(3, 2).unwrap();
        assert!(matches!(dominance_relation(&and, &other), Err(Error::DimensionMismatch { .. })));
        let partial = PartialTruthTable::new_table(2).unwrap();
        assert_eq!(dominance_relation(&partial, &and), Err(Error::IncompleteTable));
        let _ = AvailabilityVector(0);
    }

    #[test]
    fn exhaustive_dominates_symmetric() {
        let models = [
            [[0.9, 0.05, 0.03, 0.02], [0.8, 0.1, 0.1, 0.0], [0.7, 0.3, 0.0, 0.0]],
            [[0.6, 0.1, 0.2, 0.1], [0.95, 0.0, 0.05, 0.0], [0.5, 0.5, 0.0, 0.0]],
        ];
        for rows in models {
            let m = FaultModel::from_rows(&rows).unwrap();
            let (_, best) = exhaustive_search(&m).unwrap();
            let (_, sym) = best_symmetric(&m).unwrap();
            assert!(best >= sym);
        }
    }
}
