//! Deterministic analytic what-if estimator.
//!
//! Stands in for optimizer calls: every cost is a pure function of the
//! query, the hypothetical index configuration, and the catalog statistics.
//! The estimator counts its own invocations so call budgets can be audited.
//!
//! ## Cost formula
//!
//! Per referenced table `t` (including IN-subquery tables, which are charged
//! like any other block):
//!
//! ```text
//! access(t) = min( row_count(t) * c_scan,
//!                  min over applicable indexes i of
//!                      c_probe * log2(1 + row_count(t))
//!                      + row_count(t) * sel(i, q) * c_fetch )
//! ```
//!
//! An index is applicable iff a prefix of its column sequence matches, in
//! order, zero or more equality-predicate columns of the query on `t`,
//! optionally followed by one range/ORDER-BY/GROUP-BY column; at least one
//! column must match. `sel(i, q)` is the product of the matched predicate
//! columns' selectivities (an order/group slot contributes no factor).
//!
//! ```text
//! query_cost = sum over t of access(t)
//!            + sum over equi-joins of c_join * min(row_count(left), row_count(right))
//!            + sum over IN-subqueries of c_join * row_count(outer table)
//! ```
//!
//! The IN-subquery term charges a per-outer-row probe into the materialized
//! subquery result, which is what makes flattening it into an equi-join
//! (hash join on the smaller side) worth something to the rewriter.
//!
//! Duplicated predicates are collapsed before selectivities multiply, so a
//! redundant conjunct never changes a cost. Constant predicates are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::catalog::{selectivity, Catalog, ColumnDef, PredicateKind, MIN_SELECTIVITY};
use crate::sqlfront::{CmpOp, ColRef, Literal, Predicate, Query, QueryAst, Workload};

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("query references unknown table `{0}`")]
    UnknownTable(String),
    #[error("index candidate on `{table}`: {message}")]
    InvalidCandidate { table: String, message: String },
}

/// Cost constants; read from the `cost_model` config section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConstants {
    pub c_scan: f64,
    pub c_probe: f64,
    pub c_fetch: f64,
    pub c_join: f64,
    pub entry_overhead: u64,
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants {
            c_scan: 1.0,
            c_probe: 10.0,
            c_fetch: 2.0,
            c_join: 0.1,
            entry_overhead: 8,
        }
    }
}

/// An ordered multi-column index on one table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexCandidate {
    pub table: String,
    pub columns: Vec<String>,
    pub size_bytes: u64,
}

impl IndexCandidate {
    /// Build a candidate, computing its size from catalog statistics:
    /// `row_count * (sum of column widths + entry_overhead)`.
    pub fn new(
        table: impl Into<String>,
        columns: Vec<String>,
        catalog: &Catalog,
        constants: &CostConstants,
    ) -> Result<Self, CostError> {
        let table = table.into();
        let schema = catalog
            .table(&table)
            .ok_or_else(|| CostError::UnknownTable(table.clone()))?;
        if columns.is_empty() {
            return Err(CostError::InvalidCandidate {
                table,
                message: "index must have at least one column".into(),
            });
        }
        let mut seen = BTreeSet::new();
        let mut width_sum: u64 = 0;
        for col in &columns {
            if !seen.insert(col.as_str()) {
                return Err(CostError::InvalidCandidate {
                    table,
                    message: format!("duplicate column `{col}`"),
                });
            }
            match schema.column(col) {
                Some(def) => width_sum += def.width_bytes as u64,
                None => {
                    return Err(CostError::InvalidCandidate {
                        table,
                        message: format!("unknown column `{col}`"),
                    })
                }
            }
        }
        let size_bytes = schema.row_count * (width_sum + constants.entry_overhead);
        Ok(IndexCandidate {
            table,
            columns,
            size_bytes,
        })
    }

    pub fn single(
        col: &ColRef,
        catalog: &Catalog,
        constants: &CostConstants,
    ) -> Result<Self, CostError> {
        IndexCandidate::new(
            col.table.clone(),
            vec![col.column.clone()],
            catalog,
            constants,
        )
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// `table(c1,c2,...)` — used in reports and hashes.
    pub fn label(&self) -> String {
        format!("{}({})", self.table, self.columns.join(","))
    }
}

/// A set of candidates with no duplicate (table, column-sequence) entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfiguration {
    indexes: BTreeSet<IndexCandidate>,
}

impl IndexConfiguration {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_candidates(candidates: impl IntoIterator<Item = IndexCandidate>) -> Self {
        IndexConfiguration {
            indexes: candidates.into_iter().collect(),
        }
    }

    /// Add a candidate; returns false if an index with the same column
    /// sequence on the same table is already present.
    pub fn add(&mut self, candidate: IndexCandidate) -> bool {
        self.indexes.insert(candidate)
    }

    pub fn contains(&self, candidate: &IndexCandidate) -> bool {
        self.indexes.contains(candidate)
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IndexCandidate> {
        self.indexes.iter()
    }

    pub fn total_size_bytes(&self) -> u64 {
        self.indexes.iter().map(|i| i.size_bytes).sum()
    }

    fn on_table<'a>(&'a self, table: &'a str) -> impl Iterator<Item = &'a IndexCandidate> {
        self.indexes.iter().filter(move |i| i.table == table)
    }
}

/// A cost value plus a snapshot of the estimator's call counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub value: f64,
    pub what_if_call_count: u64,
}

/// The what-if estimator. Cheap to construct; each environment can own one
/// and counters are summed at report time.
#[derive(Debug)]
pub struct CostModel {
    pub constants: CostConstants,
    calls: AtomicU64,
}

impl Clone for CostModel {
    fn clone(&self) -> Self {
        CostModel {
            constants: self.constants,
            calls: AtomicU64::new(self.calls.load(Ordering::Relaxed)),
        }
    }
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::new(CostConstants::default())
    }
}

/// Per-table predicate summary extracted from one query block.
#[derive(Debug, Default)]
struct TablePredicates {
    /// column -> combined equality-class selectivity
    equality: BTreeMap<String, f64>,
    /// column -> combined range selectivity
    range: BTreeMap<String, f64>,
    /// ORDER BY / GROUP BY columns
    order_group: BTreeSet<String>,
}

impl CostModel {
    pub fn new(constants: CostConstants) -> Self {
        CostModel {
            constants,
            calls: AtomicU64::new(0),
        }
    }

    /// Number of what-if evaluations issued so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Estimated query cost under a hypothetical configuration.
    pub fn query_cost(
        &self,
        ast: &QueryAst,
        config: &IndexConfiguration,
        catalog: &Catalog,
    ) -> Result<CostEstimate, CostError> {
        let value = self.block_cost(ast, config, catalog)?;
        let count = self.calls.fetch_add(1, Ordering::Relaxed) + 1;
        Ok(CostEstimate {
            value,
            what_if_call_count: count,
        })
    }

    /// Frequency-weighted workload cost.
    pub fn workload_cost(
        &self,
        workload: &Workload,
        config: &IndexConfiguration,
    ) -> Result<f64, CostError> {
        let mut total = 0.0;
        for q in &workload.queries {
            total += q.frequency * self.query_cost(&q.ast, config, &workload.catalog)?.value;
        }
        Ok(total)
    }

    /// Cost reduction on `q` from adding `candidate` to `config`; zero when
    /// the query does not reference the candidate's table or the candidate
    /// is already present (no calls are issued in either case).
    pub fn delta_cost(
        &self,
        q: &Query,
        candidate: &IndexCandidate,
        config: &IndexConfiguration,
        catalog: &Catalog,
    ) -> Result<f64, CostError> {
        if !q.ast.referenced_tables().contains(candidate.table.as_str()) {
            return Ok(0.0);
        }
        if config.contains(candidate) {
            return Ok(0.0);
        }
        let before = self.query_cost(&q.ast, config, catalog)?.value;
        let mut extended = config.clone();
        extended.add(candidate.clone());
        let after = self.query_cost(&q.ast, &extended, catalog)?.value;
        Ok((before - after).max(0.0))
    }

    fn block_cost(
        &self,
        ast: &QueryAst,
        config: &IndexConfiguration,
        catalog: &Catalog,
    ) -> Result<f64, CostError> {
        let mut total = 0.0;

        // Outer block: per-table accesses.
        let preds = self.collect_predicates(ast, catalog)?;
        for table in &ast.from {
            total += self.access_cost(table, preds.get(table.as_str()), config, catalog)?;
        }

        // Equi-join terms.
        for join in &ast.joins {
            let left_rows = self.table_rows(&join.left.table, catalog)?;
            let right_rows = self.table_rows(&join.right.table, catalog)?;
            total += self.constants.c_join * left_rows.min(right_rows) as f64;
        }

        // IN-subqueries: inner block access plus a per-outer-row semi-join
        // probe.
        for (outer_col, sub) in ast.subqueries() {
            let sub_preds = self.collect_predicates(sub, catalog)?;
            for table in &sub.from {
                total += self.access_cost(table, sub_preds.get(table.as_str()), config, catalog)?;
            }
            let outer_rows = self.table_rows(&outer_col.table, catalog)?;
            total += self.constants.c_join * outer_rows as f64;
        }

        Ok(total)
    }

    fn table_rows(&self, table: &str, catalog: &Catalog) -> Result<u64, CostError> {
        catalog
            .table(table)
            .map(|t| t.row_count)
            .ok_or_else(|| CostError::UnknownTable(table.to_string()))
    }

    /// Summarize one block's predicates per table. Structurally identical
    /// predicates are collapsed; distinct predicates on the same column
    /// multiply under the independence assumption.
    fn collect_predicates<'q>(
        &self,
        ast: &'q QueryAst,
        catalog: &Catalog,
    ) -> Result<BTreeMap<&'q str, TablePredicates>, CostError> {
        let mut out: BTreeMap<&str, TablePredicates> = BTreeMap::new();
        let mut seen: BTreeSet<&Predicate> = BTreeSet::new();
        for pred in &ast.predicates {
            if !seen.insert(pred) {
                continue;
            }
            match pred {
                Predicate::Compare { col, op, value } => {
                    let def = self.column_def(col, catalog)?;
                    let entry = out.entry(col.table.as_str()).or_default();
                    if *op == CmpOp::Eq {
                        combine(
                            &mut entry.equality,
                            &col.column,
                            selectivity(def, PredicateKind::Equality),
                        );
                    } else {
                        let frac = range_fraction(def, *op, value);
                        combine(
                            &mut entry.range,
                            &col.column,
                            selectivity(def, PredicateKind::Range(frac)),
                        );
                    }
                }
                Predicate::InList { col, values } => {
                    let def = self.column_def(col, catalog)?;
                    let distinct: BTreeSet<&Literal> = values.iter().collect();
                    let sel = (distinct.len() as f64 / def.distinct_count() as f64)
                        .clamp(MIN_SELECTIVITY, 1.0);
                    combine(
                        &mut out.entry(col.table.as_str()).or_default().equality,
                        &col.column,
                        sel,
                    );
                }
                Predicate::InSubquery { col, subquery } => {
                    let def = self.column_def(col, catalog)?;
                    let sel = self.in_subquery_selectivity(def, subquery, catalog)?;
                    combine(
                        &mut out.entry(col.table.as_str()).or_default().equality,
                        &col.column,
                        sel,
                    );
                }
                Predicate::ConstCompare { .. } => {}
            }
        }
        for col in ast.order_by.iter().chain(ast.group_by.iter()) {
            out.entry(col.table.as_str())
                .or_default()
                .order_group
                .insert(col.column.clone());
        }
        Ok(out)
    }

    /// Estimated fraction of the outer column's domain produced by the
    /// subquery: inner row estimate capped by the inner column's distinct
    /// count, over the outer distinct count.
    fn in_subquery_selectivity(
        &self,
        outer: &ColumnDef,
        sub: &QueryAst,
        catalog: &Catalog,
    ) -> Result<f64, CostError> {
        let inner_table = &sub.from[0];
        let inner_rows = self.table_rows(inner_table, catalog)? as f64;
        let mut pred_sel = 1.0;
        let preds = self.collect_predicates(sub, catalog)?;
        if let Some(tp) = preds.get(inner_table.as_str()) {
            for sel in tp.equality.values().chain(tp.range.values()) {
                pred_sel *= sel;
            }
        }
        let inner_col = match sub.select.first() {
            Some(crate::sqlfront::SelectItem::Column(c)) => self.column_def(c, catalog)?,
            _ => {
                return Err(CostError::InvalidCandidate {
                    table: inner_table.clone(),
                    message: "subquery must select a plain column".into(),
                })
            }
        };
        let produced = (inner_rows * pred_sel).min(inner_col.distinct_count() as f64);
        Ok((produced / outer.distinct_count() as f64).clamp(MIN_SELECTIVITY, 1.0))
    }

    fn column_def<'c>(
        &self,
        col: &ColRef,
        catalog: &'c Catalog,
    ) -> Result<&'c ColumnDef, CostError> {
        catalog
            .table(&col.table)
            .and_then(|t| t.column(&col.column))
            .ok_or_else(|| CostError::UnknownTable(col.table.clone()))
    }

    fn access_cost(
        &self,
        table: &str,
        preds: Option<&TablePredicates>,
        config: &IndexConfiguration,
        catalog: &Catalog,
    ) -> Result<f64, CostError> {
        let rows = self.table_rows(table, catalog)? as f64;
        let seq = rows * self.constants.c_scan;
        let mut best = seq;
        let Some(preds) = preds else {
            return Ok(best);
        };
        for index in config.on_table(table) {
            if let Some(sel) = match_prefix(index, preds) {
                let cost = self.constants.c_probe * (1.0 + rows).log2()
                    + rows * sel * self.constants.c_fetch;
                best = best.min(cost);
            }
        }
        Ok(best)
    }
}

fn combine(map: &mut BTreeMap<String, f64>, column: &str, sel: f64) {
    map.entry(column.to_string())
        .and_modify(|s| *s = (*s * sel).clamp(MIN_SELECTIVITY, 1.0))
        .or_insert(sel);
}

/// Prefix applicability: returns the matched-predicate selectivity product,
/// or None when no prefix column matches.
fn match_prefix(index: &IndexCandidate, preds: &TablePredicates) -> Option<f64> {
    let mut sel = 1.0;
    let mut matched = 0usize;
    for col in &index.columns {
        if let Some(s) = preds.equality.get(col) {
            sel *= s;
            matched += 1;
            continue;
        }
        if let Some(s) = preds.range.get(col) {
            sel *= s;
            matched += 1;
        } else if preds.order_group.contains(col) {
            matched += 1;
        }
        break;
    }
    if matched >= 1 {
        Some(sel)
    } else {
        None
    }
}

/// Fraction of an integer column's domain `0..cardinality` satisfying a
/// range comparison against `value`.
fn range_fraction(def: &ColumnDef, op: CmpOp, value: &Literal) -> f64 {
    let card = def.distinct_count() as f64;
    let v = match value {
        Literal::Int(i) => *i as f64,
        // The parser rejects range predicates on categorical columns.
        Literal::Symbol(_) => return 1.0,
    };
    let count = match op {
        CmpOp::Lt => v,
        CmpOp::Le => v + 1.0,
        CmpOp::Gt => card - 1.0 - v,
        CmpOp::Ge => card - v,
        CmpOp::Eq => 1.0,
    };
    (count / card).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ColumnType, TableSchema};
    use crate::sqlfront::parse;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big_catalog() -> Catalog {
        Catalog::new(
            vec![
                TableSchema {
                    name: "t".into(),
                    row_count: 1_000_000,
                    columns: vec![
                        col("a", 1000, 4),
                        col("b", 100, 4),
                        col("c", 500_000, 8),
                    ],
                },
                TableSchema {
                    name: "s".into(),
                    row_count: 10_000,
                    columns: vec![col("x", 10_000, 8), col("y", 50, 4)],
                },
            ],
            0,
        )
        .unwrap()
    }

    fn col(name: &str, cardinality: u64, width: u32) -> crate::catalog::ColumnDef {
        crate::catalog::ColumnDef {
            name: name.into(),
            column_type: ColumnType::Int,
            cardinality,
            width_bytes: width,
            unique: false,
        }
    }

    fn ast(sql: &str, catalog: &Catalog) -> QueryAst {
        parse(sql, catalog).unwrap()
    }

    fn candidate(table: &str, cols: &[&str], catalog: &Catalog) -> IndexCandidate {
        IndexCandidate::new(
            table,
            cols.iter().map(|c| c.to_string()).collect(),
            catalog,
            &CostConstants::default(),
        )
        .unwrap()
    }

    #[test]
    fn sequential_cost_with_empty_config() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = ast("SELECT a FROM t", &catalog);
        let est = model
            .query_cost(&q, &IndexConfiguration::empty(), &catalog)
            .unwrap();
        assert_eq!(est.value, 1_000_000.0);
    }

    #[test]
    fn index_probe_cost_matches_hand_evaluation() {
        // 10^6 rows, equality selectivity 0.001, c_probe=10, c_fetch=2:
        // 10*log2(1000001) + 10^6*0.001*2 = 2199.3157...
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = ast("SELECT c FROM t WHERE a = 5", &catalog);
        let config = IndexConfiguration::from_candidates([candidate("t", &["a"], &catalog)]);
        let est = model.query_cost(&q, &config, &catalog).unwrap();
        let expect = 10.0 * (1_000_001.0f64).log2() + 1_000_000.0 * 0.001 * 2.0;
        assert!((est.value - expect).abs() < 1e-9, "{} vs {expect}", est.value);
        assert!(est.value < 1_000_000.0);
    }

    #[test]
    fn prefix_rule_rejects_non_leading_match() {
        // Index on (b, a) with a predicate only on `a`: not applicable.
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = ast("SELECT c FROM t WHERE a = 5", &catalog);
        let config = IndexConfiguration::from_candidates([candidate("t", &["b", "a"], &catalog)]);
        let est = model.query_cost(&q, &config, &catalog).unwrap();
        assert_eq!(est.value, 1_000_000.0);
    }

    /// Independent oracle: enumerate every prefix of every index, validate
    /// it directly against the applicability rule, and take the best cost.
    fn brute_force_cost(
        model: &CostModel,
        q: &QueryAst,
        config: &IndexConfiguration,
        catalog: &Catalog,
    ) -> f64 {
        let k = model.constants;
        let mut blocks: Vec<(&QueryAst, Vec<String>)> =
            vec![(q, q.from.clone())];
        let mut total = 0.0;
        for (_, sub) in q.subqueries() {
            blocks.push((sub, sub.from.clone()));
            let outer_col = q
                .predicates
                .iter()
                .find_map(|p| match p {
                    Predicate::InSubquery { col, subquery } if subquery.as_ref() == sub => {
                        Some(col)
                    }
                    _ => None,
                })
                .unwrap();
            total += k.c_join * catalog.table(&outer_col.table).unwrap().row_count as f64;
        }
        for join in &q.joins {
            let l = catalog.table(&join.left.table).unwrap().row_count;
            let r = catalog.table(&join.right.table).unwrap().row_count;
            total += k.c_join * l.min(r) as f64;
        }
        for (block, tables) in blocks {
            let preds = model.collect_predicates(block, catalog).unwrap();
            for table in &tables {
                let rows = catalog.table(table).unwrap().row_count as f64;
                let mut best = rows * k.c_scan;
                if let Some(tp) = preds.get(table.as_str()) {
                    for index in config.on_table(table) {
                        // All prefixes of the column sequence.
                        for plen in 1..=index.columns.len() {
                            let prefix = &index.columns[..plen];
                            let mut ok = true;
                            let mut sel = 1.0;
                            for (i, c) in prefix.iter().enumerate() {
                                let is_last = i + 1 == plen;
                                if let Some(s) = tp.equality.get(c) {
                                    sel *= s;
                                } else if is_last {
                                    if let Some(s) = tp.range.get(c) {
                                        sel *= s;
                                    } else if !tp.order_group.contains(c) {
                                        ok = false;
                                    }
                                } else {
                                    ok = false;
                                    break;
                                }
                            }
                            if ok {
                                let cost =
                                    k.c_probe * (1.0 + rows).log2() + rows * sel * k.c_fetch;
                                best = best.min(cost);
                            }
                        }
                    }
                }
                total += best;
            }
        }
        total
    }

    #[test]
    fn cost_matches_brute_force_over_random_configs() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let queries = [
            "SELECT c FROM t WHERE a = 5 AND b = 3",
            "SELECT c FROM t WHERE a = 5 AND b > 50 ORDER BY c",
            "SELECT a FROM t, s WHERE t.c = s.x AND s.y = 2",
            "SELECT a FROM t WHERE b IN (1, 2, 3) GROUP BY a",
            "SELECT a FROM t WHERE c IN (SELECT x FROM s WHERE y = 4)",
        ];
        let all_candidates: Vec<IndexCandidate> = vec![
            candidate("t", &["a"], &catalog),
            candidate("t", &["b"], &catalog),
            candidate("t", &["a", "b"], &catalog),
            candidate("t", &["b", "a", "c"], &catalog),
            candidate("t", &["c"], &catalog),
            candidate("s", &["x"], &catalog),
            candidate("s", &["y", "x"], &catalog),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(0..=all_candidates.len());
            let mut picks = all_candidates.clone();
            picks.shuffle(&mut rng);
            picks.truncate(n);
            let config = IndexConfiguration::from_candidates(picks);
            for sql in &queries {
                let q = ast(sql, &catalog);
                let got = model.query_cost(&q, &config, &catalog).unwrap().value;
                let want = brute_force_cost(&model, &q, &config, &catalog);
                assert!(
                    (got - want).abs() < 1e-9,
                    "mismatch for `{sql}`: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn workload_cost_is_frequency_linear() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = Query {
            id: "q1".into(),
            text: String::new(),
            ast: ast("SELECT a FROM t", &catalog),
            frequency: 3.0,
        };
        let single = model
            .query_cost(&q.ast, &IndexConfiguration::empty(), &catalog)
            .unwrap()
            .value;
        let w = Workload::new(vec![q], catalog).unwrap();
        let total = model
            .workload_cost(&w, &IndexConfiguration::empty())
            .unwrap();
        assert_eq!(total, 3.0 * single);

        let empty = Workload::new(vec![], w.catalog.clone()).unwrap();
        assert_eq!(
            model.workload_cost(&empty, &IndexConfiguration::empty()).unwrap(),
            0.0
        );
    }

    #[test]
    fn adding_an_index_never_increases_cost() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let sqls = [
            "SELECT c FROM t WHERE a = 5 AND b = 3",
            "SELECT c FROM t WHERE b > 20 ORDER BY a",
            "SELECT a FROM t, s WHERE t.c = s.x AND s.y = 2 AND t.a = 9",
            "SELECT a FROM t WHERE c IN (SELECT x FROM s WHERE y = 4)",
            "SELECT a FROM t GROUP BY a",
        ];
        let pool: Vec<IndexCandidate> = vec![
            candidate("t", &["a"], &catalog),
            candidate("t", &["b"], &catalog),
            candidate("t", &["a", "b"], &catalog),
            candidate("t", &["c", "a"], &catalog),
            candidate("s", &["x"], &catalog),
            candidate("s", &["y"], &catalog),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 200 {
            let n = rng.gen_range(0..pool.len());
            let mut picks = pool.clone();
            picks.shuffle(&mut rng);
            let extra = picks[n].clone();
            picks.truncate(n);
            let config = IndexConfiguration::from_candidates(picks);
            if config.contains(&extra) {
                continue;
            }
            let mut bigger = config.clone();
            bigger.add(extra);
            for sql in &sqls {
                let q = ast(sql, &catalog);
                let before = model.query_cost(&q, &config, &catalog).unwrap().value;
                let after = model.query_cost(&q, &bigger, &catalog).unwrap().value;
                assert!(after <= before + 1e-12, "monotonicity broken for {sql}");
            }
            checked += 1;
        }
    }

    #[test]
    fn index_size_formula() {
        let catalog = Catalog::new(
            vec![
                TableSchema {
                    name: "t".into(),
                    row_count: 1000,
                    columns: vec![col("a", 100, 4), col("b", 100, 8)],
                },
                TableSchema {
                    name: "z".into(),
                    row_count: 0,
                    columns: vec![col("w", 1, 4)],
                },
            ],
            0,
        )
        .unwrap();
        let k = CostConstants::default();
        // 1000 rows, one 4-byte column: 1000 * (4 + 8) = 12000.
        assert_eq!(
            IndexCandidate::new("t", vec!["a".into()], &catalog, &k).unwrap().size_bytes,
            12_000
        );
        // Two columns 4+8 bytes, 1000 rows: 1000 * (12 + 8) = 20000;
        // the spec example scales at 100 rows -> 2000.
        let two = IndexCandidate::new("t", vec!["a".into(), "b".into()], &catalog, &k).unwrap();
        assert_eq!(two.size_bytes, 20_000);
        // Zero-row table.
        assert_eq!(
            IndexCandidate::new("z", vec!["w".into()], &catalog, &k).unwrap().size_bytes,
            0
        );
    }

    #[test]
    fn delta_cost_contract() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = Query {
            id: "q".into(),
            text: String::new(),
            ast: ast("SELECT c FROM t WHERE a = 5", &catalog),
            frequency: 1.0,
        };
        let on_a = candidate("t", &["a"], &catalog);
        let on_s = candidate("s", &["x"], &catalog);
        let empty = IndexConfiguration::empty();

        // Unreferenced table: zero, and no calls issued.
        let calls_before = model.calls();
        assert_eq!(model.delta_cost(&q, &on_s, &empty, &catalog).unwrap(), 0.0);
        assert_eq!(model.calls(), calls_before);

        // Exact consistency with two direct evaluations.
        let d = model.delta_cost(&q, &on_a, &empty, &catalog).unwrap();
        let c0 = model.query_cost(&q.ast, &empty, &catalog).unwrap().value;
        let c1 = model
            .query_cost(
                &q.ast,
                &IndexConfiguration::from_candidates([on_a.clone()]),
                &catalog,
            )
            .unwrap()
            .value;
        assert_eq!(d, c0 - c1);
        assert!(d > 0.0);

        // Already in config: zero.
        let config = IndexConfiguration::from_candidates([on_a.clone()]);
        assert_eq!(model.delta_cost(&q, &on_a, &config, &catalog).unwrap(), 0.0);
    }

    #[test]
    fn call_counter_audits_invocations() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = ast("SELECT a FROM t", &catalog);
        assert_eq!(model.calls(), 0);
        let est = model
            .query_cost(&q, &IndexConfiguration::empty(), &catalog)
            .unwrap();
        assert_eq!(est.what_if_call_count, 1);
        for _ in 0..5 {
            model
                .query_cost(&q, &IndexConfiguration::empty(), &catalog)
                .unwrap();
        }
        assert_eq!(model.calls(), 6);
    }

    #[test]
    fn determinism_is_bitwise() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let q = ast("SELECT c FROM t WHERE a = 5 AND b > 10 ORDER BY c", &catalog);
        let config = IndexConfiguration::from_candidates([
            candidate("t", &["a", "b"], &catalog),
            candidate("t", &["c"], &catalog),
        ]);
        let a = model.query_cost(&q, &config, &catalog).unwrap().value;
        let b = model.query_cost(&q, &config, &catalog).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn duplicate_conjuncts_do_not_change_cost() {
        let catalog = big_catalog();
        let model = CostModel::default();
        let config = IndexConfiguration::from_candidates([candidate("t", &["a"], &catalog)]);
        let once = ast("SELECT c FROM t WHERE a = 5", &catalog);
        let twice = ast("SELECT c FROM t WHERE a = 5 AND a = 5", &catalog);
        let c1 = model.query_cost(&once, &config, &catalog).unwrap().value;
        let c2 = model.query_cost(&twice, &config, &catalog).unwrap().value;
        assert_eq!(c1.to_bits(), c2.to_bits());
    }
}
