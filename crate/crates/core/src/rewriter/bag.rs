//! Bag-semantics evaluation on materialized miniature instances.
//!
//! A query result is a multiset of tuples (tuple → multiplicity). Selection
//! filters rows, joins enumerate matching combinations, projection merges
//! multiplicities, DISTINCT caps them at 1, and GROUP BY emits one row per
//! group. An aggregate block over empty input yields an empty result (the
//! model has no NULLs, so the SQL convention of a single NULL row has no
//! representation; both sides of an equivalence check share this rule).

use std::collections::BTreeMap;

use crate::catalog::{materialize, Catalog, MaterializedInstance, Row, Value};
use crate::seeds::subseed;
use crate::sqlfront::{
    AggFunc, CmpOp, ColRef, Literal, Predicate, QueryAst, SelectItem,
};

/// Multiset of result tuples; every stored multiplicity is ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BagResult {
    counts: BTreeMap<Row, u64>,
}

impl BagResult {
    pub fn insert(&mut self, row: Row) {
        *self.counts.entry(row).or_insert(0) += 1;
    }

    pub fn multiplicity(&self, row: &Row) -> u64 {
        self.counts.get(row).copied().unwrap_or(0)
    }

    pub fn distinct_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn total_rows(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn cap_at_one(&mut self) {
        for m in self.counts.values_mut() {
            *m = 1;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Row, u64)> {
        self.counts.iter().map(|(r, m)| (r, *m))
    }
}

impl FromIterator<Row> for BagResult {
    fn from_iter<T: IntoIterator<Item = Row>>(iter: T) -> Self {
        let mut bag = BagResult::default();
        for row in iter {
            bag.insert(row);
        }
        bag
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BagError {
    #[error("instance has no table `{0}`")]
    MissingTable(String),
    #[error("unresolved column `{0}` during evaluation")]
    UnresolvedColumn(String),
    #[error("unsupported node during evaluation: {0}")]
    Unsupported(String),
}

/// Evaluate a resolved query block against a materialized instance.
pub fn evaluate_bag(
    ast: &QueryAst,
    instance: &MaterializedInstance,
    catalog: &Catalog,
) -> Result<BagResult, BagError> {
    // Working rows are concatenations of one row per FROM table; the layout
    // maps a ColRef to its position.
    let layout = Layout::new(&ast.from, catalog)?;

    // Pre-evaluate subqueries into value sets (IN only needs membership).
    let mut sub_values: Vec<(usize, BTreeMap<Value, u64>)> = Vec::new();
    for (idx, pred) in ast.predicates.iter().enumerate() {
        if let Predicate::InSubquery { subquery, .. } = pred {
            let bag = evaluate_bag(subquery, instance, catalog)?;
            let mut values = BTreeMap::new();
            for (row, m) in bag.iter() {
                *values.entry(row[0]).or_insert(0) += m;
            }
            sub_values.push((idx, values));
        }
    }

    let mut rows: Vec<Row> = vec![Vec::new()];
    for table in &ast.from {
        let table_rows = instance
            .tables
            .get(table)
            .ok_or_else(|| BagError::MissingTable(table.clone()))?;
        let mut next = Vec::with_capacity(rows.len() * table_rows.len());
        for prefix in &rows {
            for tr in table_rows {
                let mut row = prefix.clone();
                row.extend_from_slice(tr);
                next.push(row);
            }
        }
        rows = next;
    }

    rows.retain(|row| {
        for join in &ast.joins {
            let l = layout.value(row, &join.left);
            let r = layout.value(row, &join.right);
            if l != r {
                return false;
            }
        }
        for (idx, pred) in ast.predicates.iter().enumerate() {
            let keep = match pred {
                Predicate::Compare { col, op, value } => {
                    compare(layout.value(row, col), *op, value)
                }
                Predicate::InList { col, values } => {
                    let v = layout.value(row, col);
                    values.iter().any(|lit| value_eq(v, lit))
                }
                Predicate::InSubquery { .. } => {
                    let set = &sub_values
                        .iter()
                        .find(|(i, _)| *i == idx)
                        .expect("subquery pre-evaluated")
                        .1;
                    let col = match pred {
                        Predicate::InSubquery { col, .. } => col,
                        _ => unreachable!(),
                    };
                    set.contains_key(&layout.value(row, col))
                }
                Predicate::ConstCompare { left, op, right } => const_compare(left, *op, right),
            };
            if !keep {
                return false;
            }
        }
        true
    });

    let has_aggregate = ast
        .select
        .iter()
        .any(|s| matches!(s, SelectItem::Aggregate { .. }));

    let mut bag = if !ast.group_by.is_empty() || has_aggregate {
        // Group rows; without GROUP BY all rows form one group, and an empty
        // input yields no groups at all.
        let mut groups: BTreeMap<Row, Vec<&Row>> = BTreeMap::new();
        for row in &rows {
            let key: Row = ast
                .group_by
                .iter()
                .map(|c| layout.value(row, c))
                .collect();
            groups.entry(key).or_default().push(row);
        }
        let mut bag = BagResult::default();
        for (key, members) in &groups {
            let mut out = Vec::with_capacity(ast.select.len());
            for item in &ast.select {
                match item {
                    SelectItem::Column(c) => {
                        // Grouping column: resolver guarantees membership.
                        let pos = ast
                            .group_by
                            .iter()
                            .position(|g| g == c)
                            .ok_or_else(|| BagError::UnresolvedColumn(c.to_string()))?;
                        out.push(key[pos]);
                    }
                    SelectItem::Aggregate { func, arg } => {
                        out.push(aggregate(*func, arg.as_ref(), members, &layout)?);
                    }
                }
            }
            bag.insert(out);
        }
        bag
    } else {
        rows.iter()
            .map(|row| {
                ast.select
                    .iter()
                    .map(|item| match item {
                        SelectItem::Column(c) => layout.value(row, c),
                        SelectItem::Aggregate { .. } => unreachable!(),
                    })
                    .collect::<Row>()
            })
            .collect()
    };

    if ast.distinct {
        bag.cap_at_one();
    }
    Ok(bag)
}

fn aggregate(
    func: AggFunc,
    arg: Option<&ColRef>,
    members: &[&Row],
    layout: &Layout,
) -> Result<Value, BagError> {
    match func {
        AggFunc::Count => Ok(Value::Int(members.len() as i64)),
        AggFunc::Sum => {
            let col = arg.ok_or_else(|| BagError::Unsupported("SUM without column".into()))?;
            let mut total = 0i64;
            for row in members {
                match layout.value(row, col) {
                    Value::Int(i) => total += i,
                    Value::Cat(_) => {
                        return Err(BagError::Unsupported("SUM over categorical".into()))
                    }
                }
            }
            Ok(Value::Int(total))
        }
        AggFunc::Min | AggFunc::Max => {
            let col = arg.ok_or_else(|| BagError::Unsupported("MIN/MAX without column".into()))?;
            let mut values: Vec<Value> = members.iter().map(|r| layout.value(r, col)).collect();
            values.sort();
            let v = if func == AggFunc::Min {
                values.first()
            } else {
                values.last()
            };
            v.copied()
                .ok_or_else(|| BagError::Unsupported("aggregate over empty group".into()))
        }
    }
}

fn compare(value: Value, op: CmpOp, lit: &Literal) -> bool {
    match (value, lit) {
        (Value::Int(v), Literal::Int(l)) => apply_op(v.cmp(l), op),
        (Value::Cat(v), Literal::Symbol(l)) => apply_op(v.cmp(l), op),
        // The resolver prevents mixed-type comparisons.
        _ => false,
    }
}

fn value_eq(value: Value, lit: &Literal) -> bool {
    compare(value, CmpOp::Eq, lit)
}

/// Whether a constant comparison holds; also used by the const-fold
/// rewrite constraint.
pub(super) fn const_holds(left: &Literal, op: CmpOp, right: &Literal) -> bool {
    const_compare(left, op, right)
}

fn const_compare(left: &Literal, op: CmpOp, right: &Literal) -> bool {
    match (left, right) {
        (Literal::Int(a), Literal::Int(b)) => apply_op(a.cmp(b), op),
        (Literal::Symbol(a), Literal::Symbol(b)) => apply_op(a.cmp(b), op),
        _ => false,
    }
}

fn apply_op(ord: std::cmp::Ordering, op: CmpOp) -> bool {
    use std::cmp::Ordering::*;
    match op {
        CmpOp::Eq => ord == Equal,
        CmpOp::Lt => ord == Less,
        CmpOp::Le => ord != Greater,
        CmpOp::Gt => ord == Greater,
        CmpOp::Ge => ord != Less,
    }
}

struct Layout {
    /// (table name, column offset base, column names in schema order)
    positions: BTreeMap<(String, String), usize>,
}

impl Layout {
    fn new(from: &[String], catalog: &Catalog) -> Result<Self, BagError> {
        let mut positions = BTreeMap::new();
        let mut base = 0usize;
        for table in from {
            let schema = catalog
                .table(table)
                .ok_or_else(|| BagError::MissingTable(table.clone()))?;
            for (i, col) in schema.columns.iter().enumerate() {
                positions.insert((table.clone(), col.name.clone()), base + i);
            }
            base += schema.columns.len();
        }
        Ok(Layout { positions })
    }

    fn value(&self, row: &Row, col: &ColRef) -> Value {
        let pos = self.positions[&(col.table.clone(), col.column.clone())];
        row[pos]
    }
}

/// Outcome of randomized equivalence testing. A pass is evidence over the
/// tried instances, not a proof.
#[derive(Debug, Clone)]
pub enum Equivalence {
    EquivalentOnTrials { trials: u32 },
    Counterexample(Box<CounterexampleDetail>),
}

#[derive(Debug, Clone)]
pub struct CounterexampleDetail {
    pub trial: u32,
    pub instance: MaterializedInstance,
    pub left: BagResult,
    pub right: BagResult,
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::EquivalentOnTrials { .. })
    }
}

/// Evaluate both queries on `trials` seeded random instances; return the
/// first instance where the bags differ. Instance sizes vary per trial and
/// deliberately include the empty and single-row cases.
pub fn check_equivalence(
    q1: &QueryAst,
    q2: &QueryAst,
    catalog: &Catalog,
    trials: u32,
    seed: u64,
) -> Result<Equivalence, BagError> {
    // Unique columns bound the instance size.
    let unique_cap = catalog
        .tables
        .iter()
        .flat_map(|t| t.columns.iter())
        .filter(|c| c.unique)
        .map(|c| c.cardinality)
        .min()
        .unwrap_or(u64::from(crate::catalog::MAX_INSTANCE_ROWS));

    for k in 0..trials {
        let rows = match k {
            0 => 0,
            1 => 1,
            _ => {
                use rand::{Rng, SeedableRng};
                let mut rng =
                    rand_chacha::ChaCha8Rng::seed_from_u64(subseed(seed, "equiv-size", k as u64));
                rng.gen_range(2..=20u32)
            }
        };
        let rows = rows.min(unique_cap as u32);
        let instance = materialize(catalog, rows, subseed(seed, "equiv-inst", k as u64))
            .expect("instance within cap");
        let left = evaluate_bag(q1, &instance, catalog)?;
        let right = evaluate_bag(q2, &instance, catalog)?;
        if left != right {
            return Ok(Equivalence::Counterexample(Box::new(CounterexampleDetail {
                trial: k,
                instance,
                left,
                right,
            })));
        }
    }
    Ok(Equivalence::EquivalentOnTrials { trials })
}
