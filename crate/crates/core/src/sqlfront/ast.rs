//! Resolved query AST for the supported SQL subset, plus indexable-column
//! extraction and canonical unparsing.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Fully qualified column reference. Always resolved: `table` names a
/// catalog table and `column` one of its columns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColRef {
    pub table: String,
    pub column: String,
}

impl ColRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColRef {
            table: table.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_range(self) -> bool {
        !matches!(self, CmpOp::Eq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    /// Categorical symbol literal; `'v3'` in SQL text carries index 3.
    Symbol(u32),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Symbol(s) => write!(f, "'v{s}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SelectItem {
    Column(ColRef),
    /// Aggregate over a column, or `COUNT(*)` when `arg` is `None`.
    Aggregate { func: AggFunc, arg: Option<ColRef> },
}

/// Equi-join between columns of two distinct tables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JoinPred {
    pub left: ColRef,
    pub right: ColRef,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    Compare {
        col: ColRef,
        op: CmpOp,
        value: Literal,
    },
    InList {
        col: ColRef,
        values: Vec<Literal>,
    },
    /// Uncorrelated single-level IN-subquery.
    InSubquery {
        col: ColRef,
        subquery: Box<QueryAst>,
    },
    /// Constant comparison, e.g. the `1 = 1` padding that generated SQL
    /// tends to carry. Foldable by the rewriter.
    ConstCompare {
        left: Literal,
        op: CmpOp,
        right: Literal,
    },
}

/// Resolved single-block query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QueryAst {
    pub distinct: bool,
    pub select: Vec<SelectItem>,
    pub from: Vec<String>,
    pub joins: Vec<JoinPred>,
    pub predicates: Vec<Predicate>,
    pub group_by: Vec<ColRef>,
    pub order_by: Vec<ColRef>,
}

impl QueryAst {
    /// Tables referenced by this query including single-level subqueries.
    pub fn referenced_tables(&self) -> BTreeSet<&str> {
        let mut tables: BTreeSet<&str> = self.from.iter().map(|t| t.as_str()).collect();
        for pred in &self.predicates {
            if let Predicate::InSubquery { subquery, .. } = pred {
                tables.extend(subquery.from.iter().map(|t| t.as_str()));
            }
        }
        tables
    }

    pub fn subqueries(&self) -> impl Iterator<Item = (&ColRef, &QueryAst)> {
        self.predicates.iter().filter_map(|p| match p {
            Predicate::InSubquery { col, subquery } => Some((col, subquery.as_ref())),
            _ => None,
        })
    }

    /// Every column the query mentions anywhere, including the select list
    /// and subquery internals.
    pub fn all_columns(&self) -> BTreeSet<ColRef> {
        let mut cols = BTreeSet::new();
        for item in &self.select {
            match item {
                SelectItem::Column(c) => {
                    cols.insert(c.clone());
                }
                SelectItem::Aggregate { arg: Some(c), .. } => {
                    cols.insert(c.clone());
                }
                SelectItem::Aggregate { arg: None, .. } => {}
            }
        }
        for join in &self.joins {
            cols.insert(join.left.clone());
            cols.insert(join.right.clone());
        }
        for pred in &self.predicates {
            match pred {
                Predicate::Compare { col, .. } | Predicate::InList { col, .. } => {
                    cols.insert(col.clone());
                }
                Predicate::InSubquery { col, subquery } => {
                    cols.insert(col.clone());
                    cols.extend(subquery.all_columns());
                }
                Predicate::ConstCompare { .. } => {}
            }
        }
        cols.extend(self.group_by.iter().cloned());
        cols.extend(self.order_by.iter().cloned());
        cols
    }
}

/// Columns worth indexing: predicate, join, grouping, and ordering columns.
/// Select-list-only columns are excluded. Subquery predicate columns and the
/// subquery's produced column count as well — the produced column acts as a
/// semi-join key.
pub fn indexable_columns(ast: &QueryAst) -> BTreeSet<ColRef> {
    let mut cols = BTreeSet::new();
    for pred in &ast.predicates {
        match pred {
            Predicate::Compare { col, .. } | Predicate::InList { col, .. } => {
                cols.insert(col.clone());
            }
            Predicate::InSubquery { col, subquery } => {
                cols.insert(col.clone());
                cols.extend(indexable_columns(subquery));
                if let Some(SelectItem::Column(inner)) = subquery.select.first() {
                    cols.insert(inner.clone());
                }
            }
            Predicate::ConstCompare { .. } => {}
        }
    }
    for join in &ast.joins {
        cols.insert(join.left.clone());
        cols.insert(join.right.clone());
    }
    cols.extend(ast.group_by.iter().cloned());
    cols.extend(ast.order_by.iter().cloned());
    cols
}

fn write_col_list(out: &mut String, cols: &[ColRef]) {
    for (i, c) in cols.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&c.to_string());
    }
}

/// Render the AST back to canonical SQL text. Parsing the result yields a
/// structurally equal AST (joins are printed ahead of filter predicates,
/// which is exactly how the parser reassembles them).
pub fn unparse(ast: &QueryAst) -> String {
    let mut out = String::from("SELECT ");
    if ast.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in ast.select.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Column(c) => out.push_str(&c.to_string()),
            SelectItem::Aggregate { func, arg } => {
                out.push_str(func.name());
                out.push('(');
                match arg {
                    Some(c) => out.push_str(&c.to_string()),
                    None => out.push('*'),
                }
                out.push(')');
            }
        }
    }
    out.push_str(" FROM ");
    out.push_str(&ast.from.join(", "));

    let mut conjuncts: Vec<String> = Vec::new();
    for join in &ast.joins {
        conjuncts.push(format!("{} = {}", join.left, join.right));
    }
    for pred in &ast.predicates {
        conjuncts.push(match pred {
            Predicate::Compare { col, op, value } => {
                format!("{col} {} {value}", op.symbol())
            }
            Predicate::InList { col, values } => {
                let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                format!("{col} IN ({})", vals.join(", "))
            }
            Predicate::InSubquery { col, subquery } => {
                format!("{col} IN ({})", unparse(subquery))
            }
            Predicate::ConstCompare { left, op, right } => {
                format!("{left} {} {right}", op.symbol())
            }
        });
    }
    if !conjuncts.is_empty() {
        out.push_str(" WHERE ");
        out.push_str(&conjuncts.join(" AND "));
    }
    if !ast.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        write_col_list(&mut out, &ast.group_by);
    }
    if !ast.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        write_col_list(&mut out, &ast.order_by);
    }
    out
}
