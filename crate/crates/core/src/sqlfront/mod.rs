//! SQL front end: parser, indexable-column extraction, query similarity,
//! and workload file handling.

mod ast;
mod lexer;
mod parser;
mod template;

pub use ast::{
    indexable_columns, unparse, AggFunc, CmpOp, ColRef, JoinPred, Literal, Predicate, QueryAst,
    SelectItem,
};
pub use parser::parse;
pub use template::{expand_template, ParamSpec, TemplateEntry};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown table `{name}`")]
    UnknownTable { name: String },
    #[error("unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error("ambiguous column `{name}`")]
    AmbiguousColumn { name: String },
    #[error("unsupported construct: {construct}")]
    Unsupported { construct: String },
    #[error("{message}")]
    Validation { message: String },
}

impl ParseError {
    /// Whether the statement is outside the supported subset (as opposed to
    /// malformed); pipelines skip such queries instead of failing.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

/// A parsed workload member.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub ast: QueryAst,
    pub frequency: f64,
}

impl Query {
    pub fn indexable_columns(&self) -> BTreeSet<ColRef> {
        indexable_columns(&self.ast)
    }
}

/// An ordered set of queries resolved against one catalog.
#[derive(Debug, Clone)]
pub struct Workload {
    pub queries: Vec<Query>,
    pub catalog: Catalog,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("failed to read workload file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("workload line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("workload line {line} (query `{id}`): {source}")]
    Query {
        line: usize,
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("duplicate query id `{0}`")]
    DuplicateId(String),
    #[error("query `{id}`: frequency must be positive, got {frequency}")]
    BadFrequency { id: String, frequency: f64 },
    #[error("template `{id}`: {message}")]
    Template { id: String, message: String },
}

impl Workload {
    pub fn new(queries: Vec<Query>, catalog: Catalog) -> Result<Self, WorkloadError> {
        let mut seen = BTreeSet::new();
        for q in &queries {
            if !seen.insert(q.id.as_str()) {
                return Err(WorkloadError::DuplicateId(q.id.clone()));
            }
            if !(q.frequency > 0.0) {
                return Err(WorkloadError::BadFrequency {
                    id: q.id.clone(),
                    frequency: q.frequency,
                });
            }
        }
        Ok(Workload { queries, catalog })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn query(&self, id: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.id == id)
    }

    pub fn total_frequency(&self) -> f64 {
        self.queries.iter().map(|q| q.frequency).sum()
    }
}

/// Jaccard similarity over the two queries' indexable-column sets.
///
/// Defined as 1.0 when both sets are empty so pure projections dedupe
/// together.
pub fn jaccard(a: &Query, b: &Query) -> f64 {
    jaccard_sets(&a.indexable_columns(), &b.indexable_columns())
}

pub fn jaccard_sets(a: &BTreeSet<ColRef>, b: &BTreeSet<ColRef>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

/// On-disk workload line: either a plain query or a template entry
/// (distinguished by the `template_sql` field).
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum WorkloadLine {
    Query {
        id: String,
        sql: String,
        frequency: f64,
    },
    Template(TemplateEntry),
}

/// Load a JSON-lines workload file, expanding template entries in place.
///
/// Queries whose SQL falls outside the supported subset are skipped and
/// reported in the returned skip list; malformed lines are hard errors.
pub fn load_workload(
    path: impl AsRef<Path>,
    catalog: &Catalog,
) -> Result<(Workload, Vec<(String, ParseError)>), WorkloadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_workload_str(&text, catalog)
}

pub fn load_workload_str(
    text: &str,
    catalog: &Catalog,
) -> Result<(Workload, Vec<(String, ParseError)>), WorkloadError> {
    let mut queries = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: WorkloadLine =
            serde_json::from_str(line).map_err(|e| WorkloadError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        match parsed {
            WorkloadLine::Query { id, sql, frequency } => {
                match parse(&sql, catalog) {
                    Ok(ast) => queries.push(Query {
                        id,
                        text: sql,
                        ast,
                        frequency,
                    }),
                    Err(e) if e.is_unsupported() => skipped.push((id, e)),
                    Err(e) => {
                        return Err(WorkloadError::Query {
                            line: line_no,
                            id,
                            source: e,
                        })
                    }
                }
            }
            WorkloadLine::Template(entry) => {
                let expanded = expand_template(&entry, catalog).map_err(|message| {
                    WorkloadError::Template {
                        id: entry.id.clone(),
                        message,
                    }
                })?;
                queries.extend(expanded);
            }
        }
    }
    let workload = Workload::new(queries, catalog.clone())?;
    Ok((workload, skipped))
}

/// Serialize a workload to the JSON-lines format.
pub fn workload_to_jsonl(workload: &Workload) -> String {
    let mut out = String::new();
    for q in &workload.queries {
        let line = serde_json::json!({
            "id": q.id,
            "sql": q.text,
            "frequency": q.frequency,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ColumnDef, ColumnType, TableSchema};

    pub(crate) fn test_catalog() -> Catalog {
        Catalog::new(
            vec![
                TableSchema {
                    name: "t".into(),
                    row_count: 1000,
                    columns: vec![
                        int_col("a", 100),
                        int_col("b", 50),
                        int_col("c", 1000),
                        ColumnDef {
                            name: "d".into(),
                            column_type: ColumnType::Cat,
                            cardinality: 10,
                            width_bytes: 4,
                            unique: false,
                        },
                    ],
                },
                TableSchema {
                    name: "s".into(),
                    row_count: 200,
                    columns: vec![
                        ColumnDef {
                            name: "x".into(),
                            column_type: ColumnType::Int,
                            cardinality: 200,
                            width_bytes: 8,
                            unique: true,
                        },
                        int_col("y", 20),
                        int_col("k", 100),
                    ],
                },
            ],
            0,
        )
        .unwrap()
    }

    fn int_col(name: &str, cardinality: u64) -> ColumnDef {
        ColumnDef {
            name: name.into(),
            column_type: ColumnType::Int,
            cardinality,
            width_bytes: 4,
            unique: false,
        }
    }

    fn q(sql: &str) -> QueryAst {
        parse(sql, &test_catalog()).unwrap()
    }

    #[test]
    fn simple_select_maps_directly() {
        let ast = q("SELECT a FROM t WHERE b = 5");
        assert_eq!(ast.predicates.len(), 1);
        assert_eq!(ast.select, vec![SelectItem::Column(ColRef::new("t", "a"))]);
        assert!(ast.joins.is_empty());
    }

    #[test]
    fn unknown_table_is_reported() {
        let err = parse("SELECT x FROM nosuch", &test_catalog()).unwrap_err();
        assert!(matches!(err, ParseError::UnknownTable { name } if name == "nosuch"));
    }

    #[test]
    fn order_by_resolves() {
        let ast = q("SELECT a FROM t ORDER BY c");
        assert_eq!(ast.order_by, vec![ColRef::new("t", "c")]);
    }

    #[test]
    fn where_and_order_columns_are_indexable() {
        let ast = q("SELECT a FROM t WHERE t.a = 1 AND t.b > 2 ORDER BY t.c");
        let cols = indexable_columns(&ast);
        let expect: BTreeSet<ColRef> = ["a", "b", "c"]
            .iter()
            .map(|c| ColRef::new("t", *c))
            .collect();
        assert_eq!(cols, expect);
    }

    #[test]
    fn pure_projection_has_no_indexable_columns() {
        let ast = q("SELECT a FROM t");
        assert!(indexable_columns(&ast).is_empty());
    }

    #[test]
    fn join_columns_are_indexable() {
        let ast = q("SELECT a FROM t, s WHERE t.c = s.x AND t.d = 'v3'");
        assert_eq!(ast.joins.len(), 1);
        let cols = indexable_columns(&ast);
        assert!(cols.contains(&ColRef::new("t", "c")));
        assert!(cols.contains(&ColRef::new("s", "x")));
        assert!(cols.contains(&ColRef::new("t", "d")));
        assert_eq!(cols.len(), 3);
    }

    #[test]
    fn disjunction_is_unsupported() {
        let err = parse("SELECT a FROM t WHERE a = 1 OR b = 2", &test_catalog()).unwrap_err();
        assert!(err.is_unsupported(), "{err}");
    }

    #[test]
    fn correlated_subquery_is_unsupported() {
        let err = parse(
            "SELECT a FROM t WHERE b IN (SELECT y FROM s WHERE t.a = 1)",
            &test_catalog(),
        )
        .unwrap_err();
        assert!(err.is_unsupported(), "{err}");
    }

    #[test]
    fn subquery_parses_and_contributes_indexable_columns() {
        let ast = q("SELECT a FROM t WHERE b IN (SELECT x FROM s WHERE y = 3)");
        let cols = indexable_columns(&ast);
        assert!(cols.contains(&ColRef::new("t", "b")));
        assert!(cols.contains(&ColRef::new("s", "x")));
        assert!(cols.contains(&ColRef::new("s", "y")));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse("SELECT FROM t", &test_catalog()).unwrap_err();
        match err {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 7),
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn group_by_validation() {
        assert!(parse("SELECT a, COUNT(*) FROM t GROUP BY a", &test_catalog()).is_ok());
        let err = parse("SELECT b, COUNT(*) FROM t GROUP BY a", &test_catalog()).unwrap_err();
        assert!(matches!(err, ParseError::Validation { .. }));
    }

    #[test]
    fn unparse_parse_is_fixpoint() {
        for sql in [
            "SELECT a FROM t WHERE b = 5",
            "SELECT DISTINCT a, b FROM t WHERE a > 3 AND d = 'v1' ORDER BY c",
            "SELECT a, COUNT(*) FROM t GROUP BY a",
            "SELECT a FROM t, s WHERE t.c = s.x AND s.y < 7",
            "SELECT a FROM t WHERE b IN (1, 2, 3)",
            "SELECT a FROM t WHERE b IN (SELECT x FROM s WHERE y = 3 ORDER BY k)",
            "SELECT a FROM t WHERE 1 = 1 AND b = 2",
        ] {
            let ast = q(sql);
            let text = unparse(&ast);
            let reparsed = parse(&text, &test_catalog()).unwrap();
            assert_eq!(reparsed, ast, "fixpoint failed for `{sql}` -> `{text}`");
            assert_eq!(unparse(&reparsed), text);
        }
    }

    #[test]
    fn jaccard_basics() {
        let catalog = test_catalog();
        let mk = |id: &str, sql: &str| Query {
            id: id.into(),
            text: sql.into(),
            ast: parse(sql, &catalog).unwrap(),
            frequency: 1.0,
        };
        let q1 = mk("q1", "SELECT a FROM t WHERE a = 1 AND b = 2");
        let q2 = mk("q2", "SELECT c FROM t WHERE b = 9 AND c = 4");
        let q3 = mk("q3", "SELECT a FROM t WHERE a = 5 AND b = 6");
        let q4 = mk("q4", "SELECT x FROM s WHERE y = 1");

        // Identical column sets.
        assert_eq!(jaccard(&q1, &q3), 1.0);
        // {a,b} vs {b,c}: one shared of three total.
        assert!((jaccard(&q1, &q2) - 1.0 / 3.0).abs() < 1e-12);
        // Disjoint non-empty sets.
        assert_eq!(jaccard(&q1, &q4), 0.0);
        // Both empty.
        let p1 = mk("p1", "SELECT a FROM t");
        let p2 = mk("p2", "SELECT b FROM t");
        assert_eq!(jaccard(&p1, &p2), 1.0);
    }

    #[test]
    fn jaccard_symmetric_and_bounded() {
        let catalog = test_catalog();
        let mk = |id: &str, sql: &str| Query {
            id: id.into(),
            text: sql.into(),
            ast: parse(sql, &catalog).unwrap(),
            frequency: 1.0,
        };
        let qs = vec![
            mk("q1", "SELECT a FROM t WHERE a = 1"),
            mk("q2", "SELECT a FROM t WHERE b = 2 ORDER BY c"),
            mk("q3", "SELECT x FROM s WHERE y = 3"),
            mk("q4", "SELECT a FROM t"),
        ];
        for x in &qs {
            for y in &qs {
                let j = jaccard(x, y);
                assert!((0.0..=1.0).contains(&j));
                assert_eq!(j, jaccard(y, x));
            }
            assert_eq!(jaccard(x, x), 1.0);
        }
    }

    #[test]
    fn indexable_subset_of_all_columns() {
        for sql in [
            "SELECT a FROM t WHERE b = 5 GROUP BY a",
            "SELECT a FROM t, s WHERE t.c = s.x ORDER BY b",
            "SELECT a FROM t WHERE b IN (SELECT x FROM s WHERE y = 3)",
        ] {
            let ast = q(sql);
            let indexable = indexable_columns(&ast);
            let all = ast.all_columns();
            assert!(indexable.is_subset(&all), "failed for {sql}");
        }
    }

    #[test]
    fn workload_roundtrip_and_skip() {
        let catalog = test_catalog();
        let jsonl = concat!(
            "{\"id\":\"q1\",\"sql\":\"SELECT a FROM t WHERE b = 5\",\"frequency\":2.0}\n",
            "{\"id\":\"q2\",\"sql\":\"SELECT a FROM t WHERE a = 1 OR b = 2\",\"frequency\":1.0}\n",
        );
        let (workload, skipped) = load_workload_str(jsonl, &catalog).unwrap();
        assert_eq!(workload.len(), 1);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].0, "q2");

        let out = workload_to_jsonl(&workload);
        let (reloaded, _) = load_workload_str(&out, &catalog).unwrap();
        assert_eq!(reloaded.queries[0].ast, workload.queries[0].ast);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let catalog = test_catalog();
        let jsonl = concat!(
            "{\"id\":\"q1\",\"sql\":\"SELECT a FROM t\",\"frequency\":1.0}\n",
            "{\"id\":\"q1\",\"sql\":\"SELECT b FROM t\",\"frequency\":1.0}\n",
        );
        let err = load_workload_str(jsonl, &catalog).unwrap_err();
        assert!(matches!(err, WorkloadError::DuplicateId(_)));
    }
}
