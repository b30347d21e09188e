//! Schemas, per-column statistics, and deterministic miniature data
//! generation.
//!
//! The catalog is the source of truth for table sizes and selectivities.
//! Statistics are declared, not sampled: the cost model reads
//! `distinct_count` directly, which keeps estimation decoupled from any
//! materialized instance. Materialized instances are tiny (≤ 1000 rows per
//! table) and exist only so the rewriter can test bag-semantics equivalence
//! on real tuples.
//!
//! ## Catalog file format (version 1)
//!
//! ```json
//! {
//!   "format": 1,
//!   "seed": 42,
//!   "tables": [
//!     {
//!       "name": "orders",
//!       "row_count": 100000,
//!       "columns": [
//!         {"name": "status", "type": "cat", "cardinality": 8, "width_bytes": 4},
//!         {"name": "id", "type": "int", "cardinality": 100000, "width_bytes": 8, "unique": true}
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `cardinality` doubles as the declared distinct count; `"int"` columns
//! range over `0..cardinality`, `"cat"` columns over `cardinality` opaque
//! symbols. `unique` marks columns the data generator must fill without
//! repeats (requires `cardinality >= rows` at materialization time).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seeds::subseed;

pub const CATALOG_FORMAT_VERSION: u32 = 1;

/// Hard cap on miniature instance size; these instances only back the
/// rewriter's equivalence oracle, never cost estimation.
pub const MAX_INSTANCE_ROWS: u32 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("failed to read catalog file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported catalog format version {found} (expected {CATALOG_FORMAT_VERSION})")]
    FormatVersion { found: u32 },
    #[error("duplicate table name `{0}`")]
    DuplicateTable(String),
    #[error("table `{table}`: duplicate column name `{column}`")]
    DuplicateColumn { table: String, column: String },
    #[error("table `{table}` column `{column}`: {message}")]
    InvalidColumn {
        table: String,
        column: String,
        message: String,
    },
    #[error("rows_per_table {requested} exceeds instance cap {MAX_INSTANCE_ROWS}")]
    InstanceTooLarge { requested: u32 },
    #[error(
        "table `{table}` column `{column}` is declared unique but has cardinality \
         {cardinality} < {rows} requested rows"
    )]
    UniqueUnderflow {
        table: String,
        column: String,
        cardinality: u64,
        rows: u32,
    },
}

/// Value domain of a column: a dense integer range or a categorical symbol
/// set, both of declared cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int,
    Cat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
    /// Declared number of distinct values; also the domain size.
    pub cardinality: u64,
    pub width_bytes: u32,
    /// Declared uniqueness; consumed by rewrite-rule constraints and the
    /// data generator.
    #[serde(default, skip_serializing_if = "is_false")]
    pub unique: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ColumnDef {
    pub fn distinct_count(&self) -> u64 {
        self.cardinality
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub row_count: u64,
    pub columns: Vec<ColumnDef>,
}

impl TableSchema {
    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub format: u32,
    #[serde(default)]
    pub seed: u64,
    pub tables: Vec<TableSchema>,
}

impl Catalog {
    pub fn new(tables: Vec<TableSchema>, seed: u64) -> Result<Self, CatalogError> {
        let catalog = Catalog {
            format: CATALOG_FORMAT_VERSION,
            seed,
            tables,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.format != CATALOG_FORMAT_VERSION {
            return Err(CatalogError::FormatVersion { found: self.format });
        }
        let mut seen_tables = std::collections::BTreeSet::new();
        for table in &self.tables {
            if !seen_tables.insert(table.name.as_str()) {
                return Err(CatalogError::DuplicateTable(table.name.clone()));
            }
            let mut seen_cols = std::collections::BTreeSet::new();
            for col in &table.columns {
                if !seen_cols.insert(col.name.as_str()) {
                    return Err(CatalogError::DuplicateColumn {
                        table: table.name.clone(),
                        column: col.name.clone(),
                    });
                }
                if col.cardinality == 0 {
                    return Err(CatalogError::InvalidColumn {
                        table: table.name.clone(),
                        column: col.name.clone(),
                        message: "cardinality must be >= 1".into(),
                    });
                }
                if col.width_bytes == 0 {
                    return Err(CatalogError::InvalidColumn {
                        table: table.name.clone(),
                        column: col.name.clone(),
                        message: "width_bytes must be >= 1".into(),
                    });
                }
                // Zero-row tables are allowed to keep declared statistics
                // (they exist for degenerate-case tests); the consistency
                // check applies once the table has rows.
                if table.row_count > 0 && col.cardinality > table.row_count {
                    return Err(CatalogError::InvalidColumn {
                        table: table.name.clone(),
                        column: col.name.clone(),
                        message: format!(
                            "cardinality {} exceeds table row_count {}",
                            col.cardinality, table.row_count
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let catalog: Catalog =
            serde_json::from_str(text).map_err(|e| CatalogError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        catalog.validate()?;
        Ok(catalog)
    }
}

/// Load and validate a catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Catalog::from_json(&text)
}

/// A typed cell value in a materialized instance.
///
/// `Cat` carries the symbol index; rendering as `v{index}` happens only at
/// display boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Cat(u32),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Cat(c) => write!(f, "v{c}"),
        }
    }
}

pub type Row = Vec<Value>;

/// Per-table row sets generated from the catalog; the substrate for
/// bag-semantics equivalence checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterializedInstance {
    pub seed: u64,
    pub rows_per_table: u32,
    /// Table name → rows (column order matches the schema's column order).
    pub tables: BTreeMap<String, Vec<Row>>,
}

impl MaterializedInstance {
    pub fn rows(&self, table: &str) -> &[Row] {
        self.tables
            .get(table)
            .map(|r| r.as_slice())
            .unwrap_or(&[])
    }
}

fn draw_value(col: &ColumnDef, rng: &mut ChaCha8Rng) -> Value {
    match col.column_type {
        ColumnType::Int => Value::Int(rng.gen_range(0..col.cardinality as i64)),
        ColumnType::Cat => Value::Cat(rng.gen_range(0..col.cardinality as u32)),
    }
}

fn value_from_index(col: &ColumnDef, index: u64) -> Value {
    match col.column_type {
        ColumnType::Int => Value::Int(index as i64),
        ColumnType::Cat => Value::Cat(index as u32),
    }
}

/// Generate a deterministic miniature instance.
///
/// Values are drawn uniformly from each column's domain; unique columns are
/// filled by a seeded shuffle of the domain so no value repeats. The result
/// is a pure function of `(catalog, rows_per_table, seed)` — per-table RNG
/// streams are derived from the table name, so adding a table does not
/// perturb the rows of existing ones.
pub fn materialize(
    catalog: &Catalog,
    rows_per_table: u32,
    seed: u64,
) -> Result<MaterializedInstance, CatalogError> {
    if rows_per_table > MAX_INSTANCE_ROWS {
        return Err(CatalogError::InstanceTooLarge {
            requested: rows_per_table,
        });
    }
    let mut tables = BTreeMap::new();
    for table in &catalog.tables {
        let table_seed = subseed(seed, "materialize", crate::seeds::fnv1a64(table.name.as_bytes()));
        let mut rng = ChaCha8Rng::seed_from_u64(table_seed);

        // Unique columns get a shuffled prefix of their domain, drawn up
        // front so row generation stays a single left-to-right pass.
        let mut unique_pools: Vec<Option<Vec<u64>>> = Vec::with_capacity(table.columns.len());
        for col in &table.columns {
            if col.unique {
                if col.cardinality < rows_per_table as u64 {
                    return Err(CatalogError::UniqueUnderflow {
                        table: table.name.clone(),
                        column: col.name.clone(),
                        cardinality: col.cardinality,
                        rows: rows_per_table,
                    });
                }
                let mut pool: Vec<u64> = (0..col.cardinality).collect();
                pool.shuffle(&mut rng);
                pool.truncate(rows_per_table as usize);
                unique_pools.push(Some(pool));
            } else {
                unique_pools.push(None);
            }
        }

        let mut rows = Vec::with_capacity(rows_per_table as usize);
        for row_idx in 0..rows_per_table as usize {
            let mut row = Vec::with_capacity(table.columns.len());
            for (col_idx, col) in table.columns.iter().enumerate() {
                let value = match &unique_pools[col_idx] {
                    Some(pool) => value_from_index(col, pool[row_idx]),
                    None => draw_value(col, &mut rng),
                };
                row.push(value);
            }
            rows.push(row);
        }
        tables.insert(table.name.clone(), rows);
    }
    Ok(MaterializedInstance {
        seed,
        rows_per_table,
        tables,
    })
}

/// Predicate shape for selectivity estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredicateKind {
    Equality,
    /// Range predicate with a pre-computed domain fraction.
    Range(f64),
}

/// Smallest selectivity the estimator reports; keeps the value strictly
/// positive as required downstream (rewards, probe costs).
pub const MIN_SELECTIVITY: f64 = 1e-6;

/// Fraction of a table's rows matching a predicate on `column`.
///
/// Equality is `1 / distinct_count`; a range predicate carries its own
/// domain fraction and is clamped into `(0, 1]`.
pub fn selectivity(column: &ColumnDef, kind: PredicateKind) -> f64 {
    match kind {
        PredicateKind::Equality => {
            (1.0 / column.distinct_count() as f64).clamp(MIN_SELECTIVITY, 1.0)
        }
        PredicateKind::Range(fraction) => fraction.clamp(MIN_SELECTIVITY, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_catalog() -> Catalog {
        Catalog::new(
            vec![
                TableSchema {
                    name: "t".into(),
                    row_count: 100,
                    columns: vec![
                        ColumnDef {
                            name: "a".into(),
                            column_type: ColumnType::Int,
                            cardinality: 10,
                            width_bytes: 4,
                            unique: false,
                        },
                        ColumnDef {
                            name: "b".into(),
                            column_type: ColumnType::Cat,
                            cardinality: 3,
                            width_bytes: 4,
                            unique: false,
                        },
                    ],
                },
                TableSchema {
                    name: "s".into(),
                    row_count: 50,
                    columns: vec![ColumnDef {
                        name: "x".into(),
                        column_type: ColumnType::Int,
                        cardinality: 50,
                        width_bytes: 8,
                        unique: true,
                    }],
                },
            ],
            7,
        )
        .unwrap()
    }

    #[test]
    fn load_round_trips_declared_content() {
        let catalog = demo_catalog();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.json");
        std::fs::write(&path, catalog.to_json()).unwrap();
        let loaded = load_catalog(&path).unwrap();
        assert_eq!(loaded, catalog);
        assert_eq!(loaded.tables.len(), 2);

        // Round-trip again through serialization: structural equality.
        let reloaded = Catalog::from_json(&loaded.to_json()).unwrap();
        assert_eq!(reloaded, loaded);
    }

    #[test]
    fn cardinality_above_row_count_rejected() {
        let mut catalog = demo_catalog();
        catalog.tables[0].columns[0].cardinality = 1000;
        let err = Catalog::from_json(&serde_json::to_string(&catalog).unwrap()).unwrap_err();
        assert!(matches!(err, CatalogError::InvalidColumn { .. }), "{err}");
    }

    #[test]
    fn empty_table_list_is_valid() {
        let catalog = Catalog::new(vec![], 0).unwrap();
        assert!(catalog.tables.is_empty());
        let reloaded = Catalog::from_json(&catalog.to_json()).unwrap();
        assert_eq!(reloaded, catalog);
    }

    #[test]
    fn duplicate_table_name_rejected() {
        let mut catalog = demo_catalog();
        let dup = catalog.tables[0].clone();
        catalog.tables.push(dup);
        let err = catalog.validate().unwrap_err();
        assert!(matches!(err, CatalogError::DuplicateTable(_)));
    }

    #[test]
    fn parse_error_reports_position() {
        let err = Catalog::from_json("{ \"format\": 1, \"tables\": [ nope ] }").unwrap_err();
        match err {
            CatalogError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn materialize_is_deterministic() {
        let catalog = demo_catalog();
        let a = materialize(&catalog, 10, 7).unwrap();
        let b = materialize(&catalog, 10, 7).unwrap();
        assert_eq!(a, b);
        let c = materialize(&catalog, 10, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn materialize_zero_rows() {
        let catalog = demo_catalog();
        let inst = materialize(&catalog, 0, 1).unwrap();
        assert!(inst.rows("t").is_empty());
        assert!(inst.rows("s").is_empty());
    }

    #[test]
    fn materialize_respects_domains() {
        // Column with cardinality 3: every generated value is one of the
        // three domain symbols.
        let catalog = demo_catalog();
        let inst = materialize(&catalog, 50, 3).unwrap();
        for row in inst.rows("t") {
            match row[1] {
                Value::Cat(c) => assert!(c < 3),
                other => panic!("expected cat value, got {other:?}"),
            }
            match row[0] {
                Value::Int(i) => assert!((0..10).contains(&i)),
                other => panic!("expected int value, got {other:?}"),
            }
        }
    }

    #[test]
    fn materialize_unique_columns_have_no_repeats() {
        let catalog = demo_catalog();
        let inst = materialize(&catalog, 50, 11).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for row in inst.rows("s") {
            assert!(seen.insert(row[0]), "duplicate in unique column");
        }
    }

    #[test]
    fn materialize_rejects_oversized_instances() {
        let catalog = demo_catalog();
        let err = materialize(&catalog, MAX_INSTANCE_ROWS + 1, 0).unwrap_err();
        assert!(matches!(err, CatalogError::InstanceTooLarge { .. }));
    }

    #[test]
    fn selectivity_definitions() {
        let col = ColumnDef {
            name: "c".into(),
            column_type: ColumnType::Int,
            cardinality: 100,
            width_bytes: 4,
            unique: false,
        };
        assert_eq!(selectivity(&col, PredicateKind::Equality), 0.01);
        assert_eq!(selectivity(&col, PredicateKind::Range(0.25)), 0.25);

        let degenerate = ColumnDef {
            cardinality: 1,
            ..col.clone()
        };
        assert_eq!(selectivity(&degenerate, PredicateKind::Equality), 1.0);

        // Bounds hold at the extremes.
        assert!(selectivity(&col, PredicateKind::Range(0.0)) > 0.0);
        assert_eq!(selectivity(&col, PredicateKind::Range(2.0)), 1.0);
    }
}
