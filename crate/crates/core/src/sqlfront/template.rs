//! Template expander for parameterized query generation.
//!
//! A template entry carries a SQL string with `{name}` placeholders and a
//! parameter spec per placeholder. Expansion is deterministic given the
//! entry's seed. The `redundancy` knob controls how often a new instance
//! reuses the column bindings of an earlier instance of the same template,
//! which produces near-duplicate queries (identical indexable-column sets)
//! for compression experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;

use super::{parse, Query};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSpec {
    /// Integer literal drawn uniformly from `lo..=hi`.
    Int { name: String, lo: i64, hi: i64 },
    /// Literal text drawn uniformly from `values` (spliced verbatim).
    Choice { name: String, values: Vec<String> },
    /// Column identifier drawn uniformly from `columns` (a column binding:
    /// reuse across instances is what the redundancy knob controls).
    Column { name: String, columns: Vec<String> },
}

impl ParamSpec {
    fn name(&self) -> &str {
        match self {
            ParamSpec::Int { name, .. }
            | ParamSpec::Choice { name, .. }
            | ParamSpec::Column { name, .. } => name,
        }
    }

    fn is_column(&self) -> bool {
        matches!(self, ParamSpec::Column { .. })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<String, String> {
        match self {
            ParamSpec::Int { name, lo, hi } => {
                if lo > hi {
                    return Err(format!("param `{name}`: empty range {lo}..={hi}"));
                }
                Ok(rng.gen_range(*lo..=*hi).to_string())
            }
            ParamSpec::Choice { name, values } => {
                if values.is_empty() {
                    return Err(format!("param `{name}`: empty choice list"));
                }
                Ok(values[rng.gen_range(0..values.len())].clone())
            }
            ParamSpec::Column { name, columns } => {
                if columns.is_empty() {
                    return Err(format!("param `{name}`: empty column list"));
                }
                Ok(columns[rng.gen_range(0..columns.len())].clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub id: String,
    pub template_sql: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    pub count: u32,
    pub seed: u64,
    /// Probability that an instance reuses a previous instance's column
    /// bindings instead of drawing fresh ones.
    #[serde(default)]
    pub redundancy: f64,
    /// Frequency assigned to every generated instance.
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_frequency() -> f64 {
    1.0
}

/// Expand a template entry into concrete queries.
///
/// Instances that fail to parse are an error: templates are authored against
/// a known catalog, so a failing instantiation is a config bug, not data.
pub fn expand_template(entry: &TemplateEntry, catalog: &Catalog) -> Result<Vec<Query>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(entry.seed);
    let mut queries = Vec::with_capacity(entry.count as usize);
    // Column bindings of previous instances, for redundancy reuse.
    let mut column_history: Vec<Vec<(String, String)>> = Vec::new();

    for i in 0..entry.count {
        let reuse = !column_history.is_empty() && rng.gen::<f64>() < entry.redundancy;
        let column_bindings: Vec<(String, String)> = if reuse {
            let pick = rng.gen_range(0..column_history.len());
            column_history[pick].clone()
        } else {
            let mut fresh = Vec::new();
            for param in entry.params.iter().filter(|p| p.is_column()) {
                fresh.push((param.name().to_string(), param.draw(&mut rng)?));
            }
            column_history.push(fresh.clone());
            fresh
        };

        let mut sql = entry.template_sql.clone();
        for (name, value) in &column_bindings {
            sql = sql.replace(&format!("{{{name}}}"), value);
        }
        for param in entry.params.iter().filter(|p| !p.is_column()) {
            let value = param.draw(&mut rng)?;
            sql = sql.replace(&format!("{{{name}}}", name = param.name()), &value);
        }
        if sql.contains('{') {
            return Err(format!("unbound placeholder in instantiated SQL: {sql}"));
        }

        let id = format!("{}_{:04}", entry.id, i);
        let ast = parse(&sql, catalog).map_err(|e| format!("instance {id}: {e} ({sql})"))?;
        queries.push(Query {
            id,
            text: sql,
            ast,
            frequency: entry.frequency,
        });
    }
    Ok(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqlfront::tests::test_catalog;

    fn entry(redundancy: f64, count: u32) -> TemplateEntry {
        TemplateEntry {
            id: "tpl".into(),
            template_sql: "SELECT a FROM t WHERE {col} = {v}".into(),
            params: vec![
                ParamSpec::Column {
                    name: "col".into(),
                    columns: vec!["a".into(), "b".into(), "c".into()],
                },
                ParamSpec::Int {
                    name: "v".into(),
                    lo: 0,
                    hi: 40,
                },
            ],
            count,
            seed: 9,
            redundancy,
            frequency: 1.0,
        }
    }

    #[test]
    fn expansion_is_deterministic() {
        let catalog = test_catalog();
        let a = expand_template(&entry(0.5, 20), &catalog).unwrap();
        let b = expand_template(&entry(0.5, 20), &catalog).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.text, y.text);
            assert_eq!(x.id, y.id);
        }
    }

    #[test]
    fn count_zero_yields_nothing() {
        let catalog = test_catalog();
        assert!(expand_template(&entry(0.0, 0), &catalog).unwrap().is_empty());
    }

    #[test]
    fn full_redundancy_repeats_column_bindings() {
        let catalog = test_catalog();
        let queries = expand_template(&entry(1.0, 10), &catalog).unwrap();
        let first_cols = queries[0].indexable_columns();
        for q in &queries {
            assert_eq!(q.indexable_columns(), first_cols);
        }
    }

    #[test]
    fn unbound_placeholder_is_an_error() {
        let catalog = test_catalog();
        let mut e = entry(0.0, 1);
        e.template_sql = "SELECT a FROM t WHERE {missing} = 1".into();
        e.params.clear();
        assert!(expand_template(&e, &catalog).is_err());
    }
}
