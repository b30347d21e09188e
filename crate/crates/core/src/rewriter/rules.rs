//! Rewrite rules: loading, constraint checking, application, and ranking.

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::costmodel::{CostError, CostModel, IndexConfiguration};
use crate::sqlfront::{parse, unparse, Query, Workload};

use super::bag::{check_equivalence, BagError, Equivalence};
use super::convert::{ast_to_sexpr, parse_colref, sexpr_to_ast};
use super::pattern::{instantiate, match_all, pattern_vars, Bindings};
use super::sexpr::{parse_sexpr, Sexpr};

pub const RULES_FORMAT_VERSION: u32 = 1;

/// Shipped rule library (see `rules/default_rules.json`).
pub const DEFAULT_RULES_JSON: &str = include_str!("../../rules/default_rules.json");

#[derive(Debug, thiserror::Error)]
pub enum RewriteError {
    #[error("rules file: {0}")]
    File(String),
    #[error("rule `{rule}`: {message}")]
    Rule { rule: String, message: String },
    #[error(transparent)]
    Bag(#[from] BagError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone)]
pub enum RuleKind {
    /// Source pattern → target template, gated by named constraints.
    Pattern { source: Sexpr, target: Sexpr },
    /// Built-in: sort join and filter conjuncts into canonical order.
    CanonicalizePredicates,
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub name: String,
    pub kind: RuleKind,
    pub constraints: Vec<String>,
    pub estimated_benefit: f64,
}

/// One skipped application, reported instead of a corrupted AST.
#[derive(Debug, Clone)]
pub struct RuleDiagnostic {
    pub rule: String,
    pub query: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RulesFile {
    format: u32,
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleEntry {
    name: String,
    kind: String,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    constraints: Vec<String>,
    #[serde(default)]
    estimated_benefit: f64,
}

/// Parse a rules file (JSON) into compiled rules.
pub fn load_rules(text: &str) -> Result<Vec<RewriteRule>, RewriteError> {
    let file: RulesFile =
        serde_json::from_str(text).map_err(|e| RewriteError::File(e.to_string()))?;
    if file.format != RULES_FORMAT_VERSION {
        return Err(RewriteError::File(format!(
            "unsupported rules format {} (expected {RULES_FORMAT_VERSION})",
            file.format
        )));
    }
    let mut rules = Vec::with_capacity(file.rules.len());
    for entry in file.rules {
        let kind = match entry.kind.as_str() {
            "pattern" => {
                let source = entry.source.as_deref().ok_or_else(|| RewriteError::Rule {
                    rule: entry.name.clone(),
                    message: "pattern rule needs a source".into(),
                })?;
                let target = entry.target.as_deref().ok_or_else(|| RewriteError::Rule {
                    rule: entry.name.clone(),
                    message: "pattern rule needs a target".into(),
                })?;
                let source = parse_sexpr(source).map_err(|e| RewriteError::Rule {
                    rule: entry.name.clone(),
                    message: format!("source: {e}"),
                })?;
                let target = parse_sexpr(target).map_err(|e| RewriteError::Rule {
                    rule: entry.name.clone(),
                    message: format!("target: {e}"),
                })?;
                // Every target variable must be bound by the source.
                let (src_vars, src_segs) = pattern_vars(&source);
                let (tgt_vars, tgt_segs) = pattern_vars(&target);
                for v in &tgt_vars {
                    if !src_vars.contains(v) {
                        return Err(RewriteError::Rule {
                            rule: entry.name.clone(),
                            message: format!("target variable ?{v} unbound by source"),
                        });
                    }
                }
                for v in &tgt_segs {
                    if !src_segs.contains(v) {
                        return Err(RewriteError::Rule {
                            rule: entry.name.clone(),
                            message: format!("target segment ?{v}* unbound by source"),
                        });
                    }
                }
                RuleKind::Pattern { source, target }
            }
            "canonicalize_predicates" => RuleKind::CanonicalizePredicates,
            other => {
                return Err(RewriteError::Rule {
                    rule: entry.name.clone(),
                    message: format!("unknown rule kind `{other}`"),
                })
            }
        };
        rules.push(RewriteRule {
            name: entry.name,
            kind,
            constraints: entry.constraints,
            estimated_benefit: entry.estimated_benefit,
        });
    }
    Ok(rules)
}

/// The shipped v1 rule set.
pub fn default_rules() -> Vec<RewriteRule> {
    load_rules(DEFAULT_RULES_JSON).expect("shipped rules parse")
}

/// Evaluate a named constraint against a match's bindings. Constraint names
/// and the bindings they consume are documented in the rules-file docs.
fn check_constraint(
    name: &str,
    bindings: &Bindings,
    catalog: &Catalog,
) -> Result<bool, String> {
    match name {
        // Reads ?op ?a ?b: both operands literal and the comparison holds.
        "const-true" => {
            let (Some(op), Some(a), Some(b)) =
                (bindings.get("op"), bindings.get("a"), bindings.get("b"))
            else {
                return Err("const-true needs ?op ?a ?b".into());
            };
            let Ok(op) = super::convert::parse_op(op) else {
                return Ok(false);
            };
            let (Ok(a), Ok(b)) = (
                super::convert::parse_literal(a),
                super::convert::parse_literal(b),
            ) else {
                return Ok(false);
            };
            Ok(super::bag::const_holds(&a, op, &b))
        }
        // Reads ?c ?f ?g: DISTINCT is redundant when either (a) every GROUP
        // BY key is projected, or (b) there is no grouping/aggregation and
        // every FROM table projects a declared-unique column.
        "distinct-redundant" => {
            let (Some(cols), Some(from), Some(group)) =
                (bindings.get("c"), bindings.get("f"), bindings.get("g"))
            else {
                return Err("distinct-redundant needs ?c ?f ?g".into());
            };
            let col_items = cols.as_list().map(|l| &l[1..]).unwrap_or(&[]);
            let group_items = group.as_list().map(|l| &l[1..]).unwrap_or(&[]);
            let from_items = from.as_list().map(|l| &l[1..]).unwrap_or(&[]);

            let plain_cols: Vec<_> = col_items
                .iter()
                .filter(|i| i.head() == Some("col"))
                .collect();
            let has_aggregate = plain_cols.len() != col_items.len();

            if !group_items.is_empty() {
                return Ok(group_items
                    .iter()
                    .all(|g| plain_cols.iter().any(|c| **c == *g)));
            }
            if has_aggregate {
                return Ok(false);
            }
            for table in from_items {
                let Some(table_name) = table.as_atom() else {
                    return Ok(false);
                };
                let covered = plain_cols.iter().any(|c| {
                    parse_colref(c).ok().is_some_and(|cr| {
                        cr.table == table_name
                            && catalog
                                .table(&cr.table)
                                .and_then(|t| t.column(&cr.column))
                                .is_some_and(|d| d.unique)
                    })
                });
                if !covered {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        // Reads ?d ?icol: multiplicity-safe flattening requires a unique
        // inner column or an outer DISTINCT that absorbs duplicates.
        "flatten-sound" => {
            let (Some(d), Some(icol)) = (bindings.get("d"), bindings.get("icol")) else {
                return Err("flatten-sound needs ?d ?icol".into());
            };
            let outer_distinct = d
                .as_list()
                .and_then(|l| l.get(1))
                .and_then(|f| f.as_atom())
                == Some("true");
            if outer_distinct {
                return Ok(true);
            }
            let Some(icol) = icol.as_atom() else {
                return Ok(false);
            };
            let Some((table, column)) = icol.split_once('.') else {
                return Ok(false);
            };
            Ok(catalog
                .table(table)
                .and_then(|t| t.column(column))
                .is_some_and(|c| c.unique))
        }
        // Reads ?ft* ?it: the inner table must not already be in FROM.
        "tables-disjoint" => {
            let (Some(from), Some(inner)) =
                (bindings.get_segment("ft"), bindings.get("it"))
            else {
                return Err("tables-disjoint needs ?ft* ?it".into());
            };
            Ok(!from.iter().any(|t| t == inner))
        }
        other => Err(format!("unknown constraint `{other}`")),
    }
}

impl RewriteRule {
    /// One rewrite step anywhere in the tree (pre-order, first constraint-
    /// satisfying match). Returns the rewritten tree, or None if the rule
    /// does not fire.
    fn try_apply(&self, node: &Sexpr, catalog: &Catalog) -> Result<Option<Sexpr>, String> {
        match &self.kind {
            RuleKind::Pattern { source, target } => {
                self.try_apply_pattern(source, target, node, catalog)
            }
            RuleKind::CanonicalizePredicates => Ok(canonicalize_conjuncts(node)),
        }
    }

    fn try_apply_pattern(
        &self,
        source: &Sexpr,
        target: &Sexpr,
        node: &Sexpr,
        catalog: &Catalog,
    ) -> Result<Option<Sexpr>, String> {
        for bindings in match_all(source, node) {
            let mut ok = true;
            for constraint in &self.constraints {
                if !check_constraint(constraint, &bindings, catalog)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                let replaced = instantiate(target, &bindings).map_err(|e| e.to_string())?;
                return Ok(Some(replaced));
            }
        }
        // Descend into children; first rewritten child wins.
        if let Sexpr::List(items) = node {
            for (i, child) in items.iter().enumerate() {
                if let Some(new_child) = self.try_apply_pattern(source, target, child, catalog)? {
                    let mut out = items.clone();
                    out[i] = new_child;
                    return Ok(Some(Sexpr::List(out)));
                }
            }
        }
        Ok(None)
    }
}

/// Sort every (joins ...) and (where ...) list in the tree by rendered text.
/// Returns None when everything is already canonical.
fn canonicalize_conjuncts(node: &Sexpr) -> Option<Sexpr> {
    let Sexpr::List(items) = node else {
        return None;
    };
    let mut out = items.clone();
    let mut changed = false;
    if matches!(node.head(), Some("joins") | Some("where")) && items.len() > 2 {
        let mut tail: Vec<Sexpr> = items[1..].to_vec();
        tail.sort_by_key(|s| s.to_string());
        if tail[..] != items[1..] {
            out.splice(1.., tail);
            changed = true;
        }
    }
    for (i, child) in items.iter().enumerate() {
        if let Some(new_child) = canonicalize_conjuncts(child) {
            out[i] = new_child;
            changed = true;
        }
    }
    if changed {
        Some(Sexpr::List(out))
    } else {
        None
    }
}

/// Bound on applications of one rule within one pass; a rule that exceeds it
/// is reported and skipped for the query.
const MAX_APPLICATIONS_PER_PASS: u32 = 64;

pub const DEFAULT_MAX_PASSES: u32 = 5;

/// Apply rules to fixpoint (or `max_passes`), in the given order. Pattern
/// failures and conversion failures skip the offending rule with a
/// diagnostic; the query is never corrupted.
pub fn apply_rules(
    q: &Query,
    rules: &[RewriteRule],
    max_passes: u32,
    catalog: &Catalog,
) -> (Query, Vec<RuleDiagnostic>) {
    let mut diagnostics = Vec::new();
    let mut ast = q.ast.clone();
    for _pass in 0..max_passes {
        let mut changed = false;
        for rule in rules {
            let mut applications = 0;
            loop {
                let sexpr = ast_to_sexpr(&ast);
                let rewritten = match rule.try_apply(&sexpr, catalog) {
                    Ok(Some(s)) => s,
                    Ok(None) => break,
                    Err(message) => {
                        diagnostics.push(RuleDiagnostic {
                            rule: rule.name.clone(),
                            query: q.id.clone(),
                            message,
                        });
                        break;
                    }
                };
                applications += 1;
                if applications > MAX_APPLICATIONS_PER_PASS {
                    diagnostics.push(RuleDiagnostic {
                        rule: rule.name.clone(),
                        query: q.id.clone(),
                        message: "application bound exceeded; rule skipped".into(),
                    });
                    break;
                }
                // Convert back and re-validate through the parser; a failure
                // here means the rewrite left the supported subset.
                let candidate = match sexpr_to_ast(&rewritten) {
                    Ok(a) => a,
                    Err(e) => {
                        diagnostics.push(RuleDiagnostic {
                            rule: rule.name.clone(),
                            query: q.id.clone(),
                            message: e.to_string(),
                        });
                        break;
                    }
                };
                match parse(&unparse(&candidate), catalog) {
                    Ok(reparsed) if reparsed == candidate => {
                        ast = candidate;
                        changed = true;
                    }
                    Ok(_) | Err(_) => {
                        diagnostics.push(RuleDiagnostic {
                            rule: rule.name.clone(),
                            query: q.id.clone(),
                            message: "rewritten query failed re-validation".into(),
                        });
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let text = unparse(&ast);
    (
        Query {
            id: q.id.clone(),
            text,
            ast,
            frequency: q.frequency,
        },
        diagnostics,
    )
}

/// A rule with its measured workload-level saving.
#[derive(Debug, Clone)]
pub struct RankedRule {
    pub rule: RewriteRule,
    pub net_saving: f64,
    pub fired_on: usize,
}

/// Rank rules by net cost saving over the workload (empty configuration);
/// rules with nonpositive saving — including rules that never fire — are
/// dropped. Ties break by rule name.
pub fn rank_rules(
    rules: &[RewriteRule],
    workload: &Workload,
    model: &CostModel,
) -> Result<Vec<RankedRule>, RewriteError> {
    let empty = IndexConfiguration::empty();
    let mut ranked = Vec::new();
    for rule in rules {
        let mut saving = 0.0;
        let mut fired_on = 0;
        for q in &workload.queries {
            let (rewritten, _) =
                apply_rules(q, std::slice::from_ref(rule), DEFAULT_MAX_PASSES, &workload.catalog);
            if rewritten.ast == q.ast {
                continue;
            }
            fired_on += 1;
            let before = model
                .query_cost(&q.ast, &empty, &workload.catalog)?
                .value;
            let after = model
                .query_cost(&rewritten.ast, &empty, &workload.catalog)?
                .value;
            saving += q.frequency * (before - after);
        }
        if fired_on > 0 && saving > 0.0 {
            ranked.push(RankedRule {
                rule: rule.clone(),
                net_saving: saving,
                fired_on,
            });
        }
    }
    ranked.sort_by(|a, b| {
        b.net_saving
            .partial_cmp(&a.net_saving)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.rule.name.cmp(&b.rule.name))
    });
    Ok(ranked)
}

/// Soundness check: every query the rule fires on must stay bag-equivalent
/// to its rewritten form across `trials` random instances.
pub fn validate_rule(
    rule: &RewriteRule,
    queries: &[Query],
    catalog: &Catalog,
    trials: u32,
    seed: u64,
) -> Result<(), RewriteError> {
    for q in queries {
        let (rewritten, _) =
            apply_rules(q, std::slice::from_ref(rule), DEFAULT_MAX_PASSES, catalog);
        if rewritten.ast == q.ast {
            continue;
        }
        match check_equivalence(&q.ast, &rewritten.ast, catalog, trials, seed)? {
            Equivalence::EquivalentOnTrials { .. } => {}
            Equivalence::Counterexample(detail) => {
                return Err(RewriteError::Rule {
                    rule: rule.name.clone(),
                    message: format!(
                        "rewrite of `{}` is not equivalent (counterexample at trial {}, \
                         {} vs {} distinct rows)",
                        q.id,
                        detail.trial,
                        detail.left.distinct_rows(),
                        detail.right.distinct_rows()
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Workload-level helper: the full rewrite pass the pipeline runs after
/// compression. Rules are validated on the queries they fire on, ranked,
/// and applied; indexable columns are re-extracted by the caller.
pub fn rewrite_workload(
    workload: &Workload,
    rules: &[RewriteRule],
    model: &CostModel,
    validation_trials: u32,
    seed: u64,
) -> Result<(Workload, Vec<RankedRule>, Vec<RuleDiagnostic>), RewriteError> {
    for rule in rules {
        validate_rule(rule, &workload.queries, &workload.catalog, validation_trials, seed)?;
    }
    let ranked = rank_rules(rules, workload, model)?;
    let ordered: Vec<RewriteRule> = ranked.iter().map(|r| r.rule.clone()).collect();
    let mut diagnostics = Vec::new();
    let mut queries = Vec::with_capacity(workload.len());
    for q in &workload.queries {
        let (rewritten, diags) = apply_rules(q, &ordered, DEFAULT_MAX_PASSES, &workload.catalog);
        diagnostics.extend(diags);
        queries.push(rewritten);
    }
    let rewritten = Workload::new(queries, workload.catalog.clone())
        .expect("rewrite preserves ids and frequencies");
    Ok((rewritten, ranked, diagnostics))
}
