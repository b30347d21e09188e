//! Equivalence-preserving query rewriting.
//!
//! Rules live in a versioned JSON file and are expressed in a small
//! s-expression pattern language over the query encoding defined in
//! [`convert`]. Every rule is validated by bag-semantics evaluation on
//! seeded random miniature instances before it is applied — a pass is
//! evidence over those instances, not a proof, and the test suite runs the
//! thorough version of that check.

mod bag;
mod convert;
mod pattern;
mod rules;
mod sexpr;

pub use bag::{check_equivalence, evaluate_bag, BagError, BagResult, Equivalence};
pub use convert::{ast_to_sexpr, sexpr_to_ast, ConvertError};
pub use pattern::{instantiate, match_all, match_first, Bindings};
pub use rules::{
    apply_rules, default_rules, load_rules, rank_rules, rewrite_workload, validate_rule,
    RankedRule, RewriteError, RewriteRule, RuleDiagnostic, RuleKind, DEFAULT_MAX_PASSES,
    DEFAULT_RULES_JSON,
};
pub use sexpr::{parse_sexpr, Sexpr, SexprParseError};
