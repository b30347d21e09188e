//! QueryAst ⇄ s-expression conversion.
//!
//! The encoding the pattern language operates on:
//!
//! ```text
//! (select (distinct true|false)
//!         (cols item ...)
//!         (from table ...)
//!         (joins (eq (col t.a) (col s.b)) ...)
//!         (where pred ...)
//!         (group (col t.a) ...)
//!         (order (col t.a) ...))
//!
//! item := (col t.a) | (agg count star) | (agg sum (col t.a)) | ...
//! pred := (cmp <op> (col t.a) <lit>)      -- <op> in = < <= > >=
//!       | (cmp <op> <lit> <lit>)          -- constant predicate
//!       | (in (col t.a) (vals <lit> ...))
//!       | (in (col t.a) (sub (select ...)))
//! lit  := (int 5) | (sym 3)
//! ```

use crate::sqlfront::{
    AggFunc, CmpOp, ColRef, JoinPred, Literal, Predicate, QueryAst, SelectItem,
};

use super::sexpr::Sexpr;

#[derive(Debug, thiserror::Error)]
#[error("malformed query s-expression: {0}")]
pub struct ConvertError(pub String);

fn atom(s: impl Into<String>) -> Sexpr {
    Sexpr::Atom(s.into())
}

fn col_sexpr(col: &ColRef) -> Sexpr {
    Sexpr::List(vec![atom("col"), atom(format!("{}.{}", col.table, col.column))])
}

fn lit_sexpr(lit: &Literal) -> Sexpr {
    match lit {
        Literal::Int(i) => Sexpr::List(vec![atom("int"), atom(i.to_string())]),
        Literal::Symbol(s) => Sexpr::List(vec![atom("sym"), atom(s.to_string())]),
    }
}

fn op_atom(op: CmpOp) -> Sexpr {
    atom(op.symbol())
}

pub fn ast_to_sexpr(ast: &QueryAst) -> Sexpr {
    let mut cols = vec![atom("cols")];
    for item in &ast.select {
        cols.push(match item {
            SelectItem::Column(c) => col_sexpr(c),
            SelectItem::Aggregate { func, arg } => Sexpr::List(vec![
                atom("agg"),
                atom(func.name().to_ascii_lowercase()),
                match arg {
                    Some(c) => col_sexpr(c),
                    None => atom("star"),
                },
            ]),
        });
    }
    let mut from = vec![atom("from")];
    from.extend(ast.from.iter().map(|t| atom(t.clone())));
    let mut joins = vec![atom("joins")];
    for j in &ast.joins {
        joins.push(Sexpr::List(vec![
            atom("eq"),
            col_sexpr(&j.left),
            col_sexpr(&j.right),
        ]));
    }
    let mut wher = vec![atom("where")];
    for p in &ast.predicates {
        wher.push(pred_to_sexpr(p));
    }
    let mut group = vec![atom("group")];
    group.extend(ast.group_by.iter().map(col_sexpr));
    let mut order = vec![atom("order")];
    order.extend(ast.order_by.iter().map(col_sexpr));

    Sexpr::List(vec![
        atom("select"),
        Sexpr::List(vec![
            atom("distinct"),
            atom(if ast.distinct { "true" } else { "false" }),
        ]),
        Sexpr::List(cols),
        Sexpr::List(from),
        Sexpr::List(joins),
        Sexpr::List(wher),
        Sexpr::List(group),
        Sexpr::List(order),
    ])
}

fn pred_to_sexpr(pred: &Predicate) -> Sexpr {
    match pred {
        Predicate::Compare { col, op, value } => Sexpr::List(vec![
            atom("cmp"),
            op_atom(*op),
            col_sexpr(col),
            lit_sexpr(value),
        ]),
        Predicate::ConstCompare { left, op, right } => Sexpr::List(vec![
            atom("cmp"),
            op_atom(*op),
            lit_sexpr(left),
            lit_sexpr(right),
        ]),
        Predicate::InList { col, values } => {
            let mut vals = vec![atom("vals")];
            vals.extend(values.iter().map(lit_sexpr));
            Sexpr::List(vec![atom("in"), col_sexpr(col), Sexpr::List(vals)])
        }
        Predicate::InSubquery { col, subquery } => Sexpr::List(vec![
            atom("in"),
            col_sexpr(col),
            Sexpr::List(vec![atom("sub"), ast_to_sexpr(subquery)]),
        ]),
    }
}

fn expect_list<'a>(sexpr: &'a Sexpr, head: &str) -> Result<&'a [Sexpr], ConvertError> {
    let items = sexpr
        .as_list()
        .ok_or_else(|| ConvertError(format!("expected ({head} ...), got atom")))?;
    match items.first().and_then(|h| h.as_atom()) {
        Some(h) if h == head => Ok(&items[1..]),
        _ => Err(ConvertError(format!("expected ({head} ...), got {sexpr}"))),
    }
}

pub(super) fn parse_colref(sexpr: &Sexpr) -> Result<ColRef, ConvertError> {
    let items = expect_list(sexpr, "col")?;
    let [name] = items else {
        return Err(ConvertError(format!("malformed column form {sexpr}")));
    };
    let text = name
        .as_atom()
        .ok_or_else(|| ConvertError("column name must be an atom".into()))?;
    let (table, column) = text
        .split_once('.')
        .ok_or_else(|| ConvertError(format!("column `{text}` must be table-qualified")))?;
    Ok(ColRef::new(table, column))
}

pub(super) fn parse_literal(sexpr: &Sexpr) -> Result<Literal, ConvertError> {
    let items = sexpr
        .as_list()
        .ok_or_else(|| ConvertError(format!("expected literal form, got {sexpr}")))?;
    match (items.first().and_then(|h| h.as_atom()), items.get(1)) {
        (Some("int"), Some(v)) => {
            let n = v
                .as_atom()
                .and_then(|s| s.parse::<i64>().ok())
                .ok_or_else(|| ConvertError(format!("bad int literal {sexpr}")))?;
            Ok(Literal::Int(n))
        }
        (Some("sym"), Some(v)) => {
            let n = v
                .as_atom()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| ConvertError(format!("bad sym literal {sexpr}")))?;
            Ok(Literal::Symbol(n))
        }
        _ => Err(ConvertError(format!("expected literal form, got {sexpr}"))),
    }
}

pub(super) fn parse_op(sexpr: &Sexpr) -> Result<CmpOp, ConvertError> {
    match sexpr.as_atom() {
        Some("=") => Ok(CmpOp::Eq),
        Some("<") => Ok(CmpOp::Lt),
        Some("<=") => Ok(CmpOp::Le),
        Some(">") => Ok(CmpOp::Gt),
        Some(">=") => Ok(CmpOp::Ge),
        _ => Err(ConvertError(format!("bad comparison operator {sexpr}"))),
    }
}

pub fn sexpr_to_ast(sexpr: &Sexpr) -> Result<QueryAst, ConvertError> {
    let parts = expect_list(sexpr, "select")?;
    let [distinct, cols, from, joins, wher, group, order] = parts else {
        return Err(ConvertError(format!(
            "select form must have 7 components, got {}",
            parts.len()
        )));
    };

    let distinct = match expect_list(distinct, "distinct")? {
        [flag] => match flag.as_atom() {
            Some("true") => true,
            Some("false") => false,
            _ => return Err(ConvertError("distinct flag must be true/false".into())),
        },
        _ => return Err(ConvertError("malformed distinct form".into())),
    };

    let mut select = Vec::new();
    for item in expect_list(cols, "cols")? {
        if item.head() == Some("col") {
            select.push(SelectItem::Column(parse_colref(item)?));
        } else {
            let parts = expect_list(item, "agg")?;
            let [func, arg] = parts else {
                return Err(ConvertError(format!("malformed aggregate {item}")));
            };
            let func = match func.as_atom() {
                Some("count") => AggFunc::Count,
                Some("sum") => AggFunc::Sum,
                Some("min") => AggFunc::Min,
                Some("max") => AggFunc::Max,
                _ => return Err(ConvertError(format!("unknown aggregate {item}"))),
            };
            let arg = if arg.as_atom() == Some("star") {
                None
            } else {
                Some(parse_colref(arg)?)
            };
            select.push(SelectItem::Aggregate { func, arg });
        }
    }

    let from: Vec<String> = expect_list(from, "from")?
        .iter()
        .map(|t| {
            t.as_atom()
                .map(str::to_string)
                .ok_or_else(|| ConvertError("table name must be an atom".into()))
        })
        .collect::<Result<_, _>>()?;

    let mut join_preds = Vec::new();
    for j in expect_list(joins, "joins")? {
        let parts = expect_list(j, "eq")?;
        let [l, r] = parts else {
            return Err(ConvertError(format!("malformed join {j}")));
        };
        join_preds.push(JoinPred {
            left: parse_colref(l)?,
            right: parse_colref(r)?,
        });
    }

    let mut predicates = Vec::new();
    for p in expect_list(wher, "where")? {
        predicates.push(sexpr_to_pred(p)?);
    }

    let group_by = expect_list(group, "group")?
        .iter()
        .map(parse_colref)
        .collect::<Result<_, _>>()?;
    let order_by = expect_list(order, "order")?
        .iter()
        .map(parse_colref)
        .collect::<Result<_, _>>()?;

    Ok(QueryAst {
        distinct,
        select,
        from,
        joins: join_preds,
        predicates,
        group_by,
        order_by,
    })
}

fn sexpr_to_pred(sexpr: &Sexpr) -> Result<Predicate, ConvertError> {
    match sexpr.head() {
        Some("cmp") => {
            let parts = expect_list(sexpr, "cmp")?;
            let [op, left, right] = parts else {
                return Err(ConvertError(format!("malformed comparison {sexpr}")));
            };
            let op = parse_op(op)?;
            if left.head() == Some("col") {
                Ok(Predicate::Compare {
                    col: parse_colref(left)?,
                    op,
                    value: parse_literal(right)?,
                })
            } else {
                Ok(Predicate::ConstCompare {
                    left: parse_literal(left)?,
                    op,
                    right: parse_literal(right)?,
                })
            }
        }
        Some("in") => {
            let parts = expect_list(sexpr, "in")?;
            let [col, rhs] = parts else {
                return Err(ConvertError(format!("malformed IN {sexpr}")));
            };
            let col = parse_colref(col)?;
            match rhs.head() {
                Some("vals") => {
                    let values = expect_list(rhs, "vals")?
                        .iter()
                        .map(parse_literal)
                        .collect::<Result<Vec<_>, _>>()?;
                    if values.is_empty() {
                        return Err(ConvertError("empty IN list".into()));
                    }
                    Ok(Predicate::InList { col, values })
                }
                Some("sub") => {
                    let parts = expect_list(rhs, "sub")?;
                    let [inner] = parts else {
                        return Err(ConvertError(format!("malformed subquery {rhs}")));
                    };
                    Ok(Predicate::InSubquery {
                        col,
                        subquery: Box::new(sexpr_to_ast(inner)?),
                    })
                }
                _ => Err(ConvertError(format!("malformed IN right-hand side {rhs}"))),
            }
        }
        _ => Err(ConvertError(format!("unknown predicate form {sexpr}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqlfront::parse;

    #[test]
    fn conversion_roundtrip() {
        let catalog = crate::rewriter::tests::rewrite_catalog();
        for sql in [
            "SELECT a FROM t WHERE b = 5",
            "SELECT DISTINCT a, d FROM t WHERE a > 3 ORDER BY c",
            "SELECT a, COUNT(*) FROM t GROUP BY a",
            "SELECT a FROM t, s WHERE t.c = s.x AND s.y < 7",
            "SELECT a FROM t WHERE b IN (1, 2, 3)",
            "SELECT a FROM t WHERE b IN (SELECT x FROM s WHERE y = 3 ORDER BY x)",
            "SELECT a FROM t WHERE 1 = 1 AND b = 2",
        ] {
            let ast = parse(sql, &catalog).unwrap();
            let sexpr = ast_to_sexpr(&ast);
            let back = sexpr_to_ast(&sexpr).unwrap();
            assert_eq!(back, ast, "roundtrip failed for {sql}: {sexpr}");
        }
    }
}
