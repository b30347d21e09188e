//! Recursive-descent parser and resolver for the SQL subset.
//!
//! ## Grammar
//!
//! ```text
//! query      := SELECT [DISTINCT] item ("," item)* FROM table ("," table)*
//!               [WHERE conjunct (AND conjunct)*]
//!               [GROUP BY colref ("," colref)*]
//!               [ORDER BY colref ("," colref)*]
//! item       := colref | (COUNT|SUM|MIN|MAX) "(" (colref | "*") ")"
//! conjunct   := colref op literal            -- filter predicate
//!             | colref "=" colref            -- equi-join (two distinct tables)
//!             | colref IN "(" literal ("," literal)* ")"
//!             | colref IN "(" query ")"      -- uncorrelated, single level
//!             | literal op literal           -- constant predicate
//! op         := "=" | "<" | "<=" | ">" | ">="
//! colref     := ident "." ident | ident
//! literal    := int | "'" symbol "'"
//! ```
//!
//! Keywords are case-insensitive. Disjunctions, correlated subqueries,
//! non-equi column-to-column comparisons, range predicates on categorical
//! columns, and nested subqueries are rejected with a distinct
//! [`ParseError::Unsupported`] so callers can skip rather than crash.

use crate::catalog::{Catalog, ColumnType};

use super::ast::*;
use super::lexer::{tokenize, Spanned, Token};
use super::ParseError;

/// Parse and resolve a query against the catalog.
pub fn parse(sql: &str, catalog: &Catalog) -> Result<QueryAst, ParseError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        catalog,
        src_len: sql.len(),
    };
    let ast = parser.query(&[], 0)?;
    parser.expect_end()?;
    Ok(ast)
}

struct Parser<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    catalog: &'a Catalog,
    src_len: usize,
}

#[derive(Debug, Clone)]
enum RawRef {
    Qualified(String, String),
    Bare(String),
}

#[derive(Debug, Clone)]
enum Operand {
    Col(RawRef),
    Lit(Literal),
}

#[derive(Debug, Clone)]
enum RawSelect {
    Column(RawRef),
    Aggregate { func: AggFunc, arg: Option<RawRef> },
}

#[derive(Debug, Clone)]
enum RawConjunct {
    Compare { col: RawRef, op: CmpOp, value: Literal },
    InList { col: RawRef, values: Vec<Literal> },
    InSubquery { col: RawRef, sub: QueryAst },
    ColCol { left: RawRef, op: CmpOp, right: RawRef },
    Const { left: Literal, op: CmpOp, right: Literal },
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn peek_pos(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|s| s.pos)
            .unwrap_or(self.src_len)
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.peek_pos(),
            message: message.into(),
        }
    }

    fn keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(id)) if id.eq_ignore_ascii_case(word))
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.keyword(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), ParseError> {
        if self.eat_keyword(word) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{word}`")))
        }
    }

    fn expect_token(&mut self, token: Token, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.syntax("unexpected trailing input"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        const RESERVED: [&str; 10] = [
            "SELECT", "DISTINCT", "FROM", "WHERE", "AND", "OR", "IN", "GROUP", "ORDER", "BY",
        ];
        match self.peek() {
            Some(Token::Ident(id)) => {
                if RESERVED.iter().any(|k| id.eq_ignore_ascii_case(k)) {
                    return Err(self.syntax(format!("expected identifier, found `{id}`")));
                }
                let id = id.clone();
                self.pos += 1;
                Ok(id)
            }
            _ => Err(self.syntax("expected identifier")),
        }
    }

    /// `outer_tables` holds the enclosing query's FROM list so correlated
    /// references can be diagnosed as such; `depth` limits subquery nesting
    /// to one level.
    fn query(&mut self, outer_tables: &[String], depth: u32) -> Result<QueryAst, ParseError> {
        self.expect_keyword("SELECT")?;
        let distinct = self.eat_keyword("DISTINCT");

        let mut raw_select = Vec::new();
        loop {
            raw_select.push(self.select_item()?);
            if self.peek() == Some(&Token::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }

        self.expect_keyword("FROM")?;
        let mut from = Vec::new();
        loop {
            let table = self.ident()?;
            if table.eq_ignore_ascii_case("SELECT") {
                return Err(ParseError::Unsupported {
                    construct: "derived table in FROM".into(),
                });
            }
            from.push(table);
            if self.peek() == Some(&Token::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if from.iter().any(|t| {
            ["JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS"]
                .iter()
                .any(|k| t.eq_ignore_ascii_case(k))
        }) || self.keyword("JOIN")
            || self.keyword("INNER")
            || self.keyword("LEFT")
        {
            return Err(ParseError::Unsupported {
                construct: "explicit JOIN syntax (use comma list with WHERE equi-joins)".into(),
            });
        }

        let mut raw_conjuncts = Vec::new();
        if self.eat_keyword("WHERE") {
            loop {
                raw_conjuncts.push(self.conjunct(&from, outer_tables, depth)?);
                if self.eat_keyword("AND") {
                    continue;
                }
                if self.keyword("OR") {
                    return Err(ParseError::Unsupported {
                        construct: "OR disjunction".into(),
                    });
                }
                break;
            }
        }

        let mut group_by_raw = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by_raw.push(self.colref_raw()?);
                if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }

        let mut order_by_raw = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                order_by_raw.push(self.colref_raw()?);
                if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
                // ASC/DESC markers are not part of the grammar.
            }
        }

        self.resolve(
            distinct,
            raw_select,
            from,
            raw_conjuncts,
            group_by_raw,
            order_by_raw,
            outer_tables,
        )
    }

    fn select_item(&mut self) -> Result<RawSelect, ParseError> {
        for (word, func) in [
            ("COUNT", AggFunc::Count),
            ("SUM", AggFunc::Sum),
            ("MIN", AggFunc::Min),
            ("MAX", AggFunc::Max),
        ] {
            if self.keyword(word)
                && self.tokens.get(self.pos + 1).map(|s| &s.token) == Some(&Token::LParen)
            {
                self.pos += 2;
                let arg = if self.peek() == Some(&Token::Star) {
                    if func != AggFunc::Count {
                        return Err(self.syntax("`*` argument is only valid for COUNT"));
                    }
                    self.pos += 1;
                    None
                } else {
                    Some(self.colref_raw()?)
                };
                self.expect_token(Token::RParen, "closing `)`")?;
                return Ok(RawSelect::Aggregate { func, arg });
            }
        }
        if self.keyword("AVG") {
            return Err(ParseError::Unsupported {
                construct: "AVG aggregate".into(),
            });
        }
        if self.peek() == Some(&Token::Star) {
            return Err(ParseError::Unsupported {
                construct: "SELECT * projection".into(),
            });
        }
        Ok(RawSelect::Column(self.colref_raw()?))
    }

    fn colref_raw(&mut self) -> Result<RawRef, ParseError> {
        let first = self.ident()?;
        if self.peek() == Some(&Token::Dot) {
            self.pos += 1;
            let second = self.ident()?;
            Ok(RawRef::Qualified(first, second))
        } else {
            Ok(RawRef::Bare(first))
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek() {
            Some(Token::Int(i)) => {
                let lit = Literal::Int(*i);
                self.pos += 1;
                Ok(lit)
            }
            Some(Token::Str(s)) => {
                let symbol = parse_symbol(s).ok_or_else(|| ParseError::Validation {
                    message: format!(
                        "string literal '{s}' must use the `v<index>` symbol form"
                    ),
                })?;
                self.pos += 1;
                Ok(Literal::Symbol(symbol))
            }
            _ => Err(self.syntax("expected literal")),
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Some(Token::Int(_)) | Some(Token::Str(_)) => Ok(Operand::Lit(self.literal()?)),
            Some(Token::Ident(_)) => Ok(Operand::Col(self.colref_raw()?)),
            _ => Err(self.syntax("expected column reference or literal")),
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp, ParseError> {
        let op = match self.peek() {
            Some(Token::Eq) => CmpOp::Eq,
            Some(Token::Lt) => CmpOp::Lt,
            Some(Token::Le) => CmpOp::Le,
            Some(Token::Gt) => CmpOp::Gt,
            Some(Token::Ge) => CmpOp::Ge,
            _ => return Err(self.syntax("expected comparison operator")),
        };
        self.pos += 1;
        Ok(op)
    }

    fn conjunct(
        &mut self,
        from: &[String],
        outer_tables: &[String],
        depth: u32,
    ) -> Result<RawConjunct, ParseError> {
        let left = self.operand()?;
        if self.keyword("IN") {
            let col = match left {
                Operand::Col(c) => c,
                Operand::Lit(_) => {
                    return Err(self.syntax("IN requires a column on the left"));
                }
            };
            self.pos += 1;
            self.expect_token(Token::LParen, "`(` after IN")?;
            if self.keyword("SELECT") {
                if depth >= 1 {
                    return Err(ParseError::Unsupported {
                        construct: "nested subquery (only one level supported)".into(),
                    });
                }
                let mut scope: Vec<String> = outer_tables.to_vec();
                scope.extend(from.iter().cloned());
                let sub = self.query(&scope, depth + 1)?;
                self.expect_token(Token::RParen, "closing `)` after subquery")?;
                return Ok(RawConjunct::InSubquery { col, sub });
            }
            let mut values = vec![self.literal()?];
            while self.peek() == Some(&Token::Comma) {
                self.pos += 1;
                values.push(self.literal()?);
            }
            self.expect_token(Token::RParen, "closing `)` after IN list")?;
            return Ok(RawConjunct::InList { col, values });
        }

        let op = self.cmp_op()?;
        let right = self.operand()?;
        Ok(match (left, right) {
            (Operand::Col(c), Operand::Lit(v)) => RawConjunct::Compare { col: c, op, value: v },
            (Operand::Lit(v), Operand::Col(c)) => RawConjunct::Compare {
                col: c,
                op: flip(op),
                value: v,
            },
            (Operand::Col(a), Operand::Col(b)) => RawConjunct::ColCol { left: a, op, right: b },
            (Operand::Lit(a), Operand::Lit(b)) => RawConjunct::Const { left: a, op, right: b },
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn resolve(
        &self,
        distinct: bool,
        raw_select: Vec<RawSelect>,
        from: Vec<String>,
        raw_conjuncts: Vec<RawConjunct>,
        group_by_raw: Vec<RawRef>,
        order_by_raw: Vec<RawRef>,
        outer_tables: &[String],
    ) -> Result<QueryAst, ParseError> {
        let scope = Scope {
            catalog: self.catalog,
            from: &from,
            outer_tables,
        };
        for table in &from {
            if self.catalog.table(table).is_none() {
                return Err(ParseError::UnknownTable { name: table.clone() });
            }
        }
        {
            let mut seen = std::collections::BTreeSet::new();
            for table in &from {
                if !seen.insert(table.as_str()) {
                    return Err(ParseError::Unsupported {
                        construct: format!("self-join on table `{table}`"),
                    });
                }
            }
        }

        let mut select = Vec::new();
        let mut has_aggregate = false;
        for item in raw_select {
            select.push(match item {
                RawSelect::Column(raw) => SelectItem::Column(scope.resolve_col(&raw)?),
                RawSelect::Aggregate { func, arg } => {
                    has_aggregate = true;
                    let arg = match arg {
                        Some(raw) => {
                            let col = scope.resolve_col(&raw)?;
                            if func == AggFunc::Sum
                                && scope.column_type(&col) != ColumnType::Int
                            {
                                return Err(ParseError::Validation {
                                    message: format!("SUM requires an integer column, got {col}"),
                                });
                            }
                            Some(col)
                        }
                        None => None,
                    };
                    SelectItem::Aggregate { func, arg }
                }
            });
        }

        let mut joins = Vec::new();
        let mut predicates = Vec::new();
        for conjunct in raw_conjuncts {
            match conjunct {
                RawConjunct::Compare { col, op, value } => {
                    let col = scope.resolve_col(&col)?;
                    scope.check_literal(&col, &value, op)?;
                    predicates.push(Predicate::Compare { col, op, value });
                }
                RawConjunct::InList { col, values } => {
                    let col = scope.resolve_col(&col)?;
                    for v in &values {
                        scope.check_literal(&col, v, CmpOp::Eq)?;
                    }
                    predicates.push(Predicate::InList { col, values });
                }
                RawConjunct::InSubquery { col, sub } => {
                    let col = scope.resolve_col(&col)?;
                    validate_subquery(&sub)?;
                    predicates.push(Predicate::InSubquery {
                        col,
                        subquery: Box::new(sub),
                    });
                }
                RawConjunct::ColCol { left, op, right } => {
                    let left = scope.resolve_col(&left)?;
                    let right = scope.resolve_col(&right)?;
                    if op != CmpOp::Eq {
                        return Err(ParseError::Unsupported {
                            construct: "non-equality column-to-column comparison".into(),
                        });
                    }
                    if left.table == right.table {
                        return Err(ParseError::Unsupported {
                            construct: "column comparison within one table".into(),
                        });
                    }
                    joins.push(JoinPred { left, right });
                }
                RawConjunct::Const { left, op, right } => {
                    predicates.push(Predicate::ConstCompare { left, op, right });
                }
            }
        }

        let group_by: Vec<ColRef> = group_by_raw
            .iter()
            .map(|raw| scope.resolve_col(raw))
            .collect::<Result<_, _>>()?;
        let order_by: Vec<ColRef> = order_by_raw
            .iter()
            .map(|raw| scope.resolve_col(raw))
            .collect::<Result<_, _>>()?;

        // Standard projection rules: with GROUP BY, plain select columns
        // must be grouping keys; with aggregates and no GROUP BY, the select
        // list must be all-aggregate.
        if !group_by.is_empty() {
            for item in &select {
                if let SelectItem::Column(c) = item {
                    if !group_by.contains(c) {
                        return Err(ParseError::Validation {
                            message: format!("column {c} must appear in GROUP BY"),
                        });
                    }
                }
            }
        } else if has_aggregate {
            if select.iter().any(|s| matches!(s, SelectItem::Column(_))) {
                return Err(ParseError::Validation {
                    message: "mixing aggregates and plain columns requires GROUP BY".into(),
                });
            }
        }

        Ok(QueryAst {
            distinct,
            select,
            from,
            joins,
            predicates,
            group_by,
            order_by,
        })
    }
}

fn validate_subquery(sub: &QueryAst) -> Result<(), ParseError> {
    if sub.select.len() != 1 || !matches!(sub.select[0], SelectItem::Column(_)) {
        return Err(ParseError::Unsupported {
            construct: "IN-subquery must select exactly one plain column".into(),
        });
    }
    if sub.from.len() != 1 {
        return Err(ParseError::Unsupported {
            construct: "IN-subquery over multiple tables".into(),
        });
    }
    if !sub.group_by.is_empty() {
        return Err(ParseError::Unsupported {
            construct: "GROUP BY inside IN-subquery".into(),
        });
    }
    if sub.predicates.iter().any(|p| matches!(p, Predicate::InSubquery { .. })) {
        return Err(ParseError::Unsupported {
            construct: "nested subquery (only one level supported)".into(),
        });
    }
    Ok(())
}

fn flip(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Eq => CmpOp::Eq,
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
    }
}

pub(super) fn parse_symbol(s: &str) -> Option<u32> {
    let rest = s.strip_prefix('v')?;
    rest.parse::<u32>().ok()
}

struct Scope<'a> {
    catalog: &'a Catalog,
    from: &'a [String],
    outer_tables: &'a [String],
}

impl Scope<'_> {
    fn resolve_col(&self, raw: &RawRef) -> Result<ColRef, ParseError> {
        match raw {
            RawRef::Qualified(table, column) => {
                if !self.from.iter().any(|t| t == table) {
                    if self.outer_tables.iter().any(|t| t == table) {
                        return Err(ParseError::Unsupported {
                            construct: format!(
                                "correlated reference to outer table `{table}`"
                            ),
                        });
                    }
                    return Err(ParseError::UnknownTable { name: table.clone() });
                }
                let schema = self
                    .catalog
                    .table(table)
                    .ok_or_else(|| ParseError::UnknownTable { name: table.clone() })?;
                if schema.column(column).is_none() {
                    return Err(ParseError::UnknownColumn {
                        name: format!("{table}.{column}"),
                    });
                }
                Ok(ColRef::new(table.clone(), column.clone()))
            }
            RawRef::Bare(column) => {
                let mut owners = Vec::new();
                for table in self.from {
                    if let Some(schema) = self.catalog.table(table) {
                        if schema.column(column).is_some() {
                            owners.push(table.clone());
                        }
                    }
                }
                match owners.len() {
                    0 => Err(ParseError::UnknownColumn { name: column.clone() }),
                    1 => Ok(ColRef::new(owners.pop().unwrap(), column.clone())),
                    _ => Err(ParseError::AmbiguousColumn { name: column.clone() }),
                }
            }
        }
    }

    fn column_type(&self, col: &ColRef) -> ColumnType {
        self.catalog
            .table(&col.table)
            .and_then(|t| t.column(&col.column))
            .map(|c| c.column_type)
            .expect("resolved column exists")
    }

    fn check_literal(&self, col: &ColRef, lit: &Literal, op: CmpOp) -> Result<(), ParseError> {
        let col_type = self.column_type(col);
        match (col_type, lit) {
            (ColumnType::Int, Literal::Int(_)) => Ok(()),
            (ColumnType::Cat, Literal::Symbol(_)) => {
                if op.is_range() {
                    Err(ParseError::Unsupported {
                        construct: "range predicate on categorical column".into(),
                    })
                } else {
                    Ok(())
                }
            }
            _ => Err(ParseError::Validation {
                message: format!("literal {lit} does not match the type of column {col}"),
            }),
        }
    }
}
