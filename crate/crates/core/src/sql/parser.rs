//! Recursive-descent parser for the Spider SQL subset: compound selects,
//! joins, nested subqueries, aggregates, `IN`/`LIKE`/`BETWEEN`/`EXISTS`.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

const RESERVED: &[&str] = &[
    "SELECT",
    "FROM",
    "WHERE",
    "GROUP",
    "BY",
    "HAVING",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "ALL",
    "DISTINCT",
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "OUTER",
    "CROSS",
    "NATURAL",
    "ON",
    "USING",
    "AS",
    "AND",
    "OR",
    "NOT",
    "IN",
    "LIKE",
    "BETWEEN",
    "IS",
    "NULL",
    "EXISTS",
    "CASE",
    "WHEN",
    "THEN",
    "ELSE",
    "END",
    "ASC",
    "DESC",
    "CAST",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

/// Parses one SQL query; a single trailing semicolon is allowed.
pub fn parse_sql(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    if parser.peek_kind() == &TokenKind::Eof {
        return Err(parser.error("a SQL query"));
    }
    let query = parser.parse_query()?;
    parser.eat_punct(&TokenKind::Semicolon);
    if parser.peek_kind() != &TokenKind::Eof {
        return Err(parser.error("end of statement"));
    }
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_nth_kind(&self, n: usize) -> &TokenKind {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        ParseError::new(tok.offset, expected, tok.describe())
    }

    fn word_is(kind: &TokenKind, kw: &str) -> bool {
        matches!(kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn peek_word(&self, kw: &str) -> bool {
        Self::word_is(self.peek_kind(), kw)
    }

    fn peek_nth_word(&self, n: usize, kw: &str) -> bool {
        Self::word_is(self.peek_nth_kind(n), kw)
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek_word(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn eat_punct(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, kind: &TokenKind) -> Result<(), ParseError> {
        if self.eat_punct(kind) {
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", super::lexer::punct_text(kind))))
        }
    }

    fn parse_identifier(&mut self) -> Result<String, ParseError> {
        match self.peek_kind().clone() {
            TokenKind::Word(w) if !is_reserved(&w) => {
                self.advance();
                Ok(w)
            }
            TokenKind::QuotedIdent(w) => {
                self.advance();
                Ok(w)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn starts_query(&self) -> bool {
        self.peek_word("SELECT")
            || (self.peek_kind() == &TokenKind::LParen && self.paren_starts_query(0))
    }

    /// Whether the `(` at lookahead `n` opens a query (possibly after more parens).
    fn paren_starts_query(&self, mut n: usize) -> bool {
        while self.peek_nth_kind(n) == &TokenKind::LParen {
            n += 1;
        }
        self.peek_nth_word(n, "SELECT")
    }

    fn parse_query(&mut self) -> Result<Query, ParseError> {
        let body = self.parse_set_expr()?;
        let mut order_by = Vec::new();
        if self.peek_word("ORDER") {
            self.advance();
            self.expect_word("BY")?;
            order_by = self.parse_comma_list(Self::parse_order_item)?;
        }
        let limit = if self.eat_word("LIMIT") {
            let count = self.parse_expr()?;
            let offset = if self.eat_word("OFFSET") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            Some(Limit { count, offset })
        } else {
            None
        };
        Ok(Query {
            body,
            order_by,
            limit,
        })
    }

    fn parse_set_expr(&mut self) -> Result<SetExpr, ParseError> {
        let mut left = self.parse_set_operand()?;
        loop {
            let op = if self.peek_word("UNION") {
                SetOperator::Union
            } else if self.peek_word("INTERSECT") {
                SetOperator::Intersect
            } else if self.peek_word("EXCEPT") {
                SetOperator::Except
            } else {
                break;
            };
            self.advance();
            let all = self.eat_word("ALL");
            let right = self.parse_set_operand()?;
            left = SetExpr::SetOp {
                op,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_set_operand(&mut self) -> Result<SetExpr, ParseError> {
        if self.peek_kind() == &TokenKind::LParen && self.paren_starts_query(0) {
            self.advance();
            let q = self.parse_query()?;
            self.expect_punct(&TokenKind::RParen)?;
            return Ok(SetExpr::Nested(Box::new(q)));
        }
        if !self.peek_word("SELECT") {
            return Err(self.error("`SELECT`"));
        }
        Ok(SetExpr::Select(Box::new(self.parse_select()?)))
    }

    fn parse_select(&mut self) -> Result<Select, ParseError> {
        self.expect_word("SELECT")?;
        let distinct = if self.eat_word("DISTINCT") {
            true
        } else {
            self.eat_word("ALL");
            false
        };
        let projection = self.parse_comma_list(Self::parse_select_item)?;
        let from = if self.eat_word("FROM") {
            Some(self.parse_from()?)
        } else {
            None
        };
        let selection = if self.eat_word("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.peek_word("GROUP") {
            self.advance();
            self.expect_word("BY")?;
            group_by = self.parse_comma_list(Self::parse_expr)?;
        }
        let having = if self.eat_word("HAVING") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
    }

    fn parse_comma_list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut items = vec![item(self)?];
        while self.eat_punct(&TokenKind::Comma) {
            items.push(item(self)?);
        }
        Ok(items)
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.eat_punct(&TokenKind::Star) {
            return Ok(SelectItem::Wildcard);
        }
        let is_ident = matches!(self.peek_kind(), TokenKind::Word(w) if !is_reserved(w))
            || matches!(self.peek_kind(), TokenKind::QuotedIdent(_));
        if is_ident
            && self.peek_nth_kind(1) == &TokenKind::Dot
            && self.peek_nth_kind(2) == &TokenKind::Star
        {
            let table = self.parse_identifier()?;
            self.advance();
            self.advance();
            return Ok(SelectItem::QualifiedWildcard(table));
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_optional_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_optional_alias(&mut self) -> Result<Option<Alias>, ParseError> {
        if self.eat_word("AS") {
            let name = match self.peek_kind().clone() {
                TokenKind::Str(s) => {
                    self.advance();
                    s
                }
                _ => self.parse_identifier()?,
            };
            return Ok(Some(Alias {
                name,
                explicit: true,
            }));
        }
        match self.peek_kind().clone() {
            TokenKind::Word(w) if !is_reserved(&w) => {
                self.advance();
                Ok(Some(Alias {
                    name: w,
                    explicit: false,
                }))
            }
            TokenKind::QuotedIdent(w) => {
                self.advance();
                Ok(Some(Alias {
                    name: w,
                    explicit: false,
                }))
            }
            _ => Ok(None),
        }
    }

    fn parse_from(&mut self) -> Result<FromClause, ParseError> {
        let first = self.parse_table_factor()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_punct(&TokenKind::Comma) {
                JoinKind::Comma
            } else if self.peek_word("JOIN") {
                self.advance();
                JoinKind::Plain
            } else if self.peek_word("INNER") {
                self.advance();
                self.expect_word("JOIN")?;
                JoinKind::Inner
            } else if self.peek_word("CROSS") {
                self.advance();
                self.expect_word("JOIN")?;
                JoinKind::Cross
            } else if self.peek_word("NATURAL") {
                self.advance();
                self.expect_word("JOIN")?;
                JoinKind::Natural
            } else if self.peek_word("LEFT") {
                self.advance();
                let outer = self.eat_word("OUTER");
                self.expect_word("JOIN")?;
                if outer {
                    JoinKind::LeftOuter
                } else {
                    JoinKind::Left
                }
            } else {
                break;
            };
            let factor = self.parse_table_factor()?;
            let constraint = if kind == JoinKind::Comma {
                JoinConstraint::None
            } else if self.eat_word("ON") {
                JoinConstraint::On(self.parse_expr()?)
            } else if self.eat_word("USING") {
                self.expect_punct(&TokenKind::LParen)?;
                let cols = self.parse_comma_list(Self::parse_identifier)?;
                self.expect_punct(&TokenKind::RParen)?;
                JoinConstraint::Using(cols)
            } else {
                JoinConstraint::None
            };
            joins.push(Join {
                kind,
                factor,
                constraint,
            });
        }
        Ok(FromClause { first, joins })
    }

    fn parse_table_factor(&mut self) -> Result<TableFactor, ParseError> {
        if self.peek_kind() == &TokenKind::LParen && self.paren_starts_query(0) {
            self.advance();
            let subquery = self.parse_query()?;
            self.expect_punct(&TokenKind::RParen)?;
            let alias = self.parse_optional_alias()?;
            return Ok(TableFactor::Derived {
                subquery: Box::new(subquery),
                alias,
            });
        }
        let name = self
            .parse_identifier()
            .map_err(|_| self.error("a table name"))?;
        let alias = self.parse_optional_alias()?;
        Ok(TableFactor::Table { name, alias })
    }

    fn parse_order_item(&mut self) -> Result<OrderItem, ParseError> {
        let expr = self.parse_expr()?;
        let direction = if self.eat_word("ASC") {
            Some(SortDirection::Asc)
        } else if self.eat_word("DESC") {
            Some(SortDirection::Desc)
        } else {
            None
        };
        Ok(OrderItem { expr, direction })
    }

    pub(crate) fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_and()?;
        while self.eat_word("OR") {
            let right = self.parse_and()?;
            left = binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_not()?;
        while self.eat_word("AND") {
            let right = self.parse_not()?;
            left = binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, ParseError> {
        if self.peek_word("NOT") {
            self.advance();
            if self.peek_word("EXISTS") {
                self.advance();
                let subquery = self.parse_parenthesized_query()?;
                return Ok(Expr::Exists {
                    negated: true,
                    subquery: Box::new(subquery),
                });
            }
            let expr = self.parse_not()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(expr),
            });
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_additive()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Eq => Some(BinaryOp::Eq),
                TokenKind::NotEq => Some(BinaryOp::NotEq),
                TokenKind::Lt => Some(BinaryOp::Lt),
                TokenKind::LtEq => Some(BinaryOp::LtEq),
                TokenKind::Gt => Some(BinaryOp::Gt),
                TokenKind::GtEq => Some(BinaryOp::GtEq),
                _ => None,
            };
            if let Some(op) = op {
                self.advance();
                let right = self.parse_additive()?;
                left = binary(op, left, right);
                continue;
            }
            if self.eat_word("IS") {
                let negated = self.eat_word("NOT");
                let right = self.parse_additive()?;
                left = Expr::Is {
                    negated,
                    left: Box::new(left),
                    right: Box::new(right),
                };
                continue;
            }
            let negated = self.peek_word("NOT")
                && (self.peek_nth_word(1, "IN")
                    || self.peek_nth_word(1, "LIKE")
                    || self.peek_nth_word(1, "BETWEEN"));
            if negated {
                self.advance();
            }
            if self.eat_word("IN") {
                self.expect_punct(&TokenKind::LParen)?;
                if self.starts_query() {
                    let subquery = self.parse_query()?;
                    self.expect_punct(&TokenKind::RParen)?;
                    left = Expr::InSubquery {
                        negated,
                        expr: Box::new(left),
                        subquery: Box::new(subquery),
                    };
                } else {
                    let list = if self.peek_kind() == &TokenKind::RParen {
                        Vec::new()
                    } else {
                        self.parse_comma_list(Self::parse_expr)?
                    };
                    self.expect_punct(&TokenKind::RParen)?;
                    left = Expr::InList {
                        negated,
                        expr: Box::new(left),
                        list,
                    };
                }
                continue;
            }
            if self.eat_word("LIKE") {
                let pattern = self.parse_additive()?;
                left = Expr::Like {
                    negated,
                    expr: Box::new(left),
                    pattern: Box::new(pattern),
                };
                continue;
            }
            if self.eat_word("BETWEEN") {
                let low = self.parse_additive()?;
                self.expect_word("AND")?;
                let high = self.parse_additive()?;
                left = Expr::Between {
                    negated,
                    expr: Box::new(left),
                    low: Box::new(low),
                    high: Box::new(high),
                };
                continue;
            }
            break;
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus => BinaryOp::Plus,
                TokenKind::Minus => BinaryOp::Minus,
                _ => break,
            };
            self.advance();
            let right = self.parse_multiplicative()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_concat()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Star => BinaryOp::Multiply,
                TokenKind::Slash => BinaryOp::Divide,
                TokenKind::Percent => BinaryOp::Modulo,
                _ => break,
            };
            self.advance();
            let right = self.parse_concat()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_concat(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_unary()?;
        while self.eat_punct(&TokenKind::Concat) {
            let right = self.parse_unary()?;
            left = binary(BinaryOp::Concat, left, right);
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek_kind() {
            TokenKind::Minus => UnaryOp::Minus,
            TokenKind::Plus => UnaryOp::Plus,
            _ => return self.parse_primary(),
        };
        self.advance();
        let expr = self.parse_unary()?;
        Ok(Expr::Unary {
            op,
            expr: Box::new(expr),
        })
    }

    fn parse_parenthesized_query(&mut self) -> Result<Query, ParseError> {
        self.expect_punct(&TokenKind::LParen)?;
        let q = self.parse_query()?;
        self.expect_punct(&TokenKind::RParen)?;
        Ok(q)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_kind().clone() {
            TokenKind::Number(n) => {
                self.advance();
                Ok(Expr::Literal(Literal::Number(n)))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::LParen => {
                if self.starts_query() {
                    let q = self.parse_parenthesized_query()?;
                    return Ok(Expr::Subquery(Box::new(q)));
                }
                self.advance();
                let mut items = self.parse_comma_list(Self::parse_expr)?;
                self.expect_punct(&TokenKind::RParen)?;
                if items.len() == 1 {
                    Ok(Expr::Nested(Box::new(items.pop().expect("one item"))))
                } else {
                    Ok(Expr::Tuple(items))
                }
            }
            TokenKind::QuotedIdent(_) => self.parse_column_ref(),
            TokenKind::Word(w) => {
                let upper = w.to_ascii_uppercase();
                match upper.as_str() {
                    "NULL" => {
                        self.advance();
                        Ok(Expr::Literal(Literal::Null))
                    }
                    "EXISTS" => {
                        self.advance();
                        let subquery = self.parse_parenthesized_query()?;
                        Ok(Expr::Exists {
                            negated: false,
                            subquery: Box::new(subquery),
                        })
                    }
                    "CASE" => self.parse_case(),
                    "CAST" => {
                        self.advance();
                        self.expect_punct(&TokenKind::LParen)?;
                        let expr = self.parse_expr()?;
                        self.expect_word("AS")?;
                        let type_name = self.parse_identifier()?;
                        self.expect_punct(&TokenKind::RParen)?;
                        Ok(Expr::Cast {
                            expr: Box::new(expr),
                            type_name,
                        })
                    }
                    _ if is_reserved(&w) => Err(self.error("an expression")),
                    _ if self.peek_nth_kind(1) == &TokenKind::LParen => self.parse_function(w),
                    _ => self.parse_column_ref(),
                }
            }
            _ => Err(self.error("an expression")),
        }
    }

    fn parse_function(&mut self, name: String) -> Result<Expr, ParseError> {
        self.advance();
        self.expect_punct(&TokenKind::LParen)?;
        let args = if self.eat_punct(&TokenKind::Star) {
            FunctionArgs::Star
        } else if self.peek_kind() == &TokenKind::RParen {
            FunctionArgs::List {
                distinct: false,
                args: Vec::new(),
            }
        } else {
            let distinct = self.eat_word("DISTINCT");
            FunctionArgs::List {
                distinct,
                args: self.parse_comma_list(Self::parse_expr)?,
            }
        };
        self.expect_punct(&TokenKind::RParen)?;
        Ok(Expr::Function { name, args })
    }

    fn parse_column_ref(&mut self) -> Result<Expr, ParseError> {
        let first = self.parse_identifier()?;
        if self.peek_kind() == &TokenKind::Dot {
            self.advance();
            let name = self.parse_identifier()?;
            return Ok(Expr::Column {
                table: Some(first),
                name,
            });
        }
        Ok(Expr::Column {
            table: None,
            name: first,
        })
    }

    fn parse_case(&mut self) -> Result<Expr, ParseError> {
        self.expect_word("CASE")?;
        let operand = if self.peek_word("WHEN") {
            None
        } else {
            Some(Box::new(self.parse_expr()?))
        };
        let mut branches = Vec::new();
        while self.eat_word("WHEN") {
            let cond = self.parse_expr()?;
            self.expect_word("THEN")?;
            let result = self.parse_expr()?;
            branches.push((cond, result));
        }
        if branches.is_empty() {
            return Err(self.error("`WHEN`"));
        }
        let else_result = if self.eat_word("ELSE") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        self.expect_word("END")?;
        Ok(Expr::Case {
            operand,
            branches,
            else_result,
        })
    }
}

fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
    Expr::Binary {
        op,
        left: Box::new(left),
        right: Box::new(right),
    }
}
