//! Renders a parse tree back to SQL text, either verbatim or as a skeleton
//! with every identifier and literal masked by `_`.

use super::ast::*;
use super::parser::is_reserved;

pub(crate) const PLACEHOLDER: &str = "_";

pub(crate) struct Renderer {
    mask: bool,
    out: String,
}

impl Renderer {
    pub fn sql(query: &Query) -> String {
        let mut r = Renderer {
            mask: false,
            out: String::new(),
        };
        r.query(query);
        r.out
    }

    pub fn skeleton(query: &Query) -> String {
        let mut r = Renderer {
            mask: true,
            out: String::new(),
        };
        r.query(query);
        r.out
    }

    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn ident(&mut self, name: &str) {
        if self.mask {
            self.push(PLACEHOLDER);
            return;
        }
        let simple = name
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
            && name
                .chars()
                .all(|c| c.is_alphanumeric() || c == '_' || c == '$')
            && !is_reserved(name);
        if simple {
            self.push(name);
        } else {
            self.push(&format!("`{}`", name.replace('`', "``")));
        }
    }

    fn alias(&mut self, alias: &Option<Alias>) {
        if let Some(alias) = alias {
            if alias.explicit {
                self.push(" AS ");
            } else if self.mask {
                return;
            } else {
                self.push(" ");
            }
            self.ident(&alias.name);
        }
    }

    fn query(&mut self, q: &Query) {
        self.set_expr(&q.body);
        if !q.order_by.is_empty() {
            self.push(" ORDER BY ");
            for (i, item) in q.order_by.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.expr(&item.expr);
                match item.direction {
                    Some(SortDirection::Asc) => self.push(" ASC"),
                    Some(SortDirection::Desc) => self.push(" DESC"),
                    None => {}
                }
            }
        }
        if let Some(limit) = &q.limit {
            self.push(" LIMIT ");
            self.expr(&limit.count);
            if let Some(offset) = &limit.offset {
                self.push(" OFFSET ");
                self.expr(offset);
            }
        }
    }

    fn set_expr(&mut self, s: &SetExpr) {
        match s {
            SetExpr::Select(select) => self.select(select),
            SetExpr::SetOp {
                op,
                all,
                left,
                right,
            } => {
                self.set_expr(left);
                self.push(match op {
                    SetOperator::Union => " UNION ",
                    SetOperator::Intersect => " INTERSECT ",
                    SetOperator::Except => " EXCEPT ",
                });
                if *all {
                    self.push("ALL ");
                }
                self.set_expr(right);
            }
            SetExpr::Nested(q) => {
                self.push("(");
                self.query(q);
                self.push(")");
            }
        }
    }

    fn select(&mut self, s: &Select) {
        self.push("SELECT ");
        if s.distinct {
            self.push("DISTINCT ");
        }
        for (i, item) in s.projection.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            match item {
                SelectItem::Wildcard => self.push("*"),
                SelectItem::QualifiedWildcard(t) => {
                    if !self.mask {
                        self.ident(t);
                        self.push(".");
                    }
                    self.push("*");
                }
                SelectItem::Expr { expr, alias } => {
                    self.expr(expr);
                    self.alias(alias);
                }
            }
        }
        if let Some(from) = &s.from {
            self.push(" FROM ");
            self.table_factor(&from.first);
            for join in &from.joins {
                self.push(match join.kind {
                    JoinKind::Comma => ", ",
                    JoinKind::Plain => " JOIN ",
                    JoinKind::Inner => " INNER JOIN ",
                    JoinKind::Left => " LEFT JOIN ",
                    JoinKind::LeftOuter => " LEFT OUTER JOIN ",
                    JoinKind::Cross => " CROSS JOIN ",
                    JoinKind::Natural => " NATURAL JOIN ",
                });
                self.table_factor(&join.factor);
                match &join.constraint {
                    JoinConstraint::None => {}
                    JoinConstraint::On(e) => {
                        self.push(" ON ");
                        self.expr(e);
                    }
                    JoinConstraint::Using(cols) => {
                        self.push(" USING (");
                        for (i, c) in cols.iter().enumerate() {
                            if i > 0 {
                                self.push(", ");
                            }
                            self.ident(c);
                        }
                        self.push(")");
                    }
                }
            }
        }
        if let Some(e) = &s.selection {
            self.push(" WHERE ");
            self.expr(e);
        }
        if !s.group_by.is_empty() {
            self.push(" GROUP BY ");
            self.expr_list(&s.group_by);
        }
        if let Some(e) = &s.having {
            self.push(" HAVING ");
            self.expr(e);
        }
    }

    fn table_factor(&mut self, f: &TableFactor) {
        match f {
            TableFactor::Table { name, alias } => {
                self.ident(name);
                self.alias(alias);
            }
            TableFactor::Derived { subquery, alias } => {
                self.push("(");
                self.query(subquery);
                self.push(")");
                self.alias(alias);
            }
        }
    }

    fn expr_list(&mut self, list: &[Expr]) {
        for (i, e) in list.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.expr(e);
        }
    }

    fn not(&mut self, negated: bool) {
        if negated {
            self.push(" NOT");
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Column { table, name } => {
                if self.mask {
                    self.push(PLACEHOLDER);
                } else {
                    if let Some(t) = table {
                        self.ident(t);
                        self.push(".");
                    }
                    self.ident(name);
                }
            }
            Expr::Literal(lit) => {
                if self.mask {
                    self.push(PLACEHOLDER);
                } else {
                    match lit {
                        Literal::Number(n) => self.push(n),
                        Literal::String(s) => self.push(&format!("'{}'", s.replace('\'', "''"))),
                        Literal::Null => self.push("NULL"),
                    }
                }
            }
            Expr::Unary { op, expr } => {
                match op {
                    UnaryOp::Not => self.push("NOT "),
                    // `--` would start a comment
                    UnaryOp::Minus if matches!(**expr, Expr::Unary { .. }) => self.push("- "),
                    UnaryOp::Minus => self.push("-"),
                    UnaryOp::Plus => self.push("+"),
                }
                self.expr(expr);
            }
            Expr::Binary { op, left, right } => {
                self.expr(left);
                self.push(" ");
                self.push(op.symbol());
                self.push(" ");
                self.expr(right);
            }
            Expr::Is {
                negated,
                left,
                right,
            } => {
                self.expr(left);
                self.push(" IS");
                self.not(*negated);
                self.push(" ");
                self.expr(right);
            }
            Expr::Like {
                negated,
                expr,
                pattern,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(" LIKE ");
                self.expr(pattern);
            }
            Expr::Between {
                negated,
                expr,
                low,
                high,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(" BETWEEN ");
                self.expr(low);
                self.push(" AND ");
                self.expr(high);
            }
            Expr::InList {
                negated,
                expr,
                list,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(" IN (");
                self.expr_list(list);
                self.push(")");
            }
            Expr::InSubquery {
                negated,
                expr,
                subquery,
            } => {
                self.expr(expr);
                self.not(*negated);
                self.push(" IN (");
                self.query(subquery);
                self.push(")");
            }
            Expr::Exists { negated, subquery } => {
                if *negated {
                    self.push("NOT ");
                }
                self.push("EXISTS (");
                self.query(subquery);
                self.push(")");
            }
            Expr::Subquery(q) => {
                self.push("(");
                self.query(q);
                self.push(")");
            }
            Expr::Function { name, args } => {
                if self.mask {
                    self.push(&name.to_ascii_uppercase());
                } else {
                    self.push(name);
                }
                self.push("(");
                match args {
                    FunctionArgs::Star => self.push("*"),
                    FunctionArgs::List { distinct, args } => {
                        if *distinct {
                            self.push("DISTINCT ");
                        }
                        self.expr_list(args);
                    }
                }
                self.push(")");
            }
            Expr::Cast { expr, type_name } => {
                self.push("CAST(");
                self.expr(expr);
                self.push(" AS ");
                self.push(&type_name.to_ascii_uppercase());
                self.push(")");
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                self.push("CASE");
                if let Some(op) = operand {
                    self.push(" ");
                    self.expr(op);
                }
                for (cond, result) in branches {
                    self.push(" WHEN ");
                    self.expr(cond);
                    self.push(" THEN ");
                    self.expr(result);
                }
                if let Some(e) = else_result {
                    self.push(" ELSE ");
                    self.expr(e);
                }
                self.push(" END");
            }
            Expr::Nested(inner) => {
                self.push("(");
                self.expr(inner);
                self.push(")");
            }
            Expr::Tuple(items) => {
                self.push("(");
                self.expr_list(items);
                self.push(")");
            }
        }
    }
}
