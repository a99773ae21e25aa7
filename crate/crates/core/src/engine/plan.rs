//! Logical plans and their textual form.
//!
//! ```text
//! plan     := scan(TABLE [as ALIAS])
//!           | filter(plan, expr)
//!           | project(plan, NAME <- operand {, NAME <- operand})
//!           | join(plan, plan [, expr])
//!           | distinct(plan, column {, column})
//! expr     := and_expr {or and_expr}
//! and_expr := unary {and unary}
//! unary    := not unary | ( expr ) | contains(operand, 'text')
//!           | operand (= | != | < | <= | > | >=) operand
//! operand  := column | 'text' | number | null
//! column   := NAME | QUALIFIER.NAME
//! ```
//!
//! Keywords are case-insensitive; `#` starts a comment running to the end of
//! the line; `''` inside a string is a literal quote.

use std::fmt;

use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, name: &str) -> Self {
        Self { qualifier: qualifier.map(str::to_string), name: name.to_string() }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(ColumnRef),
    Literal(Value),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Literal(v) => write_literal(f, v),
        }
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Null => f.write_str("null"),
        Value::Int(i) => write!(f, "{i}"),
        Value::Real(r) => write!(f, "{r:?}"),
        Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Compare(Operand, CmpOp, Operand),
    Contains(Operand, String),
}

impl Expr {
    /// Column references in evaluation order.
    pub fn columns(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a ColumnRef>) {
        match self {
            Expr::Or(a, b) | Expr::And(a, b) => {
                a.collect_columns(out);
                b.collect_columns(out);
            }
            Expr::Not(a) => a.collect_columns(out),
            Expr::Compare(l, _, r) => {
                for o in [l, r] {
                    if let Operand::Column(c) = o {
                        out.push(c);
                    }
                }
            }
            Expr::Contains(o, _) => {
                if let Operand::Column(c) = o {
                    out.push(c);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 0,
            Expr::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_child(&self, child: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(a, b) => {
                self.fmt_child(a, 0, f)?;
                f.write_str(" or ")?;
                self.fmt_child(b, 1, f)
            }
            Expr::And(a, b) => {
                self.fmt_child(a, 1, f)?;
                f.write_str(" and ")?;
                self.fmt_child(b, 2, f)
            }
            Expr::Not(a) => {
                f.write_str("not ")?;
                self.fmt_child(a, 2, f)
            }
            Expr::Compare(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            Expr::Contains(o, s) => {
                write!(f, "contains({o}, ")?;
                write_literal(f, &Value::Text(s.clone()))?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub name: String,
    pub source: Operand,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Scan { table: String, alias: Option<String> },
    Filter { input: Box<Plan>, predicate: Expr },
    Project { input: Box<Plan>, assignments: Vec<Assignment> },
    Join { left: Box<Plan>, right: Box<Plan>, predicate: Option<Expr> },
    Distinct { input: Box<Plan>, columns: Vec<ColumnRef> },
}

impl Plan {
    pub fn scan(table: &str) -> Plan {
        Plan::Scan { table: table.to_string(), alias: None }
    }

    /// Tables read by the plan, in scan order.
    pub fn tables(&self) -> Vec<&str> {
        match self {
            Plan::Scan { table, .. } => vec![table.as_str()],
            Plan::Filter { input, .. } | Plan::Project { input, .. } | Plan::Distinct { input, .. } => input.tables(),
            Plan::Join { left, right, .. } => {
                let mut t = left.tables();
                t.extend(right.tables());
                t
            }
        }
    }

    pub fn has_project(&self) -> bool {
        match self {
            Plan::Scan { .. } => false,
            Plan::Project { .. } => true,
            Plan::Filter { input, .. } | Plan::Distinct { input, .. } => input.has_project(),
            Plan::Join { left, right, .. } => left.has_project() || right.has_project(),
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth + 1);
        match self {
            Plan::Scan { table, alias } => {
                write!(f, "scan({table}")?;
                if let Some(a) = alias {
                    write!(f, " as {a}")?;
                }
                f.write_str(")")
            }
            Plan::Filter { input, predicate } => {
                write!(f, "filter(\n{pad}")?;
                input.fmt_indented(f, depth + 1)?;
                write!(f, ",\n{pad}{predicate})")
            }
            Plan::Project { input, assignments } => {
                write!(f, "project(\n{pad}")?;
                input.fmt_indented(f, depth + 1)?;
                for a in assignments {
                    write!(f, ",\n{pad}{} <- {}", a.name, a.source)?;
                }
                f.write_str(")")
            }
            Plan::Join { left, right, predicate } => {
                write!(f, "join(\n{pad}")?;
                left.fmt_indented(f, depth + 1)?;
                write!(f, ",\n{pad}")?;
                right.fmt_indented(f, depth + 1)?;
                if let Some(p) = predicate {
                    write!(f, ",\n{pad}{p}")?;
                }
                f.write_str(")")
            }
            Plan::Distinct { input, columns } => {
                write!(f, "distinct(\n{pad}")?;
                input.fmt_indented(f, depth + 1)?;
                for c in columns {
                    write!(f, ", {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("plan parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(Value),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Cmp(CmpOp),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`<-`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i);
            }
            continue;
        }
        let tok = match c {
            '(' => {
                advance(1, &mut i);
                Tok::LParen
            }
            ')' => {
                advance(1, &mut i);
                Tok::RParen
            }
            ',' => {
                advance(1, &mut i);
                Tok::Comma
            }
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                advance(1, &mut i);
                Tok::Dot
            }
            '=' => {
                advance(1, &mut i);
                Tok::Cmp(CmpOp::Eq)
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                advance(2, &mut i);
                Tok::Cmp(CmpOp::Ne)
            }
            '<' => match chars.get(i + 1) {
                Some('-') => {
                    advance(2, &mut i);
                    Tok::Arrow
                }
                Some('=') => {
                    advance(2, &mut i);
                    Tok::Cmp(CmpOp::Le)
                }
                Some('>') => {
                    advance(2, &mut i);
                    Tok::Cmp(CmpOp::Ne)
                }
                _ => {
                    advance(1, &mut i);
                    Tok::Cmp(CmpOp::Lt)
                }
            },
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    advance(2, &mut i);
                    Tok::Cmp(CmpOp::Ge)
                } else {
                    advance(1, &mut i);
                    Tok::Cmp(CmpOp::Gt)
                }
            }
            '\'' => {
                advance(1, &mut i);
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(err(start_line, start_col, "unterminated string".into())),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            advance(2, &mut i);
                        }
                        Some('\'') => {
                            advance(1, &mut i);
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            advance(1, &mut i);
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let start = i;
                advance(1, &mut i);
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || matches!(chars[i], 'e' | 'E')
                        || (matches!(chars[i], '+' | '-') && matches!(chars[i - 1], 'e' | 'E')))
                {
                    advance(1, &mut i);
                }
                let text: String = chars[start..i].iter().collect();
                match Value::parse_cell(&text) {
                    v @ (Value::Int(_) | Value::Real(_)) => Tok::Num(v),
                    _ => return Err(err(start_line, start_col, format!("bad number `{text}`"))),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    advance(1, &mut i);
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(start_line, start_col, format!("unexpected character `{other}`"))),
        };
        out.push(Lexed { tok, line: start_line, column: start_col });
    }
    out.push(Lexed { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, column: t.column, message: message.into() })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn plan(&mut self) -> Result<Plan, ParseError> {
        let op = self.ident("an operator")?;
        self.expect(Tok::LParen)?;
        let plan = match op.to_ascii_lowercase().as_str() {
            "scan" => {
                let table = self.ident("a table name")?;
                let alias = if self.is_keyword("as") {
                    self.next();
                    Some(self.ident("an alias")?)
                } else {
                    None
                };
                Plan::Scan { table, alias }
            }
            "filter" => {
                let input = Box::new(self.plan()?);
                self.expect(Tok::Comma)?;
                let predicate = self.expr()?;
                Plan::Filter { input, predicate }
            }
            "project" => {
                let input = Box::new(self.plan()?);
                let mut assignments = Vec::new();
                while *self.peek() == Tok::Comma {
                    self.next();
                    let name = self.ident("an output column name")?;
                    self.expect(Tok::Arrow)?;
                    let source = self.operand()?;
                    assignments.push(Assignment { name, source });
                }
                if assignments.is_empty() {
                    return self.error("project needs at least one assignment");
                }
                Plan::Project { input, assignments }
            }
            "join" => {
                let left = Box::new(self.plan()?);
                self.expect(Tok::Comma)?;
                let right = Box::new(self.plan()?);
                let predicate = if *self.peek() == Tok::Comma {
                    self.next();
                    Some(self.expr()?)
                } else {
                    None
                };
                Plan::Join { left, right, predicate }
            }
            "distinct" => {
                let input = Box::new(self.plan()?);
                let mut columns = Vec::new();
                while *self.peek() == Tok::Comma {
                    self.next();
                    columns.push(self.column()?);
                }
                if columns.is_empty() {
                    return self.error("distinct needs at least one column");
                }
                Plan::Distinct { input, columns }
            }
            other => {
                self.pos -= 2;
                return self.error(format!("unknown operator `{other}`"));
            }
        };
        self.expect(Tok::RParen)?;
        Ok(plan)
    }

    fn column(&mut self) -> Result<ColumnRef, ParseError> {
        let first = self.ident("a column")?;
        if *self.peek() == Tok::Dot {
            self.next();
            let name = self.ident("a column name")?;
            Ok(ColumnRef { qualifier: Some(first), name })
        } else {
            Ok(ColumnRef { qualifier: None, name: first })
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(Operand::Literal(Value::Text(s)))
            }
            Tok::Num(v) => {
                self.next();
                Ok(Operand::Literal(v))
            }
            Tok::Ident(s) if s.eq_ignore_ascii_case("null") => {
                self.next();
                Ok(Operand::Literal(Value::Null))
            }
            Tok::Ident(_) => Ok(Operand::Column(self.column()?)),
            other => self.error(format!("expected a column or literal, found {other}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.and_expr()?;
        while self.is_keyword("or") {
            self.next();
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        while self.is_keyword("and") {
            self.next();
            e = Expr::And(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_keyword("not") {
            self.next();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if *self.peek() == Tok::LParen {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        if self.is_keyword("contains") && *self.peek_at(1) == Tok::LParen {
            self.next();
            self.next();
            let subject = self.operand()?;
            self.expect(Tok::Comma)?;
            let needle = match self.next() {
                Tok::Str(s) => s,
                other => {
                    self.pos -= 1;
                    return self.error(format!("contains expects a string, found {other}"));
                }
            };
            self.expect(Tok::RParen)?;
            return Ok(Expr::Contains(subject, needle));
        }
        let left = self.operand()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            other => return self.error(format!("expected a comparison, found {other}")),
        };
        self.next();
        let right = self.operand()?;
        Ok(Expr::Compare(left, op, right))
    }
}

pub fn parse_plan(src: &str) -> Result<Plan, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let plan = p.plan()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after plan", p.peek()));
    }
    Ok(plan)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after expression", p.peek()));
    }
    Ok(e)
}

impl std::str::FromStr for Plan {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_plan(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_plan() {
        let src = "
            # comment
            DISTINCT(project(filter(join(scan(products as p), scan(nutrients), p.ndb_no = nutrients.ndb_no),
                contains(ingredients, 'sugar') and output_value >= 2.5),
                name <- p.name, kind <- 'x'), name)";
        let plan = parse_plan(src).unwrap();
        assert_eq!(plan.tables(), ["products", "nutrients"]);
        assert!(plan.has_project());
        let Plan::Distinct { input, columns } = &plan else { panic!() };
        assert_eq!(columns, &[ColumnRef::new(None, "name")]);
        let Plan::Project { assignments, .. } = input.as_ref() else { panic!() };
        assert_eq!(assignments[1].source, Operand::Literal(Value::from("x")));
    }

    #[test]
    fn display_round_trips() {
        let srcs = [
            "scan(t)",
            "filter(scan(t as a), not (a.x = 1 or a.y != 'it''s') and z < -2.5e-3)",
            "join(scan(a), scan(b))",
            "project(scan(t), a <- null, b <- 3, c <- t.c)",
            "filter(scan(t), (a = 1 or b = 2) and not contains(c, 'q'))",
        ];
        for src in srcs {
            let plan = parse_plan(src).unwrap();
            let again = parse_plan(&plan.to_string()).unwrap();
            assert_eq!(plan, again, "{src}");
        }
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a = 1 or b = 2 and c = 3").unwrap();
        assert!(matches!(e, Expr::Or(_, ref r) if matches!(**r, Expr::And(..))));
        let e = parse_expr("not a = 1 and b = 2").unwrap();
        assert!(matches!(e, Expr::And(ref l, _) if matches!(**l, Expr::Not(_))));
    }

    #[test]
    fn errors_point_at_position() {
        let e = parse_plan("scan(t").unwrap_err();
        assert_eq!((e.line, e.column), (1, 7));
        let e = parse_plan("scan(t)\nfoo").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_plan("frobnicate(scan(t))").unwrap_err().message.contains("unknown operator"));
        assert!(parse_plan("filter(scan(t), 'x)").unwrap_err().message.contains("unterminated"));
        assert!(parse_plan("project(scan(t))").is_err());
        assert!(parse_plan("filter(scan(t), a)").is_err());
    }
}
