//! Arithmetic expressions in `x` and `y` used for kernels and coefficient
//! fields in configuration files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 'x' | 'y' | 'pi' | 'e'
//!          | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp abs sqrt sin cos` (one argument), `min max pow` (two).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    fn join(self, other: Span) -> Self {
        Self::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    SqrtOfNegative,
    NegativeBaseFractionalPower,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::SqrtOfNegative => "square root of a negative number",
            DomainKind::NegativeBaseFractionalPower => {
                "negative base raised to a non-integer power"
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes {expected} argument(s) but got {found} (byte {offset})")]
    Arity {
        name: &'static str,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("variable `{name}` is unbound at bytes {}..{}", span.start, span.end)]
    UnboundVariable { name: &'static str, span: Span },

    #[error("{kind} in `{snippet}` at bytes {}..{}", span.start, span.end)]
    Domain {
        kind: DomainKind,
        span: Span,
        snippet: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Abs,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Tree node; equality ignores source spans.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Node>),
    Binary {
        op: BinOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Call {
        func: Func,
        args: Vec<Node>,
    },
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    source: String,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        let tok = p.peek();
        if tok.kind != Tok::End {
            return Err(ExprError::Syntax {
                offset: tok.start,
                expected: "expected operator or end of input".into(),
            });
        }
        Ok(Self {
            root,
            source: text.to_string(),
        })
    }

    /// Expression for a literal value.
    pub fn constant(value: f64) -> Self {
        let text = format!("{value:?}");
        if value >= 0.0 {
            return Self::parse(&text).expect("literal");
        }
        Self::parse(&format!("-{:?}", -value)).expect("literal")
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses_y(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match &n.kind {
                NodeKind::Var(Var::Y) => true,
                NodeKind::Neg(a) => walk(a),
                NodeKind::Binary { lhs, rhs, .. } => walk(lhs) || walk(rhs),
                NodeKind::Call { args, .. } => args.iter().any(walk),
                _ => false,
            }
        }
        walk(&self.root)
    }

    pub fn eval(&self, x: f64, y: Option<f64>) -> Result<f64, ExprError> {
        self.eval_node(&self.root, x, y)
    }

    pub fn eval_x(&self, x: f64) -> Result<f64, ExprError> {
        self.eval(x, None)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        self.eval(x, Some(y))
    }

    fn domain(&self, kind: DomainKind, span: Span) -> ExprError {
        ExprError::Domain {
            kind,
            span,
            snippet: self.source.get(span.start..span.end).unwrap_or("").to_string(),
        }
    }

    fn eval_node(&self, node: &Node, x: f64, y: Option<f64>) -> Result<f64, ExprError> {
        Ok(match &node.kind {
            NodeKind::Num(v) => *v,
            NodeKind::Const(Constant::Pi) => std::f64::consts::PI,
            NodeKind::Const(Constant::E) => std::f64::consts::E,
            NodeKind::Var(Var::X) => x,
            NodeKind::Var(Var::Y) => y.ok_or(ExprError::UnboundVariable {
                name: "y",
                span: node.span,
            })?,
            NodeKind::Neg(a) => -self.eval_node(a, x, y)?,
            NodeKind::Binary { op, lhs, rhs } => {
                let a = self.eval_node(lhs, x, y)?;
                let b = self.eval_node(rhs, x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain(DomainKind::DivisionByZero, node.span));
                        }
                        a / b
                    }
                    BinOp::Pow => self.power(a, b, node.span)?,
                }
            }
            NodeKind::Call { func, args } => {
                let a = self.eval_node(&args[0], x, y)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(self.domain(DomainKind::SqrtOfNegative, node.span));
                        }
                        a.sqrt()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Min => a.min(self.eval_node(&args[1], x, y)?),
                    Func::Max => a.max(self.eval_node(&args[1], x, y)?),
                    Func::Pow => {
                        let b = self.eval_node(&args[1], x, y)?;
                        self.power(a, b, node.span)?
                    }
                }
            }
        })
    }

    fn power(&self, base: f64, exponent: f64, span: Span) -> Result<f64, ExprError> {
        if base < 0.0 && exponent.fract() != 0.0 {
            return Err(self.domain(DomainKind::NegativeBaseFractionalPower, span));
        }
        if base == 0.0 && exponent < 0.0 {
            return Err(self.domain(DomainKind::DivisionByZero, span));
        }
        Ok(base.powf(exponent))
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Canonical, fully parenthesized form; reparses to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node) -> fmt::Result {
    match &node.kind {
        NodeKind::Num(v) => write!(f, "{v:?}"),
        NodeKind::Const(Constant::Pi) => f.write_str("pi"),
        NodeKind::Const(Constant::E) => f.write_str("e"),
        NodeKind::Var(Var::X) => f.write_str("x"),
        NodeKind::Var(Var::Y) => f.write_str("y"),
        NodeKind::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a)?;
            f.write_str(")")
        }
        NodeKind::Binary { op, lhs, rhs } => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            f.write_str("(")?;
            write_node(f, lhs)?;
            write!(f, " {sym} ")?;
            write_node(f, rhs)?;
            f.write_str(")")
        }
        NodeKind::Call { func, args } => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_node(f, a)?;
            }
            f.write_str(")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    start: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            i += 1;
            out.push(Token { kind, start, end: i });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: format!("malformed number `{lit}`"),
            })?;
            out.push(Token {
                kind: Tok::Num(value),
                start,
                end: i,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(text[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ExprError::Syntax {
            offset: start,
            expected: format!("unexpected character `{ch}`"),
        });
    }
    out.push(Token {
        kind: Tok::End,
        start: text.len(),
        end: text.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok, what: &str) -> Result<Token, ExprError> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(ExprError::Syntax {
                offset: self.peek().start,
                expected: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek().kind == Tok::Minus {
            let minus = self.bump();
            let operand = self.unary()?;
            let span = Span::new(minus.start, operand.span.end);
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(operand)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek().kind == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let tok = self.bump();
        let span = Span::new(tok.start, tok.end);
        match tok.kind {
            Tok::Num(v) => Ok(Node {
                kind: NodeKind::Num(v),
                span,
            }),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Node {
                    kind: inner.kind,
                    span: Span::new(tok.start, close.end),
                })
            }
            Tok::Ident(name) => self.identifier(name, span),
            _ => Err(ExprError::Syntax {
                offset: tok.start,
                expected: "expected operand".into(),
            }),
        }
    }

    fn identifier(&mut self, name: String, span: Span) -> Result<Node, ExprError> {
        let kind = match name.as_str() {
            "x" => NodeKind::Var(Var::X),
            "y" => NodeKind::Var(Var::Y),
            "pi" => NodeKind::Const(Constant::Pi),
            "e" => NodeKind::Const(Constant::E),
            _ => {
                let Some(func) = Func::lookup(&name) else {
                    return Err(ExprError::UnknownIdentifier {
                        name,
                        offset: span.start,
                    });
                };
                self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
                let mut args = vec![self.expr()?];
                while self.peek().kind == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                let close = self.expect(Tok::RParen, "`,` or `)`")?;
                if args.len() != func.arity() {
                    return Err(ExprError::Arity {
                        name: func.name(),
                        expected: func.arity(),
                        found: args.len(),
                        offset: span.start,
                    });
                }
                return Ok(Node {
                    kind: NodeKind::Call { func, args },
                    span: Span::new(span.start, close.end),
                });
            }
        };
        Ok(Node { kind, span })
    }
}

fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
    let span = lhs.span.join(rhs.span);
    Node {
        kind: NodeKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(text: &str, x: f64, y: Option<f64>) -> f64 {
        Expr::parse(text).unwrap().eval(x, y).unwrap()
    }

    #[test]
    fn gaussian_kernel_at_origin() {
        assert_eq!(ev("exp(-(x-y)^2)", 0.0, Some(0.0)), 1.0);
    }

    #[test]
    fn simple_arithmetic() {
        assert_eq!(ev("1 + x*y", 0.5, Some(-1.0)), 0.5);
    }

    #[test]
    fn dangling_operator_is_a_syntax_error() {
        match Expr::parse("x +") {
            Err(ExprError::Syntax { offset, expected }) => {
                assert_eq!(offset, 3);
                assert_eq!(expected, "expected operand");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fractional_power_and_builtins() {
        assert_eq!(ev("abs(x)^0.5", 0.25, None), 0.5);
        assert_eq!(ev("2^3^2", 0.0, None), 512.0);
        let v = ev("min(x, y) + pi", 1.0, Some(2.0));
        assert!((v - (1.0 + std::f64::consts::PI)).abs() < 1e-15);
        assert!((v - 4.14159265).abs() < 1e-8);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("5-3-1", 0.0, None), 1.0);
        assert_eq!(ev("2^3^2", 0.0, None), 2f64.powf(9.0));
        assert_eq!(ev("-x^2", 3.0, None), -9.0);
        assert_eq!(ev("-2^2", 0.0, None), -4.0);
        assert_eq!(ev("2^-1", 0.0, None), 0.5);
        assert_eq!(ev("8/4/2", 0.0, None), 1.0);
        assert_eq!(ev("1 + 2 * 3 ^ 2", 0.0, None), 19.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, None), 9.0);
        assert_eq!(ev(" 1+\t2 ", 0.0, None), 3.0);
        assert_eq!(ev("1e-2 * 100", 0.0, None), 1.0);
        assert_eq!(ev("2*e", 0.0, None), 2.0 * std::f64::consts::E);
        assert_eq!(ev("pow(2, 10) + max(-1, x) + sqrt(4) + cos(0) + sin(0)", 0.0, None), 1027.0);
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            Expr::parse("z + 1"),
            Err(ExprError::UnknownIdentifier { ref name, offset: 0 }) if name == "z"
        ));
        assert!(matches!(
            Expr::parse("1 + log(x)"),
            Err(ExprError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            Expr::parse("min(x)"),
            Err(ExprError::Arity { name: "min", expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            Expr::parse("exp(x, y)"),
            Err(ExprError::Arity { name: "exp", found: 2, .. })
        ));
        assert!(matches!(Expr::parse("exp x"), Err(ExprError::Syntax { offset: 4, .. })));
        assert!(matches!(Expr::parse("(x"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(Expr::parse("x y"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(Expr::parse("x # 2"), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unbound_y() {
        let e = Expr::parse("x + y").unwrap();
        assert!(e.uses_y());
        assert!(matches!(
            e.eval_x(1.0),
            Err(ExprError::UnboundVariable { name: "y", span }) if span == Span::new(4, 5)
        ));
    }

    #[test]
    fn domain_errors_carry_location() {
        let e = Expr::parse("1 + 1/x").unwrap();
        match e.eval_x(0.0) {
            Err(ExprError::Domain { kind, span, snippet }) => {
                assert_eq!(kind, DomainKind::DivisionByZero);
                assert_eq!(span, Span::new(4, 7));
                assert_eq!(snippet, "1/x");
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = Expr::parse("sqrt(x)").unwrap();
        assert!(matches!(
            e.eval_x(-1.0),
            Err(ExprError::Domain { kind: DomainKind::SqrtOfNegative, .. })
        ));
        let e = Expr::parse("x^0.5").unwrap();
        assert!(matches!(
            e.eval_x(-0.25),
            Err(ExprError::Domain { kind: DomainKind::NegativeBaseFractionalPower, .. })
        ));
        assert_eq!(Expr::parse("x^2").unwrap().eval_x(-3.0).unwrap(), 9.0);
        assert!(matches!(
            Expr::parse("pow(x, -1)").unwrap().eval_x(0.0),
            Err(ExprError::Domain { kind: DomainKind::DivisionByZero, .. })
        ));
    }

    #[test]
    fn canonical_printing() {
        let e = Expr::parse("-x^2 + 3*min(x, y)").unwrap();
        assert_eq!(e.to_string(), "((-(x ^ 2.0)) + (3.0 * min(x, y)))");
        assert_eq!(Expr::constant(-0.25).eval_x(0.0).unwrap(), -0.25);
    }

    fn arb_node() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(|v| format!("{v:?}")),
            Just("x".to_string()),
            Just("y".to_string()),
            Just("pi".to_string()),
            Just("e".to_string()),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0..5usize).prop_map(|(a, b, op)| {
                    let sym = ["+", "-", "*", "/", "^"][op];
                    format!("({a}){sym}({b})")
                }),
                inner.clone().prop_map(|a| format!("-{a}")),
                (inner.clone(), 0..5usize).prop_map(|(a, f)| {
                    let name = ["exp", "abs", "sqrt", "sin", "cos"][f];
                    format!("{name}({a})")
                }),
                (inner.clone(), inner, 0..3usize).prop_map(|(a, b, f)| {
                    let name = ["min", "max", "pow"][f];
                    format!("{name}({a}, {b})")
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_round_trips(text in arb_node()) {
            let e = Expr::parse(&text).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            prop_assert_eq!(&e, &again);
            prop_assert_eq!(e.to_string(), again.to_string());
        }

        #[test]
        fn evaluation_is_deterministic(text in arb_node(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let e = Expr::parse(&text).unwrap();
            let a = e.eval(x, Some(y));
            let b = Expr::parse(&text).unwrap().eval(x, Some(y));
            match (a, b) {
                (Ok(u), Ok(v)) => prop_assert!(u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan())),
                (Err(u), Err(v)) => prop_assert_eq!(u, v),
                _ => prop_assert!(false, "divergent outcomes"),
            }
        }

        #[test]
        fn subtraction_is_left_associative(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
            let text = format!("{a:?} - {b:?} - {c:?}").replace("- -", "- (-1) * ");
            let v = Expr::parse(&text).unwrap().eval_x(0.0).unwrap();
            prop_assert!((v - ((a - b) - c)).abs() <= 1e-9 * (1.0 + a.abs() + b.abs() + c.abs()));
        }
    }
}
