//! Real-valued coefficient and map formulas.
//!
//! Grammar (recursive descent):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' number)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1..x<m>`; when the arity is 1 the bare name `x` is accepted
//! as an alias for `x1`. Functions are limited to `abs`, `exp`, `ln`, `sqrt`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { name: String, offset: usize },
    #[error("variable x{index} at offset {offset} exceeds arity {arity}")]
    ArityExceeded {
        index: usize,
        arity: usize,
        offset: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdent { offset, .. }
            | ParseError::ArityExceeded { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("expected a point of dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("ln of non-positive argument {0}")]
    LnDomain(f64),
    #[error("sqrt of negative argument {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("power {base}^{exponent} is not finite")]
    PowDomain { base: f64, exponent: f64 },
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Abs => Some("abs"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Ln => Some("ln"),
            UnaryOp::Sqrt => Some("sqrt"),
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "abs" => Some(UnaryOp::Abs),
            "exp" => Some(UnaryOp::Exp),
            "ln" => Some(UnaryOp::Ln),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

/// Expression tree. Variable indices are zero-based internally (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    /// `base ^ exponent`; the exponent is always a literal.
    Pow(Box<Node>, f64),
}

impl Node {
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let value = match self {
            Node::Const(c) => *c,
            Node::Var(i) => point[*i],
            Node::Unary(op, arg) => {
                let v = arg.eval(point)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Abs => v.abs(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Ln => {
                        if v <= 0.0 {
                            return Err(EvalError::LnDomain(v));
                        }
                        v.ln()
                    }
                    UnaryOp::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::SqrtDomain(v));
                        }
                        v.sqrt()
                    }
                }
            }
            Node::Binary(op, lhs, rhs) => {
                let l = lhs.eval(point)?;
                let r = rhs.eval(point)?;
                match op {
                    BinaryOp::Add => l + r,
                    BinaryOp::Sub => l - r,
                    BinaryOp::Mul => l * r,
                    BinaryOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        l / r
                    }
                }
            }
            Node::Pow(base, exponent) => {
                let b = base.eval(point)?;
                let v = b.powf(*exponent);
                if !v.is_finite() {
                    return Err(EvalError::PowDomain {
                        base: b,
                        exponent: *exponent,
                    });
                }
                v
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Unary(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Binary(_, l, r) => match (l.max_var(), r.max_var()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }

    // Binding strength of the printed form: 1 additive, 2 multiplicative,
    // 3 unary minus, 4 power, 5 atoms.
    fn print_level(&self) -> u8 {
        match self {
            Node::Binary(op, ..) => op.precedence(),
            Node::Unary(UnaryOp::Neg, _) => 3,
            Node::Const(c) if c.is_sign_negative() => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{}", format_number(*c)),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Unary(UnaryOp::Neg, arg) => {
                f.write_str("-")?;
                write_wrapped(f, arg, arg.print_level() < 3)
            }
            Node::Unary(op, arg) => {
                write!(f, "{}(", op.function_name().unwrap_or_default())?;
                arg.write(f)?;
                f.write_str(")")
            }
            Node::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                write_wrapped(f, lhs, lhs.print_level() < p)?;
                write!(f, "{}", op.symbol())?;
                // Right operand of a left-associative chain needs parentheses at equal level.
                write_wrapped(f, rhs, rhs.print_level() <= p)
            }
            Node::Pow(base, exponent) => {
                write_wrapped(f, base, base.print_level() < 5)?;
                write!(f, "^{}", format_number(*exponent))
            }
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, node: &Node, wrap: bool) -> fmt::Result {
    if wrap {
        f.write_str("(")?;
        node.write(f)?;
        f.write_str(")")
    } else {
        node.write(f)
    }
}

// `{:?}` on f64 is the shortest representation that round-trips.
fn format_number(v: f64) -> String {
    format!("{v:?}")
}

/// A parsed formula together with its declared arity.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    arity: usize,
}

impl Expr {
    /// Builds an expression from a tree; fails if a variable exceeds `arity`.
    pub fn from_node(root: Node, arity: usize) -> Result<Self, ParseError> {
        if let Some(i) = root.max_var() {
            if i >= arity {
                return Err(ParseError::ArityExceeded {
                    index: i + 1,
                    arity,
                    offset: 0,
                });
            }
        }
        Ok(Expr { root, arity })
    }

    pub fn constant(value: f64, arity: usize) -> Self {
        Expr {
            root: Node::Const(value),
            arity,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::Dimension {
                expected: self.arity,
                got: point.len(),
            });
        }
        self.root.eval(point)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f)
    }
}

pub fn parse(source: &str, arity: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
        arity,
    };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.expected("an expression"));
    }
    let root = parser.expr()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.expected("an operator or end of input"));
    }
    Ok(Expr { root, arity })
}

// Nesting beyond this depth is rejected instead of risking stack exhaustion.
const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    arity: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: what.to_string(),
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.expr_at(0)
    }

    fn expr_at(&mut self, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.expected("shallower nesting"));
        }
        let mut lhs = self.term(depth)?;
        loop {
            let op = if self.eat(b'+') {
                BinaryOp::Add
            } else if self.eat(b'-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term(depth)?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, depth: usize) -> Result<Node, ParseError> {
        let mut lhs = self.factor(depth)?;
        loop {
            let op = if self.eat(b'*') {
                BinaryOp::Mul
            } else if self.eat(b'/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor(depth)?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self, depth: usize) -> Result<Node, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.expected("shallower nesting"));
        }
        if self.eat(b'-') {
            let inner = self.factor(depth + 1)?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        let base = self.atom(depth)?;
        if self.eat(b'^') {
            self.skip_ws();
            let negative = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let exponent = self.number()?;
            let exponent = if negative { -exponent } else { exponent };
            return Ok(Node::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn atom(&mut self, depth: usize) -> Result<Node, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr_at(depth + 1)?;
                if !self.eat(b')') {
                    return Err(self.expected("`)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Node::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(depth),
            _ => Err(self.expected("a number, variable, function call or `(`")),
        }
    }

    fn ident(&mut self, depth: usize) -> Result<Node, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        // Identifier bytes are ASCII by construction.
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if let Some(op) = UnaryOp::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.expected("`(` after function name"));
            }
            let arg = self.expr_at(depth + 1)?;
            if !self.eat(b')') {
                return Err(self.expected("`)`"));
            }
            return Ok(Node::Unary(op, Box::new(arg)));
        }
        if name == "x" && self.arity == 1 {
            return Ok(Node::Var(0));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 {
                    return Err(ParseError::UnknownIdent {
                        name: name.to_string(),
                        offset: start,
                    });
                }
                if index > self.arity {
                    return Err(ParseError::ArityExceeded {
                        index,
                        arity: self.arity,
                        offset: start,
                    });
                }
                return Ok(Node::Var(index - 1));
            }
        }
        Err(ParseError::UnknownIdent {
            name: name.to_string(),
            offset: start,
        })
    }

    /// Decimal literal: digits with optional fraction and exponent.
    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let mut digits = 0;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
            digits += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.expected("a number"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark + 1;
                return Err(self.expected("exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: "a decimal literal".to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = parse("2*x1/(1+x1)", 1).unwrap();
        assert_eq!(e.eval(&[1.0]).unwrap(), 1.0);

        let err = parse("1+", 1).unwrap_err();
        assert!(
            matches!(err, ParseError::Syntax { offset: 2, .. }),
            "{err:?}"
        );

        let e = parse("abs(x1-0.5)+x2^2", 2).unwrap();
        assert_eq!(e.eval(&[0.5, 2.0]).unwrap(), 4.0);

        assert_eq!(parse("exp(0)", 0).unwrap().eval(&[]).unwrap(), 1.0);
        assert_eq!(
            parse("ln(x1)", 1).unwrap().eval(&[0.0]),
            Err(EvalError::LnDomain(0.0))
        );
        assert_eq!(
            parse("1+x1+2*x2", 2).unwrap().eval(&[0.0, 1.0]).unwrap(),
            3.0
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| parse(s, 0).unwrap().eval(&[]).unwrap();
        assert_eq!(v("2+3*4"), 14.0);
        assert_eq!(v("2*3^2"), 18.0);
        assert_eq!(v("8-4-2"), 2.0);
        assert_eq!(v("8/4/2"), 1.0);
        assert_eq!(v("-2^2"), -4.0);
        assert_eq!(v("(1+2)*3"), 9.0);
        assert_eq!(v("4^-0.5"), 0.5);
        assert_eq!(v("1.5e2"), 150.0);
        assert_eq!(v(" sqrt( 16 ) "), 4.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse("foo(1)", 1),
            Err(ParseError::UnknownIdent { offset: 0, .. })
        ));
        assert!(matches!(
            parse("x1+x3", 2),
            Err(ParseError::ArityExceeded {
                index: 3,
                arity: 2,
                offset: 3
            })
        ));
        assert!(matches!(
            parse("x", 2),
            Err(ParseError::UnknownIdent { .. })
        ));
        assert!(matches!(
            parse("", 1),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse("2^x1", 1),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("(1", 1),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("1 2", 1),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("1e", 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse("0x1F", 1),
            Err(ParseError::Syntax { offset: 1, .. })
        ));
        assert!(parse(&"(".repeat(10_000), 1).is_err());
        assert!(parse(&"-".repeat(10_000), 1).is_err());
    }

    #[test]
    fn domain_errors() {
        let e = |s: &str| parse(s, 0).unwrap().eval(&[]);
        assert_eq!(e("sqrt(-1)"), Err(EvalError::SqrtDomain(-1.0)));
        assert_eq!(e("1/0"), Err(EvalError::DivisionByZero));
        assert!(matches!(e("0^-1"), Err(EvalError::PowDomain { .. })));
        assert!(matches!(e("(-8)^0.5"), Err(EvalError::PowDomain { .. })));
        assert_eq!(e("exp(1000)"), Err(EvalError::NonFinite));
        assert!(matches!(
            parse("x1", 2).unwrap().eval(&[1.0]),
            Err(EvalError::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn printing_is_stable() {
        for src in [
            "2*x1/(1+x1)",
            "abs(x1-0.5)+x2^2",
            "-(x1+1)*x2",
            "x1-(x2-1)",
            "(-2)^2",
            "x1^-0.5",
            "-x1^2",
            "1/(x1*x2)",
        ] {
            let printed = parse(src, 2).unwrap().to_string();
            let again = parse(&printed, 2).unwrap().to_string();
            assert_eq!(printed, again, "{src}");
        }
    }

    #[test]
    fn gamma_alias() {
        let e = parse("2*x/(1+x)", 1).unwrap();
        assert!((e.eval(&[0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
