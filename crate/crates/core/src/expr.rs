//! Scalar expressions in `x1..xn` with exact first derivatives.
//!
//! Expressions are parsed by a small recursive-descent parser and evaluated
//! in forward mode: every node carries its value together with the dense
//! vector of partial derivatives with respect to all variables.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? atom ("^" integer)?
//! atom   := number | ident | func "(" expr ")" | "(" expr ")"
//! func   := "ln" | "sqrt" | "exp" | "sin" | "cos" | "abs"
//! ident  := "x" integer            (1-based)
//! ```

use std::fmt;

use thiserror::Error;

/// Errors produced while parsing expression text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable x{index} at byte {offset} is out of range 1..={nvars}")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        nvars: usize,
    },
    #[error("expression must have at least one variable")]
    NoVariables,
}

/// Errors produced while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
    #[error("non-finite result in `{node}`")]
    NonFinite { node: String },
    #[error("point has {got} coordinates, expression expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Ln,
    Sqrt,
    Exp,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Syntax tree node. Variables are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn uses(&self, func: Func) -> bool {
        match self {
            Node::Const(_) | Node::Var(_) => false,
            Node::Neg(a) | Node::Pow(a, _) => a.uses(func),
            Node::Binary(_, a, b) => a.uses(func) || b.uses(func),
            Node::Call(f, a) => *f == func || a.uses(func),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }
}

/// Fully parenthesised rendering that parses back to the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, k) => write!(f, "(({a})^{k})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Value and gradient of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl DualVector {
    fn constant(value: f64, n: usize) -> Self {
        DualVector {
            value,
            partials: vec![0.0; n],
        }
    }

    fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut partials = vec![0.0; n];
        partials[index] = 1.0;
        DualVector { value, partials }
    }

    /// Chain rule for a unary function with value `value` and derivative `slope`.
    fn chain(mut self, value: f64, slope: f64) -> Self {
        self.value = value;
        self.partials.iter_mut().for_each(|p| *p *= slope);
        self
    }

    fn combine(mut self, other: &DualVector, value: f64, da: f64, db: f64) -> Self {
        self.value = value;
        for (p, q) in self.partials.iter_mut().zip(&other.partials) {
            *p = da * *p + db * q;
        }
        self
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|p| p.is_finite())
    }
}

/// A parsed scalar function of `nvars` variables.
///
/// Immutable after parsing; evaluation only allocates per-call state.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    nvars: usize,
}

impl Expression {
    pub fn parse(text: &str, nvars: usize) -> Result<Expression, ParseError> {
        if nvars == 0 {
            return Err(ParseError::NoVariables);
        }
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
            nvars,
        };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.syntax("unexpected trailing input"));
        }
        Ok(Expression { root, nvars })
    }

    /// Builds an expression from a tree, checking the variable range.
    pub fn from_node(root: Node, nvars: usize) -> Result<Expression, ParseError> {
        if nvars == 0 {
            return Err(ParseError::NoVariables);
        }
        if let Some(i) = root.max_var() {
            if i >= nvars {
                return Err(ParseError::VariableOutOfRange {
                    offset: 0,
                    index: i + 1,
                    nvars,
                });
            }
        }
        Ok(Expression { root, nvars })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// True if the tree calls `abs`, i.e. the expression may fail to be C¹.
    pub fn uses_abs(&self) -> bool {
        self.root.uses(Func::Abs)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval_grad(x)?.value)
    }

    /// Value and exact gradient by forward-mode differentiation.
    pub fn eval_grad(&self, x: &[f64]) -> Result<DualVector, EvalError> {
        if x.len() != self.nvars {
            return Err(EvalError::Dimension {
                expected: self.nvars,
                got: x.len(),
            });
        }
        eval_node(&self.root, x)
    }

    /// Largest relative discrepancy between the AD gradient and central
    /// finite differences with step `h`. The denominator is floored at 1,
    /// so near-zero gradients are compared in absolute terms.
    pub fn fd_check(&self, x: &[f64], h: f64) -> Result<f64, EvalError> {
        let ad = self.eval_grad(x)?;
        let mut worst = 0.0_f64;
        let mut probe = x.to_vec();
        for i in 0..self.nvars {
            probe[i] = x[i] + h;
            let up = self.eval(&probe)?;
            probe[i] = x[i] - h;
            let down = self.eval(&probe)?;
            probe[i] = x[i];
            let fd = (up - down) / (2.0 * h);
            let err = (ad.partials[i] - fd).abs() / ad.partials[i].abs().max(1.0);
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

fn eval_node(node: &Node, x: &[f64]) -> Result<DualVector, EvalError> {
    let n = x.len();
    let out = match node {
        Node::Const(c) => DualVector::constant(*c, n),
        Node::Var(i) => DualVector::variable(x[*i], *i, n),
        Node::Neg(a) => {
            let a = eval_node(a, x)?;
            let v = -a.value;
            a.chain(v, -1.0)
        }
        Node::Pow(a, k) => {
            let a = eval_node(a, x)?;
            if *k < 0 && a.value == 0.0 {
                return Err(domain(node, "negative power of zero"));
            }
            let v = a.value.powi(*k);
            let slope = if *k == 0 {
                0.0
            } else {
                f64::from(*k) * a.value.powi(*k - 1)
            };
            a.chain(v, slope)
        }
        Node::Binary(op, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match op {
                BinOp::Add => {
                    let v = a.value + b.value;
                    a.combine(&b, v, 1.0, 1.0)
                }
                BinOp::Sub => {
                    let v = a.value - b.value;
                    a.combine(&b, v, 1.0, -1.0)
                }
                BinOp::Mul => {
                    let (av, bv) = (a.value, b.value);
                    a.combine(&b, av * bv, bv, av)
                }
                BinOp::Div => {
                    if b.value == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    let (av, bv) = (a.value, b.value);
                    a.combine(&b, av / bv, 1.0 / bv, -av / (bv * bv))
                }
            }
        }
        Node::Call(func, a) => {
            let a = eval_node(a, x)?;
            let u = a.value;
            match func {
                Func::Ln => {
                    if u <= 0.0 {
                        return Err(domain(node, "logarithm of a non-positive value"));
                    }
                    a.chain(u.ln(), 1.0 / u)
                }
                Func::Sqrt => {
                    if u <= 0.0 {
                        return Err(domain(node, "square root of a non-positive value"));
                    }
                    let s = u.sqrt();
                    a.chain(s, 0.5 / s)
                }
                Func::Exp => {
                    let e = u.exp();
                    a.chain(e, e)
                }
                Func::Sin => a.chain(u.sin(), u.cos()),
                Func::Cos => a.chain(u.cos(), -u.sin()),
                // abs'(0) is taken as 0
                Func::Abs => {
                    let slope = if u > 0.0 {
                        1.0
                    } else if u < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    a.chain(u.abs(), slope)
                }
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::NonFinite {
            node: node.to_string(),
        })
    }
}

fn domain(node: &Node, reason: &'static str) -> EvalError {
    EvalError::Domain {
        node: node.to_string(),
        reason,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let negate = self.eat(b'-');
        let mut node = self.atom()?;
        if self.eat(b'^') {
            let k = self.exponent()?;
            node = Node::Pow(Box::new(node), k);
        }
        Ok(if negate {
            Node::Neg(Box::new(node))
        } else {
            node
        })
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits {
            self.pos = start;
            return Err(self.syntax("expected an integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("exponent `{text}` out of range"),
        })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.syntax(format!("unexpected character `{}`", c as char))),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.syntax("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse()
            .map(Node::Const)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.syntax(format!("expected `(` after `{name}`")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`"));
            }
            return Ok(Node::Call(func, Box::new(arg)));
        }
        let index = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| ParseError::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            })?;
        if index == 0 || index > self.nvars {
            return Err(ParseError::VariableOutOfRange {
                offset: start,
                index,
                nvars: self.nvars,
            });
        }
        Ok(Node::Var(index - 1))
    }
}
