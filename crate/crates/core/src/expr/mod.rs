//! Closed-form expressions of one real variable: parsing, exact symbolic
//! differentiation, and fast evaluation.
//!
//! The node set is fixed: constants (including the literal `pi`), one free
//! variable, `+ - * /`, integer powers, `sin`, `cos`, `exp`, `ln`, and unary
//! minus. There is no simplification beyond constant folding; folding is
//! applied after differentiation so that third derivatives stay cheap to
//! evaluate.

pub mod parse;

use std::fmt;
use thiserror::Error;

pub use parse::{parse_expr, ParseError};

/// Evaluation failure at a specific point.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("division by zero at y = {0}")]
    DivisionByZero(f64),
    #[error("ln of non-positive value at y = {0}")]
    LogNonPositive(f64),
    #[error("non-finite result at y = {0}")]
    NonFinite(f64),
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Integer power of the base expression.
    Pow(Box<Node>, i32),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Ln(Box<Node>),
}

/// A closed-form expression in one free variable.
///
/// Immutable after construction; evaluation is reentrant and deterministic
/// (identical inputs give bit-identical outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    /// Name of the free variable; `None` for pure constants.
    var: Option<String>,
    program: Vec<Instr>,
    max_stack: usize,
}

/// Flat postfix instruction for the evaluation stack machine.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Push(f64),
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Powi(i32),
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Expr {
    pub fn new(root: Node, var: Option<String>) -> Expr {
        let mut program = Vec::new();
        compile(&root, &mut program);
        let mut depth = 0usize;
        let mut max_stack = 1usize;
        for ins in &program {
            match ins {
                Instr::Push(_) | Instr::Var => {
                    depth += 1;
                    max_stack = max_stack.max(depth);
                }
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => depth -= 1,
                _ => {}
            }
        }
        Expr { root, var, program, max_stack }
    }

    /// Constant expression.
    pub fn constant(c: f64) -> Expr {
        Expr::new(Node::Const(c), None)
    }

    /// The bare variable `name`.
    pub fn var(name: &str) -> Expr {
        Expr::new(Node::Var, Some(name.to_owned()))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var_name(&self) -> Option<&str> {
        self.var.as_deref()
    }

    /// Evaluate at `y`.
    pub fn eval(&self, y: f64) -> Result<f64, DomainError> {
        if self.max_stack <= 64 {
            let mut buf = [0.0f64; 64];
            run_program(&self.program, y, &mut buf)
        } else {
            let mut buf = vec![0.0f64; self.max_stack];
            run_program(&self.program, y, &mut buf)
        }
    }

    /// Exact derivative, constant-folded.
    pub fn differentiate(&self) -> Expr {
        let d = diff_node(&self.root);
        Expr::new(fold(d), self.var.clone())
    }

    /// Substitute `inner` for the free variable, producing `self ∘ inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        fn subst(n: &Node, inner: &Node) -> Node {
            match n {
                Node::Var => inner.clone(),
                Node::Const(c) => Node::Const(*c),
                Node::Add(a, b) => Node::Add(subst(a, inner).into(), subst(b, inner).into()),
                Node::Sub(a, b) => Node::Sub(subst(a, inner).into(), subst(b, inner).into()),
                Node::Mul(a, b) => Node::Mul(subst(a, inner).into(), subst(b, inner).into()),
                Node::Div(a, b) => Node::Div(subst(a, inner).into(), subst(b, inner).into()),
                Node::Pow(a, k) => Node::Pow(subst(a, inner).into(), *k),
                Node::Neg(a) => Node::Neg(subst(a, inner).into()),
                Node::Sin(a) => Node::Sin(subst(a, inner).into()),
                Node::Cos(a) => Node::Cos(subst(a, inner).into()),
                Node::Exp(a) => Node::Exp(subst(a, inner).into()),
                Node::Ln(a) => Node::Ln(subst(a, inner).into()),
            }
        }
        let var = inner.var.clone().or_else(|| self.var.clone());
        Expr::new(fold(subst(&self.root, &inner.root)), var)
    }

    /// Scale the expression by a constant factor (folded).
    pub fn scaled(&self, c: f64) -> Expr {
        Expr::new(
            fold(Node::Mul(Box::new(Node::Const(c)), Box::new(self.root.clone()))),
            self.var.clone(),
        )
    }
}

fn run_program(program: &[Instr], y: f64, stack: &mut [f64]) -> Result<f64, DomainError> {
    let mut sp = 0usize;
    macro_rules! pop {
        () => {{
            sp -= 1;
            stack[sp]
        }};
    }
    macro_rules! push {
        ($v:expr) => {{
            stack[sp] = $v;
            sp += 1;
        }};
    }
    for ins in program {
        match *ins {
            Instr::Push(c) => push!(c),
            Instr::Var => push!(y),
            Instr::Add => {
                let b = pop!();
                let a = pop!();
                push!(a + b);
            }
            Instr::Sub => {
                let b = pop!();
                let a = pop!();
                push!(a - b);
            }
            Instr::Mul => {
                let b = pop!();
                let a = pop!();
                push!(a * b);
            }
            Instr::Div => {
                let b = pop!();
                let a = pop!();
                if b == 0.0 {
                    return Err(DomainError::DivisionByZero(y));
                }
                push!(a / b);
            }
            Instr::Powi(n) => {
                let a = pop!();
                if a == 0.0 && n < 0 {
                    return Err(DomainError::DivisionByZero(y));
                }
                push!(a.powi(n));
            }
            Instr::Neg => {
                let a = pop!();
                push!(-a);
            }
            Instr::Sin => {
                let a = pop!();
                push!(a.sin());
            }
            Instr::Cos => {
                let a = pop!();
                push!(a.cos());
            }
            Instr::Exp => {
                let a = pop!();
                push!(a.exp());
            }
            Instr::Ln => {
                let a = pop!();
                if a <= 0.0 {
                    return Err(DomainError::LogNonPositive(y));
                }
                push!(a.ln());
            }
        }
    }
    debug_assert_eq!(sp, 1);
    let v = stack[0];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite(y))
    }
}

fn compile(n: &Node, out: &mut Vec<Instr>) {
    match n {
        Node::Const(c) => out.push(Instr::Push(*c)),
        Node::Var => out.push(Instr::Var),
        Node::Add(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Instr::Add);
        }
        Node::Sub(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Instr::Sub);
        }
        Node::Mul(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Instr::Mul);
        }
        Node::Div(a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Instr::Div);
        }
        Node::Pow(a, k) => {
            compile(a, out);
            out.push(Instr::Powi(*k));
        }
        Node::Neg(a) => {
            compile(a, out);
            out.push(Instr::Neg);
        }
        Node::Sin(a) => {
            compile(a, out);
            out.push(Instr::Sin);
        }
        Node::Cos(a) => {
            compile(a, out);
            out.push(Instr::Cos);
        }
        Node::Exp(a) => {
            compile(a, out);
            out.push(Instr::Exp);
        }
        Node::Ln(a) => {
            compile(a, out);
            out.push(Instr::Ln);
        }
    }
}

fn diff_node(n: &Node) -> Node {
    use Node::*;
    match n {
        Const(_) => Const(0.0),
        Var => Const(1.0),
        Add(a, b) => Add(diff_node(a).into(), diff_node(b).into()),
        Sub(a, b) => Sub(diff_node(a).into(), diff_node(b).into()),
        Mul(a, b) => Add(
            Mul(diff_node(a).into(), b.clone()).into(),
            Mul(a.clone(), diff_node(b).into()).into(),
        ),
        Div(a, b) => Div(
            Sub(
                Mul(diff_node(a).into(), b.clone()).into(),
                Mul(a.clone(), diff_node(b).into()).into(),
            )
            .into(),
            Pow(b.clone(), 2).into(),
        ),
        Pow(a, k) => {
            if *k == 0 {
                Const(0.0)
            } else {
                Mul(
                    Mul(Const(*k as f64).into(), Pow(a.clone(), k - 1).into()).into(),
                    diff_node(a).into(),
                )
            }
        }
        Neg(a) => Neg(diff_node(a).into()),
        Sin(a) => Mul(Cos(a.clone()).into(), diff_node(a).into()),
        Cos(a) => Neg(Mul(Sin(a.clone()).into(), diff_node(a).into()).into()),
        Exp(a) => Mul(Exp(a.clone()).into(), diff_node(a).into()),
        Ln(a) => Div(diff_node(a).into(), a.clone()),
    }
}

/// Constant folding: collapse constant subtrees and algebraic identities
/// with 0 and 1. Division by a constant zero is left in place so evaluation
/// reports the domain error.
pub(crate) fn fold(n: Node) -> Node {
    use Node::*;
    let n = match n {
        Add(a, b) => Add(fold(*a).into(), fold(*b).into()),
        Sub(a, b) => Sub(fold(*a).into(), fold(*b).into()),
        Mul(a, b) => Mul(fold(*a).into(), fold(*b).into()),
        Div(a, b) => Div(fold(*a).into(), fold(*b).into()),
        Pow(a, k) => Pow(fold(*a).into(), k),
        Neg(a) => Neg(fold(*a).into()),
        Sin(a) => Sin(fold(*a).into()),
        Cos(a) => Cos(fold(*a).into()),
        Exp(a) => Exp(fold(*a).into()),
        Ln(a) => Ln(fold(*a).into()),
        other => other,
    };
    match n {
        Add(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), rhs) if z == 0.0 => rhs,
            (lhs, Const(z)) if z == 0.0 => lhs,
            (a, b) => Add(a.into(), b.into()),
        },
        Sub(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => Const(x - y),
            (lhs, Const(z)) if z == 0.0 => lhs,
            (a, b) => Sub(a.into(), b.into()),
        },
        Mul(a, b) => match (*a, *b) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), rhs) if o == 1.0 => rhs,
            (lhs, Const(o)) if o == 1.0 => lhs,
            (a, b) => Mul(a.into(), b.into()),
        },
        Div(a, b) => match (*a, *b) {
            (Const(x), Const(y)) if y != 0.0 => Const(x / y),
            (Const(z), rhs) if z == 0.0 => {
                // Keep 0/expr as 0 only when the denominator is not the
                // constant zero.
                if matches!(rhs, Const(c) if c == 0.0) {
                    Div(Const(0.0).into(), rhs.into())
                } else {
                    Const(0.0)
                }
            }
            (lhs, Const(o)) if o == 1.0 => lhs,
            (a, b) => Div(a.into(), b.into()),
        },
        Pow(a, k) => match (*a, k) {
            (Const(x), k) if !(x == 0.0 && k < 0) => Const(x.powi(k)),
            (a, 1) => a,
            (_, 0) => Const(1.0),
            (a, k) => Pow(a.into(), k),
        },
        Neg(a) => match *a {
            Const(x) => Const(-x),
            Neg(inner) => *inner,
            a => Neg(a.into()),
        },
        Sin(a) => match *a {
            Const(x) => Const(x.sin()),
            a => Sin(a.into()),
        },
        Cos(a) => match *a {
            Const(x) => Const(x.cos()),
            a => Cos(a.into()),
        },
        Exp(a) => match *a {
            Const(x) => Const(x.exp()),
            a => Exp(a.into()),
        },
        Ln(a) => match *a {
            Const(x) if x > 0.0 => Const(x.ln()),
            a => Ln(a.into()),
        },
        other => other,
    }
}

// Precedence levels used by the printer; must agree with the parser.
fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if *c < 0.0 => 3, // prints with a leading minus
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.var.as_deref().unwrap_or("y");
        write_node(f, &self.root, var)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, n: &Node, var: &str, min_prec: u8) -> fmt::Result {
    if prec(n) < min_prec {
        write!(f, "(")?;
        write_node(f, n, var)?;
        write!(f, ")")
    } else {
        write_node(f, n, var)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node, var: &str) -> fmt::Result {
    match n {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "-{:?}", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Var => write!(f, "{var}"),
        Node::Add(a, b) => {
            write_child(f, a, var, 1)?;
            write!(f, "+")?;
            write_child(f, b, var, 2)
        }
        Node::Sub(a, b) => {
            write_child(f, a, var, 1)?;
            write!(f, "-")?;
            write_child(f, b, var, 2)
        }
        Node::Mul(a, b) => {
            write_child(f, a, var, 2)?;
            write!(f, "*")?;
            write_child(f, b, var, 3)
        }
        Node::Div(a, b) => {
            write_child(f, a, var, 2)?;
            write!(f, "/")?;
            write_child(f, b, var, 3)
        }
        Node::Pow(a, k) => {
            write_child(f, a, var, 5)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Node::Neg(a) => {
            write!(f, "-")?;
            write_child(f, a, var, 4)
        }
        Node::Sin(a) => {
            write!(f, "sin(")?;
            write_node(f, a, var)?;
            write!(f, ")")
        }
        Node::Cos(a) => {
            write!(f, "cos(")?;
            write_node(f, a, var)?;
            write!(f, ")")
        }
        Node::Exp(a) => {
            write!(f, "exp(")?;
            write_node(f, a, var)?;
            write!(f, ")")
        }
        Node::Ln(a) => {
            write!(f, "ln(")?;
            write_node(f, a, var)?;
            write!(f, ")")
        }
    }
}
