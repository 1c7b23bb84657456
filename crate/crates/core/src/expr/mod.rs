//! Closed-form expressions with exact symbolic derivatives.
//!
//! A [`ClosedForm`] is an immutable, reference-counted expression DAG over the
//! coordinates `x_0, x_1, ...`. Differentiation returns another `ClosedForm`,
//! so every solution family in the crate can be checked at machine precision
//! by evaluating its exact partial derivatives on a grid.
//!
//! Shared subtrees are kept shared: differentiation memoizes on node identity
//! and the compiled evaluator ([`Program`]) evaluates every distinct node once
//! per point. Fourth derivatives of the profile families stay small enough to
//! evaluate on full grids.

mod eval;
mod json;

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use eval::{eval_points, Program};

/// Elementary functions available as expression nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Cosh,
    Sinh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            _ => return None,
        })
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tanh => x.tanh(),
            Func::Cosh => x.cosh(),
            Func::Sinh => x.sinh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    /// `coef · x + constant`
    Affine {
        coef: Vec<f64>,
        constant: f64,
    },
    Add(ClosedForm, ClosedForm),
    Sub(ClosedForm, ClosedForm),
    Mul(ClosedForm, ClosedForm),
    Div(ClosedForm, ClosedForm),
    Neg(ClosedForm),
    /// Real power with a constant exponent.
    Pow(ClosedForm, f64),
    Apply(Func, ClosedForm),
    /// `∫_lower^upper integrand(s) ds`, the integrand written in `x_0`.
    Integral {
        integrand: ClosedForm,
        lower: f64,
        upper: ClosedForm,
    },
}

/// Exact expression with analytic derivatives.
#[derive(Clone, PartialEq)]
pub struct ClosedForm(Arc<Node>);

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedForm({self})")
    }
}

impl ClosedForm {
    fn new(node: Node) -> Self {
        ClosedForm(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::new(Node::Var(index))
    }

    /// `coef · x + constant`; collapses to a constant when all coefficients vanish.
    pub fn affine(coef: &[f64], constant: f64) -> Self {
        if coef.iter().all(|&c| c == 0.0) {
            return Self::constant(constant);
        }
        let mut coef = coef.to_vec();
        while coef.last() == Some(&0.0) {
            coef.pop();
        }
        Self::new(Node::Affine { coef, constant })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn as_affine(&self) -> Option<(Vec<f64>, f64)> {
        match self.node() {
            Node::Const(c) => Some((Vec::new(), *c)),
            Node::Var(i) => {
                let mut coef = vec![0.0; i + 1];
                coef[*i] = 1.0;
                Some((coef, 0.0))
            }
            Node::Affine { coef, constant } => Some((coef.clone(), *constant)),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn pow(&self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Self::one();
        }
        if exponent == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            return Self::constant(c.powf(exponent));
        }
        Self::new(Node::Pow(self.clone(), exponent))
    }

    pub fn sqrt(&self) -> Self {
        self.pow(0.5)
    }

    pub fn apply(&self, func: Func) -> Self {
        if let Some(c) = self.as_const() {
            return Self::constant(func.apply(c));
        }
        Self::new(Node::Apply(func, self.clone()))
    }

    pub fn exp(&self) -> Self {
        self.apply(Func::Exp)
    }
    pub fn ln(&self) -> Self {
        self.apply(Func::Ln)
    }
    pub fn sin(&self) -> Self {
        self.apply(Func::Sin)
    }
    pub fn cos(&self) -> Self {
        self.apply(Func::Cos)
    }
    pub fn tanh(&self) -> Self {
        self.apply(Func::Tanh)
    }
    pub fn cosh(&self) -> Self {
        self.apply(Func::Cosh)
    }
    pub fn sinh(&self) -> Self {
        self.apply(Func::Sinh)
    }

    /// `∫_lower^upper integrand(s) ds` where `integrand` is written in `x_0`.
    ///
    /// Uses an exact antiderivative when one exists in the primitive set,
    /// otherwise an [`Node::Integral`] node evaluated by adaptive quadrature.
    pub fn integral(integrand: &ClosedForm, lower: f64, upper: &ClosedForm) -> Self {
        if let Some(anti) = integrand.antiderivative() {
            let lo = anti.compose(&[ClosedForm::constant(lower)]);
            return anti.compose(std::slice::from_ref(upper)) - lo;
        }
        Self::new(Node::Integral {
            integrand: integrand.clone(),
            lower,
            upper: upper.clone(),
        })
    }

    /// Substitutes `x_i -> args[i]`. Coordinates beyond `args.len()` are left untouched.
    pub fn compose(&self, args: &[ClosedForm]) -> Self {
        let mut memo = HashMap::new();
        self.compose_memo(args, &mut memo)
    }

    fn compose_memo(&self, args: &[ClosedForm], memo: &mut HashMap<usize, ClosedForm>) -> Self {
        if let Some(hit) = memo.get(&self.key()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => args.get(*i).cloned().unwrap_or_else(|| self.clone()),
            Node::Affine { coef, constant } => {
                let mut acc = ClosedForm::constant(*constant);
                for (i, &c) in coef.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let xi = args.get(i).cloned().unwrap_or_else(|| ClosedForm::var(i));
                    acc = acc + c * xi;
                }
                acc
            }
            Node::Add(a, b) => a.compose_memo(args, memo) + b.compose_memo(args, memo),
            Node::Sub(a, b) => a.compose_memo(args, memo) - b.compose_memo(args, memo),
            Node::Mul(a, b) => a.compose_memo(args, memo) * b.compose_memo(args, memo),
            Node::Div(a, b) => a.compose_memo(args, memo) / b.compose_memo(args, memo),
            Node::Neg(a) => -a.compose_memo(args, memo),
            Node::Pow(a, p) => a.compose_memo(args, memo).pow(*p),
            Node::Apply(f, a) => a.compose_memo(args, memo).apply(*f),
            Node::Integral {
                integrand,
                lower,
                upper,
            } => ClosedForm::new(Node::Integral {
                integrand: integrand.clone(),
                lower: *lower,
                upper: upper.compose_memo(args, memo),
            }),
        };
        memo.insert(self.key(), out.clone());
        out
    }

    /// Exact partial derivative with respect to `x_axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut memo = HashMap::new();
        self.derivative_memo(axis, &mut memo)
    }

    fn derivative_memo(&self, axis: usize, memo: &mut HashMap<usize, ClosedForm>) -> Self {
        if let Some(hit) = memo.get(&self.key()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) => ClosedForm::zero(),
            Node::Var(i) => ClosedForm::constant(if *i == axis { 1.0 } else { 0.0 }),
            Node::Affine { coef, .. } => ClosedForm::constant(coef.get(axis).copied().unwrap_or(0.0)),
            Node::Add(a, b) => a.derivative_memo(axis, memo) + b.derivative_memo(axis, memo),
            Node::Sub(a, b) => a.derivative_memo(axis, memo) - b.derivative_memo(axis, memo),
            Node::Mul(a, b) => {
                let da = a.derivative_memo(axis, memo);
                let db = b.derivative_memo(axis, memo);
                da * b + a * db
            }
            Node::Div(a, b) => {
                let da = a.derivative_memo(axis, memo);
                let db = b.derivative_memo(axis, memo);
                if db.is_zero() {
                    da / b
                } else {
                    (da * b - a * db) / b.pow(2.0)
                }
            }
            Node::Neg(a) => -a.derivative_memo(axis, memo),
            Node::Pow(a, p) => {
                let da = a.derivative_memo(axis, memo);
                *p * a.pow(p - 1.0) * da
            }
            Node::Apply(f, a) => {
                let da = a.derivative_memo(axis, memo);
                if da.is_zero() {
                    ClosedForm::zero()
                } else {
                    let outer = match f {
                        Func::Exp => self.clone(),
                        Func::Ln => ClosedForm::one() / a,
                        Func::Sin => a.cos(),
                        Func::Cos => -a.sin(),
                        Func::Tanh => 1.0 - self.pow(2.0),
                        Func::Cosh => a.sinh(),
                        Func::Sinh => a.cosh(),
                    };
                    outer * da
                }
            }
            Node::Integral { integrand, upper, .. } => {
                let du = upper.derivative_memo(axis, memo);
                if du.is_zero() {
                    ClosedForm::zero()
                } else {
                    integrand.compose(std::slice::from_ref(upper)) * du
                }
            }
        };
        memo.insert(self.key(), out.clone());
        out
    }

    /// Mixed partial for a multi-index (`deriv[i]` = order along axis `i`).
    ///
    /// Axes are always differentiated in ascending order, so `∂x∂y e` and
    /// `∂y∂x e` are the same expression and evaluate bit-identically.
    pub fn partial(&self, deriv: &[usize]) -> Self {
        let mut out = self.clone();
        for (axis, &order) in deriv.iter().enumerate() {
            for _ in 0..order {
                out = out.derivative(axis);
            }
        }
        out
    }

    /// One past the highest coordinate index referenced.
    pub fn arity(&self) -> usize {
        let mut seen = HashMap::new();
        self.arity_memo(&mut seen)
    }

    fn arity_memo(&self, seen: &mut HashMap<usize, usize>) -> usize {
        if let Some(&a) = seen.get(&self.key()) {
            return a;
        }
        let a = match self.node() {
            Node::Const(_) => 0,
            Node::Var(i) => i + 1,
            Node::Affine { coef, .. } => coef.len(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.arity_memo(seen).max(b.arity_memo(seen))
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.arity_memo(seen),
            Node::Integral { upper, .. } => upper.arity_memo(seen),
        };
        seen.insert(self.key(), a);
        a
    }

    /// Exact antiderivative in `x_0` vanishing nowhere in particular, when the
    /// integrand is built from constants, powers of a linear argument and
    /// exp/sin/cos/sinh/cosh of a linear argument.
    pub fn antiderivative(&self) -> Option<ClosedForm> {
        let x = ClosedForm::var(0);
        match self.node() {
            Node::Const(c) => Some(*c * x),
            Node::Var(_) | Node::Affine { .. } => {
                let (alpha, beta) = self.linear_in_x0()?;
                Some(0.5 * alpha * x.pow(2.0) + beta * x)
            }
            Node::Add(a, b) => Some(a.antiderivative()? + b.antiderivative()?),
            Node::Sub(a, b) => Some(a.antiderivative()? - b.antiderivative()?),
            Node::Neg(a) => Some(-a.antiderivative()?),
            Node::Mul(a, b) => match (a.as_const(), b.as_const()) {
                (Some(c), _) => Some(c * b.antiderivative()?),
                (_, Some(c)) => Some(c * a.antiderivative()?),
                _ => None,
            },
            Node::Div(a, b) => {
                let c = b.as_const()?;
                Some(a.antiderivative()? / c)
            }
            Node::Pow(a, p) => {
                let (alpha, _) = a.linear_in_x0()?;
                if *p == -1.0 || alpha == 0.0 {
                    return None;
                }
                Some(a.pow(p + 1.0) / ((p + 1.0) * alpha))
            }
            Node::Apply(f, a) => {
                let (alpha, _) = a.linear_in_x0()?;
                if alpha == 0.0 {
                    return None;
                }
                let prim = match f {
                    Func::Exp => a.exp(),
                    Func::Sin => -a.cos(),
                    Func::Cos => a.sin(),
                    Func::Sinh => a.cosh(),
                    Func::Cosh => a.sinh(),
                    Func::Ln | Func::Tanh => return None,
                };
                Some(prim / alpha)
            }
            Node::Integral { .. } => None,
        }
    }

    /// `(alpha, beta)` when the expression is `alpha · x_0 + beta`.
    fn linear_in_x0(&self) -> Option<(f64, f64)> {
        let (coef, constant) = self.as_affine()?;
        if coef.iter().skip(1).any(|&c| c != 0.0) {
            return None;
        }
        Some((coef.first().copied().unwrap_or(0.0), constant))
    }

    /// Point evaluation. Compiles on every call; use [`Program`] in loops.
    pub fn eval(&self, point: &[f64]) -> crate::Result<f64> {
        let prog = Program::compile(&[self]);
        let mut out = [0.0];
        prog.eval_into(point, &mut Vec::new(), &mut out)?;
        Ok(out[0])
    }
}

// ---------------------------------------------------------------------------
// arithmetic with constant folding
// ---------------------------------------------------------------------------

fn add(a: &ClosedForm, b: &ClosedForm) -> ClosedForm {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if let (Some((ca, ka)), Some((cb, kb))) = (a.as_affine(), b.as_affine()) {
        let n = ca.len().max(cb.len());
        let coef: Vec<f64> = (0..n)
            .map(|i| ca.get(i).copied().unwrap_or(0.0) + cb.get(i).copied().unwrap_or(0.0))
            .collect();
        return ClosedForm::affine(&coef, ka + kb);
    }
    ClosedForm::new(Node::Add(a.clone(), b.clone()))
}

fn sub(a: &ClosedForm, b: &ClosedForm) -> ClosedForm {
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return neg(b);
    }
    if let (Some((ca, ka)), Some((cb, kb))) = (a.as_affine(), b.as_affine()) {
        let n = ca.len().max(cb.len());
        let coef: Vec<f64> = (0..n)
            .map(|i| ca.get(i).copied().unwrap_or(0.0) - cb.get(i).copied().unwrap_or(0.0))
            .collect();
        return ClosedForm::affine(&coef, ka - kb);
    }
    ClosedForm::new(Node::Sub(a.clone(), b.clone()))
}

fn neg(a: &ClosedForm) -> ClosedForm {
    match a.node() {
        Node::Const(c) => ClosedForm::constant(-c),
        Node::Neg(inner) => inner.clone(),
        Node::Var(_) | Node::Affine { .. } => {
            let (coef, k) = a.as_affine().expect("affine");
            let coef: Vec<f64> = coef.iter().map(|c| -c).collect();
            ClosedForm::affine(&coef, -k)
        }
        _ => ClosedForm::new(Node::Neg(a.clone())),
    }
}

fn mul(a: &ClosedForm, b: &ClosedForm) -> ClosedForm {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => return ClosedForm::constant(x * y),
        (Some(_), None) => return scale(a.as_const().unwrap(), b),
        (None, Some(y)) => return scale(y, a),
        _ => {}
    }
    ClosedForm::new(Node::Mul(a.clone(), b.clone()))
}

fn scale(c: f64, e: &ClosedForm) -> ClosedForm {
    if c == 0.0 {
        return ClosedForm::zero();
    }
    if c == 1.0 {
        return e.clone();
    }
    if c == -1.0 {
        return neg(e);
    }
    if let Some((coef, k)) = e.as_affine() {
        let coef: Vec<f64> = coef.iter().map(|v| c * v).collect();
        return ClosedForm::affine(&coef, c * k);
    }
    if let Node::Mul(x, y) = e.node() {
        if let Some(k) = x.as_const() {
            return scale(c * k, y);
        }
    }
    ClosedForm::new(Node::Mul(ClosedForm::constant(c), e.clone()))
}

fn div(a: &ClosedForm, b: &ClosedForm) -> ClosedForm {
    if a.is_zero() {
        return ClosedForm::zero();
    }
    if b.is_one() {
        return a.clone();
    }
    if let Some(y) = b.as_const() {
        if y != 0.0 {
            return scale(1.0 / y, a);
        }
    }
    ClosedForm::new(Node::Div(a.clone(), b.clone()))
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl ops::$trait<ClosedForm> for ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: ClosedForm) -> ClosedForm {
                $f(&self, &rhs)
            }
        }
        impl ops::$trait<&ClosedForm> for ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: &ClosedForm) -> ClosedForm {
                $f(&self, rhs)
            }
        }
        impl ops::$trait<ClosedForm> for &ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: ClosedForm) -> ClosedForm {
                $f(self, &rhs)
            }
        }
        impl ops::$trait<&ClosedForm> for &ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: &ClosedForm) -> ClosedForm {
                $f(self, rhs)
            }
        }
        impl ops::$trait<f64> for ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: f64) -> ClosedForm {
                $f(&self, &ClosedForm::constant(rhs))
            }
        }
        impl ops::$trait<f64> for &ClosedForm {
            type Output = ClosedForm;
            fn $method(self, rhs: f64) -> ClosedForm {
                $f(self, &ClosedForm::constant(rhs))
            }
        }
        impl ops::$trait<ClosedForm> for f64 {
            type Output = ClosedForm;
            fn $method(self, rhs: ClosedForm) -> ClosedForm {
                $f(&ClosedForm::constant(self), &rhs)
            }
        }
        impl ops::$trait<&ClosedForm> for f64 {
            type Output = ClosedForm;
            fn $method(self, rhs: &ClosedForm) -> ClosedForm {
                $f(&ClosedForm::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl ops::Neg for ClosedForm {
    type Output = ClosedForm;
    fn neg(self) -> ClosedForm {
        neg(&self)
    }
}

impl ops::Neg for &ClosedForm {
    type Output = ClosedForm;
    fn neg(self) -> ClosedForm {
        neg(self)
    }
}

impl From<f64> for ClosedForm {
    fn from(v: f64) -> Self {
        ClosedForm::constant(v)
    }
}

const VAR_NAMES: [&str; 4] = ["x", "y", "z", "t"];

fn var_name(i: usize) -> String {
    VAR_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("x{i}"))
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "{}", var_name(*i)),
            Node::Affine { coef, constant } => {
                write!(f, "(")?;
                let mut first = true;
                for (i, c) in coef.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}*{}", var_name(i))?;
                    first = false;
                }
                if *constant != 0.0 || first {
                    if !first {
                        write!(f, " + ")?;
                    }
                    write!(f, "{constant}")?;
                }
                write!(f, ")")
            }
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Pow(a, p) => write!(f, "{a}^{p}"),
            Node::Apply(func, a) => write!(f, "{}({a})", func.name()),
            Node::Integral {
                integrand,
                lower,
                upper,
            } => write!(f, "int[{lower}, {upper}]({integrand})"),
        }
    }
}
