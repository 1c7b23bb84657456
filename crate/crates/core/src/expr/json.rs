//! JSON form of [`ClosedForm`].
//!
//! ```json
//! {"op": "tanh", "args": [{"op": "affine", "coef": [0.7071, 0.0], "const": 0}]}
//! ```
//!
//! A bare number is shorthand for a constant and a string `"x"`, `"y"`,
//! `"z"` or `"x3"` for a coordinate. Time is the last coordinate, so write it
//! by index (`"x2"` in 2D, `"x3"` in 3D).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use super::{ClosedForm, Func, Node};
use crate::{Error, Result};

impl ClosedForm {
    pub fn to_json(&self) -> Value {
        match self.node() {
            Node::Const(c) => json!({"op": "const", "value": c}),
            Node::Var(i) => json!({"op": "var", "index": i}),
            Node::Affine { coef, constant } => {
                json!({"op": "affine", "coef": coef, "const": constant})
            }
            Node::Add(a, b) => json!({"op": "add", "args": [a.to_json(), b.to_json()]}),
            Node::Sub(a, b) => json!({"op": "sub", "args": [a.to_json(), b.to_json()]}),
            Node::Mul(a, b) => json!({"op": "mul", "args": [a.to_json(), b.to_json()]}),
            Node::Div(a, b) => json!({"op": "div", "args": [a.to_json(), b.to_json()]}),
            Node::Neg(a) => json!({"op": "neg", "args": [a.to_json()]}),
            Node::Pow(a, p) => json!({"op": "pow", "args": [a.to_json()], "exponent": p}),
            Node::Apply(f, a) => json!({"op": f.name(), "args": [a.to_json()]}),
            Node::Integral {
                integrand,
                lower,
                upper,
            } => json!({
                "op": "integral",
                "args": [integrand.to_json(), upper.to_json()],
                "lower": lower,
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<ClosedForm> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .map(ClosedForm::constant)
                .ok_or_else(|| Error::Expression(format!("bad number {n}"))),
            Value::String(s) => parse_var(s)
                .map(ClosedForm::var)
                .ok_or_else(|| Error::Expression(format!("unknown coordinate `{s}`"))),
            Value::Object(m) => from_object(m),
            other => Err(Error::Expression(format!("unexpected value {other}"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<ClosedForm> {
        let v: Value = serde_json::from_str(s)?;
        ClosedForm::from_json(&v)
    }
}

fn parse_var(s: &str) -> Option<usize> {
    match s {
        "x" => Some(0),
        "y" => Some(1),
        "z" => Some(2),
        _ => s.strip_prefix('x')?.parse().ok(),
    }
}

fn number(m: &Map<String, Value>, key: &str) -> Result<f64> {
    m.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Expression(format!("missing numeric `{key}`")))
}

fn from_object(m: &Map<String, Value>) -> Result<ClosedForm> {
    let op = m
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Expression("missing `op`".into()))?;
    let args: Vec<ClosedForm> = match m.get("args") {
        None => Vec::new(),
        Some(Value::Array(a)) => a.iter().map(ClosedForm::from_json).collect::<Result<_>>()?,
        Some(_) => return Err(Error::Expression(format!("`{op}`: args must be an array"))),
    };
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Expression(format!("`{op}` takes {n} args, got {}", args.len())))
        }
    };
    Ok(match op {
        "const" => ClosedForm::constant(number(m, "value")?),
        "var" => {
            let i = m
                .get("index")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Expression("`var` needs an integer `index`".into()))?;
            ClosedForm::var(i as usize)
        }
        "affine" => {
            let coef: Vec<f64> = m
                .get("coef")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Expression("`affine` needs `coef`".into()))?
                .iter()
                .map(|c| c.as_f64().ok_or_else(|| Error::Expression("non-numeric coef".into())))
                .collect::<Result<_>>()?;
            let k = m.get("const").and_then(Value::as_f64).unwrap_or(0.0);
            ClosedForm::affine(&coef, k)
        }
        "add" | "mul" => {
            if args.len() < 2 {
                return Err(Error::Expression(format!("`{op}` needs at least 2 args")));
            }
            let mut it = args.into_iter();
            let first = it.next().unwrap();
            it.fold(first, |acc, a| if op == "add" { acc + a } else { acc * a })
        }
        "sub" => {
            arity(2)?;
            &args[0] - &args[1]
        }
        "div" => {
            arity(2)?;
            &args[0] / &args[1]
        }
        "neg" => {
            arity(1)?;
            -&args[0]
        }
        "pow" => {
            arity(1)?;
            args[0].pow(number(m, "exponent")?)
        }
        "sqrt" => {
            arity(1)?;
            args[0].sqrt()
        }
        "integral" => {
            arity(2)?;
            if args[0].arity() > 1 {
                return Err(Error::Expression("integrand must depend on x0 only".into()));
            }
            ClosedForm::integral(
                &args[0],
                m.get("lower").and_then(Value::as_f64).unwrap_or(0.0),
                &args[1],
            )
        }
        name => match Func::from_name(name) {
            Some(f) => {
                arity(1)?;
                args[0].apply(f)
            }
            None => return Err(Error::Expression(format!("unknown op `{name}`"))),
        },
    })
}

impl Serialize for ClosedForm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedForm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ClosedForm::from_json(&v).map_err(D::Error::custom)
    }
}
