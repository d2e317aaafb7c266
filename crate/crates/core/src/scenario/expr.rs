//! Scalar field expressions in `x` (and `y`), e.g. `0.3 * sin(x) * cos(y)`.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, EvalexprError,
    Function, HashMapContext, Node, Value,
};

use crate::error::{Error, Result};

const UNARY: [(&str, fn(f64) -> f64); 12] = [
    ("sin", f64::sin),
    ("cos", f64::cos),
    ("tan", f64::tan),
    ("exp", f64::exp),
    ("ln", f64::ln),
    ("sqrt", f64::sqrt),
    ("abs", f64::abs),
    ("sinh", f64::sinh),
    ("cosh", f64::cosh),
    ("tanh", f64::tanh),
    ("atan", f64::atan),
    ("sech", |x| 1.0 / x.cosh()),
];

/// A parsed expression; integer literals are read as floats so `1/2` is `0.5`.
#[derive(Debug, Clone)]
pub struct FieldExpr {
    source: String,
    tree: Node<DefaultNumericTypes>,
    vars: Vec<&'static str>,
}

/// Appends `.0` to bare integer literals.
fn floatify(src: &str) -> String {
    let b = src.as_bytes();
    let digits = |mut i: usize| {
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < b.len() {
        let prev_word = i > 0 && (b[i - 1].is_ascii_alphanumeric() || b[i - 1] == b'_' || b[i - 1] == b'.');
        if b[i].is_ascii_digit() && !prev_word {
            let start = i;
            i = digits(i);
            let mut float = false;
            if i < b.len() && b[i] == b'.' {
                float = true;
                i = digits(i + 1);
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut k = i + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && b[k].is_ascii_digit() {
                    float = true;
                    i = digits(k);
                }
            }
            out.push_str(&src[start..i]);
            if !float {
                out.push_str(".0");
            }
            continue;
        }
        let c = src[i..].chars().next().expect("in bounds");
        out.push(c);
        i += c.len_utf8();
    }
    out
}

fn context() -> HashMapContext<DefaultNumericTypes> {
    let mut ctx = HashMapContext::new();
    for (name, f) in UNARY {
        ctx.set_function(
            name.into(),
            Function::new(move |arg: &Value<DefaultNumericTypes>| Ok(Value::Float(f(arg.as_number()?)))),
        )
        .expect("fresh context");
    }
    ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI)).expect("fresh context");
    ctx.set_value("tau".into(), Value::Float(std::f64::consts::TAU)).expect("fresh context");
    ctx
}

impl FieldExpr {
    /// Parses `src`, accepting only the variables in `vars` plus `pi` and `tau`.
    pub fn parse(src: &str, vars: &[&'static str]) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(&floatify(src))
            .map_err(|e| Error::Expression(format!("`{src}`: {e}")))?;
        for v in tree.iter_read_variable_identifiers() {
            if !vars.contains(&v) && v != "pi" && v != "tau" {
                return Err(Error::Expression(format!(
                    "`{src}`: unknown variable `{v}` (allowed: {}, pi, tau)",
                    vars.join(", ")
                )));
            }
        }
        for f in tree.iter_function_identifiers() {
            if !UNARY.iter().any(|(n, _)| *n == f) {
                let known: Vec<&str> = UNARY.iter().map(|(n, _)| *n).collect();
                return Err(Error::Expression(format!("`{src}`: unknown function `{f}` (known: {})", known.join(", "))));
            }
        }
        let e = Self {
            source: src.into(),
            tree,
            vars: vars.to_vec(),
        };
        // catch type errors such as boolean results up front
        e.sampler()?.eval(&vec![0.5; vars.len()])?;
        Ok(e)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluator that reuses one context across points.
    pub fn sampler(&self) -> Result<Sampler<'_>> {
        Ok(Sampler {
            expr: self,
            ctx: context(),
        })
    }
}

pub struct Sampler<'a> {
    expr: &'a FieldExpr,
    ctx: HashMapContext<DefaultNumericTypes>,
}

impl Sampler<'_> {
    pub fn eval(&mut self, point: &[f64]) -> Result<f64> {
        let err = |e: EvalexprError<DefaultNumericTypes>| Error::Expression(format!("`{}`: {e}", self.expr.source));
        for (name, v) in self.expr.vars.iter().zip(point) {
            self.ctx.set_value((*name).into(), Value::Float(*v)).map_err(err)?;
        }
        let v = self.expr.tree.eval_number_with_context(&self.ctx).map_err(err)?;
        if !v.is_finite() {
            return Err(Error::Expression(format!("`{}` is not finite at {point:?}", self.expr.source)));
        }
        Ok(v)
    }
}
