use cosm_core::{CostVector, ExtCost, Intensity, MetricTable, Rational, Scalar, System};
use serde_json::{json, Value};

pub fn cost(c: &ExtCost<Rational>) -> Value {
    Value::String(c.to_exact_string())
}

pub fn intensity(i: &Intensity<Rational>) -> Value {
    Value::String(i.to_exact_string())
}

pub fn scalar(s: &Rational) -> Value {
    Value::String(s.to_exact_string())
}

pub fn vector(v: &CostVector<Rational>) -> Value {
    Value::Array(v.0.iter().map(cost).collect())
}

pub fn names(system: &System, xs: impl IntoIterator<Item = usize>) -> Value {
    Value::Array(xs.into_iter().map(|x| json!(system.name(x))).collect())
}

pub fn table_json(system: &System, t: &MetricTable<Rational>) -> Value {
    json!({
        "construction": t.construction,
        "alpha": t.alpha.as_ref().map(scalar),
        "entities": names(system, 0..t.len()),
        "rows": t.rows().iter().map(|r| r.iter().map(scalar).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// Entity names are quoted only when they need it.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row<I: IntoIterator<Item = String>>(fields: I) -> String {
    let mut line = fields.into_iter().map(|f| csv_field(&f)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

pub fn table_csv(system: &System, t: &MetricTable<Rational>) -> String {
    let mut out = csv_row(std::iter::once(String::new()).chain(system.entities().iter().cloned()));
    for (x, row) in t.rows().iter().enumerate() {
        out += &csv_row(std::iter::once(system.name(x).to_string()).chain(row.iter().map(Scalar::to_exact_string)));
    }
    out
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
