//! Text emission shared by every writer: numbers always carry 17
//! significant digits, non-finite values are spelled `inf` / `-inf` / `nan`.

use std::fmt::Write as _;

/// Formats `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

/// Minimal ordered JSON value. Floats go through [`fmt17`]; non-finite
/// floats become the strings `"inf"`, `"-inf"` or `"nan"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn object() -> Self {
        Json::Object(Vec::new())
    }

    /// Appends a key to an object. Panics on non-objects.
    pub fn with(mut self, key: &str, value: impl Into<Json>) -> Self {
        match &mut self {
            Json::Object(fields) => fields.push((key.to_owned(), value.into())),
            _ => panic!("Json::with on a non-object"),
        }
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s, 0);
        s.push('\n');
        s
    }

    fn render_into(&self, s: &mut String, indent: usize) {
        match self {
            Json::Num(x) if x.is_finite() => s.push_str(&fmt17(*x)),
            Json::Num(x) => s.push_str(&quote(&fmt17(*x))),
            Json::Int(i) => {
                let _ = write!(s, "{i}");
            }
            Json::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
            Json::Str(t) => s.push_str(&quote(t)),
            Json::Array(items) => {
                if items.is_empty() {
                    s.push_str("[]");
                    return;
                }
                s.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    pad(s, indent + 1);
                    item.render_into(s, indent + 1);
                    s.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(s, indent);
                s.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    s.push_str("{}");
                    return;
                }
                s.push_str("{\n");
                for (k, (key, value)) in fields.iter().enumerate() {
                    pad(s, indent + 1);
                    s.push_str(&quote(key));
                    s.push_str(": ");
                    value.render_into(s, indent + 1);
                    s.push_str(if k + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(s, indent);
                s.push('}');
            }
        }
    }
}

fn pad(s: &mut String, indent: usize) {
    for _ in 0..indent {
        s.push_str("  ");
    }
}

fn quote(t: &str) -> String {
    serde_json::to_string(t).expect("string serialization cannot fail")
}

impl From<f64> for Json {
    fn from(x: f64) -> Self {
        Json::Num(x)
    }
}

impl From<i64> for Json {
    fn from(x: i64) -> Self {
        Json::Int(x)
    }
}

impl From<usize> for Json {
    fn from(x: usize) -> Self {
        Json::Int(x as i64)
    }
}

impl From<u64> for Json {
    fn from(x: u64) -> Self {
        Json::Int(x as i64)
    }
}

impl From<bool> for Json {
    fn from(x: bool) -> Self {
        Json::Bool(x)
    }
}

impl From<&str> for Json {
    fn from(x: &str) -> Self {
        Json::Str(x.to_owned())
    }
}

impl From<String> for Json {
    fn from(x: String) -> Self {
        Json::Str(x)
    }
}

impl From<Vec<Json>> for Json {
    fn from(x: Vec<Json>) -> Self {
        Json::Array(x)
    }
}

/// Reads a number emitted by [`Json::render`], accepting the quoted
/// non-finite spellings.
pub fn json_f64(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}
