use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

/// A runtime value.
///
/// Equality is structural and type-strict. Floats compare by bit pattern, so
/// `+Inf`, `-Inf`, `-0.0` and every NaN payload are distinct, comparable
/// tokens. Observations compare `Value`s directly and never their printed
/// form: `Int(1)` and `Float(1.0)` both print as `1`.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Array(Vec<Value>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Str(_) => "str",
            Value::Array(_) => "array",
        }
    }

    /// Tagged JSON form: `{"int":3}`, `{"float":"0x3ff0000000000000"}`, ...
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(i) => json!({ "int": i }),
            Value::Float(f) => json!({ "float": format!("0x{:016x}", f.to_bits()) }),
            Value::Bool(b) => json!({ "bool": b }),
            Value::Str(s) => json!({ "str": s }),
            Value::Array(items) => {
                json!({ "array": items.iter().map(Value::to_json).collect::<Vec<_>>() })
            }
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value, String> {
        let obj = v
            .as_object()
            .ok_or_else(|| format!("value literal must be a tagged object, got {v}"))?;
        if obj.len() != 1 {
            return Err(format!("value literal must have exactly one tag, got {v}"));
        }
        let (tag, payload) = obj.iter().next().expect("one entry");
        match tag.as_str() {
            "int" => payload
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| format!("bad int literal {payload}")),
            "float" => {
                let s = payload
                    .as_str()
                    .ok_or_else(|| format!("float literal must be a hex string, got {payload}"))?;
                let hex = s
                    .strip_prefix("0x")
                    .or_else(|| s.strip_prefix("0X"))
                    .ok_or_else(|| format!("float literal must start with 0x, got {s}"))?;
                u64::from_str_radix(hex, 16)
                    .map(|bits| Value::Float(f64::from_bits(bits)))
                    .map_err(|e| format!("bad float bit pattern {s}: {e}"))
            }
            "bool" => payload
                .as_bool()
                .map(Value::Bool)
                .ok_or_else(|| format!("bad bool literal {payload}")),
            "str" => payload
                .as_str()
                .map(|s| Value::Str(s.to_string()))
                .ok_or_else(|| format!("bad str literal {payload}")),
            "array" => payload
                .as_array()
                .ok_or_else(|| format!("bad array literal {payload}"))?
                .iter()
                .map(Value::from_json)
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Array),
            other => Err(format!("unknown value tag `{other}`")),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        Value::from_json(&raw).map_err(D::Error::custom)
    }
}

/// Human-oriented rendering. Not injective; never used for comparison.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::Array(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}
