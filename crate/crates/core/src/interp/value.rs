use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::domains::LambdaValue;

/// Identifier of a heap cell; ids are handed out in allocation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub usize);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "&{}", self.0)
    }
}

/// A runtime value.
///
/// Equality is deep and structural, except that references compare by cell
/// identity and record fields compare irrespective of their order.
#[derive(Clone, Debug)]
pub enum Value {
    Null,
    Bool(bool),
    Int(BigInt),
    Array(Vec<Value>),
    Record(Vec<(String, Value)>),
    Ref(CellId),
    Lambda(Arc<LambdaValue>),
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(fields) => fields.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Short name of the value's shape, for error messages.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Array(_) => "array",
            Value::Record(_) => "record",
            Value::Ref(_) => "reference",
            Value::Lambda(_) => "function",
        }
    }

    /// True when the value contains no references or lambdas.
    pub fn is_plain(&self) -> bool {
        match self {
            Value::Null | Value::Bool(_) | Value::Int(_) => true,
            Value::Array(items) => items.iter().all(Value::is_plain),
            Value::Record(fields) => fields.iter().all(|(_, v)| v.is_plain()),
            Value::Ref(_) | Value::Lambda(_) => false,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            (Value::Record(a), Value::Record(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .all(|(n, v)| b.iter().find(|(m, _)| m == n).is_some_and(|(_, w)| v == w))
            }
            (Value::Ref(a), Value::Ref(b)) => a == b,
            (Value::Lambda(a), Value::Lambda(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v.into())
    }
}

/// Literal syntax: arrays as `[a,b]`, records as `{f=v, g=w}`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Record(fields) => {
                f.write_str("{")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}={v}")?;
                }
                f.write_str("}")
            }
            Value::Ref(id) => write!(f, "{id}"),
            Value::Lambda(l) => write!(f, "{l}"),
        }
    }
}

/// Heap of mutable cells addressed by [`CellId`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Heap {
    cells: Vec<Value>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn alloc(&mut self, value: Value) -> CellId {
        self.cells.push(value);
        CellId(self.cells.len() - 1)
    }

    pub fn get(&self, id: CellId) -> Option<&Value> {
        self.cells.get(id.0)
    }

    pub fn set(&mut self, id: CellId, value: Value) -> bool {
        match self.cells.get_mut(id.0) {
            Some(cell) => {
                *cell = value;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellId, &Value)> {
        self.cells.iter().enumerate().map(|(i, v)| (CellId(i), v))
    }
}

/// `{&0=true, &1=false}`
impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (id, v)) in self.cells().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{id}={v}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_syntax() {
        let v = Value::Record(vec![
            ("items".into(), Value::Array(vec![Value::int(-1)])),
            ("length".into(), Value::int(0)),
        ]);
        assert_eq!(v.to_string(), "{items=[-1], length=0}");
        assert_eq!(
            Value::Array(vec![Value::int(1), Value::int(2)]).to_string(),
            "[1,2]"
        );
    }

    #[test]
    fn record_equality_ignores_field_order() {
        let a = Value::Record(vec![
            ("x".into(), Value::int(0)),
            ("y".into(), Value::int(1)),
        ]);
        let b = Value::Record(vec![
            ("y".into(), Value::int(1)),
            ("x".into(), Value::int(0)),
        ]);
        let c = Value::Record(vec![("x".into(), Value::int(0))]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn refs_compare_by_cell() {
        let mut heap = Heap::new();
        let a = heap.alloc(Value::Bool(true));
        let b = heap.alloc(Value::Bool(true));
        assert_ne!(Value::Ref(a), Value::Ref(b));
        assert_eq!(Value::Ref(a), Value::Ref(a));
        assert_eq!(heap.to_string(), "{&0=true, &1=true}");
    }
}
