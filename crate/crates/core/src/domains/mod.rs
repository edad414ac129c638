//! Finite, integer-indexed value spaces for types.
//!
//! Every domain has an exact size and a bijection `at`/`index_of` between
//! `0..size` and its values. Composite domains use mixed-radix encoding
//! with the first component in the least significant digit.

mod tuple;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::interp::{Heap, Value};
use crate::syntax::{print_type, Program, TypeExpr};

pub use tuple::{Component, TupleDomain};

/// Bounds naming a finite input universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DomainParams {
    pub int_min: i64,
    pub int_max: i64,
    pub max_array_len: usize,
    pub max_depth: usize,
    pub alias_width: usize,
    pub max_rotation: usize,
}

impl Default for DomainParams {
    fn default() -> Self {
        DomainParams {
            int_min: -3,
            int_max: 3,
            max_array_len: 3,
            max_depth: 3,
            alias_width: 3,
            max_rotation: 2,
        }
    }
}

impl DomainParams {
    /// The same bound `n` for every parameter, integers ranging over `-n..=n`.
    pub fn uniform(n: usize) -> Self {
        DomainParams {
            int_min: -(n as i64),
            int_max: n as i64,
            max_array_len: n,
            max_depth: n,
            alias_width: n,
            max_rotation: n,
        }
    }
}

impl fmt::Display for DomainParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "int {}..{}, array length {}, depth {}, alias width {}, rotation {}",
            self.int_min,
            self.int_max,
            self.max_array_len,
            self.max_depth,
            self.alias_width,
            self.max_rotation
        )
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("unsupported type for generation: {0}")]
    Unsupported(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("invalid parameters: int_min {0} exceeds int_max {1}")]
    InvalidBounds(i64, i64),
}

/// A finite indexed set of values.
#[derive(Debug)]
pub struct Domain {
    size: BigUint,
    kind: Kind,
}

#[derive(Debug)]
enum Kind {
    Empty,
    Null,
    Bool,
    Int {
        min: BigInt,
    },
    /// `blocks[L]` is the number of arrays of length `L`.
    Array {
        elem: Arc<Domain>,
        blocks: Vec<BigUint>,
    },
    Record {
        names: Vec<String>,
        fields: Product,
    },
    Union(Vec<Arc<Domain>>),
    Lambda(Arc<LambdaSpace>),
    /// A single reference parameter: one fresh cell per value.
    Reference(Arc<Domain>),
}

impl Domain {
    fn new(kind: Kind) -> Self {
        let size = match &kind {
            Kind::Empty => BigUint::zero(),
            Kind::Null => BigUint::one(),
            Kind::Bool => BigUint::from(2u8),
            Kind::Int { .. } => unreachable!("int sizes are set by the builder"),
            Kind::Array { blocks, .. } => blocks.iter().sum(),
            Kind::Record { fields, .. } => fields.size.clone(),
            Kind::Union(members) => members.iter().map(|m| &m.size).sum(),
            Kind::Lambda(space) => space.size(),
            Kind::Reference(inner) => inner.size.clone(),
        };
        Domain { size, kind }
    }

    fn int(min: i64, max: i64) -> Self {
        Domain {
            size: BigUint::from((max as i128 - min as i128 + 1) as u128),
            kind: Kind::Int { min: min.into() },
        }
    }

    pub fn size(&self) -> &BigUint {
        &self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size.is_zero()
    }

    /// The value at `index`, allocating any cells it needs in `heap`.
    ///
    /// Panics unless `index < size`.
    pub fn at(&self, index: &BigUint, heap: &mut Heap) -> Value {
        assert!(
            index < &self.size,
            "index {index} outside domain of size {}",
            self.size
        );
        match &self.kind {
            Kind::Empty => unreachable!(),
            Kind::Null => Value::Null,
            Kind::Bool => Value::Bool(!index.is_zero()),
            Kind::Int { min } => Value::Int(min + BigInt::from(index.clone())),
            Kind::Array { elem, blocks } => {
                let mut rest = index.clone();
                for (len, block) in blocks.iter().enumerate() {
                    if &rest < block {
                        let mut items = Vec::with_capacity(len);
                        for _ in 0..len {
                            let (q, digit) = rest.div_rem(&elem.size);
                            items.push(elem.at(&digit, heap));
                            rest = q;
                        }
                        return Value::Array(items);
                    }
                    rest -= block;
                }
                unreachable!()
            }
            Kind::Record { names, fields } => Value::Record(
                names
                    .iter()
                    .cloned()
                    .zip(fields.decode(index, heap))
                    .collect(),
            ),
            Kind::Union(members) => {
                let mut rest = index.clone();
                for m in members {
                    if rest < m.size {
                        return m.at(&rest, heap);
                    }
                    rest -= &m.size;
                }
                unreachable!()
            }
            Kind::Lambda(space) => Value::Lambda(Arc::new(LambdaValue {
                space: space.clone(),
                rotation: index.clone(),
            })),
            Kind::Reference(inner) => {
                let v = inner.at(index, heap);
                Value::Ref(heap.alloc(v))
            }
        }
    }

    /// Inverse of [`Self::at`]. For unions the first member containing the
    /// value wins.
    pub fn index_of(&self, value: &Value, heap: &Heap) -> Option<BigUint> {
        match (&self.kind, value) {
            (Kind::Null, Value::Null) => Some(BigUint::zero()),
            (Kind::Bool, Value::Bool(b)) => Some(BigUint::from(*b as u8)),
            (Kind::Int { min }, Value::Int(v)) => {
                let offset = (v - min).to_biguint()?;
                (offset < self.size).then_some(offset)
            }
            (Kind::Array { elem, blocks }, Value::Array(items)) => {
                if items.len() >= blocks.len() {
                    return None;
                }
                let mut index = BigUint::zero();
                for item in items.iter().rev() {
                    index = index * &elem.size + elem.index_of(item, heap)?;
                }
                Some(index + blocks[..items.len()].iter().sum::<BigUint>())
            }
            (Kind::Record { names, fields }, Value::Record(vals)) => {
                if vals.len() != names.len() {
                    return None;
                }
                let parts: Option<Vec<&Value>> = names.iter().map(|n| value.field(n)).collect();
                fields.encode(&parts?, heap)
            }
            (Kind::Union(members), v) => {
                let mut offset = BigUint::zero();
                for m in members {
                    if let Some(i) = m.index_of(v, heap) {
                        return Some(offset + i);
                    }
                    offset += &m.size;
                }
                None
            }
            (Kind::Lambda(space), Value::Lambda(l)) => (Arc::ptr_eq(&l.space, space)
                || *l.space == **space)
                .then(|| l.rotation.clone())
                .filter(|r| r < &self.size),
            (Kind::Reference(inner), Value::Ref(id)) => inner.index_of(heap.get(*id)?, heap),
            _ => None,
        }
    }
}

/// Mixed-radix product of component domains; component 0 is the least
/// significant digit.
#[derive(Debug)]
pub(crate) struct Product {
    parts: Vec<Arc<Domain>>,
    size: BigUint,
}

impl Product {
    pub(crate) fn new(parts: Vec<Arc<Domain>>) -> Self {
        let size = parts.iter().map(|p| &p.size).product();
        Product { parts, size }
    }

    pub(crate) fn decode(&self, index: &BigUint, heap: &mut Heap) -> Vec<Value> {
        let mut rest = index.clone();
        self.parts
            .iter()
            .map(|p| {
                let (q, digit) = rest.div_rem(&p.size);
                rest = q;
                p.at(&digit, heap)
            })
            .collect()
    }

    pub(crate) fn encode(&self, values: &[&Value], heap: &Heap) -> Option<BigUint> {
        if values.len() != self.parts.len() {
            return None;
        }
        let mut index = BigUint::zero();
        for (p, v) in self.parts.iter().zip(values).rev() {
            index = index * &p.size + p.index_of(v, heap)?;
        }
        Some(index)
    }
}

/// The rotation family for one lambda signature.
#[derive(Debug)]
pub struct LambdaSpace {
    signature: TypeExpr,
    input: Product,
    output: Product,
    max_rotation: usize,
}

impl LambdaSpace {
    fn size(&self) -> BigUint {
        self.output
            .size
            .clone()
            .min(BigUint::from(self.max_rotation) + 1u8)
    }
}

impl PartialEq for LambdaSpace {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.input.size == other.input.size
            && self.output.size == other.output.size
    }
}

/// A generated lambda mapping input index `i` to output index
/// `(i + rotation) mod |output|`.
#[derive(Clone, Debug)]
pub struct LambdaValue {
    space: Arc<LambdaSpace>,
    rotation: BigUint,
}

impl LambdaValue {
    pub fn signature(&self) -> &TypeExpr {
        &self.space.signature
    }

    pub fn rotation(&self) -> &BigUint {
        &self.rotation
    }

    /// Results for `args`, or `None` when `args` lie outside the input domain.
    pub fn apply(&self, args: &[Value]) -> Option<Vec<Value>> {
        let heap = Heap::new();
        let refs: Vec<&Value> = args.iter().collect();
        let i = self.space.input.encode(&refs, &heap)?;
        self.output_at(&i)
    }

    fn output_at(&self, input_index: &BigUint) -> Option<Vec<Value>> {
        let out = &self.space.output;
        if out.size.is_zero() {
            return None;
        }
        let j = (input_index + &self.rotation) % &out.size;
        Some(out.decode(&j, &mut Heap::new()))
    }
}

impl PartialEq for LambdaValue {
    fn eq(&self, other: &Self) -> bool {
        self.rotation == other.rotation && *self.space == *other.space
    }
}

impl Eq for LambdaValue {}

const LAMBDA_DISPLAY_LIMIT: u32 = 8;

fn tuple_literal(values: &[Value]) -> String {
    match values {
        [one] => one.to_string(),
        many => {
            let parts: Vec<String> = many.iter().map(ToString::to_string).collect();
            format!("({})", parts.join(","))
        }
    }
}

/// `fn{-1->false, 0->true, 1->false}` for small input domains, otherwise
/// `fn{rotation=k}`.
impl fmt::Display for LambdaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self
            .space
            .input
            .size
            .to_u32()
            .filter(|&n| n <= LAMBDA_DISPLAY_LIMIT);
        let Some(n) = n else {
            return write!(f, "fn{{rotation={}}}", self.rotation);
        };
        f.write_str("fn{")?;
        for i in 0..n {
            if i > 0 {
                f.write_str(", ")?;
            }
            let i = BigUint::from(i);
            let input = self.space.input.decode(&i, &mut Heap::new());
            let output = self.output_at(&i).unwrap_or_default();
            write!(f, "{}->{}", tuple_literal(&input), tuple_literal(&output))?;
        }
        f.write_str("}")
    }
}

/// Builds domains for the types of one program, memoising named types per
/// remaining depth budget.
pub struct Builder<'p> {
    program: &'p Program,
    params: DomainParams,
    named: HashMap<(String, i64), Arc<Domain>>,
    int: Arc<Domain>,
}

impl<'p> Builder<'p> {
    pub fn new(program: &'p Program, params: DomainParams) -> Result<Self, DomainError> {
        if params.int_min > params.int_max {
            return Err(DomainError::InvalidBounds(params.int_min, params.int_max));
        }
        Ok(Builder {
            program,
            params,
            named: HashMap::new(),
            int: Arc::new(Domain::int(params.int_min, params.int_max)),
        })
    }

    pub fn params(&self) -> &DomainParams {
        &self.params
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    /// Domain of `ty` at the full depth budget. A top-level reference is
    /// built as a single fresh cell.
    pub fn build(&mut self, ty: &TypeExpr) -> Result<Arc<Domain>, DomainError> {
        match ty {
            TypeExpr::Reference(inner) => {
                let inner = self.build_nested(inner)?;
                Ok(Arc::new(Domain::new(Kind::Reference(inner))))
            }
            _ => self.build_nested(ty),
        }
    }

    /// Domain of `ty` where references are not allowed.
    pub(crate) fn build_nested(&mut self, ty: &TypeExpr) -> Result<Arc<Domain>, DomainError> {
        self.build_at(ty, self.params.max_depth as i64)
    }

    fn build_at(&mut self, ty: &TypeExpr, budget: i64) -> Result<Arc<Domain>, DomainError> {
        Ok(match ty {
            TypeExpr::Null => Arc::new(Domain::new(Kind::Null)),
            TypeExpr::Bool => Arc::new(Domain::new(Kind::Bool)),
            TypeExpr::Int => self.int.clone(),
            TypeExpr::Array(elem) => {
                let elem = self.build_at(elem, budget)?;
                let mut blocks = Vec::with_capacity(self.params.max_array_len + 1);
                let mut block = BigUint::one();
                for _ in 0..=self.params.max_array_len {
                    blocks.push(block.clone());
                    block *= &elem.size;
                }
                Arc::new(Domain::new(Kind::Array { elem, blocks }))
            }
            TypeExpr::Record { fields, .. } => {
                let mut parts = Vec::with_capacity(fields.len());
                for (_, t) in fields {
                    parts.push(self.build_at(t, budget)?);
                }
                Arc::new(Domain::new(Kind::Record {
                    names: fields.iter().map(|(n, _)| n.clone()).collect(),
                    fields: Product::new(parts),
                }))
            }
            TypeExpr::Union(members) => {
                let mut parts = Vec::with_capacity(members.len());
                for m in members {
                    parts.push(self.build_at(m, budget)?);
                }
                Arc::new(Domain::new(Kind::Union(parts)))
            }
            TypeExpr::Named(name) => self.build_named(name, budget)?,
            TypeExpr::Reference(_) => {
                return Err(DomainError::Unsupported(format!(
                    "reference `{}` nested inside another type",
                    print_type(ty)
                )))
            }
            TypeExpr::Lambda { params, returns } => {
                let mut input = Vec::new();
                for p in params {
                    input.push(self.build_at(p, budget)?);
                }
                let mut output = Vec::new();
                for r in returns {
                    output.push(self.build_at(r, budget)?);
                }
                let space = LambdaSpace {
                    signature: ty.clone(),
                    input: Product::new(input),
                    output: Product::new(output),
                    max_rotation: self.params.max_rotation,
                };
                Arc::new(Domain::new(Kind::Lambda(Arc::new(space))))
            }
        })
    }

    /// Underlying domain of a named type; its invariants are left to the
    /// caller. Each unfolding of a recursive type spends one unit of budget.
    fn build_named(&mut self, name: &str, budget: i64) -> Result<Arc<Domain>, DomainError> {
        let program = self.program;
        let decl = program
            .type_decl(name)
            .ok_or_else(|| DomainError::UnknownType(name.to_string()))?;
        let recursive = program.is_recursive(name);
        if recursive && budget < 0 {
            return Ok(Arc::new(Domain::new(Kind::Empty)));
        }
        let key = (name.to_string(), budget);
        if let Some(d) = self.named.get(&key) {
            return Ok(d.clone());
        }
        let inner_budget = if recursive { budget - 1 } else { budget };
        let domain = self.build_at(&decl.ty, inner_budget)?;
        self.named.insert(key, domain.clone());
        Ok(domain)
    }
}

/// Domain of `ty` for `program` under `params`.
pub fn build(
    ty: &TypeExpr,
    params: DomainParams,
    program: &Program,
) -> Result<Arc<Domain>, DomainError> {
    Builder::new(program, params)?.build(ty)
}

#[cfg(test)]
mod tests;
