use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Builder, Domain, DomainError};
use crate::interp::{CellId, Heap, Value};
use crate::syntax::{FunctionDecl, TypeExpr};

/// One digit of a [`TupleDomain`] index.
#[derive(Debug)]
pub enum Component {
    /// A non-reference parameter.
    Plain { param: usize, domain: Arc<Domain> },
    /// All reference parameters sharing one referent type.
    Group(RefGroup),
}

impl Component {
    fn size(&self) -> &BigUint {
        match self {
            Component::Plain { domain, .. } => domain.size(),
            Component::Group(g) => &g.size,
        }
    }
}

/// Heap shapes for `m` same-typed reference parameters.
///
/// Block `k` (for `k = K, K-1, ..., 1`) materialises `k` cells and points
/// the `i`-th parameter (1-based) at cell `min(i, k)`.
#[derive(Debug)]
pub struct RefGroup {
    params: Vec<usize>,
    referent: Arc<Domain>,
    /// `(k, n^k)` in descending `k`.
    blocks: Vec<(usize, BigUint)>,
    size: BigUint,
}

impl RefGroup {
    fn new(params: Vec<usize>, referent: Arc<Domain>, alias_width: usize) -> Self {
        let max_cells = params.len().min(alias_width.max(1));
        let blocks: Vec<(usize, BigUint)> = (1..=max_cells)
            .rev()
            .map(|k| (k, num_traits::pow(referent.size().clone(), k)))
            .collect();
        let size = blocks.iter().map(|(_, s)| s).sum();
        RefGroup {
            params,
            referent,
            blocks,
            size,
        }
    }

    pub fn params(&self) -> &[usize] {
        &self.params
    }

    fn decode(&self, index: &BigUint, args: &mut [Value], heap: &mut Heap) {
        let mut rest = index.clone();
        for (k, block) in &self.blocks {
            if &rest < block {
                let n = self.referent.size();
                let mut cells = Vec::with_capacity(*k);
                for _ in 0..*k {
                    let (q, digit) = rest.div_rem(n);
                    rest = q;
                    let v = self.referent.at(&digit, heap);
                    cells.push(heap.alloc(v));
                }
                for (i, &p) in self.params.iter().enumerate() {
                    args[p] = Value::Ref(cells[i.min(k - 1)]);
                }
                return;
            }
            rest -= block;
        }
        unreachable!()
    }

    fn encode(&self, args: &[Value], heap: &Heap) -> Option<BigUint> {
        let ids: Option<Vec<CellId>> = self
            .params
            .iter()
            .map(|&p| match &args[p] {
                Value::Ref(id) => Some(*id),
                _ => None,
            })
            .collect();
        let ids = ids?;
        // cells must appear as c1, c2, ..., ck, ck, ..., ck with ci distinct
        let mut k = 1;
        while k < ids.len() && !ids[..k].contains(&ids[k]) {
            k += 1;
        }
        if ids[k..].iter().any(|id| *id != ids[k - 1]) {
            return None;
        }
        let mut offset = BigUint::zero();
        for (bk, block) in &self.blocks {
            if *bk == k {
                let n = self.referent.size();
                let mut index = BigUint::zero();
                for id in ids[..k].iter().rev() {
                    index = index * n + self.referent.index_of(heap.get(*id)?, heap)?;
                }
                return Some(offset + index);
            }
            offset += block;
        }
        None
    }
}

/// Input space of a function: the mixed-radix product of its components,
/// ordered by first parameter position.
#[derive(Debug)]
pub struct TupleDomain {
    arity: usize,
    components: Vec<Component>,
    size: BigUint,
}

impl TupleDomain {
    /// Builds the input space of `decl` over the underlying types of its
    /// parameters.
    pub fn build(decl: &FunctionDecl, builder: &mut Builder<'_>) -> Result<Self, DomainError> {
        let alias_width = builder.params().alias_width;
        let mut components = Vec::new();
        let mut groups: Vec<(TypeExpr, Vec<usize>)> = Vec::new();
        let mut slots: Vec<Option<usize>> = Vec::new();
        for (i, p) in decl.params.iter().enumerate() {
            match &p.ty {
                TypeExpr::Reference(inner) => {
                    match groups.iter_mut().position(|(t, _)| t == &**inner) {
                        Some(g) => groups[g].1.push(i),
                        None => {
                            groups.push(((**inner).clone(), vec![i]));
                            slots.push(None);
                        }
                    }
                }
                ty => {
                    components.push(Component::Plain {
                        param: i,
                        domain: builder.build_nested(ty)?,
                    });
                    slots.push(Some(components.len() - 1));
                }
            }
        }
        // interleave groups at the position of their first parameter
        let mut plain = components.into_iter().map(Some).collect::<Vec<_>>();
        let mut groups = groups.into_iter();
        let mut ordered = Vec::with_capacity(slots.len());
        for slot in slots {
            match slot {
                Some(c) => ordered.push(plain[c].take().unwrap()),
                None => {
                    let (ty, params) = groups.next().unwrap();
                    let referent = builder.build_nested(&ty)?;
                    ordered.push(Component::Group(RefGroup::new(
                        params,
                        referent,
                        alias_width,
                    )));
                }
            }
        }
        let size = ordered.iter().map(Component::size).product();
        Ok(TupleDomain {
            arity: decl.params.len(),
            components: ordered,
            size,
        })
    }

    pub fn size(&self) -> &BigUint {
        &self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size.is_zero()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Arguments and initial heap at `index`. Panics unless `index < size`.
    pub fn at(&self, index: &BigUint) -> (Vec<Value>, Heap) {
        assert!(
            index < &self.size,
            "index {index} outside tuple domain of size {}",
            self.size
        );
        let mut heap = Heap::new();
        let mut args = vec![Value::Null; self.arity];
        let mut rest = index.clone();
        for c in &self.components {
            let (q, digit) = rest.div_rem(c.size());
            rest = q;
            match c {
                Component::Plain { param, domain } => args[*param] = domain.at(&digit, &mut heap),
                Component::Group(g) => g.decode(&digit, &mut args, &mut heap),
            }
        }
        (args, heap)
    }

    /// Inverse of [`Self::at`] up to cell renaming.
    pub fn index_of(&self, args: &[Value], heap: &Heap) -> Option<BigUint> {
        if args.len() != self.arity {
            return None;
        }
        let mut index = BigUint::zero();
        let mut radix = BigUint::one();
        for c in &self.components {
            let digit = match c {
                Component::Plain { param, domain } => domain.index_of(&args[*param], heap)?,
                Component::Group(g) => g.encode(args, heap)?,
            };
            index += digit * &radix;
            radix *= c.size();
        }
        Some(index)
    }
}
