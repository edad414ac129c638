//! Tree-walking evaluator with a heap, contract checking and fault traces.

mod fault;
mod value;

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use fault::{Fault, FaultKind, FaultRecord, Frame};
pub use value::{CellId, Heap, Value};

use crate::syntax::{
    print_type, BinaryOp, Expr, ExprKind, FunctionDecl, FunctionKind, Program, Quantifier, Span,
    Stmt, StmtKind, TypeExpr, UnaryOp,
};

/// Default cap on nested calls before a `StackOverflow` fault.
pub const DEFAULT_MAX_DEPTH: usize = 512;

/// Resource limits for one evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub max_depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            deadline: None,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Result of calling a function or method.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Returned { values: Vec<Value>, heap: Heap },
    Faulted(Fault),
}

/// Result of evaluating a list of boolean clauses.
#[derive(Clone, Debug, PartialEq)]
pub enum ClauseCheck {
    Satisfied,
    /// Index of the first clause that evaluated to `false`.
    Unsatisfied(usize),
    Faulted(Fault),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Conformance {
    Yes,
    /// Wrong structure for the type.
    Shape,
    /// Right structure, but a `where` clause is false.
    Invariant,
}

/// Memo of named-type invariant results for reference-free values, shared
/// between evaluations.
#[derive(Debug, Default)]
pub struct InvariantCache {
    entries: Mutex<HashMap<(String, String), Conformance>>,
}

impl InvariantCache {
    pub fn new() -> Self {
        InvariantCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Variable bindings. Later bindings shadow earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Env<'p> {
    slots: Vec<Slot<'p>>,
}

#[derive(Clone, Debug)]
struct Slot<'p> {
    name: String,
    value: Value,
    ty: Option<&'p TypeExpr>,
}

impl<'p> Env<'p> {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        self.push(name.into(), value, None);
    }

    fn push(&mut self, name: String, value: Value, ty: Option<&'p TypeExpr>) {
        self.slots.push(Slot { name, value, ty });
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.slots
            .iter()
            .rev()
            .find(|s| s.name == name)
            .map(|s| &s.value)
    }

    fn slot_mut(&mut self, name: &str) -> Option<&mut Slot<'p>> {
        self.slots.iter_mut().rev().find(|s| s.name == name)
    }
}

enum Flow {
    Next,
    Return(Vec<Value>, Span),
    Break,
    Continue,
}

type Eval<T> = Result<T, Fault>;

/// Evaluates expressions and runs declarations of one [`Program`].
///
/// An interpreter owns its call stack; heaps are passed in, so separate
/// evaluations never share cells.
pub struct Interpreter<'p> {
    program: &'p Program,
    budget: Budget,
    cache: Option<&'p InvariantCache>,
    stack: Vec<Frame>,
    pure_depth: usize,
    ticks: u32,
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p Program) -> Self {
        Interpreter {
            program,
            budget: Budget::default(),
            cache: None,
            stack: Vec::new(),
            pure_depth: 0,
            ticks: 0,
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_cache(mut self, cache: &'p InvariantCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    fn fault(&self, kind: FaultKind, message: impl Into<String>, span: Span) -> Fault {
        Fault {
            kind,
            message: message.into(),
            span,
            trace: self.stack.iter().rev().cloned().collect(),
        }
    }

    fn type_error(&self, message: impl Into<String>, span: Span) -> Fault {
        self.fault(FaultKind::RuntimeTypeError, message, span)
    }

    fn tick(&mut self, span: Span) -> Eval<()> {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(256) {
            self.check_deadline(span)?;
        }
        Ok(())
    }

    fn check_deadline(&self, span: Span) -> Eval<()> {
        match self.budget.deadline {
            Some(d) if Instant::now() >= d => Err(self.fault(FaultKind::Timeout, "timeout", span)),
            _ => Ok(()),
        }
    }

    // ---- calls ----

    /// Runs `decl` on `args` starting from `heap`.
    ///
    /// The caller is responsible for the callee's precondition and for the
    /// arguments' type invariants; postconditions and return types are
    /// checked here.
    pub fn call(&mut self, decl: &'p FunctionDecl, args: Vec<Value>, mut heap: Heap) -> Outcome {
        self.stack.clear();
        self.pure_depth = 0;
        match self.invoke(decl, args, &mut heap, false, decl.span) {
            Ok(values) => Outcome::Returned { values, heap },
            Err(f) => Outcome::Faulted(f),
        }
    }

    /// Looks up `name` by arity and argument shape, then [`Self::call`]s it.
    pub fn call_by_name(&mut self, name: &str, args: Vec<Value>, mut heap: Heap) -> Outcome {
        self.stack.clear();
        self.pure_depth = 0;
        let span = Span::default();
        match self.select(name, &args, &mut heap, span) {
            Ok(decl) => self.call(decl, args, heap),
            Err(f) => Outcome::Faulted(f),
        }
    }

    /// Evaluates `decl`'s requires clauses with its parameters bound to `args`.
    pub fn check_requires(
        &mut self,
        decl: &'p FunctionDecl,
        args: &[Value],
        heap: &mut Heap,
    ) -> ClauseCheck {
        if decl.requires.is_empty() {
            return ClauseCheck::Satisfied;
        }
        let mut env = Env::new();
        for (p, v) in decl.params.iter().zip(args) {
            env.push(p.name.clone().unwrap_or_default(), v.clone(), Some(&p.ty));
        }
        self.check_clauses(&decl.requires, &mut env, heap)
    }

    fn select(
        &mut self,
        name: &str,
        args: &[Value],
        heap: &mut Heap,
        span: Span,
    ) -> Eval<&'p FunctionDecl> {
        let program = self.program;
        let candidates: Vec<&'p FunctionDecl> = program.overloads(name, args.len()).collect();
        match candidates.as_slice() {
            [] => Err(self.type_error(
                format!("no function `{name}` with {} arguments", args.len()),
                span,
            )),
            [only] => Ok(only),
            many => many
                .iter()
                .copied()
                .find(|d| {
                    d.params
                        .iter()
                        .zip(args)
                        .all(|(p, v)| self.shape_matches(v, &p.ty, heap, 0))
                })
                .ok_or_else(|| {
                    self.type_error(
                        format!("no overload of `{name}` accepts these arguments"),
                        span,
                    )
                }),
        }
    }

    fn invoke(
        &mut self,
        decl: &'p FunctionDecl,
        args: Vec<Value>,
        heap: &mut Heap,
        check_params: bool,
        site: Span,
    ) -> Eval<Vec<Value>> {
        if self.stack.len() >= self.budget.max_depth {
            return Err(self.fault(FaultKind::StackOverflow, "stack overflow", site));
        }
        self.check_deadline(site)?;
        self.stack.push(Frame {
            name: decl.name.clone(),
            args: args.clone(),
        });
        let pure = decl.kind == FunctionKind::Function;
        if pure {
            self.pure_depth += 1;
        }
        let result = stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            self.invoke_body(decl, args, heap, check_params)
        });
        if pure {
            self.pure_depth -= 1;
        }
        self.stack.pop();
        result
    }

    fn invoke_body(
        &mut self,
        decl: &'p FunctionDecl,
        args: Vec<Value>,
        heap: &mut Heap,
        check_params: bool,
    ) -> Eval<Vec<Value>> {
        let mut env = Env::new();
        for (p, v) in decl.params.iter().zip(args.iter()) {
            if check_params {
                self.flow_check(v, &p.ty, heap, p.span)?;
            }
            env.push(p.name.clone().unwrap_or_default(), v.clone(), Some(&p.ty));
        }
        for r in &decl.returns {
            if let Some(n) = &r.name {
                env.push(n.clone(), Value::Null, None);
            }
        }
        let (values, ret_span) = match self.exec_block(&mut env, heap, &decl.body)? {
            Flow::Return(values, span) => (values, span),
            _ => (Vec::new(), decl.span),
        };
        if values.len() != decl.returns.len() {
            return Err(self.type_error(
                format!(
                    "expected {} return value(s), got {}",
                    decl.returns.len(),
                    values.len()
                ),
                ret_span,
            ));
        }
        for (v, r) in values.iter().zip(&decl.returns) {
            self.flow_check(v, &r.ty, heap, ret_span)?;
        }
        if !decl.ensures.is_empty() {
            let mut post = Env::new();
            for (p, v) in decl.params.iter().zip(args) {
                post.push(p.name.clone().unwrap_or_default(), v, Some(&p.ty));
            }
            for (r, v) in decl.returns.iter().zip(&values) {
                if let Some(n) = &r.name {
                    post.push(n.clone(), v.clone(), Some(&r.ty));
                }
            }
            match self.check_clauses(&decl.ensures, &mut post, heap) {
                ClauseCheck::Satisfied => {}
                ClauseCheck::Unsatisfied(i) => {
                    return Err(self.fault(
                        FaultKind::PostconditionViolation,
                        "postcondition not satisfied",
                        decl.ensures[i].span,
                    ))
                }
                ClauseCheck::Faulted(f) => return Err(f),
            }
        }
        Ok(values)
    }

    fn call_expr(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<Vec<Value>> {
        match &e.kind {
            ExprKind::Call { name, args } => {
                let vals = self.eval_all(env, heap, args)?;
                let decl = self.select(name, &vals, heap, e.span)?;
                match self.check_requires(decl, &vals, heap) {
                    ClauseCheck::Satisfied => {}
                    ClauseCheck::Unsatisfied(_) => {
                        return Err(self.fault(
                            FaultKind::PreconditionViolation,
                            format!("precondition of `{name}` not satisfied"),
                            e.span,
                        ))
                    }
                    ClauseCheck::Faulted(f) => return Err(f),
                }
                self.invoke(decl, vals, heap, true, e.span)
            }
            ExprKind::LambdaApply { name, args } => {
                let vals = self.eval_all(env, heap, args)?;
                match env.get(name) {
                    Some(Value::Lambda(l)) => l.apply(&vals).ok_or_else(|| {
                        self.fault(
                            FaultKind::LambdaDomainExhausted,
                            "argument outside the generated lambda's domain",
                            e.span,
                        )
                    }),
                    Some(other) => Err(self.type_error(
                        format!("cannot call a value of type {}", other.kind_name()),
                        e.span,
                    )),
                    None => Err(self.type_error(format!("unbound variable `{name}`"), e.span)),
                }
            }
            _ => Err(self.type_error("not a call", e.span)),
        }
    }

    // ---- clauses and conformance ----

    /// Evaluates `clauses` in order, stopping at the first that is false.
    pub fn check_clauses(
        &mut self,
        clauses: &'p [Expr],
        env: &mut Env<'p>,
        heap: &mut Heap,
    ) -> ClauseCheck {
        for (i, c) in clauses.iter().enumerate() {
            match self.eval(env, heap, c) {
                Ok(Value::Bool(true)) => {}
                Ok(Value::Bool(false)) => return ClauseCheck::Unsatisfied(i),
                Ok(other) => {
                    return ClauseCheck::Faulted(self.type_error(
                        format!("clause evaluated to {}, expected bool", other.kind_name()),
                        c.span,
                    ))
                }
                Err(f) => return ClauseCheck::Faulted(f),
            }
        }
        ClauseCheck::Satisfied
    }

    /// Whether `value` inhabits `ty`, including every named-type invariant
    /// it passes through.
    pub fn conforms(&mut self, value: &Value, ty: &'p TypeExpr, heap: &mut Heap) -> Eval<bool> {
        Ok(self.conformance(value, ty, heap)? == Conformance::Yes)
    }

    /// Checks a value flowing into a declared type.
    fn flow_check(
        &mut self,
        value: &Value,
        ty: &'p TypeExpr,
        heap: &mut Heap,
        span: Span,
    ) -> Eval<()> {
        match self.conformance(value, ty, heap)? {
            Conformance::Yes => Ok(()),
            Conformance::Shape => {
                Err(self.type_error(format!("expected {}, found {value}", print_type(ty)), span))
            }
            Conformance::Invariant => Err(self.fault(
                FaultKind::TypeInvariantViolation,
                format!("type invariant not satisfied ({})", print_type(ty)),
                span,
            )),
        }
    }

    fn conformance(
        &mut self,
        value: &Value,
        ty: &'p TypeExpr,
        heap: &mut Heap,
    ) -> Eval<Conformance> {
        use Conformance::*;
        let shape = |ok: bool| if ok { Yes } else { Shape };
        Ok(match (ty, value) {
            (TypeExpr::Null, v) => shape(matches!(v, Value::Null)),
            (TypeExpr::Bool, v) => shape(matches!(v, Value::Bool(_))),
            (TypeExpr::Int, v) => shape(matches!(v, Value::Int(_))),
            (TypeExpr::Array(elem), Value::Array(items)) => {
                let mut result = Yes;
                for item in items {
                    match self.conformance(item, elem, heap)? {
                        Yes => {}
                        Shape => return Ok(Shape),
                        Invariant => result = Invariant,
                    }
                }
                result
            }
            (TypeExpr::Record { fields, open }, Value::Record(vals)) => {
                if !open && vals.len() != fields.len() {
                    return Ok(Shape);
                }
                let mut result = Yes;
                for (name, fty) in fields {
                    let Some(v) = value.field(name) else {
                        return Ok(Shape);
                    };
                    match self.conformance(v, fty, heap)? {
                        Yes => {}
                        Shape => return Ok(Shape),
                        Invariant => result = Invariant,
                    }
                }
                let _ = vals;
                result
            }
            (TypeExpr::Union(members), v) => {
                let mut result = Shape;
                for m in members {
                    match self.conformance(v, m, heap)? {
                        Yes => return Ok(Yes),
                        Invariant => result = Invariant,
                        Shape => {}
                    }
                }
                result
            }
            (TypeExpr::Reference(inner), Value::Ref(id)) => match heap.get(*id).cloned() {
                Some(cell) => self.conformance(&cell, inner, heap)?,
                None => Shape,
            },
            (TypeExpr::Lambda { .. }, Value::Lambda(l)) => shape(l.signature() == ty),
            (TypeExpr::Named(name), v) => self.named_conformance(name, v, heap)?,
            _ => Shape,
        })
    }

    fn named_conformance(
        &mut self,
        name: &str,
        value: &Value,
        heap: &mut Heap,
    ) -> Eval<Conformance> {
        let program = self.program;
        let Some(decl) = program.type_decl(name) else {
            return Ok(Conformance::Shape);
        };
        let key = match (self.cache, value.is_plain()) {
            (Some(cache), true) => {
                let key = (name.to_string(), value.to_string());
                if let Some(&hit) = cache.entries.lock().unwrap().get(&key) {
                    return Ok(hit);
                }
                Some(key)
            }
            _ => None,
        };
        let mut result = self.conformance(value, &decl.ty, heap)?;
        if result == Conformance::Yes && !decl.invariants.is_empty() {
            let mut env = Env::new();
            match (&decl.binder, value) {
                (Some(b), v) => env.bind(b.clone(), v.clone()),
                (None, Value::Record(fields)) => {
                    for (n, v) in fields {
                        env.bind(n.clone(), v.clone());
                    }
                }
                _ => {}
            }
            match self.check_clauses(&decl.invariants, &mut env, heap) {
                ClauseCheck::Satisfied => {}
                ClauseCheck::Unsatisfied(_) => result = Conformance::Invariant,
                ClauseCheck::Faulted(f) => return Err(f),
            }
        }
        if let (Some(key), Some(cache)) = (key, self.cache) {
            cache.entries.lock().unwrap().insert(key, result);
        }
        Ok(result)
    }

    /// Structural match ignoring `where` clauses; used for overload dispatch.
    fn shape_matches(&self, value: &Value, ty: &TypeExpr, heap: &Heap, depth: usize) -> bool {
        if depth > 64 {
            return false;
        }
        match (ty, value) {
            (TypeExpr::Null, Value::Null)
            | (TypeExpr::Bool, Value::Bool(_))
            | (TypeExpr::Int, Value::Int(_)) => true,
            (TypeExpr::Array(elem), Value::Array(items)) => items
                .iter()
                .all(|v| self.shape_matches(v, elem, heap, depth)),
            (TypeExpr::Record { fields, open }, Value::Record(vals)) => {
                (*open || vals.len() == fields.len())
                    && fields.iter().all(|(n, t)| {
                        value
                            .field(n)
                            .is_some_and(|v| self.shape_matches(v, t, heap, depth))
                    })
            }
            (TypeExpr::Union(ms), v) => ms.iter().any(|m| self.shape_matches(v, m, heap, depth)),
            (TypeExpr::Reference(inner), Value::Ref(id)) => heap
                .get(*id)
                .is_some_and(|cell| self.shape_matches(cell, inner, heap, depth)),
            (TypeExpr::Lambda { .. }, Value::Lambda(l)) => l.signature() == ty,
            (TypeExpr::Named(n), v) => self
                .program
                .type_decl(n)
                .is_some_and(|d| self.shape_matches(v, &d.ty, heap, depth + 1)),
            _ => false,
        }
    }

    // ---- statements ----

    fn exec_block(&mut self, env: &mut Env<'p>, heap: &mut Heap, body: &'p [Stmt]) -> Eval<Flow> {
        let mark = env.slots.len();
        let mut flow = Flow::Next;
        for s in body {
            flow = self.exec(env, heap, s)?;
            if !matches!(flow, Flow::Next) {
                break;
            }
        }
        env.slots.truncate(mark);
        Ok(flow)
    }

    fn exec(&mut self, env: &mut Env<'p>, heap: &mut Heap, s: &'p Stmt) -> Eval<Flow> {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                let value = match init {
                    Some(e) => {
                        let v = self.eval(env, heap, e)?;
                        self.flow_check(&v, ty, heap, s.span)?;
                        v
                    }
                    None => Value::Null,
                };
                env.push(name.clone(), value, Some(ty));
            }
            StmtKind::Assign { target, value } => {
                let v = self.eval(env, heap, value)?;
                self.assign(env, heap, target, v)?;
            }
            StmtKind::Return(exprs) => {
                let values = self.eval_all(env, heap, exprs)?;
                return Ok(Flow::Return(values, s.span));
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let branch = if self.eval_bool(env, heap, cond)? {
                    then_branch
                } else {
                    else_branch
                };
                return self.exec_block(env, heap, branch);
            }
            StmtKind::While {
                cond,
                invariants,
                body,
            } => {
                self.loop_invariants(
                    env,
                    heap,
                    invariants,
                    "loop invariant not satisfied on entry",
                )?;
                loop {
                    self.tick(s.span)?;
                    if !self.eval_bool(env, heap, cond)? {
                        break;
                    }
                    match self.exec_block(env, heap, body)? {
                        Flow::Break => break,
                        ret @ Flow::Return(..) => return Ok(ret),
                        Flow::Next | Flow::Continue => {}
                    }
                    self.loop_invariants(env, heap, invariants, "loop invariant not restored")?;
                }
            }
            StmtKind::Assert(e) => {
                if !self.eval_bool(env, heap, e)? {
                    return Err(self.fault(
                        FaultKind::AssertionFailure,
                        "assertion failed",
                        e.span,
                    ));
                }
            }
            StmtKind::Expr(e) => {
                self.call_expr(env, heap, e)?;
            }
            StmtKind::Skip => {}
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
        }
        Ok(Flow::Next)
    }

    fn loop_invariants(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        invariants: &'p [Expr],
        message: &str,
    ) -> Eval<()> {
        match self.check_clauses(invariants, env, heap) {
            ClauseCheck::Satisfied => Ok(()),
            ClauseCheck::Unsatisfied(i) => Err(self.fault(
                FaultKind::LoopInvariantViolation,
                message,
                invariants[i].span,
            )),
            ClauseCheck::Faulted(f) => Err(f),
        }
    }

    fn assign(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        target: &'p Expr,
        value: Value,
    ) -> Eval<()> {
        match &target.kind {
            ExprKind::Var(name) => {
                let ty = match env.slot_mut(name) {
                    Some(slot) => slot.ty,
                    None => {
                        return Err(
                            self.type_error(format!("unbound variable `{name}`"), target.span)
                        )
                    }
                };
                if let Some(ty) = ty {
                    self.flow_check(&value, ty, heap, target.span)?;
                }
                env.slot_mut(name).unwrap().value = value;
                Ok(())
            }
            ExprKind::Deref(inner) => {
                let id = self.eval_ref(env, heap, inner)?;
                self.write_cell(heap, id, value, target.span)
            }
            ExprKind::Index(base, index) => {
                let i = self.eval_int(env, heap, index)?;
                let mut container = self.eval(env, heap, base)?;
                let Value::Array(items) = &mut container else {
                    return Err(self.type_error(
                        format!("cannot index into {}", container.kind_name()),
                        base.span,
                    ));
                };
                let slot = self.array_slot(&i, items.len(), index.span)?;
                items[slot] = value;
                self.assign(env, heap, base, container)
            }
            ExprKind::Field(base, field) => {
                let mut record = self.eval(env, heap, base)?;
                let Value::Record(fields) = &mut record else {
                    return Err(self.type_error(
                        format!("cannot access field of {}", record.kind_name()),
                        base.span,
                    ));
                };
                match fields.iter_mut().find(|(n, _)| n == field) {
                    Some((_, slot)) => *slot = value,
                    None => return Err(self.type_error(format!("no field `{field}`"), target.span)),
                }
                self.assign(env, heap, base, record)
            }
            _ => Err(self.type_error("invalid assignment target", target.span)),
        }
    }

    fn write_cell(&mut self, heap: &mut Heap, id: CellId, value: Value, span: Span) -> Eval<()> {
        if self.pure_depth > 0 {
            return Err(self.type_error("a function may not modify the heap", span));
        }
        if heap.set(id, value) {
            Ok(())
        } else {
            Err(self.type_error(format!("dangling reference {id}"), span))
        }
    }

    // ---- expressions ----

    fn eval_all(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        exprs: &'p [Expr],
    ) -> Eval<Vec<Value>> {
        exprs.iter().map(|e| self.eval(env, heap, e)).collect()
    }

    fn eval_bool(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<bool> {
        match self.eval(env, heap, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(self.type_error(
                format!("expected bool, found {}", other.kind_name()),
                e.span,
            )),
        }
    }

    fn eval_int(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<BigInt> {
        match self.eval(env, heap, e)? {
            Value::Int(v) => Ok(v),
            other => {
                Err(self.type_error(format!("expected int, found {}", other.kind_name()), e.span))
            }
        }
    }

    fn eval_ref(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<CellId> {
        match self.eval(env, heap, e)? {
            Value::Ref(id) => Ok(id),
            other => Err(self.type_error(
                format!("expected reference, found {}", other.kind_name()),
                e.span,
            )),
        }
    }

    fn array_slot(&self, index: &BigInt, len: usize, span: Span) -> Eval<usize> {
        match index.to_usize() {
            Some(i) if i < len => Ok(i),
            _ => Err(self.fault(
                FaultKind::IndexOutOfBounds,
                format!("index out of bounds (index {index}, length {len})"),
                span,
            )),
        }
    }

    /// Evaluates `e` in `env`.
    pub fn eval(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<Value> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.eval_inner(env, heap, e))
    }

    fn eval_inner(&mut self, env: &mut Env<'p>, heap: &mut Heap, e: &'p Expr) -> Eval<Value> {
        Ok(match &e.kind {
            ExprKind::Null => Value::Null,
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Int(v) => Value::Int(v.clone()),
            ExprKind::Var(name) => match env.get(name) {
                Some(v) => v.clone(),
                None => return Err(self.type_error(format!("unbound variable `{name}`"), e.span)),
            },
            ExprKind::Unary(UnaryOp::Not, a) => Value::Bool(!self.eval_bool(env, heap, a)?),
            ExprKind::Unary(UnaryOp::Neg, a) => Value::Int(-self.eval_int(env, heap, a)?),
            ExprKind::Binary(op, a, b) => self.binary(env, heap, *op, a, b, e.span)?,
            ExprKind::ArrayLiteral(items) => Value::Array(self.eval_all(env, heap, items)?),
            ExprKind::ArrayRepeat(item, count) => {
                let v = self.eval(env, heap, item)?;
                let n = self.eval_int(env, heap, count)?;
                if n.is_negative() {
                    return Err(self.fault(
                        FaultKind::NegativeArrayRange,
                        "negative array length",
                        count.span,
                    ));
                }
                let n = n
                    .to_usize()
                    .ok_or_else(|| self.type_error("array too large", count.span))?;
                Value::Array(vec![v; n])
            }
            ExprKind::Length(a) => match self.eval(env, heap, a)? {
                Value::Array(items) => Value::int(items.len() as i64),
                other => {
                    return Err(self.type_error(format!("length of {}", other.kind_name()), a.span))
                }
            },
            ExprKind::Index(base, index) => {
                let container = self.eval(env, heap, base)?;
                let i = self.eval_int(env, heap, index)?;
                match container {
                    Value::Array(mut items) => {
                        let slot = self.array_slot(&i, items.len(), index.span)?;
                        items.swap_remove(slot)
                    }
                    other => {
                        return Err(self.type_error(
                            format!("cannot index into {}", other.kind_name()),
                            base.span,
                        ))
                    }
                }
            }
            ExprKind::RecordLiteral(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (n, fe) in fields {
                    out.push((n.clone(), self.eval(env, heap, fe)?));
                }
                Value::Record(out)
            }
            ExprKind::Field(base, field) => {
                let v = self.eval(env, heap, base)?;
                match v.field(field) {
                    Some(f) => f.clone(),
                    None => {
                        return Err(self.type_error(
                            format!("no field `{field}` in {}", v.kind_name()),
                            e.span,
                        ))
                    }
                }
            }
            ExprKind::Range(lo, hi) => {
                let (lo, hi) = self.range_bounds(env, heap, lo, hi, e.span)?;
                let mut items = Vec::new();
                let mut i = lo;
                while i < hi {
                    self.tick(e.span)?;
                    items.push(Value::Int(i.clone()));
                    i += 1;
                }
                Value::Array(items)
            }
            ExprKind::Quantified {
                quantifier,
                binders,
                body,
            } => Value::Bool(self.quantify(env, heap, *quantifier, binders, body)?),
            ExprKind::Call { .. } | ExprKind::LambdaApply { .. } => {
                let mut values = self.call_expr(env, heap, e)?;
                if values.len() != 1 {
                    return Err(self.type_error(
                        format!("call used as a value returns {} values", values.len()),
                        e.span,
                    ));
                }
                values.pop().unwrap()
            }
            ExprKind::Deref(inner) => {
                let id = self.eval_ref(env, heap, inner)?;
                match heap.get(id) {
                    Some(v) => v.clone(),
                    None => return Err(self.type_error(format!("dangling reference {id}"), e.span)),
                }
            }
            ExprKind::New(inner) => {
                let v = self.eval(env, heap, inner)?;
                if self.pure_depth > 0 {
                    return Err(self.type_error("a function may not allocate", e.span));
                }
                Value::Ref(heap.alloc(v))
            }
            ExprKind::Cast(ty, inner) => {
                let v = self.eval(env, heap, inner)?;
                self.flow_check(&v, ty, heap, e.span)?;
                v
            }
        })
    }

    fn range_bounds(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        lo: &'p Expr,
        hi: &'p Expr,
        span: Span,
    ) -> Eval<(BigInt, BigInt)> {
        let lo = self.eval_int(env, heap, lo)?;
        let hi = self.eval_int(env, heap, hi)?;
        if lo > hi {
            return Err(self.fault(FaultKind::NegativeArrayRange, "negative array range", span));
        }
        Ok((lo, hi))
    }

    fn quantify(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        q: Quantifier,
        binders: &'p [(String, Expr)],
        body: &'p Expr,
    ) -> Eval<bool> {
        let Some(((name, source), rest)) = binders.split_first() else {
            return self.eval_bool(env, heap, body);
        };
        let visit =
            |this: &mut Self, env: &mut Env<'p>, heap: &mut Heap, v: Value| -> Eval<Option<bool>> {
                this.tick(source.span)?;
                env.bind(name.clone(), v);
                let r = this.quantify(env, heap, q, rest, body);
                env.slots.pop();
                Ok(match (q, r?) {
                    (Quantifier::All, false) => Some(false),
                    (Quantifier::Some, true) => Some(true),
                    _ => None,
                })
            };
        if let ExprKind::Range(lo, hi) = &source.kind {
            let (mut i, hi) = self.range_bounds(env, heap, lo, hi, source.span)?;
            while i < hi {
                if let Some(r) = visit(self, env, heap, Value::Int(i.clone()))? {
                    return Ok(r);
                }
                i += 1;
            }
        } else {
            match self.eval(env, heap, source)? {
                Value::Array(items) => {
                    for v in items {
                        if let Some(r) = visit(self, env, heap, v)? {
                            return Ok(r);
                        }
                    }
                }
                other => {
                    return Err(self.type_error(
                        format!("cannot quantify over {}", other.kind_name()),
                        source.span,
                    ))
                }
            }
        }
        Ok(q == Quantifier::All)
    }

    fn binary(
        &mut self,
        env: &mut Env<'p>,
        heap: &mut Heap,
        op: BinaryOp,
        a: &'p Expr,
        b: &'p Expr,
        span: Span,
    ) -> Eval<Value> {
        use BinaryOp::*;
        match op {
            And => Ok(Value::Bool(
                self.eval_bool(env, heap, a)? && self.eval_bool(env, heap, b)?,
            )),
            Or => Ok(Value::Bool(
                self.eval_bool(env, heap, a)? || self.eval_bool(env, heap, b)?,
            )),
            Implies => Ok(Value::Bool(
                !self.eval_bool(env, heap, a)? || self.eval_bool(env, heap, b)?,
            )),
            Eq | Ne => {
                let l = self.eval(env, heap, a)?;
                let r = self.eval(env, heap, b)?;
                Ok(Value::Bool((l == r) == (op == Eq)))
            }
            _ => {
                let l = self.eval_int(env, heap, a)?;
                let r = self.eval_int(env, heap, b)?;
                Ok(match op {
                    Add => Value::Int(l + r),
                    Sub => Value::Int(l - r),
                    Mul => Value::Int(l * r),
                    Div | Rem => {
                        if r.is_zero() {
                            return Err(self.fault(
                                FaultKind::DivideByZero,
                                "division by zero",
                                span,
                            ));
                        }
                        // BigInt division truncates toward zero
                        Value::Int(if op == Div { l / r } else { l % r })
                    }
                    Lt => Value::Bool(l < r),
                    Le => Value::Bool(l <= r),
                    Gt => Value::Bool(l > r),
                    Ge => Value::Bool(l >= r),
                    And | Or | Implies | Eq | Ne => unreachable!(),
                })
            }
        }
    }
}
