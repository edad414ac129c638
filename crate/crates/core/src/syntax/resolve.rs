//! Name resolution and recursive-type analysis.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::SyntaxError;

/// A parsed and name-resolved program.
///
/// Calls through local variables have been rewritten to
/// [`ExprKind::LambdaApply`]; every other call names at least one declared
/// function of matching arity.
#[derive(Clone, Debug)]
pub struct Program {
    pub source: SourceFile,
    functions: HashMap<String, Vec<usize>>,
    types: HashMap<String, usize>,
    recursive: HashSet<String>,
}

impl Program {
    pub fn path(&self) -> &str {
        &self.source.path
    }

    pub fn declarations(&self) -> &[Decl] {
        &self.source.declarations
    }

    /// Functions and methods in declaration order.
    pub fn functions(&self) -> impl Iterator<Item = &FunctionDecl> {
        self.source.declarations.iter().filter_map(|d| match d {
            Decl::Function(f) => Some(f),
            Decl::Type(_) => None,
        })
    }

    /// All declarations named `name` with `arity` parameters, in source order.
    pub fn overloads(&self, name: &str, arity: usize) -> impl Iterator<Item = &FunctionDecl> {
        self.functions
            .get(name)
            .into_iter()
            .flatten()
            .filter_map(move |&i| match &self.source.declarations[i] {
                Decl::Function(f) if f.params.len() == arity => Some(f),
                _ => None,
            })
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types
            .get(name)
            .and_then(|&i| match &self.source.declarations[i] {
                Decl::Type(t) => Some(t),
                Decl::Function(_) => None,
            })
    }

    /// True when `name` lies on a cycle of named-type references.
    pub fn is_recursive(&self, name: &str) -> bool {
        self.recursive.contains(name)
    }
}

/// Resolves names in `source`.
pub fn resolve(mut source: SourceFile) -> Result<Program, SyntaxError> {
    let mut functions: HashMap<String, Vec<usize>> = HashMap::new();
    let mut types: HashMap<String, usize> = HashMap::new();
    for (i, d) in source.declarations.iter().enumerate() {
        match d {
            Decl::Type(t) => {
                if types.insert(t.name.clone(), i).is_some() {
                    return Err(SyntaxError::new(
                        format!("duplicate type `{}`", t.name),
                        t.span,
                    ));
                }
            }
            Decl::Function(f) => {
                let same = functions.entry(f.name.clone()).or_default();
                for &j in same.iter() {
                    if let Decl::Function(g) = &source.declarations[j] {
                        if g.params
                            .iter()
                            .map(|p| &p.ty)
                            .eq(f.params.iter().map(|p| &p.ty))
                        {
                            return Err(SyntaxError::new(
                                format!("duplicate function `{}`", f.name),
                                f.span,
                            ));
                        }
                    }
                }
                same.push(i);
            }
        }
    }

    let arities: HashMap<String, BTreeSet<usize>> = source
        .declarations
        .iter()
        .filter_map(|d| match d {
            Decl::Function(f) => Some((f.name.clone(), f.params.len())),
            _ => None,
        })
        .fold(HashMap::new(), |mut acc, (n, a)| {
            acc.entry(n).or_default().insert(a);
            acc
        });

    let mut cx = Resolver {
        arities: &arities,
        types: &types,
        scopes: Vec::new(),
    };
    let record_fields: HashMap<String, Vec<String>> = source
        .declarations
        .iter()
        .filter_map(|d| match d {
            Decl::Type(t) => Some((t.name.clone(), record_field_names(&t.ty))),
            _ => None,
        })
        .collect();
    for d in source.declarations.iter_mut() {
        match d {
            Decl::Type(t) => {
                cx.check_type(&t.ty, t.span)?;
                cx.scopes = vec![match &t.binder {
                    Some(b) => vec![b.clone()],
                    None => record_fields.get(&t.name).cloned().unwrap_or_default(),
                }];
                for w in t.invariants.iter_mut() {
                    cx.expr(w)?;
                }
            }
            Decl::Function(f) => cx.function(f)?,
        }
    }

    let recursive = recursive_types(&source.declarations);
    check_inhabited(&source.declarations)?;

    Ok(Program {
        source,
        functions,
        types,
        recursive,
    })
}

fn record_field_names(ty: &TypeExpr) -> Vec<String> {
    match ty {
        TypeExpr::Record { fields, .. } => fields.iter().map(|(n, _)| n.clone()).collect(),
        _ => Vec::new(),
    }
}

struct Resolver<'a> {
    arities: &'a HashMap<String, BTreeSet<usize>>,
    types: &'a HashMap<String, usize>,
    scopes: Vec<Vec<String>>,
}

impl Resolver<'_> {
    fn bound(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|n| n == name))
    }

    fn check_type(&self, ty: &TypeExpr, span: Span) -> Result<(), SyntaxError> {
        match ty {
            TypeExpr::Null | TypeExpr::Bool | TypeExpr::Int => Ok(()),
            TypeExpr::Named(n) => {
                if self.types.contains_key(n) {
                    Ok(())
                } else {
                    Err(SyntaxError::new(format!("unknown type `{n}`"), span))
                }
            }
            TypeExpr::Array(t) | TypeExpr::Reference(t) => self.check_type(t, span),
            TypeExpr::Record { fields, .. } => {
                let mut seen = HashSet::new();
                for (n, t) in fields {
                    if !seen.insert(n) {
                        return Err(SyntaxError::new(format!("duplicate field `{n}`"), span));
                    }
                    self.check_type(t, span)?;
                }
                Ok(())
            }
            TypeExpr::Union(ms) => ms.iter().try_for_each(|m| self.check_type(m, span)),
            TypeExpr::Lambda { params, returns } => params
                .iter()
                .chain(returns)
                .try_for_each(|t| self.check_type(t, span)),
        }
    }

    fn function(&mut self, f: &mut FunctionDecl) -> Result<(), SyntaxError> {
        let mut names = HashSet::new();
        for p in f.params.iter().chain(f.returns.iter()) {
            self.check_type(&p.ty, p.span)?;
            if let Some(n) = &p.name {
                if !names.insert(n.clone()) {
                    return Err(SyntaxError::new(
                        format!("duplicate parameter `{n}`"),
                        p.span,
                    ));
                }
            }
        }
        let params: Vec<String> = f.params.iter().filter_map(|p| p.name.clone()).collect();
        let returns: Vec<String> = f.returns.iter().filter_map(|p| p.name.clone()).collect();
        self.scopes = vec![params.clone()];
        for r in f.requires.iter_mut() {
            self.expr(r)?;
        }
        self.scopes = vec![params.clone(), returns.clone()];
        for e in f.ensures.iter_mut() {
            self.expr(e)?;
        }
        self.scopes = vec![params, returns];
        self.block(&mut f.body)
    }

    fn block(&mut self, body: &mut [Stmt]) -> Result<(), SyntaxError> {
        self.scopes.push(Vec::new());
        for s in body.iter_mut() {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> Result<(), SyntaxError> {
        match &mut s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                self.check_type(ty, s.span)?;
                if let Some(e) = init {
                    self.expr(e)?;
                }
                self.scopes.last_mut().unwrap().push(name.clone());
            }
            StmtKind::Assign { target, value } => {
                self.expr(target)?;
                self.expr(value)?;
            }
            StmtKind::Return(es) => {
                for e in es {
                    self.expr(e)?;
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond)?;
                self.block(then_branch)?;
                self.block(else_branch)?;
            }
            StmtKind::While {
                cond,
                invariants,
                body,
            } => {
                self.expr(cond)?;
                for inv in invariants {
                    self.expr(inv)?;
                }
                self.block(body)?;
            }
            StmtKind::Assert(e) | StmtKind::Expr(e) => self.expr(e)?,
            StmtKind::Skip | StmtKind::Break | StmtKind::Continue => {}
        }
        Ok(())
    }

    fn expr(&mut self, e: &mut Expr) -> Result<(), SyntaxError> {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Null | ExprKind::Bool(_) | ExprKind::Int(_) => {}
            ExprKind::Var(n) => {
                if !self.bound(n) {
                    return Err(SyntaxError::new(format!("unknown variable `{n}`"), span));
                }
            }
            ExprKind::Unary(_, a)
            | ExprKind::Length(a)
            | ExprKind::Field(a, _)
            | ExprKind::Deref(a)
            | ExprKind::New(a) => self.expr(a)?,
            ExprKind::Cast(t, a) => {
                self.check_type(t, span)?;
                self.expr(a)?;
            }
            ExprKind::Binary(_, a, b)
            | ExprKind::ArrayRepeat(a, b)
            | ExprKind::Index(a, b)
            | ExprKind::Range(a, b) => {
                self.expr(a)?;
                self.expr(b)?;
            }
            ExprKind::ArrayLiteral(items) => {
                for item in items {
                    self.expr(item)?;
                }
            }
            ExprKind::RecordLiteral(fields) => {
                let mut seen = HashSet::new();
                for (n, v) in fields {
                    if !seen.insert(n.clone()) {
                        return Err(SyntaxError::new(format!("duplicate field `{n}`"), span));
                    }
                    self.expr(v)?;
                }
            }
            ExprKind::Quantified { binders, body, .. } => {
                self.scopes.push(Vec::new());
                for (v, src) in binders.iter_mut() {
                    self.expr(src)?;
                    self.scopes.last_mut().unwrap().push(v.clone());
                }
                self.expr(body)?;
                self.scopes.pop();
            }
            ExprKind::LambdaApply { args, .. } => {
                for a in args {
                    self.expr(a)?;
                }
            }
            ExprKind::Call { name, args } => {
                for a in args.iter_mut() {
                    self.expr(a)?;
                }
                if self.bound(name) {
                    let name = std::mem::take(name);
                    let args = std::mem::take(args);
                    e.kind = ExprKind::LambdaApply { name, args };
                } else {
                    match self.arities.get(name.as_str()) {
                        Some(ar) if ar.contains(&args.len()) => {}
                        Some(_) => {
                            return Err(SyntaxError::new(
                                format!("no overload of `{name}` takes {} arguments", args.len()),
                                span,
                            ))
                        }
                        None => {
                            return Err(SyntaxError::new(
                                format!("unknown function `{name}`"),
                                span,
                            ))
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn named_refs(ty: &TypeExpr, out: &mut Vec<String>) {
    match ty {
        TypeExpr::Null | TypeExpr::Bool | TypeExpr::Int => {}
        TypeExpr::Named(n) => out.push(n.clone()),
        TypeExpr::Array(t) | TypeExpr::Reference(t) => named_refs(t, out),
        TypeExpr::Record { fields, .. } => fields.iter().for_each(|(_, t)| named_refs(t, out)),
        TypeExpr::Union(ms) => ms.iter().for_each(|m| named_refs(m, out)),
        TypeExpr::Lambda { params, returns } => params
            .iter()
            .chain(returns)
            .for_each(|t| named_refs(t, out)),
    }
}

fn recursive_types(decls: &[Decl]) -> HashSet<String> {
    let edges: HashMap<&str, Vec<String>> = decls
        .iter()
        .filter_map(|d| match d {
            Decl::Type(t) => {
                let mut out = Vec::new();
                named_refs(&t.ty, &mut out);
                Some((t.name.as_str(), out))
            }
            _ => None,
        })
        .collect();
    let mut recursive = HashSet::new();
    for &start in edges.keys() {
        let mut stack: Vec<&str> = edges[start].iter().map(String::as_str).collect();
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == start {
                recursive.insert(start.to_string());
                break;
            }
            if seen.insert(n) {
                if let Some(next) = edges.get(n) {
                    stack.extend(next.iter().map(String::as_str));
                }
            }
        }
    }
    recursive
}

/// Least fixed point of inhabitation; a type that never becomes inhabited
/// has no finite values at any depth.
fn check_inhabited(decls: &[Decl]) -> Result<(), SyntaxError> {
    fn inhabited(ty: &TypeExpr, known: &HashMap<&str, bool>) -> bool {
        match ty {
            TypeExpr::Null | TypeExpr::Bool | TypeExpr::Int | TypeExpr::Array(_) => true,
            TypeExpr::Lambda { .. } => true,
            TypeExpr::Named(n) => known.get(n.as_str()).copied().unwrap_or(false),
            TypeExpr::Reference(t) => inhabited(t, known),
            TypeExpr::Record { fields, .. } => fields.iter().all(|(_, t)| inhabited(t, known)),
            TypeExpr::Union(ms) => ms.iter().any(|m| inhabited(m, known)),
        }
    }
    let tdecls: Vec<&TypeDecl> = decls
        .iter()
        .filter_map(|d| match d {
            Decl::Type(t) => Some(t),
            _ => None,
        })
        .collect();
    let mut known: HashMap<&str, bool> = tdecls.iter().map(|t| (t.name.as_str(), false)).collect();
    loop {
        let mut changed = false;
        for t in &tdecls {
            if !known[t.name.as_str()] && inhabited(&t.ty, &known) {
                known.insert(&t.name, true);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    match tdecls.iter().find(|t| !known[t.name.as_str()]) {
        Some(t) => Err(SyntaxError::new(
            format!(
                "type `{}` is uninhabitable: recursive with no base case",
                t.name
            ),
            t.span,
        )),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn compile(src: &str) -> Result<Program, SyntaxError> {
        resolve(parse(src, "t.wys")?)
    }

    #[test]
    fn list_is_recursive() {
        let p = compile("type List is null | {int value, List next}\n").unwrap();
        assert!(p.is_recursive("List"));
        let t = p.type_decl("List").unwrap();
        let TypeExpr::Union(ms) = &t.ty else { panic!() };
        assert_eq!(ms[0], TypeExpr::Null);
    }

    #[test]
    fn nonrecursive_types_are_not_marked() {
        let p = compile("type nat is (int n) where n >= 0\ntype B is nat[]\n").unwrap();
        assert!(!p.is_recursive("nat"));
        assert!(!p.is_recursive("B"));
    }

    #[test]
    fn undefined_function() {
        let err = compile("function f() -> (int r):\n    return g()\n").unwrap_err();
        assert!(err.message.contains("`g`"), "{}", err.message);
    }

    #[test]
    fn uninhabitable_cycle() {
        let err = compile("type A is A\n").unwrap_err();
        assert!(err.message.contains("uninhabitable"));
        assert!(compile("type T is {int x, T next}\n").is_err());
        assert!(compile("type T is {int x, T[] kids}\n").is_ok());
    }

    #[test]
    fn unknown_type_and_variable() {
        assert!(compile("function f(foo x) -> (int r):\n    return 0\n")
            .unwrap_err()
            .message
            .contains("unknown type"));
        assert!(compile("function f(int x) -> (int r):\n    return y\n")
            .unwrap_err()
            .message
            .contains("unknown variable"));
    }

    #[test]
    fn duplicates() {
        assert!(compile("type a is int\ntype a is bool\n").is_err());
        assert!(compile("function f(int x):\n    skip\nfunction f(int y):\n    skip\n").is_err());
        // overloading on parameter types is allowed
        assert!(compile("function f(int x):\n    skip\nfunction f(bool y):\n    skip\n").is_ok());
    }

    #[test]
    fn lambda_calls_are_rewritten() {
        let p =
            compile("function ap(function(int)->(bool) f, int x) -> (bool r):\n    return f(x)\n")
                .unwrap();
        let f = p.functions().next().unwrap();
        let StmtKind::Return(vs) = &f.body[0].kind else {
            panic!()
        };
        assert!(matches!(vs[0].kind, ExprKind::LambdaApply { .. }));
    }

    #[test]
    fn record_type_invariants_see_fields() {
        assert!(
            compile("type Heap is {int[] data, int len}\nwhere len >= 0 && |data| >= 0\n").is_ok()
        );
    }

    #[test]
    fn order_independent() {
        let a = compile("type List is null | {int v, List next}\ntype N is (int n) where n >= 0\n")
            .unwrap();
        let b = compile("type N is (int n) where n >= 0\ntype List is null | {int v, List next}\n")
            .unwrap();
        assert_eq!(a.is_recursive("List"), b.is_recursive("List"));
        assert_eq!(a.is_recursive("N"), b.is_recursive("N"));
    }
}
