//! Abstract syntax for `.wys` programs.

use std::fmt;

use num_bigint::BigInt;

/// A region of source text. Lines and columns are 1-based; `start`/`end`
/// are byte offsets into the file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: u32,
    pub end: u32,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: usize, column: usize) -> Self {
        Span {
            start: start as u32,
            end: end.max(start + 1) as u32,
            line: line as u32,
            column: column as u32,
        }
    }

    /// Smallest span covering both `self` and `other`, anchored at `self`.
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: self.end.max(other.end),
            line: self.line,
            column: self.column,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A parsed source file.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub declarations: Vec<Decl>,
    /// Byte offsets of line starts.
    pub line_index: Vec<usize>,
}

impl SourceFile {
    /// Text of the 1-based `line`, without its terminator.
    pub fn line_text(&self, line: u32) -> &str {
        line_of(&self.text, &self.line_index, line)
    }
}

pub(crate) fn line_starts(text: &str) -> Vec<usize> {
    let mut starts = vec![0];
    starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
    starts
}

pub(crate) fn line_of<'a>(text: &'a str, starts: &[usize], line: u32) -> &'a str {
    let Some(&begin) = starts.get(line.saturating_sub(1) as usize) else {
        return "";
    };
    let end = starts
        .get(line as usize)
        .copied()
        .unwrap_or(text.len())
        .min(text.len());
    text[begin..end].trim_end_matches(['\n', '\r'])
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Function(FunctionDecl),
    Type(TypeDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Function(f) => &f.name,
            Decl::Type(t) => &t.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Decl::Function(f) => f.span,
            Decl::Type(t) => t.span,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    /// Pure: may not touch the heap.
    Function,
    /// May allocate and write heap cells.
    Method,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    /// Always present for parameters; optional for returns.
    pub name: Option<String>,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDecl {
    pub kind: FunctionKind,
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

/// `type name is (T binder) where ...` or `type name is T where ...`.
///
/// Without a binder, the where clauses of a record type see its fields as
/// variables.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub binder: Option<String>,
    pub ty: TypeExpr,
    pub invariants: Vec<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Null,
    Bool,
    Int,
    Array(Box<TypeExpr>),
    /// `{T a, U b}` or, when `open`, `{T a, U b, ...}`.
    Record {
        fields: Vec<(String, TypeExpr)>,
        open: bool,
    },
    Union(Vec<TypeExpr>),
    Named(String),
    Reference(Box<TypeExpr>),
    Lambda {
        params: Vec<TypeExpr>,
        returns: Vec<TypeExpr>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::Implies => "==>",
        }
    }

    /// Binding strength; larger binds tighter. Ranges sit at 4.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Implies => 0,
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge => 3,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }
}

pub const RANGE_PRECEDENCE: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    All,
    Some,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::All => "all",
            Quantifier::Some => "some",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Null,
    Bool(bool),
    Int(BigInt),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    ArrayLiteral(Vec<Expr>),
    /// `[value; count]`
    ArrayRepeat(Box<Expr>, Box<Expr>),
    Length(Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    RecordLiteral(Vec<(String, Expr)>),
    Field(Box<Expr>, String),
    Range(Box<Expr>, Box<Expr>),
    Quantified {
        quantifier: Quantifier,
        binders: Vec<(String, Expr)>,
        body: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// Application of a lambda held in a local variable.
    LambdaApply {
        name: String,
        args: Vec<Expr>,
    },
    Deref(Box<Expr>),
    New(Box<Expr>),
    Cast(TypeExpr, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    VarDecl {
        ty: TypeExpr,
        name: String,
        init: Option<Expr>,
    },
    /// `target = value`; `target` is a variable, index, field or
    /// dereference path.
    Assign {
        target: Expr,
        value: Expr,
    },
    Return(Vec<Expr>),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Expr,
        invariants: Vec<Expr>,
        body: Vec<Stmt>,
    },
    Assert(Expr),
    Expr(Expr),
    Skip,
    Break,
    Continue,
}

/// Visits every expression of a declaration list in source order, parents
/// before children.
pub fn walk_exprs<'a>(decls: &'a [Decl], f: &mut dyn FnMut(&'a Expr)) {
    fn expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
        f(e);
        for child in children(e) {
            expr(child, f);
        }
    }
    fn stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
        for s in body {
            match &s.kind {
                StmtKind::VarDecl { init, .. } => {
                    if let Some(e) = init {
                        expr(e, f);
                    }
                }
                StmtKind::Assign { target, value } => {
                    expr(target, f);
                    expr(value, f);
                }
                StmtKind::Return(es) => es.iter().for_each(|e| expr(e, f)),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    expr(cond, f);
                    stmts(then_branch, f);
                    stmts(else_branch, f);
                }
                StmtKind::While {
                    cond,
                    invariants,
                    body,
                } => {
                    expr(cond, f);
                    invariants.iter().for_each(|e| expr(e, f));
                    stmts(body, f);
                }
                StmtKind::Assert(e) | StmtKind::Expr(e) => expr(e, f),
                StmtKind::Skip | StmtKind::Break | StmtKind::Continue => {}
            }
        }
    }
    for d in decls {
        match d {
            Decl::Function(func) => {
                func.requires.iter().for_each(|e| expr(e, f));
                func.ensures.iter().for_each(|e| expr(e, f));
                stmts(&func.body, f);
            }
            Decl::Type(t) => t.invariants.iter().for_each(|e| expr(e, f)),
        }
    }
}

/// Mutable counterpart of [`walk_exprs`]; visits in the same order.
pub fn walk_exprs_mut(decls: &mut [Decl], f: &mut dyn FnMut(&mut Expr)) {
    fn expr(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
        f(e);
        for child in children_mut(e) {
            expr(child, f);
        }
    }
    fn stmts(body: &mut [Stmt], f: &mut dyn FnMut(&mut Expr)) {
        for s in body {
            match &mut s.kind {
                StmtKind::VarDecl { init, .. } => {
                    if let Some(e) = init {
                        expr(e, f);
                    }
                }
                StmtKind::Assign { target, value } => {
                    expr(target, f);
                    expr(value, f);
                }
                StmtKind::Return(es) => es.iter_mut().for_each(|e| expr(e, f)),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    expr(cond, f);
                    stmts(then_branch, f);
                    stmts(else_branch, f);
                }
                StmtKind::While {
                    cond,
                    invariants,
                    body,
                } => {
                    expr(cond, f);
                    invariants.iter_mut().for_each(|e| expr(e, f));
                    stmts(body, f);
                }
                StmtKind::Assert(e) | StmtKind::Expr(e) => expr(e, f),
                StmtKind::Skip | StmtKind::Break | StmtKind::Continue => {}
            }
        }
    }
    for d in decls {
        match d {
            Decl::Function(func) => {
                func.requires.iter_mut().for_each(|e| expr(e, f));
                func.ensures.iter_mut().for_each(|e| expr(e, f));
                stmts(&mut func.body, f);
            }
            Decl::Type(t) => t.invariants.iter_mut().for_each(|e| expr(e, f)),
        }
    }
}

fn children(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Null | ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Var(_) => vec![],
        ExprKind::Unary(_, a)
        | ExprKind::Length(a)
        | ExprKind::Field(a, _)
        | ExprKind::Deref(a)
        | ExprKind::New(a)
        | ExprKind::Cast(_, a) => vec![a],
        ExprKind::Binary(_, a, b)
        | ExprKind::ArrayRepeat(a, b)
        | ExprKind::Index(a, b)
        | ExprKind::Range(a, b) => vec![a, b],
        ExprKind::ArrayLiteral(items) => items.iter().collect(),
        ExprKind::RecordLiteral(fields) => fields.iter().map(|(_, e)| e).collect(),
        ExprKind::Quantified { binders, body, .. } => binders
            .iter()
            .map(|(_, e)| e)
            .chain(std::iter::once(&**body))
            .collect(),
        ExprKind::Call { args, .. } | ExprKind::LambdaApply { args, .. } => args.iter().collect(),
    }
}

fn children_mut(e: &mut Expr) -> Vec<&mut Expr> {
    match &mut e.kind {
        ExprKind::Null | ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Var(_) => vec![],
        ExprKind::Unary(_, a)
        | ExprKind::Length(a)
        | ExprKind::Field(a, _)
        | ExprKind::Deref(a)
        | ExprKind::New(a)
        | ExprKind::Cast(_, a) => vec![a],
        ExprKind::Binary(_, a, b)
        | ExprKind::ArrayRepeat(a, b)
        | ExprKind::Index(a, b)
        | ExprKind::Range(a, b) => vec![a, b],
        ExprKind::ArrayLiteral(items) => items.iter_mut().collect(),
        ExprKind::RecordLiteral(fields) => fields.iter_mut().map(|(_, e)| e).collect(),
        ExprKind::Quantified { binders, body, .. } => binders
            .iter_mut()
            .map(|(_, e)| e)
            .chain(std::iter::once(&mut **body))
            .collect(),
        ExprKind::Call { args, .. } | ExprKind::LambdaApply { args, .. } => {
            args.iter_mut().collect()
        }
    }
}

/// Resets every expression and statement span so ASTs can be compared
/// structurally.
pub fn erase_spans(decls: &mut [Decl]) {
    fn stmts(body: &mut [Stmt]) {
        for s in body {
            s.span = Span::default();
            match &mut s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    stmts(then_branch);
                    stmts(else_branch);
                }
                StmtKind::While { body, .. } => stmts(body),
                _ => {}
            }
        }
    }
    walk_exprs_mut(decls, &mut |e| e.span = Span::default());
    for d in decls {
        match d {
            Decl::Function(f) => {
                f.span = Span::default();
                for p in f.params.iter_mut().chain(f.returns.iter_mut()) {
                    p.span = Span::default();
                }
                stmts(&mut f.body);
            }
            Decl::Type(t) => t.span = Span::default(),
        }
    }
}
