//! Recursive descent parser over the layout-aware token stream.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

type PResult<T> = Result<T, SyntaxError>;

/// Parses a complete source file.
pub fn parse(text: &str, path: &str) -> PResult<SourceFile> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut declarations = Vec::new();
    p.skip_newlines();
    while !p.at(&TokenKind::Eof) {
        declarations.push(p.declaration()?);
        p.skip_newlines();
    }
    Ok(SourceFile {
        path: path.to_string(),
        text: text.to_string(),
        declarations,
        line_index: line_starts(text),
    })
}

/// Parses a standalone type expression such as `bool[]` or `{int x, ...}`.
pub fn parse_type(text: &str) -> PResult<TypeExpr> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let ty = p.type_expr()?;
    p.skip_newlines();
    p.expect(&TokenKind::Eof)?;
    Ok(ty)
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> PResult<Expr> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.skip_newlines();
    p.expect(&TokenKind::Eof)?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, ahead: usize) -> &TokenKind {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> PResult<Span> {
        if self.at(kind) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&kind.describe()))
        }
    }

    fn unexpected(&self, expected: &str) -> SyntaxError {
        SyntaxError::new(
            format!("expected {expected}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            TokenKind::Ident(name) => Ok((name, self.bump().span)),
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn skip_newlines(&mut self) {
        while self.at(&TokenKind::Newline) {
            self.bump();
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        if self.eat(&TokenKind::Newline) || self.at(&TokenKind::Eof) || self.at(&TokenKind::Dedent)
        {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    // ---- declarations ----

    fn declaration(&mut self) -> PResult<Decl> {
        match self.peek() {
            TokenKind::Function | TokenKind::Method => self.function().map(Decl::Function),
            TokenKind::Type => self.type_decl().map(Decl::Type),
            _ => Err(self.unexpected("`function`, `method` or `type`")),
        }
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let start = self.span();
        let kind = match self.bump().kind {
            TokenKind::Method => FunctionKind::Method,
            _ => FunctionKind::Function,
        };
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                let pstart = self.span();
                let ty = self.type_expr()?;
                let (pname, pend) = self.ident()?;
                params.push(Param {
                    name: Some(pname),
                    ty,
                    span: pstart.to(pend),
                });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RParen)?;
        let mut returns = Vec::new();
        if self.eat(&TokenKind::Arrow) {
            if self.at(&TokenKind::LParen) {
                self.bump();
                loop {
                    let rstart = self.span();
                    let ty = self.type_expr()?;
                    let name = match self.peek().clone() {
                        TokenKind::Ident(n) => {
                            self.bump();
                            Some(n)
                        }
                        _ => None,
                    };
                    returns.push(Param {
                        name,
                        ty,
                        span: rstart.to(self.prev_span()),
                    });
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::RParen)?;
            } else {
                let rstart = self.span();
                let ty = self.type_expr()?;
                returns.push(Param {
                    name: None,
                    ty,
                    span: rstart.to(self.prev_span()),
                });
            }
        }
        let mut requires = Vec::new();
        let mut ensures = Vec::new();
        loop {
            if self.eat(&TokenKind::Requires) {
                requires.push(self.expr()?);
            } else if self.eat(&TokenKind::Ensures) {
                ensures.push(self.expr()?);
            } else {
                break;
            }
        }
        let header_end = self.prev_span();
        self.expect(&TokenKind::Colon)?;
        let body = self.block()?;
        Ok(FunctionDecl {
            kind,
            name,
            params,
            returns,
            requires,
            ensures,
            body,
            span: start.to(header_end),
        })
    }

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        let start = self.expect(&TokenKind::Type)?;
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::Is)?;
        let (ty, binder) = self.binder_or_type()?;
        let mut invariants = Vec::new();
        while self.eat(&TokenKind::Where) {
            invariants.push(self.expr()?);
        }
        let end = self.prev_span();
        self.end_of_line()?;
        Ok(TypeDecl {
            name,
            binder,
            ty,
            invariants,
            span: start.to(end),
        })
    }

    /// `(T name)` introduces a binder; anything else is a plain type.
    fn binder_or_type(&mut self) -> PResult<(TypeExpr, Option<String>)> {
        if self.at(&TokenKind::LParen) {
            let save = self.pos;
            self.bump();
            if let Ok(ty) = self.type_expr() {
                if let TokenKind::Ident(name) = self.peek().clone() {
                    if self.peek_at(1) == &TokenKind::RParen {
                        self.bump();
                        self.bump();
                        return Ok((ty, Some(name)));
                    }
                }
            }
            self.pos = save;
        }
        Ok((self.type_expr()?, None))
    }

    // ---- types ----

    pub(crate) fn type_expr(&mut self) -> PResult<TypeExpr> {
        let first = self.type_prefix()?;
        if !self.at(&TokenKind::Bar) {
            return Ok(first);
        }
        let mut members = vec![first];
        while self.eat(&TokenKind::Bar) {
            members.push(self.type_prefix()?);
        }
        Ok(TypeExpr::Union(members))
    }

    fn type_prefix(&mut self) -> PResult<TypeExpr> {
        if self.eat(&TokenKind::Amp) {
            return Ok(TypeExpr::Reference(Box::new(self.type_prefix()?)));
        }
        let mut ty = self.type_atom()?;
        while self.at(&TokenKind::LBracket) && self.peek_at(1) == &TokenKind::RBracket {
            self.bump();
            self.bump();
            ty = TypeExpr::Array(Box::new(ty));
        }
        Ok(ty)
    }

    fn type_atom(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            TokenKind::IntType => {
                self.bump();
                Ok(TypeExpr::Int)
            }
            TokenKind::BoolType => {
                self.bump();
                Ok(TypeExpr::Bool)
            }
            TokenKind::Null => {
                self.bump();
                Ok(TypeExpr::Null)
            }
            TokenKind::Ident(name) => {
                self.bump();
                Ok(TypeExpr::Named(name))
            }
            TokenKind::LParen => {
                self.bump();
                let ty = self.type_expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(ty)
            }
            TokenKind::LBrace => {
                self.bump();
                let mut fields = Vec::new();
                let mut open = false;
                loop {
                    if self.eat(&TokenKind::Ellipsis) {
                        open = true;
                        break;
                    }
                    let ty = self.type_expr()?;
                    let (name, _) = self.ident()?;
                    fields.push((name, ty));
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::RBrace)?;
                Ok(TypeExpr::Record { fields, open })
            }
            TokenKind::Function => {
                self.bump();
                let params = self.type_list()?;
                let returns = if self.eat(&TokenKind::Arrow) {
                    if self.at(&TokenKind::LParen) {
                        self.type_list()?
                    } else {
                        vec![self.type_expr()?]
                    }
                } else {
                    Vec::new()
                };
                Ok(TypeExpr::Lambda { params, returns })
            }
            _ => Err(self.unexpected("type")),
        }
    }

    fn type_list(&mut self) -> PResult<Vec<TypeExpr>> {
        self.expect(&TokenKind::LParen)?;
        let mut out = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                out.push(self.type_expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RParen)?;
        Ok(out)
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(&TokenKind::Newline)?;
        self.expect(&TokenKind::Indent)?;
        let mut body = Vec::new();
        while !self.at(&TokenKind::Dedent) && !self.at(&TokenKind::Eof) {
            body.push(self.statement()?);
        }
        self.expect(&TokenKind::Dedent)?;
        Ok(body)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let simple = |kind: StmtKind, p: &mut Parser| -> PResult<Stmt> {
            let span = start.to(p.prev_span());
            p.end_of_line()?;
            Ok(Stmt { kind, span })
        };
        match self.peek() {
            TokenKind::Return => {
                self.bump();
                let mut values = Vec::new();
                if !matches!(
                    self.peek(),
                    TokenKind::Newline | TokenKind::Dedent | TokenKind::Eof
                ) {
                    loop {
                        values.push(self.expr()?);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                }
                simple(StmtKind::Return(values), self)
            }
            TokenKind::Assert => {
                self.bump();
                let e = self.expr()?;
                simple(StmtKind::Assert(e), self)
            }
            TokenKind::Skip => {
                self.bump();
                simple(StmtKind::Skip, self)
            }
            TokenKind::Break => {
                self.bump();
                simple(StmtKind::Break, self)
            }
            TokenKind::Continue => {
                self.bump();
                simple(StmtKind::Continue, self)
            }
            TokenKind::If => self.if_statement(),
            TokenKind::While => {
                self.bump();
                let cond = self.expr()?;
                let mut invariants = Vec::new();
                while self.eat(&TokenKind::Where) {
                    invariants.push(self.expr()?);
                }
                let span = start.to(self.prev_span());
                self.expect(&TokenKind::Colon)?;
                let body = self.block()?;
                Ok(Stmt {
                    kind: StmtKind::While {
                        cond,
                        invariants,
                        body,
                    },
                    span,
                })
            }
            _ => {
                if let Some((ty, name)) = self.try_var_decl_head() {
                    let init = if self.eat(&TokenKind::Assign) {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    return simple(StmtKind::VarDecl { ty, name, init }, self);
                }
                let e = self.expr()?;
                if self.eat(&TokenKind::Assign) {
                    if !is_lvalue(&e) {
                        return Err(SyntaxError::new("invalid assignment target", e.span));
                    }
                    let value = self.expr()?;
                    return simple(StmtKind::Assign { target: e, value }, self);
                }
                if !matches!(e.kind, ExprKind::Call { .. }) {
                    return Err(SyntaxError::new(
                        "expression statement must be a call",
                        e.span,
                    ));
                }
                simple(StmtKind::Expr(e), self)
            }
        }
    }

    /// Speculatively parses `Type name` followed by `=` or end of line.
    fn try_var_decl_head(&mut self) -> Option<(TypeExpr, String)> {
        let save = self.pos;
        if let Ok(ty) = self.type_expr() {
            if let TokenKind::Ident(name) = self.peek().clone() {
                if matches!(
                    self.peek_at(1),
                    TokenKind::Assign | TokenKind::Newline | TokenKind::Eof | TokenKind::Dedent
                ) {
                    self.bump();
                    return Some((ty, name));
                }
            }
        }
        self.pos = save;
        None
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let start = self.expect(&TokenKind::If)?;
        let cond = self.expr()?;
        let span = start.to(self.prev_span());
        self.expect(&TokenKind::Colon)?;
        let then_branch = self.block()?;
        let else_branch = if self.at(&TokenKind::Else) {
            self.bump();
            if self.at(&TokenKind::If) {
                vec![self.if_statement()?]
            } else {
                self.expect(&TokenKind::Colon)?;
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_branch,
                else_branch,
            },
            span,
        })
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            TokenKind::Implies => BinaryOp::Implies,
            TokenKind::BarBar => BinaryOp::Or,
            TokenKind::AmpAmp => BinaryOp::And,
            TokenKind::EqEq => BinaryOp::Eq,
            TokenKind::NotEq => BinaryOp::Ne,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::LtEq => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::GtEq => BinaryOp::Ge,
            TokenKind::Plus => BinaryOp::Add,
            TokenKind::Minus => BinaryOp::Sub,
            TokenKind::Star => BinaryOp::Mul,
            TokenKind::Slash => BinaryOp::Div,
            TokenKind::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; `==>` is right-associative, the rest left.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.at(&TokenKind::DotDot) {
                if RANGE_PRECEDENCE < min_prec {
                    break;
                }
                self.bump();
                let rhs = self.binary(RANGE_PRECEDENCE + 1)?;
                let span = lhs.span.to(rhs.span);
                lhs = Expr::new(ExprKind::Range(Box::new(lhs), Box::new(rhs)), span);
                continue;
            }
            let Some(op) = self.binary_op() else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let next = if op == BinaryOp::Implies {
                prec
            } else {
                prec + 1
            };
            let rhs = self.binary(next)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let wrap = |kind: fn(Box<Expr>) -> ExprKind, p: &mut Parser| -> PResult<Expr> {
            p.bump();
            let inner = p.unary()?;
            let span = start.to(inner.span);
            Ok(Expr::new(kind(Box::new(inner)), span))
        };
        match self.peek() {
            TokenKind::Bang => wrap(|e| ExprKind::Unary(UnaryOp::Not, e), self),
            TokenKind::Minus => {
                let mut e = wrap(|e| ExprKind::Unary(UnaryOp::Neg, e), self)?;
                // `-<literal>` is itself a literal
                if let ExprKind::Unary(_, inner) = &mut e.kind {
                    if let ExprKind::Int(v) = &inner.kind {
                        if v.sign() != num_bigint::Sign::Minus {
                            e.kind = ExprKind::Int(-v);
                        }
                    }
                }
                Ok(e)
            }
            TokenKind::Star => wrap(ExprKind::Deref, self),
            TokenKind::New => wrap(ExprKind::New, self),
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat(&TokenKind::LBracket) {
                let index = self.expr()?;
                let end = self.expect(&TokenKind::RBracket)?;
                let span = e.span.to(end);
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(index)), span);
            } else if self.eat(&TokenKind::Dot) {
                let (field, end) = self.ident()?;
                let span = e.span.to(end);
                e = Expr::new(ExprKind::Field(Box::new(e), field), span);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lit = |kind: ExprKind, p: &mut Parser| {
            p.bump();
            Ok(Expr::new(kind, start))
        };
        match self.peek().clone() {
            TokenKind::Int(v) => lit(ExprKind::Int(v), self),
            TokenKind::True => lit(ExprKind::Bool(true), self),
            TokenKind::False => lit(ExprKind::Bool(false), self),
            TokenKind::Null => lit(ExprKind::Null, self),
            TokenKind::Ident(name) => {
                self.bump();
                if self.eat(&TokenKind::LParen) {
                    let args = self.args(TokenKind::RParen)?;
                    let end = self.expect(&TokenKind::RParen)?;
                    Ok(Expr::new(ExprKind::Call { name, args }, start.to(end)))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), start))
                }
            }
            TokenKind::Bar => {
                self.bump();
                let inner = self.expr()?;
                let end = self.expect(&TokenKind::Bar)?;
                Ok(Expr::new(ExprKind::Length(Box::new(inner)), start.to(end)))
            }
            TokenKind::LParen => {
                if let Some(cast) = self.try_cast()? {
                    return Ok(cast);
                }
                self.bump();
                let mut inner = self.expr()?;
                let end = self.expect(&TokenKind::RParen)?;
                inner.span = start.to(end);
                Ok(inner)
            }
            TokenKind::LBracket => {
                self.bump();
                if self.at(&TokenKind::RBracket) {
                    let end = self.bump().span;
                    return Ok(Expr::new(ExprKind::ArrayLiteral(Vec::new()), start.to(end)));
                }
                let first = self.expr()?;
                if self.eat(&TokenKind::Semicolon) {
                    let count = self.expr()?;
                    let end = self.expect(&TokenKind::RBracket)?;
                    return Ok(Expr::new(
                        ExprKind::ArrayRepeat(Box::new(first), Box::new(count)),
                        start.to(end),
                    ));
                }
                let mut items = vec![first];
                while self.eat(&TokenKind::Comma) {
                    items.push(self.expr()?);
                }
                let end = self.expect(&TokenKind::RBracket)?;
                Ok(Expr::new(ExprKind::ArrayLiteral(items), start.to(end)))
            }
            TokenKind::LBrace => {
                self.bump();
                let mut fields = Vec::new();
                loop {
                    let (name, _) = self.ident()?;
                    self.expect(&TokenKind::Colon)?;
                    fields.push((name, self.expr()?));
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                let end = self.expect(&TokenKind::RBrace)?;
                Ok(Expr::new(ExprKind::RecordLiteral(fields), start.to(end)))
            }
            TokenKind::All | TokenKind::Some => {
                let quantifier = if self.bump().kind == TokenKind::All {
                    Quantifier::All
                } else {
                    Quantifier::Some
                };
                self.expect(&TokenKind::LBrace)?;
                let mut binders = Vec::new();
                loop {
                    let (var, _) = self.ident()?;
                    self.expect(&TokenKind::In)?;
                    binders.push((var, self.expr()?));
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(&TokenKind::Bar)?;
                let body = self.expr()?;
                let end = self.expect(&TokenKind::RBrace)?;
                Ok(Expr::new(
                    ExprKind::Quantified {
                        quantifier,
                        binders,
                        body: Box::new(body),
                    },
                    start.to(end),
                ))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn args(&mut self, close: TokenKind) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.at(&close) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        Ok(args)
    }

    /// `(T) e` where `T` is unambiguously a type, or a bare name followed by
    /// something that can only start an operand.
    fn try_cast(&mut self) -> PResult<Option<Expr>> {
        let save = self.pos;
        let start = self.bump().span;
        let Ok(ty) = self.type_expr() else {
            self.pos = save;
            return Ok(None);
        };
        if !self.eat(&TokenKind::RParen) {
            self.pos = save;
            return Ok(None);
        }
        let operand_follows = matches!(
            self.peek(),
            TokenKind::Ident(_)
                | TokenKind::Int(_)
                | TokenKind::True
                | TokenKind::False
                | TokenKind::Null
                | TokenKind::LParen
                | TokenKind::LBracket
                | TokenKind::LBrace
                | TokenKind::Bang
                | TokenKind::All
                | TokenKind::Some
        );
        let is_cast = match ty {
            TypeExpr::Named(_) => operand_follows,
            _ => {
                operand_follows
                    || matches!(
                        self.peek(),
                        TokenKind::Minus | TokenKind::Star | TokenKind::Bar
                    )
            }
        };
        if !is_cast {
            self.pos = save;
            return Ok(None);
        }
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Some(Expr::new(ExprKind::Cast(ty, Box::new(operand)), span)))
    }
}

fn is_lvalue(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Deref(_) => true,
        ExprKind::Index(base, _) | ExprKind::Field(base, _) => is_lvalue(base),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn func(src: &str) -> FunctionDecl {
        match parse(src, "t.wys").unwrap().declarations.remove(0) {
            Decl::Function(f) => f,
            other => panic!("expected function, got {other:?}"),
        }
    }

    #[test]
    fn sum_listing_shape() {
        let f = func(
            "function sum(int[] xs) -> (nat r)\n// All items in xs must be greater-or-equal to zero\nrequires all { i in 0..|xs| | xs[i] >= 0 }:\n  int s = 0\n  int i = 0\n  while i < |xs| where s >= 0 && i >= 0:\n    s = s + xs[i]\n    i = i + 1\n  return s\n",
        );
        assert_eq!(f.requires.len(), 1);
        assert!(f.ensures.is_empty());
        let whiles: Vec<_> = f
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::While { invariants, .. } => Some(invariants.len()),
                _ => None,
            })
            .collect();
        assert_eq!(whiles, vec![1]);
    }

    #[test]
    fn constrained_type_with_binder() {
        let src = parse("type pos is (int p) where p > 0", "t.wys").unwrap();
        match &src.declarations[0] {
            Decl::Type(t) => {
                assert_eq!(t.binder.as_deref(), Some("p"));
                assert_eq!(t.ty, TypeExpr::Int);
                assert_eq!(t.invariants.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn open_record_type() {
        let src = parse("type T is {int x, int y, ...}", "t.wys").unwrap();
        match &src.declarations[0] {
            Decl::Type(t) => assert_eq!(
                t.ty,
                TypeExpr::Record {
                    fields: vec![("x".into(), TypeExpr::Int), ("y".into(), TypeExpr::Int)],
                    open: true
                }
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unindented_body_is_an_error() {
        let err = parse("function f():\nreturn", "t.wys").unwrap_err();
        assert_eq!(err.span.line, 2);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a ==> b || c && d == e + f * g").unwrap();
        let ExprKind::Binary(BinaryOp::Implies, _, rhs) = e.kind else {
            panic!()
        };
        let ExprKind::Binary(BinaryOp::Or, _, rhs) = rhs.kind else {
            panic!()
        };
        let ExprKind::Binary(BinaryOp::And, _, rhs) = rhs.kind else {
            panic!()
        };
        let ExprKind::Binary(BinaryOp::Eq, _, rhs) = rhs.kind else {
            panic!()
        };
        let ExprKind::Binary(BinaryOp::Add, _, rhs) = rhs.kind else {
            panic!()
        };
        assert!(matches!(rhs.kind, ExprKind::Binary(BinaryOp::Mul, _, _)));
    }

    #[test]
    fn range_binds_looser_than_addition() {
        let e = parse_expr("i+1 .. |xs|").unwrap();
        let ExprKind::Range(lo, hi) = e.kind else {
            panic!()
        };
        assert!(matches!(lo.kind, ExprKind::Binary(BinaryOp::Add, _, _)));
        assert!(matches!(hi.kind, ExprKind::Length(_)));
    }

    #[test]
    fn length_bars_inside_quantifier() {
        let e = parse_expr("all { k in i.. |items| | items[k] <= r }").unwrap();
        let ExprKind::Quantified { binders, body, .. } = e.kind else {
            panic!()
        };
        assert!(matches!(binders[0].1.kind, ExprKind::Range(..)));
        assert!(matches!(body.kind, ExprKind::Binary(BinaryOp::Le, _, _)));
    }

    #[test]
    fn casts_and_parens() {
        assert!(matches!(
            parse_expr("(int) x").unwrap().kind,
            ExprKind::Cast(TypeExpr::Int, _)
        ));
        assert!(matches!(
            parse_expr("(nat) x").unwrap().kind,
            ExprKind::Cast(..)
        ));
        assert!(matches!(
            parse_expr("(x) - 1").unwrap().kind,
            ExprKind::Binary(BinaryOp::Sub, _, _)
        ));
        assert!(matches!(
            parse_expr("(i+1) == |items|").unwrap().kind,
            ExprKind::Binary(BinaryOp::Eq, _, _)
        ));
    }

    #[test]
    fn statements() {
        let f = func(
            "method swap(&bool x, &bool y):\n    bool temp = *x\n    *x = *y\n    *y = temp\n",
        );
        assert_eq!(f.kind, FunctionKind::Method);
        assert_eq!(
            f.params[0].ty,
            TypeExpr::Reference(Box::new(TypeExpr::Bool))
        );
        assert!(f.returns.is_empty());
        assert!(
            matches!(f.body[1].kind, StmtKind::Assign { ref target, .. } if matches!(target.kind, ExprKind::Deref(_)))
        );
    }

    #[test]
    fn if_else_chain() {
        let f = func("function m(int x, int y) -> (int z):\n    if x > y:\n        return x\n    else if x == y:\n        return 0\n    else:\n        return y\n");
        let StmtKind::If { else_branch, .. } = &f.body[0].kind else {
            panic!()
        };
        assert!(matches!(else_branch[0].kind, StmtKind::If { .. }));
    }

    #[test]
    fn syntax_error_reports_span() {
        let err = parse("function f(int x) -> (int r):\n    return x +\n", "t.wys").unwrap_err();
        assert_eq!(err.span.line, 2);
        assert!(err.message.contains("expected expression"));
    }
}
