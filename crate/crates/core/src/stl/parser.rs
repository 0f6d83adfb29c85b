//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! formula := conj ('||' conj)*
//! conj    := until ('&&' until)*
//! until   := unary ('U' '[' int ',' int ']' unary)?
//! unary   := '!' unary | ('F' | 'G') '[' int ',' int ']' '(' formula ')'
//!          | 'true' | expr ('<=' | '>=') expr | '(' formula ')'
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | number | 'x' int | '(' expr ')'
//!          | ('sqrt' | 'abs') '(' expr ')' | ('min' | 'max') '(' expr ',' expr ')'
//!          | 'dist' '(' var (',' var)* ';' number (',' number)* ')'
//! ```
//!
//! A parenthesis at the start of an operand is ambiguous between an
//! arithmetic group and a sub-formula; the parser tries the predicate reading
//! first and backtracks.

use super::{Expr, Formula, Interval, StlError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Le,
    Ge,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(s) => format!("number {s}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Le => "'<='".into(),
            Tok::Ge => "'>='".into(),
            Tok::Bang => "'!'".into(),
            Tok::AndAnd => "'&&'".into(),
            Tok::OrOr => "'||'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

/// Parses `text` and checks every state index against `state_dim`.
pub fn parse_formula(text: &str, state_dim: usize) -> Result<Formula, StlError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        state_dim,
        furthest: None,
    };
    let result = parser.formula().and_then(|f| {
        if parser.peek() == &Tok::Eof {
            Ok(f)
        } else {
            Err(parser.unexpected("end of input"))
        }
    });
    result.map_err(|e| match (e, parser.furthest.take()) {
        (Fail::Syntax(col, _), Some((fcol, fmsg))) if fcol > col => syntax(fcol, fmsg),
        (Fail::Syntax(col, msg), _) => syntax(col, msg),
        (Fail::Fatal(err), _) => err,
    })
}

fn syntax(column: usize, message: String) -> StlError {
    StlError::Syntax { column, message }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, StlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '!' => (Tok::Bang, 1),
            '<' if two('=') => (Tok::Le, 2),
            '>' if two('=') => (Tok::Ge, 2),
            '&' if two('&') => (Tok::AndAnd, 2),
            '|' if two('|') => (Tok::OrOr, 2),
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[start..j].iter().collect();
                (Tok::Number(s), j - start)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            }
            '<' | '>' => {
                return Err(syntax(
                    col,
                    format!("strict comparator '{c}' is not supported; use '{c}='"),
                ))
            }
            other => return Err(syntax(col, format!("unexpected character '{other}'"))),
        };
        out.push((tok, col));
        i += len;
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

enum Fail {
    /// Recoverable: another alternative may still match.
    Syntax(usize, String),
    /// Semantic error on a well-formed input (bad index, reversed interval).
    Fatal(StlError),
}

impl From<StlError> for Fail {
    fn from(e: StlError) -> Self {
        Fail::Fatal(e)
    }
}

type PResult<T> = Result<T, Fail>;

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    state_dim: usize,
    furthest: Option<(usize, String)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn column(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, wanted: &str) -> Fail {
        Fail::Syntax(
            self.column(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn remember(&mut self, fail: &Fail) {
        if let Fail::Syntax(col, msg) = fail {
            if self.furthest.as_ref().is_none_or(|(c, _)| col > c) {
                self.furthest = Some((*col, msg.clone()));
            }
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let mut lhs = self.conj()?;
        while *self.peek() == Tok::OrOr {
            self.advance();
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::AndAnd {
            self.advance();
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> PResult<Formula> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Tok::Ident(s) if s == "U") && *self.peek_at(1) == Tok::LBracket {
            self.advance();
            let interval = self.interval()?;
            let rhs = self.unary()?;
            return Ok(Formula::until(interval, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.advance();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(name) if (name == "F" || name == "G") && *self.peek_at(1) == Tok::LBracket => {
                self.advance();
                let interval = self.interval()?;
                self.expect(Tok::LParen)?;
                let body = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(if name == "F" {
                    Formula::finally(interval, body)
                } else {
                    Formula::globally(interval, body)
                })
            }
            Tok::Ident(name) if name == "true" => {
                self.advance();
                Ok(Formula::True)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let start = self.pos;
        let pred = self.predicate();
        match pred {
            Ok(f) => Ok(f),
            Err(Fail::Syntax(col, msg)) if self.tokens[start].0 == Tok::LParen => {
                self.remember(&Fail::Syntax(col, msg));
                self.pos = start;
                self.advance();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Err(e) => Err(e),
        }
    }

    fn predicate(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        match self.peek() {
            Tok::Le => {
                self.advance();
                Ok(Formula::le(lhs, self.expr()?))
            }
            Tok::Ge => {
                self.advance();
                Ok(Formula::ge(lhs, self.expr()?))
            }
            _ => Err(self.unexpected("'<=' or '>='")),
        }
    }

    fn interval(&mut self) -> PResult<Interval> {
        self.expect(Tok::LBracket)?;
        let a = self.integer()?;
        self.expect(Tok::Comma)?;
        let b = self.integer()?;
        self.expect(Tok::RBracket)?;
        Ok(Interval::new(a, b)?)
    }

    fn integer(&mut self) -> PResult<usize> {
        let col = self.column();
        match self.peek().clone() {
            Tok::Number(s) => {
                let v = s
                    .parse::<usize>()
                    .map_err(|_| Fail::Syntax(col, format!("expected a nonnegative integer, found {s}")))?;
                self.advance();
                Ok(v)
            }
            _ => Err(self.unexpected("a nonnegative integer")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let col = self.column();
        let negative = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Number(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Fail::Syntax(col, format!("malformed number {s}")))?;
                self.advance();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn var(&mut self) -> PResult<usize> {
        let col = self.column();
        match self.peek().clone() {
            Tok::Ident(name) => {
                let index = parse_var(&name)
                    .ok_or_else(|| Fail::Syntax(col, format!("expected a state variable xN, found '{name}'")))?;
                if index >= self.state_dim {
                    return Err(Fail::Fatal(StlError::IndexOutOfRange {
                        index,
                        dim: self.state_dim,
                    }));
                }
                self.advance();
                Ok(index)
            }
            _ => Err(self.unexpected("a state variable xN")),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.advance();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.advance();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.advance();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.advance();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        let col = self.column();
        match self.peek().clone() {
            Tok::Minus => {
                if matches!(self.peek_at(1), Tok::Number(_)) {
                    return Ok(Expr::Const(self.number()?));
                }
                self.advance();
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::Number(_) => Ok(Expr::Const(self.number()?)),
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if parse_var(&name).is_some() {
                    return Ok(Expr::Var(self.var()?));
                }
                match name.as_str() {
                    "sqrt" | "abs" => {
                        self.advance();
                        self.expect(Tok::LParen)?;
                        let e = Box::new(self.expr()?);
                        self.expect(Tok::RParen)?;
                        Ok(if name == "sqrt" { Expr::Sqrt(e) } else { Expr::Abs(e) })
                    }
                    "min" | "max" => {
                        self.advance();
                        self.expect(Tok::LParen)?;
                        let a = Box::new(self.expr()?);
                        self.expect(Tok::Comma)?;
                        let b = Box::new(self.expr()?);
                        self.expect(Tok::RParen)?;
                        Ok(if name == "min" {
                            Expr::Min(a, b)
                        } else {
                            Expr::Max(a, b)
                        })
                    }
                    "dist" => self.dist(),
                    _ => Err(Fail::Syntax(col, format!("unknown identifier '{name}'"))),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn dist(&mut self) -> PResult<Expr> {
        let col = self.column();
        self.advance();
        self.expect(Tok::LParen)?;
        let mut indices = vec![self.var()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            indices.push(self.var()?);
        }
        self.expect(Tok::Semi)?;
        let mut center = vec![self.number()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            center.push(self.number()?);
        }
        self.expect(Tok::RParen)?;
        if indices.len() != center.len() {
            return Err(Fail::Syntax(
                col,
                format!(
                    "dist() has {} variables but {} center coordinates",
                    indices.len(),
                    center.len()
                ),
            ));
        }
        Ok(Expr::dist(indices, center)?)
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}
