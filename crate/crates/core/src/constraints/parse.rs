//! Line-oriented constraint syntax.
//!
//! ```text
//! # comment
//! C1: e[i].Type == e[i-1].Type
//! C2: IF e[i].Act == "B" AND e[j].Act == "A" THEN e[i].Res == e[j].Res
//! C4: IF e[i].Act == "B" THEN 30 <= duration <= 120
//! ```

use std::collections::HashSet;

use thiserror::Error;

use super::{CmpOp, Comparison, Constraint, ConstraintKind, ConstraintSet, Designator, Operand, ThenExpr};
use crate::model::AttrValue;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const KEYWORDS: [&str; 5] = ["IF", "THEN", "AND", "OR", "duration"];

pub(super) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Op(CmpOp),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Colon,
    Minus,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Spanned>, ParseError> {
    let err = |col: usize, message: String| ParseError {
        line: lineno,
        column: col,
        message,
    };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '.' => Some(Tok::Dot),
            ':' => Some(Tok::Colon),
            '-' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, col });
            k += 1;
            continue;
        }
        let next = chars.get(k + 1).copied();
        let op = match (c, next) {
            ('<', Some('=')) => Some((CmpOp::Le, 2)),
            ('>', Some('=')) => Some((CmpOp::Ge, 2)),
            ('=', Some('=')) => Some((CmpOp::Eq, 2)),
            ('!', Some('=')) => Some((CmpOp::Ne, 2)),
            ('<', _) => Some((CmpOp::Lt, 1)),
            ('>', _) => Some((CmpOp::Gt, 1)),
            _ => None,
        };
        if let Some((op, n)) = op {
            out.push(Spanned { tok: Tok::Op(op), col });
            k += n;
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            k += 1;
            loop {
                match chars.get(k) {
                    None => return Err(err(col, "unterminated string".into())),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(k + 1) {
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(err(k + 1, "invalid escape".into())),
                        }
                        k += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        k += 1;
                    }
                }
            }
            k += 1;
            out.push(Spanned { tok: Tok::Str(s), col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let text: String = chars[start..k].iter().collect();
            let v = text
                .parse()
                .map_err(|_| err(col, format!("integer {text} out of range")))?;
            out.push(Spanned { tok: Tok::Int(v), col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..k].iter().collect()),
                col,
            });
            continue;
        }
        if c == '=' || c == '!' {
            return Err(err(col, format!("unknown operator '{c}'")));
        }
        return Err(err(col, format!("unexpected character '{c}'")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let column = self
            .toks
            .get(self.pos)
            .map(|t| t.col)
            .unwrap_or(self.end_col);
        Err(ParseError {
            line: self.line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {kw}"))
        }
    }

    fn designator(&mut self) -> Result<Designator, ParseError> {
        match self.bump() {
            Some(Tok::Ident(s)) if s == "j" => Ok(Designator::Partner),
            Some(Tok::Ident(s)) if s == "i" => {
                if self.peek() == Some(&Tok::Minus) {
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Int(1)) => Ok(Designator::Previous),
                        _ => {
                            self.pos -= 1;
                            self.err("only e[i-1] is supported")
                        }
                    }
                } else {
                    Ok(Designator::Current)
                }
            }
            _ => {
                self.pos -= 1;
                self.err("expected i, j or i-1")
            }
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == "e" && self.peek_at(1) == Some(&Tok::LBracket) => {
                self.pos += 2;
                let d = self.designator()?;
                self.expect(Tok::RBracket, "']'")?;
                self.expect(Tok::Dot, "'.'")?;
                match self.bump() {
                    Some(Tok::Ident(name)) if !is_keyword(&name) => Ok(Operand::Attr(d, name)),
                    Some(Tok::Str(name)) => Ok(Operand::Attr(d, name)),
                    _ => {
                        self.pos -= 1;
                        self.err("expected attribute name")
                    }
                }
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Operand::Const(AttrValue::Str(s)))
            }
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(Operand::Const(AttrValue::Int(v)))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                match self.bump() {
                    Some(Tok::Int(v)) => Ok(Operand::Const(AttrValue::Int(-v))),
                    _ => {
                        self.pos -= 1;
                        self.err("expected integer after '-'")
                    }
                }
            }
            _ => self.err("expected e[..].attribute or a constant"),
        }
    }

    fn comparison(&mut self) -> Result<Comparison, ParseError> {
        let lhs = self.operand()?;
        let op = match self.bump() {
            Some(Tok::Op(op)) => op,
            _ => {
                self.pos -= 1;
                return self.err("expected comparison operator");
            }
        };
        let rhs = self.operand()?;
        Ok(Comparison { lhs, op, rhs })
    }

    fn then_or(&mut self) -> Result<ThenExpr, ParseError> {
        let mut left = self.then_and()?;
        while self.at_keyword("OR") {
            self.pos += 1;
            let right = self.then_and()?;
            left = ThenExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn then_and(&mut self) -> Result<ThenExpr, ParseError> {
        let mut left = self.then_atom()?;
        while self.at_keyword("AND") {
            self.pos += 1;
            let right = self.then_atom()?;
            left = ThenExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn then_atom(&mut self) -> Result<ThenExpr, ParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let e = self.then_or()?;
            self.expect(Tok::RParen, "')'")?;
            Ok(e)
        } else {
            Ok(ThenExpr::Cmp(self.comparison()?))
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.peek() == Some(&Tok::Minus);
        if neg {
            self.pos += 1;
        }
        match self.bump() {
            Some(Tok::Int(v)) => Ok(if neg { -v } else { v }),
            _ => {
                self.pos -= 1;
                self.err("expected integer")
            }
        }
    }

    fn is_duration_bound(&self) -> bool {
        let mut n = 0;
        if self.peek() == Some(&Tok::Minus) {
            n = 1;
        }
        matches!(self.peek_at(n), Some(Tok::Int(_)))
            && matches!(self.peek_at(n + 1), Some(Tok::Op(_)))
            && matches!(self.peek_at(n + 2), Some(Tok::Ident(s)) if s == "duration")
    }

    fn body(&mut self) -> Result<ConstraintKind, ParseError> {
        if !self.at_keyword("IF") {
            let start = self.pos;
            let c = self.comparison()?;
            return match (&c.lhs, c.op, &c.rhs) {
                (Operand::Attr(a, x), CmpOp::Eq, Operand::Attr(b, y))
                    if x == y
                        && matches!(
                            (a, b),
                            (Designator::Current, Designator::Previous)
                                | (Designator::Previous, Designator::Current)
                        ) =>
                {
                    Ok(ConstraintKind::Equality { attribute: x.clone() })
                }
                _ => {
                    self.pos = start;
                    self.err("equality constraint must have the form e[i].X == e[i-1].X")
                }
            };
        }
        self.pos += 1;
        let if_start = self.pos;
        let mut when = vec![self.comparison()?];
        while self.at_keyword("AND") {
            self.pos += 1;
            when.push(self.comparison()?);
        }
        self.expect_keyword("THEN")?;
        if self.is_duration_bound() {
            let lo_pos = self.pos;
            let min = self.int()?;
            self.expect(Tok::Op(CmpOp::Le), "'<='")?;
            self.expect_keyword("duration")?;
            self.expect(Tok::Op(CmpOp::Le), "'<='")?;
            let max = self.int()?;
            if when.iter().any(|c| !c.is_current_only()) {
                self.pos = if_start;
                return self.err("event-time conditions may only refer to e[i]");
            }
            if min < 0 {
                self.pos = lo_pos;
                return self.err("duration bounds must be non-negative");
            }
            if min > max {
                self.pos = lo_pos;
                return self.err(format!("duration lower bound {min} exceeds upper bound {max}"));
            }
            return Ok(ConstraintKind::EventTime { when, min, max });
        }
        let then_start = self.pos;
        let then = self.then_or()?;
        let mut designators = HashSet::new();
        for c in &when {
            designators.extend(c.lhs.designator());
            designators.extend(c.rhs.designator());
        }
        then.visit(&mut |c| {
            designators.extend(c.lhs.designator());
            designators.extend(c.rhs.designator());
        });
        if designators.contains(&Designator::Partner) && designators.contains(&Designator::Previous)
        {
            self.pos = then_start.min(if_start);
            return self.err("e[j] and e[i-1] cannot be combined in one constraint");
        }
        Ok(ConstraintKind::IfThen { when, then })
    }
}

/// Parses a constraint file. Unlabelled constraints get `C<k>`, where `k` is
/// their 1-based position among the constraints of the file.
pub fn parse_constraints(text: &str) -> Result<ConstraintSet, ParseError> {
    let mut out = Vec::new();
    let mut labels = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let lineno = n + 1;
        let toks = lex(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser {
            toks,
            pos: 0,
            line: lineno,
            end_col: raw.chars().count() + 1,
        };
        let label = match (p.peek().cloned(), p.peek_at(1)) {
            (Some(Tok::Ident(l)), Some(Tok::Colon)) => {
                p.pos += 2;
                l
            }
            _ => format!("C{}", out.len() + 1),
        };
        let kind = p.body()?;
        if p.pos < p.toks.len() {
            return p.err("unexpected trailing input");
        }
        if !labels.insert(label.clone()) {
            return Err(ParseError {
                line: lineno,
                column: 1,
                message: format!("duplicate label {label}"),
            });
        }
        out.push(Constraint { label, kind });
    }
    Ok(ConstraintSet::new(out))
}
