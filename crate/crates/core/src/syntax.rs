//! Concrete ASCII syntax.
//!
//! ```text
//! term  ::= INT                        variable (de Bruijn index >= 1)
//!         | "(" "lam" term+ ")"        abstraction; several terms form an application body
//!         | "(" term term+ ")"         left-associated application
//!         | "(" term ")"               grouping
//!         | "{" entry ("," entry)* ","? "}"
//! entry ::= term ":" prob
//! prob  ::= DECIMAL | INT "/" INT
//! ```
//!
//! `;` starts a comment running to the end of the line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::term::{Term, TermError, TermId, TermStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn new(start: usize, end: usize) -> SourceSpan {
        SourceSpan { start, end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedToken,
    BadProbability,
    EmptyDistribution,
    UnbalancedDelimiter,
    ZeroIndex,
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{message} at {}..{}", span.start, span.end)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    fn new(kind: ParseErrorKind, message: impl Into<String>, span: SourceSpan) -> ParseError {
        ParseError { kind, message: message.into(), span }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Lam,
    Number(&'a str),
    Other(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_trivia(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b';' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Option<(Tok<'a>, SourceSpan)> {
        self.skip_trivia();
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let c = *bytes.get(start)?;
        let single = match c {
            b'(' => Some(Tok::Open),
            b')' => Some(Tok::Close),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b':' => Some(Tok::Colon),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Some((tok, SourceSpan::new(start, start + 1)));
        }
        let is_word = |b: u8| !(b.is_ascii_whitespace() || b"(){}:,;".contains(&b));
        while self.pos < bytes.len() && is_word(bytes[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            // Non-ASCII lead byte: consume the whole character.
            let ch = self.src[start..].chars().next()?;
            self.pos += ch.len_utf8();
        }
        let text = &self.src[start..self.pos];
        let span = SourceSpan::new(start, self.pos);
        let tok = if text == "lam" {
            Tok::Lam
        } else if text.bytes().all(|b| b.is_ascii_digit() || b == b'.' || b == b'/' || b == b'-' || b == b'+') {
            Tok::Number(text)
        } else {
            Tok::Other(text)
        };
        Some((tok, span))
    }
}

struct Parser<'a, 's> {
    store: &'s TermStore,
    lexer: Lexer<'a>,
    peeked: Option<Option<(Tok<'a>, SourceSpan)>>,
    /// Open delimiters, for reporting the unmatched one at end of input.
    open: Vec<(u8, SourceSpan)>,
}

impl<'a, 's> Parser<'a, 's> {
    fn peek(&mut self) -> Option<&(Tok<'a>, SourceSpan)> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next());
        }
        self.peeked.as_ref().unwrap().as_ref()
    }

    fn bump(&mut self) -> Option<(Tok<'a>, SourceSpan)> {
        match self.peeked.take() {
            Some(t) => t,
            None => self.lexer.next(),
        }
    }

    fn eof_error(&self) -> ParseError {
        let end = self.lexer.src.len();
        match self.open.last() {
            Some(&(c, span)) => {
                ParseError::new(ParseErrorKind::UnbalancedDelimiter, format!("unclosed '{}'", c as char), span)
            }
            None => {
                ParseError::new(ParseErrorKind::UnexpectedToken, "unexpected end of input", SourceSpan::new(end, end))
            }
        }
    }

    fn term(&mut self) -> Result<TermId, ParseError> {
        let Some((tok, span)) = self.bump() else {
            return Err(self.eof_error());
        };
        match tok {
            Tok::Number(text) => self.variable(text, span),
            Tok::Open => {
                self.open.push((b'(', span));
                let t = self.paren(span)?;
                self.open.pop();
                Ok(t)
            }
            Tok::LBrace => {
                self.open.push((b'{', span));
                let t = self.distribution(span)?;
                self.open.pop();
                Ok(t)
            }
            Tok::Close | Tok::RBrace => {
                Err(ParseError::new(ParseErrorKind::UnbalancedDelimiter, "unmatched closing delimiter", span))
            }
            other => Err(unexpected(&other, span)),
        }
    }

    fn variable(&self, text: &str, span: SourceSpan) -> Result<TermId, ParseError> {
        if !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseError::new(
                ParseErrorKind::UnexpectedToken,
                format!("'{text}' is not a variable index"),
                span,
            ));
        }
        let value: u64 = text
            .parse()
            .map_err(|_| ParseError::new(ParseErrorKind::UnexpectedToken, "variable index out of range", span))?;
        if value == 0 {
            return Err(ParseError::new(
                ParseErrorKind::ZeroIndex,
                "variable index 0 is not allowed; indices start at 1",
                span,
            ));
        }
        if value > u32::MAX as u64 {
            return Err(ParseError::new(ParseErrorKind::UnexpectedToken, "variable index out of range", span));
        }
        Ok(self.store.var(value as i64).expect("index checked above"))
    }

    // After '('.
    fn paren(&mut self, open: SourceSpan) -> Result<TermId, ParseError> {
        let is_lam = matches!(self.peek(), Some((Tok::Lam, _)));
        if is_lam {
            self.bump();
        }
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some((Tok::Close, _)) => {
                    self.bump();
                    break;
                }
                None => return Err(self.eof_error()),
                _ => items.push(self.term()?),
            }
        }
        let Some((&head, rest)) = items.split_first() else {
            return Err(ParseError::new(
                ParseErrorKind::UnexpectedToken,
                if is_lam { "abstraction without a body" } else { "empty parentheses" },
                open,
            ));
        };
        let body = self.store.apps(head, rest);
        Ok(if is_lam { self.store.lam(body) } else { body })
    }

    // After '{'.
    fn distribution(&mut self, open: SourceSpan) -> Result<TermId, ParseError> {
        let mut entries = Vec::new();
        loop {
            if let Some((Tok::RBrace, _)) = self.peek() {
                self.bump();
                break;
            }
            let entry_start = self.peek().map(|t| t.1.start).unwrap_or(open.start);
            let term = self.term()?;
            self.expect_colon()?;
            let p = self.probability()?;
            entries.push((term, p, entry_start));
            match self.bump() {
                Some((Tok::Comma, _)) => {}
                Some((Tok::RBrace, _)) => break,
                Some((tok, span)) => return Err(unexpected(&tok, span)),
                None => return Err(self.eof_error()),
            }
        }
        let close = self.lexer.pos;
        let span = SourceSpan::new(open.start, close);
        if entries.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::EmptyDistribution,
                "a distribution needs at least one entry",
                span,
            ));
        }
        let raw: Vec<(TermId, f64)> = entries.iter().map(|e| (e.0, e.1)).collect();
        self.store.dist(&raw).map_err(|e| match e {
            TermError::NotNormalized(total) => ParseError::new(
                ParseErrorKind::BadProbability,
                format!("distribution weights sum to {total}, expected 1"),
                span,
            ),
            TermError::EmptyDistribution => {
                ParseError::new(ParseErrorKind::EmptyDistribution, "a distribution needs at least one entry", span)
            }
            other => ParseError::new(ParseErrorKind::BadProbability, other.to_string(), span),
        })
    }

    fn expect_colon(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Some((Tok::Colon, _)) => Ok(()),
            Some((tok, span)) => Err(unexpected(&tok, span)),
            None => Err(self.eof_error()),
        }
    }

    fn probability(&mut self) -> Result<f64, ParseError> {
        let (tok, span) = match self.bump() {
            Some(t) => t,
            None => return Err(self.eof_error()),
        };
        let Tok::Number(text) = tok else {
            return Err(ParseError::new(ParseErrorKind::BadProbability, "expected a probability", span));
        };
        let bad = |msg: String| ParseError::new(ParseErrorKind::BadProbability, msg, span);
        let value = match text.split_once('/') {
            Some((num, den)) => {
                let num: f64 = parse_decimal(num).ok_or_else(|| bad(format!("bad numerator in '{text}'")))?;
                let den: f64 = parse_decimal(den).ok_or_else(|| bad(format!("bad denominator in '{text}'")))?;
                if den == 0.0 {
                    return Err(bad(format!("zero denominator in '{text}'")));
                }
                num / den
            }
            None => parse_decimal(text).ok_or_else(|| bad(format!("'{text}' is not a number")))?,
        };
        if !(value > 0.0 && value <= 1.0) {
            return Err(bad(format!("probability {text} is outside (0, 1]")));
        }
        Ok(value)
    }
}

fn parse_decimal(text: &str) -> Option<f64> {
    if text.is_empty() || text.contains('/') {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn unexpected(tok: &Tok<'_>, span: SourceSpan) -> ParseError {
    let shown = match tok {
        Tok::Open => "(".to_string(),
        Tok::Close => ")".to_string(),
        Tok::LBrace => "{".to_string(),
        Tok::RBrace => "}".to_string(),
        Tok::Colon => ":".to_string(),
        Tok::Comma => ",".to_string(),
        Tok::Lam => "lam".to_string(),
        Tok::Number(s) | Tok::Other(s) => s.to_string(),
    };
    ParseError::new(ParseErrorKind::UnexpectedToken, format!("unexpected '{shown}'"), span)
}

/// Parse exactly one term from `text`.
pub fn parse(store: &TermStore, text: &str) -> Result<TermId, ParseError> {
    let mut parser = Parser { store, lexer: Lexer { src: text, pos: 0 }, peeked: None, open: Vec::new() };
    let term = parser.term()?;
    if let Some((tok, span)) = parser.bump() {
        return Err(match tok {
            Tok::Close | Tok::RBrace => {
                ParseError::new(ParseErrorKind::UnbalancedDelimiter, "unmatched closing delimiter", span)
            }
            tok => {
                let mut e = unexpected(&tok, span);
                e.message = format!("{} after a complete term", e.message);
                e
            }
        });
    }
    Ok(term)
}

/// Canonical printed form. Applications are flattened into left-associated
/// sequences and distribution entries appear in store order.
pub fn print(store: &TermStore, id: TermId) -> String {
    let mut out = String::new();
    write_term(store, id, &mut out);
    out
}

fn write_term(store: &TermStore, id: TermId, out: &mut String) {
    match store.term(id) {
        Term::Var(i) => {
            let _ = write!(out, "{i}");
        }
        Term::Lam(body) => {
            out.push_str("(lam ");
            write_term(store, body, out);
            out.push(')');
        }
        Term::App(..) => {
            let mut spine = Vec::new();
            let mut head = id;
            while let Term::App(f, a) = store.term(head) {
                spine.push(a);
                head = f;
            }
            out.push('(');
            write_term(store, head, out);
            for &arg in spine.iter().rev() {
                out.push(' ');
                write_term(store, arg, out);
            }
            out.push(')');
        }
        Term::Dist(entries) => {
            out.push('{');
            for (i, &(t, p)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(store, t, out);
                out.push_str(": ");
                out.push_str(&format_probability(p));
            }
            out.push('}');
        }
    }
}

/// Twelve significant digits with trailing zeros trimmed. If that does not
/// read back as the same double, the shortest round-tripping decimal is used
/// instead so printing never changes a term's identity.
pub fn format_probability(p: f64) -> String {
    let short = decimal_with_significant_digits(p, 12);
    if short.parse::<f64>().ok() == Some(p) {
        short
    } else {
        format!("{p}")
    }
}

fn decimal_with_significant_digits(p: f64, digits: usize) -> String {
    if p == 0.0 {
        return "0".to_string();
    }
    // "d.ddddde-X"
    let sci = format!("{:.*e}", digits - 1, p);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    if exp < 0 {
        s.push_str("0.");
        for _ in 0..(-exp - 1) {
            s.push('0');
        }
        s.push_str(&digits_only);
    } else {
        let int_len = exp as usize + 1;
        if digits_only.len() <= int_len {
            s.push_str(&digits_only);
            for _ in digits_only.len()..int_len {
                s.push('0');
            }
        } else {
            s.push_str(&digits_only[..int_len]);
            s.push('.');
            s.push_str(&digits_only[int_len..]);
        }
    }
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(store: &TermStore, text: &str) -> ParseErrorKind {
        parse(store, text).unwrap_err().kind
    }

    #[test]
    fn parses_booleans_and_s() {
        let s = TermStore::new();
        assert_eq!(parse(&s, "(lam (lam 2))").unwrap(), s.church_true());
        assert_eq!(parse(&s, " ( lam ( lam 1 ) ) ; false\n").unwrap(), s.church_false());
        let sc = parse(&s, "(lam (lam (lam ((3 1) (2 1)))))").unwrap();
        assert_eq!(print(&s, sc), "(lam (lam (lam (3 1 (2 1)))))");
        assert_eq!(s.level(sc), 0);
    }

    #[test]
    fn parses_distribution() {
        let s = TermStore::new();
        let d = parse(&s, "{(lam (lam 2)): 0.6, (lam (lam 1)): 0.4}").unwrap();
        assert_eq!(d, s.coin(0.6).unwrap());
        assert_eq!(print(&s, d), "{(lam (lam 1)): 0.4, (lam (lam 2)): 0.6}");
    }

    #[test]
    fn fractions_and_trailing_comma() {
        let s = TermStore::new();
        let d = parse(&s, "{(lam (lam 2)): 5/6, (lam (lam 1)): 1/6,}").unwrap();
        let crate::term::Term::Dist(es) = s.term(d) else { panic!() };
        assert_eq!(es[1].1, 5.0 / 6.0);
    }

    #[test]
    fn application_sugar() {
        let s = TermStore::new();
        let a = parse(&s, "(lam 1 (lam (lam 1)) 1)").unwrap();
        let b = parse(&s, "(lam ((1 (lam (lam 1))) 1))").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse(&s, "((lam 1))").unwrap(), s.identity());
    }

    #[test]
    fn print_examples() {
        let s = TermStore::new();
        assert_eq!(print(&s, parse(&s, "(lam 1)").unwrap()), "(lam 1)");
        assert_eq!(print(&s, parse(&s, "((lam 1) (lam 1))").unwrap()), "((lam 1) (lam 1))");
        let t = s.church_true();
        let inner = s.coin(0.6).unwrap();
        let nested = s.dist(&[(t, 0.5), (inner, 0.5)]).unwrap();
        assert_eq!(print(&s, nested), "{(lam (lam 1)): 0.2, (lam (lam 2)): 0.8}");
    }

    #[test]
    fn error_kinds() {
        let s = TermStore::new();
        assert_eq!(kind(&s, "0"), ParseErrorKind::ZeroIndex);
        assert_eq!(kind(&s, "(lam 0)"), ParseErrorKind::ZeroIndex);
        assert_eq!(kind(&s, "{}"), ParseErrorKind::EmptyDistribution);
        assert_eq!(kind(&s, "{1: 0}"), ParseErrorKind::BadProbability);
        assert_eq!(kind(&s, "{1: 1.5}"), ParseErrorKind::BadProbability);
        assert_eq!(kind(&s, "{1: -0.5, 2: 1}"), ParseErrorKind::BadProbability);
        assert_eq!(kind(&s, "{1: 0.5}"), ParseErrorKind::BadProbability);
        assert_eq!(kind(&s, "{1: 1/0}"), ParseErrorKind::BadProbability);
        assert_eq!(kind(&s, "(lam 1"), ParseErrorKind::UnbalancedDelimiter);
        assert_eq!(kind(&s, "(lam 1))"), ParseErrorKind::UnbalancedDelimiter);
        assert_eq!(kind(&s, "{1: 1"), ParseErrorKind::UnbalancedDelimiter);
        assert_eq!(kind(&s, "(lam 1) 2"), ParseErrorKind::UnexpectedToken);
        assert_eq!(kind(&s, "()"), ParseErrorKind::UnexpectedToken);
        assert_eq!(kind(&s, "(lam)"), ParseErrorKind::UnexpectedToken);
        assert_eq!(kind(&s, "x"), ParseErrorKind::UnexpectedToken);
        assert_eq!(kind(&s, ""), ParseErrorKind::UnexpectedToken);
        assert_eq!(kind(&s, "{1 0.5}"), ParseErrorKind::UnexpectedToken);
    }

    #[test]
    fn error_spans_point_at_token() {
        let s = TermStore::new();
        let e = parse(&s, "(lam 0)").unwrap_err();
        assert_eq!(e.span, SourceSpan { start: 5, end: 6 });
    }

    #[test]
    fn probability_format() {
        assert_eq!(format_probability(0.8), "0.8");
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(0.125), "0.125");
        assert_eq!(format_probability(1.0 / 3.0), "0.3333333333333333");
        assert_eq!(format_probability(0.5 * 0.4 + 0.5), "0.7");
        let p = 0.1 + 0.2;
        assert_eq!(format_probability(p).parse::<f64>().unwrap(), p);
        assert_eq!(format_probability(1e-5), "0.00001");
    }
}
