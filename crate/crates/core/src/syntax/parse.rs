//! Concrete grammar.
//!
//! ```text
//! proc   := sum ('|' sum)*
//! sum    := unary ('+' unary)*
//! unary  := prefix ['.' unary] | 'new' name '.' unary
//!         | 'rec' PVAR ['(' kvar ')'] '.' unary | PVAR
//!         | 'roll' '<' (kvar | INT) '>' | '0' | '(' proc ')'
//! prefix := ('tau' | name | '\'' name) ['(' kvar ')']
//!
//! sys    := satom ('|' satom)*
//! satom  := '0' | 'new' name '.' satom | key ':' sum
//!         | 'mem' '[' key ':' proc ';' key ']' | '(' sys ')'
//! key    := 'eps' | INT
//! config := ('eps' | INT+) '|-' sys
//! ```
//!
//! A bare prefix stands for `prefix.0`. `#` starts a comment running to the
//! end of the line.

use std::fmt;

use super::{
    Action, Branch, Configuration, DepHistory, Key, KeyRef, KeyVar, Name, Polarity, ProcVar,
    Process, System,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Int(u32),
    Dot,
    Bar,
    Turnstile,
    Plus,
    LParen,
    RParen,
    Lt,
    Gt,
    Quote,
    Colon,
    Semi,
    LBrack,
    RBrack,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lower(s) | Tok::Upper(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Turnstile => f.write_str("`|-`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Quote => f.write_str("`'`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const RESERVED: [&str; 6] = ["tau", "new", "rec", "roll", "eps", "mem"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            b'.' => Tok::Dot,
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            b'|' => Tok::Bar,
            b'+' => Tok::Plus,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'<' => Tok::Lt,
            b'>' => Tok::Gt,
            b'\'' => Tok::Quote,
            b':' => Tok::Colon,
            b';' => Tok::Semi,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..=i].parse::<u32>().map_err(|_| ParseError {
                    offset: start,
                    message: "integer out of range".into(),
                })?;
                Tok::Int(n)
            }
            c if c.is_ascii_alphabetic() => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                let word = text[start..=i].to_string();
                if c.is_ascii_uppercase() {
                    Tok::Upper(word)
                } else {
                    Tok::Lower(word)
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError { offset: start, message: format!("unexpected character {ch:?}") });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Source terms: no literal keys, closed.
    Source,
    /// Serialized configurations: literal keys allowed.
    Serialized,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    mode: Mode,
    keyvars: Vec<KeyVar>,
    procvars: Vec<ProcVar>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str, mode: Mode) -> PResult<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            mode,
            keyvars: Vec::new(),
            procvars: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Lower(s) if s == w)
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Lower(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            Tok::Lower(s) => self.error(format!("reserved word `{s}` cannot be used as a {what}")),
            _ => self.unexpected(what),
        }
    }

    fn name(&mut self) -> PResult<Name> {
        self.ident("channel name").map(|s| Name::new(&s))
    }

    fn opt_binder(&mut self) -> PResult<Option<KeyVar>> {
        if *self.peek() != Tok::LParen {
            return Ok(None);
        }
        self.bump();
        let g = KeyVar::new(&self.ident("key variable")?);
        self.expect(Tok::RParen)?;
        Ok(Some(g))
    }

    fn proc(&mut self) -> PResult<Process> {
        let mut p = self.sum()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let q = self.sum()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn sum(&mut self) -> PResult<Process> {
        let mut p = self.unary()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let at = self.offset();
            let q = self.unary()?;
            p = match Process::choice(p, q) {
                Some(s) => s,
                None => {
                    return Err(ParseError {
                        offset: at,
                        message: "every summand of `+` must be a guarded choice".into(),
                    });
                }
            };
        }
        Ok(p)
    }

    fn unary(&mut self) -> PResult<Process> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Process::nil())
            }
            Tok::LParen => {
                self.bump();
                let p = self.proc()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Upper(x) => {
                let at = self.offset();
                self.bump();
                let v = ProcVar::new(&x);
                if !self.procvars.contains(&v) {
                    return Err(ParseError { offset: at, message: format!("unbound process variable `{x}`") });
                }
                Ok(Process::Var(v))
            }
            Tok::Lower(w) if w == "new" => {
                self.bump();
                let at = self.offset();
                let a = self.name()?;
                if a.is_omega() {
                    return Err(ParseError { offset: at, message: "`omega` cannot be restricted".into() });
                }
                self.expect(Tok::Dot)?;
                Ok(Process::Restrict(a, Box::new(self.unary()?)))
            }
            Tok::Lower(w) if w == "rec" => {
                self.bump();
                let x = match self.bump() {
                    Tok::Upper(x) => ProcVar::new(&x),
                    _ => {
                        self.pos -= 1;
                        return self.unexpected("process variable");
                    }
                };
                let binder = self.opt_binder()?;
                self.expect(Tok::Dot)?;
                self.procvars.push(x.clone());
                if let Some(g) = &binder {
                    self.keyvars.push(g.clone());
                }
                let body = self.unary();
                if binder.is_some() {
                    self.keyvars.pop();
                }
                self.procvars.pop();
                Ok(Process::Rec { var: x, binder, body: Box::new(body?) })
            }
            Tok::Lower(w) if w == "roll" => {
                self.bump();
                self.expect(Tok::Lt)?;
                let at = self.offset();
                let target = match self.peek().clone() {
                    Tok::Int(n) if n > 0 => {
                        if self.mode == Mode::Source {
                            return self.error("literal keys are not allowed in source terms");
                        }
                        self.bump();
                        KeyRef::Key(Key::Id(n))
                    }
                    _ => {
                        let g = KeyVar::new(&self.ident("key variable or key")?);
                        if !self.keyvars.contains(&g) {
                            return Err(ParseError {
                                offset: at,
                                message: format!("unbound key variable `{}`", g.as_str()),
                            });
                        }
                        KeyRef::Var(g)
                    }
                };
                self.expect(Tok::Gt)?;
                Ok(Process::Roll(target))
            }
            Tok::Lower(_) | Tok::Quote => self.prefixed(),
            _ => self.unexpected("a process"),
        }
    }

    fn prefixed(&mut self) -> PResult<Process> {
        let action = if *self.peek() == Tok::Quote {
            self.bump();
            let a = self.name()?;
            Action::Visible { channel: a, polarity: Polarity::Negative }
        } else if self.is_word("tau") {
            self.bump();
            Action::Internal
        } else {
            let a = self.name()?;
            Action::Visible { channel: a, polarity: Polarity::Positive }
        };
        let binder = self.opt_binder()?;
        let continuation = if *self.peek() == Tok::Dot {
            self.bump();
            if let Some(g) = &binder {
                self.keyvars.push(g.clone());
            }
            let c = self.unary();
            if binder.is_some() {
                self.keyvars.pop();
            }
            c?
        } else {
            Process::nil()
        };
        Ok(Process::Sum(vec![Branch { action, binder, continuation }]))
    }

    fn key(&mut self) -> PResult<Key> {
        match self.peek().clone() {
            Tok::Lower(w) if w == "eps" => {
                self.bump();
                Ok(Key::Eps)
            }
            Tok::Int(n) if n > 0 => {
                if self.mode == Mode::Source {
                    return self.error("literal keys are not allowed in source systems; use `eps`");
                }
                self.bump();
                Ok(Key::Id(n))
            }
            _ => self.unexpected("a key (`eps` or a positive integer)"),
        }
    }

    fn sys(&mut self) -> PResult<System> {
        let mut m = self.satom()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let n = self.satom()?;
            m = System::par(m, n);
        }
        Ok(m)
    }

    fn satom(&mut self) -> PResult<System> {
        match self.peek().clone() {
            Tok::Int(0) if *self.peek_at(1) != Tok::Colon => {
                self.bump();
                Ok(System::Nil)
            }
            Tok::LParen => {
                self.bump();
                let m = self.sys()?;
                self.expect(Tok::RParen)?;
                Ok(m)
            }
            Tok::Lower(w) if w == "new" => {
                self.bump();
                let at = self.offset();
                let a = self.name()?;
                if a.is_omega() {
                    return Err(ParseError { offset: at, message: "`omega` cannot be restricted".into() });
                }
                self.expect(Tok::Dot)?;
                Ok(System::restrict(a, self.satom()?))
            }
            Tok::Lower(w) if w == "mem" => {
                if self.mode == Mode::Source {
                    return self.error("memories are not allowed in source systems");
                }
                self.bump();
                self.expect(Tok::LBrack)?;
                let origin = self.key()?;
                self.expect(Tok::Colon)?;
                let process = self.proc()?;
                self.expect(Tok::Semi)?;
                let key = self.key()?;
                self.expect(Tok::RBrack)?;
                Ok(System::Memory { origin, process, key })
            }
            _ => {
                let k = self.key()?;
                self.expect(Tok::Colon)?;
                let p = self.sum()?;
                Ok(System::Named(k, p))
            }
        }
    }

    fn history(&mut self) -> PResult<DepHistory> {
        if self.is_word("eps") {
            self.bump();
            return Ok(DepHistory::empty());
        }
        let at = self.offset();
        let mut keys = Vec::new();
        while let Tok::Int(n) = *self.peek() {
            if n == 0 {
                return self.error("keys are positive integers");
            }
            keys.push(Key::Id(n));
            self.bump();
        }
        if keys.is_empty() {
            return self.unexpected("a history (`eps` or keys, newest first)");
        }
        DepHistory::from_newest_first(keys).map_err(|message| ParseError { offset: at, message })
    }

    fn finish(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }
}

/// Parses a source system. Every named process must carry `eps`; literal
/// keys, memories, unbound variables and `new omega` are rejected.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut p = Parser::new(text, Mode::Source)?;
    let m = p.sys()?;
    p.finish()?;
    Ok(m)
}

/// Parses a closed process term (no literal keys).
pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(text, Mode::Source)?;
    let q = p.proc()?;
    p.finish()?;
    Ok(q)
}

/// Parses a serialized configuration `k_n .. k_1 |- M` or `eps |- M`.
pub fn parse_configuration(text: &str) -> Result<Configuration, ParseError> {
    let mut p = Parser::new(text, Mode::Serialized)?;
    let history = p.history()?;
    p.expect(Tok::Turnstile)?;
    let system = p.sys()?;
    p.finish()?;
    Ok(Configuration { history, system })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(p: Process) -> System {
        System::Named(Key::Eps, p)
    }

    fn pre(a: Action, k: Process) -> Process {
        Process::prefix(a, None, k)
    }

    #[test]
    fn nil_system() {
        assert_eq!(parse_system("0").unwrap(), System::Nil);
    }

    #[test]
    fn m1() {
        let expected = named(pre(
            Action::input("a"),
            Process::choice(pre(Action::input("b"), Process::nil()), pre(Action::input("c"), Process::nil()))
                .unwrap(),
        ));
        assert_eq!(parse_system("eps: a.(b.0 + c.0)").unwrap(), expected);
    }

    #[test]
    fn m6() {
        let g = KeyVar::new("g");
        let expected = named(Process::prefix(
            Action::input("a"),
            Some(g.clone()),
            Process::choice(
                pre(Action::input("b"), Process::Roll(KeyRef::Var(g))),
                pre(Action::input("c"), Process::nil()),
            )
            .unwrap(),
        ));
        assert_eq!(parse_system("eps: a(g).(b.roll<g> + c.0)").unwrap(), expected);
    }

    #[test]
    fn incomplete_prefix_offset() {
        let e = parse_system("eps: a.").unwrap_err();
        assert_eq!(e.offset, 7);
    }

    #[test]
    fn bare_prefix_means_nil_continuation() {
        assert_eq!(parse_process("'a").unwrap(), pre(Action::output("a"), Process::nil()));
        assert_eq!(parse_process("omega").unwrap(), Process::omega());
    }

    #[test]
    fn scoping_errors() {
        let e = parse_system("eps: a.roll<g>").unwrap_err();
        assert!(e.message.contains("`g`"), "{e}");
        let e = parse_system("eps: a.X").unwrap_err();
        assert!(e.message.contains("`X`"), "{e}");
        assert!(parse_system("eps: b(g).c.roll<g>").is_ok());
        assert!(parse_system("eps: b(g).0 | eps: roll<g>").is_err());
    }

    #[test]
    fn source_rejects_literal_keys() {
        assert!(parse_system("1: a.0").is_err());
        assert!(parse_system("eps: a(g).roll<3>").is_err());
        assert!(parse_system("mem[eps: a.0; 1]").is_err());
    }

    #[test]
    fn omega_cannot_be_restricted() {
        assert!(parse_system("new omega. eps: omega").is_err());
        assert!(parse_system("eps: new omega. omega").is_err());
        assert!(parse_system("eps: omega").is_ok());
    }

    #[test]
    fn summands_must_be_guarded() {
        assert!(parse_process("a.0 + (b.0 | c.0)").is_err());
        assert!(parse_process("(a.0 + b.0) + c.0").is_ok());
    }

    #[test]
    fn reserved_words() {
        assert!(parse_process("new.0").is_err());
        assert!(parse_process("new tau. 0").is_err());
    }

    #[test]
    fn precedence() {
        // `.` binds tighter than `+`, which binds tighter than `|`.
        let p = parse_process("a.b.0 + c.0 | d.0").unwrap();
        let left = Process::choice(
            pre(Action::input("a"), pre(Action::input("b"), Process::nil())),
            pre(Action::input("c"), Process::nil()),
        )
        .unwrap();
        assert_eq!(p, Process::par(left, pre(Action::input("d"), Process::nil())));
        let q = parse_process("new a. a.0 | b.0").unwrap();
        assert!(matches!(q, Process::Par(..)));
    }

    #[test]
    fn configuration() {
        let c = parse_configuration("2 1 |- 2: 0 | mem[1: a.0; 2] | 1: roll<1>").unwrap();
        assert_eq!(c.history.keys(), &[Key::Id(2), Key::Id(1)]);
        assert!(parse_configuration("eps |- eps: a.0").unwrap().history.is_empty());
        assert!(parse_configuration("1 1 |- 0").is_err());
        assert!(parse_configuration("|- 0").is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let m = parse_system("# M1\n  eps :a .( b.0+c.0 ) # trailing\n").unwrap();
        assert_eq!(m, parse_system("eps: a.(b.0 + c.0)").unwrap());
    }
}
