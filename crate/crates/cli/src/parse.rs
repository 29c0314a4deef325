//! Map text grammar: `over <field> vars <n> map [p1, p2, ...]`.
//!
//! Tokens are separated by whitespace (newlines included); parse errors carry
//! a `line L, column C` position.  `format_map` prints the exact inverse form
//! with components in canonical graded-lex order, so a formatted map reparses
//! to an equal one.

use std::fmt;

use quadmap_core::field::{make_field, FieldCtx};
use quadmap_core::maps::PolyMap;
use quadmap_core::poly::Poly;
use quadmap_core::{Error, Result};

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn new(s: &str) -> Cursor {
        Cursor {
            chars: s.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn err_here(&self, msg: impl fmt::Display) -> Error {
        Error::Parse(format!("line {}, column {}: {}", self.line, self.col, msg))
    }

    /// Next whitespace-delimited word (also stopped by `[`, `]`, `,`).
    fn word(&mut self) -> (String, usize, usize) {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        let mut w = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '[' || c == ']' || c == ',' {
                break;
            }
            w.push(self.bump().unwrap());
        }
        (w, line, col)
    }

    fn expect_word(&mut self, want: &str) -> Result<()> {
        let (w, line, col) = self.word();
        if w == want {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "line {line}, column {col}: expected `{want}`, found `{w}`"
            )))
        }
    }

    /// Raw text up to (not including) the next `,` or `]`.
    fn chunk(&mut self) -> (String, usize, usize) {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == ',' || c == ']' {
                break;
            }
            s.push(self.bump().unwrap());
        }
        (s.trim_end().to_string(), line, col)
    }
}

/// Parse map text; with `expected`, the header field must agree with it.
pub fn parse_map(text: &str, expected: Option<&FieldCtx>) -> Result<(FieldCtx, PolyMap)> {
    let mut cur = Cursor::new(text);
    cur.expect_word("over")?;
    let (fword, fline, fcol) = cur.word();
    if fword.is_empty() {
        return Err(Error::Parse(format!(
            "line {fline}, column {fcol}: expected a field descriptor"
        )));
    }
    let ctx = match make_field(&fword) {
        Ok(c) => c,
        Err(Error::Parse(msg)) => {
            return Err(Error::Parse(format!(
                "line {fline}, column {fcol}: {msg}"
            )))
        }
        Err(e) => return Err(e),
    };
    if let Some(want) = expected {
        if *want != ctx {
            return Err(Error::CtxMismatch);
        }
    }
    cur.expect_word("vars")?;
    let (nword, nline, ncol) = cur.word();
    let n: usize = nword.parse().map_err(|_| {
        Error::Parse(format!(
            "line {nline}, column {ncol}: expected a variable count, found `{nword}`"
        ))
    })?;
    if n == 0 {
        return Err(Error::Parse(format!(
            "line {nline}, column {ncol}: variable count must be positive"
        )));
    }
    cur.expect_word("map")?;
    cur.skip_ws();
    if cur.peek() != Some('[') {
        return Err(cur.err_here("expected `[`"));
    }
    cur.bump();

    let mut comps: Vec<Poly> = Vec::new();
    loop {
        let (text, pline, pcol) = cur.chunk();
        if text.is_empty() {
            return Err(Error::Parse(format!(
                "line {pline}, column {pcol}: expected a polynomial"
            )));
        }
        let p = Poly::parse(&ctx, n, &text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("line {pline}, column {pcol}: {msg}")),
            other => other,
        })?;
        comps.push(p);
        match cur.peek() {
            Some(',') => {
                cur.bump();
            }
            Some(']') => {
                cur.bump();
                break;
            }
            _ => return Err(cur.err_here("expected `,` or `]`")),
        }
    }
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(cur.err_here("trailing input after `]`"));
    }
    let map = PolyMap::new(&ctx, n, comps)?;
    Ok((ctx, map))
}

/// Inverse of [`parse_map`]: canonical one-line text form.
pub fn format_map(map: &PolyMap) -> String {
    let comps: Vec<String> = map.comps().iter().map(|p| p.to_string()).collect();
    format!(
        "over {} vars {} map [{}]",
        map.ctx(),
        map.n(),
        comps.join(", ")
    )
}
