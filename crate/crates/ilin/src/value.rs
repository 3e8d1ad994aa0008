//! Payload values carried by invocations and responses.
//!
//! Values are opaque tagged data with structural equality: integers,
//! symbols (`ok`, `aborted`, `bot`, ...), pairs, and finite sets. The
//! textual form follows the history-file grammar: `3`, `ok`, `{0,1,2}`,
//! `{(0,1),(1,2)}`. Sets print sorted, so `parse(print(v)) == v`.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Sym(String),
    Pair(Box<Value>, Box<Value>),
    Set(BTreeSet<Value>),
    /// Ordered sequence; used for automaton state attributes (e.g. queue
    /// contents), not part of the payload grammar.
    List(Vec<Value>),
}

impl Value {
    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_string())
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(items.into_iter().collect())
    }

    /// Set of integers, the common payload for snapshot-style outputs.
    pub fn int_set<I: IntoIterator<Item = i64>>(items: I) -> Value {
        Value::Set(items.into_iter().map(Value::Int).collect())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Parses the payload grammar: integer | symbol | pair | `{`-set.
    pub fn parse(text: &str) -> Result<Value, String> {
        let mut p = Parser {
            chars: text.trim().as_bytes(),
            pos: 0,
        };
        let v = p.value()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(format!("trailing input after value at byte {}", p.pos));
        }
        Ok(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Pair(a, b) => write!(f, "({a},{b})"),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::List(items) => {
                write!(f, "[")?;
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

struct Parser<'a> {
    chars: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), String> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected '{}' at byte {}", c as char, self.pos))
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.peek() {
            Some(b'{') => self.set(),
            Some(b'(') => self.pair(),
            Some(c) if c == b'-' || c.is_ascii_digit() => self.int(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.symbol(),
            Some(c) => Err(format!("unexpected '{}' at byte {}", c as char, self.pos)),
            None => Err("unexpected end of input".to_string()),
        }
    }

    fn int(&mut self) -> Result<Value, String> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.chars[start..self.pos]).unwrap();
        text.parse::<i64>()
            .map(Value::Int)
            .map_err(|e| format!("bad integer '{text}': {e}"))
    }

    fn symbol(&mut self) -> Result<Value, String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.chars[start..self.pos]).unwrap();
        Ok(Value::Sym(text.to_string()))
    }

    fn pair(&mut self) -> Result<Value, String> {
        self.expect(b'(')?;
        let a = self.value()?;
        self.skip_ws();
        self.expect(b',')?;
        let b = self.value()?;
        self.skip_ws();
        self.expect(b')')?;
        Ok(Value::pair(a, b))
    }

    fn set(&mut self) -> Result<Value, String> {
        self.expect(b'{')?;
        let mut items = BTreeSet::new();
        self.skip_ws();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok(Value::Set(items));
        }
        loop {
            items.insert(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                }
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(Value::Set(items));
                }
                _ => return Err(format!("expected ',' or '}}' at byte {}", self.pos)),
            }
        }
    }
}
