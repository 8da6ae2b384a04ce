//! Maps JSON pointers to source positions so diagnostics can point into the
//! document they came from.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// 1-based line and column (columns count characters, not bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Position of every value in a well-formed JSON document, keyed by pointer.
#[derive(Debug, Clone, Default)]
pub struct SpanIndex {
    values: HashMap<String, Location>,
    strings: HashMap<String, String>,
    /// Child pointer → (key text, key position) for object members.
    keys: HashMap<String, (String, Location)>,
}

pub fn escape_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

impl SpanIndex {
    /// Indexes `text`. Malformed input yields a partial index.
    pub fn build(text: &str) -> Self {
        let mut scanner = Scanner {
            bytes: text.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
            index: SpanIndex::default(),
        };
        let mut path = String::new();
        scanner.value(&mut path);
        scanner.index
    }

    pub fn get(&self, pointer: &str) -> Option<Location> {
        self.values.get(pointer).copied()
    }

    /// Resolves `pointer`, preferring a child string value or member key
    /// equal to `member`, then the pointer itself, then its nearest ancestor.
    pub fn locate(&self, pointer: &str, member: Option<&str>) -> Option<Location> {
        if let Some(member) = member {
            let prefix = format!("{pointer}/");
            let is_child = |p: &str| {
                p.strip_prefix(&prefix)
                    .is_some_and(|rest| !rest.contains('/'))
            };
            let by_value = self
                .strings
                .iter()
                .filter(|(p, s)| s.as_str() == member && is_child(p))
                .filter_map(|(p, _)| self.values.get(p).copied());
            let by_key = self
                .keys
                .iter()
                .filter(|(p, (k, _))| k.as_str() == member && is_child(p))
                .map(|(_, (_, loc))| *loc);
            let hit = by_value.chain(by_key).min();
            if hit.is_some() {
                return hit;
            }
        }
        let mut current = pointer;
        loop {
            if let Some(loc) = self.values.get(current) {
                return Some(*loc);
            }
            current = &current[..current.rfind('/')?];
        }
    }
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
    index: SpanIndex,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else if b & 0xC0 != 0x80 {
            self.column += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.bump();
        }
    }

    fn location(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }

    fn value(&mut self, path: &mut String) {
        self.skip_ws();
        self.index.values.insert(path.clone(), self.location());
        match self.peek() {
            Some(b'{') => self.object(path),
            Some(b'[') => self.array(path),
            Some(b'"') => {
                let s = self.string();
                self.index.strings.insert(path.clone(), s);
            }
            Some(_) => {
                while let Some(b) = self.peek() {
                    if matches!(b, b',' | b']' | b'}' | b' ' | b'\t' | b'\n' | b'\r') {
                        break;
                    }
                    self.bump();
                }
            }
            None => {}
        }
    }

    fn object(&mut self, path: &mut String) {
        self.bump();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'}') => {
                    self.bump();
                    return;
                }
                Some(b'"') => {
                    let at = self.location();
                    let key = self.string();
                    self.skip_ws();
                    if self.peek() == Some(b':') {
                        self.bump();
                    }
                    let len = path.len();
                    path.push('/');
                    path.push_str(&escape_token(&key));
                    self.index.keys.insert(path.clone(), (key, at));
                    self.value(path);
                    path.truncate(len);
                    self.skip_ws();
                    if self.peek() == Some(b',') {
                        self.bump();
                    }
                }
                Some(_) => {
                    self.bump();
                }
                None => return,
            }
        }
    }

    fn array(&mut self, path: &mut String) {
        self.bump();
        let mut i = 0usize;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b']') => {
                    self.bump();
                    return;
                }
                None => return,
                Some(_) => {
                    let len = path.len();
                    path.push('/');
                    path.push_str(&i.to_string());
                    self.value(path);
                    path.truncate(len);
                    i += 1;
                    self.skip_ws();
                    if self.peek() == Some(b',') {
                        self.bump();
                    }
                }
            }
        }
    }

    /// Consumes a string literal and returns its raw content (escapes are
    /// decoded only for `\"` and `\\`, which is enough for id matching).
    fn string(&mut self) -> String {
        self.bump();
        let mut out = Vec::new();
        while let Some(b) = self.bump() {
            match b {
                b'"' => break,
                b'\\' => {
                    if let Some(next) = self.bump() {
                        out.push(next);
                    }
                }
                _ => out.push(b),
            }
        }
        String::from_utf8_lossy(&out).into_owned()
    }
}
