//! Maps JSON paths such as `problem.regularizer.weights[1]` to the line on
//! which the value starts, so validation messages can point into the file.

use std::collections::HashMap;

#[derive(Debug, Default)]
pub struct LineIndex {
    lines: HashMap<String, usize>,
}

impl LineIndex {
    /// Best effort: malformed input yields a partial index.
    pub fn build(text: &str) -> Self {
        let mut scanner = Scanner { bytes: text.as_bytes(), pos: 0, line: 1, out: HashMap::new() };
        scanner.value(String::new());
        LineIndex { lines: scanner.out }
    }

    /// Line of `path`, or of its nearest recorded ancestor.
    pub fn line(&self, path: &str) -> Option<usize> {
        let mut p = path;
        loop {
            if let Some(&l) = self.lines.get(p) {
                return Some(l);
            }
            let cut = p.rfind(['.', '['])?;
            p = &p[..cut];
        }
    }
}

pub fn join_key(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub fn join_index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    out: HashMap<String, usize>,
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
        }
        Some(b)
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn value(&mut self, path: String) -> Option<()> {
        self.ws();
        self.out.entry(path.clone()).or_insert(self.line);
        match self.peek()? {
            b'{' => self.object(&path),
            b'[' => self.array(&path),
            b'"' => self.string().map(|_| ()),
            _ => {
                while !matches!(self.peek(), None | Some(b',' | b'}' | b']' | b' ' | b'\t' | b'\r' | b'\n')) {
                    self.bump();
                }
                Some(())
            }
        }
    }

    fn object(&mut self, path: &str) -> Option<()> {
        self.bump();
        loop {
            self.ws();
            match self.peek()? {
                b'}' => {
                    self.bump();
                    return Some(());
                }
                b',' => {
                    self.bump();
                }
                b'"' => {
                    let line = self.line;
                    let key = self.string()?;
                    let child = join_key(path, &key);
                    self.out.entry(child.clone()).or_insert(line);
                    self.ws();
                    if self.bump()? != b':' {
                        return None;
                    }
                    self.value(child)?;
                }
                _ => return None,
            }
        }
    }

    fn array(&mut self, path: &str) -> Option<()> {
        self.bump();
        let mut i = 0;
        loop {
            self.ws();
            match self.peek()? {
                b']' => {
                    self.bump();
                    return Some(());
                }
                b',' => {
                    self.bump();
                }
                _ => {
                    self.value(join_index(path, i))?;
                    i += 1;
                }
            }
        }
    }

    fn string(&mut self) -> Option<String> {
        self.bump();
        let start = self.pos;
        loop {
            match self.bump()? {
                b'\\' => {
                    self.bump();
                }
                b'"' => break,
                _ => {}
            }
        }
        Some(String::from_utf8_lossy(&self.bytes[start..self.pos - 1]).into_owned())
    }
}
