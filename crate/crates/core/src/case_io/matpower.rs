//! Restricted MATPOWER case grammar: `mpc.<field> = <scalar|string|matrix>;`
//! with `%` comments and an optional leading `function mpc = <name>` line.

use std::fmt::Write as _;

use super::CaseIoError;

#[derive(Debug, Clone, PartialEq)]
pub enum MatValue {
    Scalar(f64),
    Str(String),
    Matrix(Vec<Vec<f64>>),
    /// Cell array of strings, one entry per row.
    Cell(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDocument {
    pub name: String,
    pub base_mva: f64,
    pub bus: Vec<Vec<f64>>,
    pub branch: Vec<Vec<f64>>,
    pub gen: Vec<Vec<f64>>,
    pub gencost: Vec<Vec<f64>>,
    /// Unrecognized fields, in file order.
    pub extras: Vec<(String, MatValue)>,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, msg: impl Into<String>) -> CaseIoError {
        CaseIoError::Syntax { line: self.line, column: self.col, message: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.bump();
        }
    }

    /// Skips blanks and comments; newlines too when `newlines` is set.
    fn skip(&mut self, newlines: bool) {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\r' => {
                    self.bump();
                }
                b'\n' if newlines => {
                    self.bump();
                }
                b'.' if self.src[self.pos..].starts_with(b"...") => {
                    // Line continuation.
                    self.skip_comment();
                    self.bump();
                }
                b'%' => self.skip_comment(),
                _ => break,
            }
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), CaseIoError> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Result<String, CaseIoError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64, CaseIoError> {
        let start = self.pos;
        let (line, col) = (self.line, self.col);
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'.' | b'+' | b'-') {
                // Signs only at the start or after an exponent marker.
                if matches!(c, b'+' | b'-') && self.pos > start {
                    let prev = self.src[self.pos - 1];
                    if prev != b'e' && prev != b'E' {
                        break;
                    }
                }
                self.bump();
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let parsed = match text {
            "Inf" | "inf" | "+Inf" => Some(f64::INFINITY),
            "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
            _ => text.parse::<f64>().ok().filter(|v| v.is_finite()),
        };
        parsed.ok_or(CaseIoError::Syntax { line, column: col, message: format!("invalid number '{text}'") })
    }

    fn string(&mut self) -> Result<String, CaseIoError> {
        self.expect(b'\'')?;
        let mut out = Vec::new();
        loop {
            match self.bump() {
                Some(b'\'') if self.peek() == Some(b'\'') => {
                    self.bump();
                    out.push(b'\'');
                }
                Some(b'\'') => break,
                Some(b'\n') | None => return Err(self.err("unterminated string")),
                Some(c) => out.push(c),
            }
        }
        Ok(String::from_utf8_lossy(&out).into_owned())
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>, CaseIoError> {
        self.expect(b'[')?;
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip(false);
            match self.peek() {
                Some(b']') => {
                    self.bump();
                    break;
                }
                Some(b';') | Some(b'\n') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(b',') => {
                    self.bump();
                }
                Some(_) => row.push(self.number()?),
                None => return Err(self.err("unterminated matrix")),
            }
        }
        if !row.is_empty() {
            rows.push(row);
        }
        if let Some(w) = rows.first().map(Vec::len) {
            if rows.iter().any(|r| r.len() != w) {
                return Err(self.err("matrix rows differ in length"));
            }
        }
        Ok(rows)
    }

    fn cell(&mut self) -> Result<Vec<String>, CaseIoError> {
        self.expect(b'{')?;
        let mut out = Vec::new();
        loop {
            self.skip(true);
            match self.peek() {
                Some(b'}') => {
                    self.bump();
                    return Ok(out);
                }
                Some(b';') | Some(b',') => {
                    self.bump();
                }
                Some(b'\'') => out.push(self.string()?),
                Some(_) => return Err(self.err("only strings are supported in cell arrays")),
                None => return Err(self.err("unterminated cell array")),
            }
        }
    }
}

/// Parses a case file. Fields other than `baseMVA`, `bus`, `branch`, `gen` and
/// `gencost` are kept as extras.
pub fn parse_matpower(text: &str) -> Result<CaseDocument, CaseIoError> {
    let mut lx = Lexer { src: text.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut name = String::from("case");
    let mut base_mva = None;
    let mut tables: [Option<Vec<Vec<f64>>>; 4] = [None, None, None, None];
    let mut extras = Vec::new();
    loop {
        lx.skip(true);
        let Some(c) = lx.peek() else { break };
        if c == b';' {
            lx.bump();
            continue;
        }
        let word = lx.ident()?;
        if word == "function" {
            lx.skip(false);
            let lhs = lx.ident()?;
            lx.skip(false);
            if lhs != "mpc" || lx.peek() != Some(b'=') {
                return Err(lx.err("expected 'function mpc = <name>'"));
            }
            lx.bump();
            lx.skip(false);
            name = lx.ident()?;
            continue;
        }
        if word != "mpc" {
            return Err(lx.err(format!("unexpected '{word}'")));
        }
        lx.expect(b'.')?;
        let field = lx.ident()?;
        lx.skip(false);
        lx.expect(b'=')?;
        lx.skip(false);
        let value = match lx.peek() {
            Some(b'[') => MatValue::Matrix(lx.matrix()?),
            Some(b'{') => MatValue::Cell(lx.cell()?),
            Some(b'\'') => MatValue::Str(lx.string()?),
            Some(_) => MatValue::Scalar(lx.number()?),
            None => return Err(lx.err("missing value")),
        };
        lx.skip(false);
        lx.expect(b';')?;
        let slot = match field.as_str() {
            "bus" => Some(0),
            "branch" => Some(1),
            "gen" => Some(2),
            "gencost" => Some(3),
            _ => None,
        };
        match (field.as_str(), slot, value) {
            ("baseMVA", _, MatValue::Scalar(v)) => base_mva = Some(v),
            (_, Some(i), MatValue::Matrix(m)) => tables[i] = Some(m),
            (f, Some(_), _) | (f @ "baseMVA", _, _) => {
                return Err(lx.err(format!("field '{f}' has the wrong kind of value")))
            }
            (_, None, v) => extras.push((field, v)),
        }
    }
    let [bus, branch, gen, gencost] = tables;
    let missing = |t: &str| CaseIoError::MissingTable(t.to_string());
    Ok(CaseDocument {
        name,
        base_mva: base_mva.unwrap_or(100.0),
        bus: bus.ok_or_else(|| missing("bus"))?,
        branch: branch.ok_or_else(|| missing("branch"))?,
        gen: gen.ok_or_else(|| missing("gen"))?,
        gencost: gencost.ok_or_else(|| missing("gencost"))?,
        extras,
    })
}

fn write_matrix(out: &mut String, field: &str, rows: &[Vec<f64>]) {
    let _ = writeln!(out, "mpc.{field} = [");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        let _ = writeln!(out, "\t{};", cells.join("\t"));
    }
    let _ = writeln!(out, "];");
}

fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "Inf" } else { "-Inf" }.to_string()
    } else {
        // Shortest representation that round-trips.
        format!("{v:?}").trim_end_matches(".0").to_string()
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Prints a document in the same grammar; `parse_matpower` reads it back
/// unchanged.
pub fn print_matpower(doc: &CaseDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {}", doc.name);
    let _ = writeln!(out, "mpc.baseMVA = {};", format_number(doc.base_mva));
    write_matrix(&mut out, "bus", &doc.bus);
    write_matrix(&mut out, "gen", &doc.gen);
    write_matrix(&mut out, "branch", &doc.branch);
    write_matrix(&mut out, "gencost", &doc.gencost);
    for (field, value) in &doc.extras {
        match value {
            MatValue::Scalar(v) => {
                let _ = writeln!(out, "mpc.{field} = {};", format_number(*v));
            }
            MatValue::Str(s) => {
                let _ = writeln!(out, "mpc.{field} = {};", quote(s));
            }
            MatValue::Matrix(m) => write_matrix(&mut out, field, m),
            MatValue::Cell(items) => {
                let quoted: Vec<String> = items.iter().map(|s| quote(s)).collect();
                let _ = writeln!(out, "mpc.{field} = {{ {} }};", quoted.join("; "));
            }
        }
    }
    out
}
