//! Line-oriented parser for `.scen` files.
//!
//! Grammar (one statement per line, `#` starts a comment):
//!
//! ```text
//! map <identifier>
//! ego <identifier>
//! param <name> in {a, b, c}        categorical
//! param <name> in 0..5             integer range, inclusive
//! param <name> in 0.5..2.5         real range
//! param <name> in bool             boolean
//! bind <knob> = <name>             tie a simulator knob to a parameter
//! ```
//!
//! Parsing is total: it never panics and reports every diagnostic it finds
//! with a 1-based line and column.

use super::{Binding, DomainKind, ParamDomain, ScenarioSpec, DEFAULT_EGO_ROLE, DEFAULT_MAP_ID};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// A parse problem at a source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(line: u32, col: u32, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            col,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    /// `file:line:col: severity: message`, matching the CLI diagnostic style.
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: {}",
            self.line, self.col, self.severity, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    LBrace,
    RBrace,
    Comma,
    DotDot,
    Equals,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Real(x) => write!(f, "`{x}`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::DotDot => write!(f, "`..`"),
            Tok::Equals => write!(f, "`=`"),
        }
    }
}

/// Token with its 1-based starting column.
type Spanned = (Tok, u32);

fn lex_line(line: &str, line_no: u32) -> Result<Vec<Spanned>, Diagnostic> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let col = (i + 1) as u32;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '{' => {
                toks.push((Tok::LBrace, col));
                i += 1;
            }
            '}' => {
                toks.push((Tok::RBrace, col));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, col));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Equals, col));
                i += 1;
            }
            '.' if i + 1 < chars.len() && chars[i + 1] == '.' => {
                toks.push((Tok::DotDot, col));
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_real = false;
                // A single '.' starts a fraction; ".." is the range operator.
                if i < chars.len() && chars[i] == '.' && !(i + 1 < chars.len() && chars[i + 1] == '.')
                {
                    is_real = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    is_real = true;
                    i += 1;
                    if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let tok = if is_real {
                    match text.parse::<f64>() {
                        Ok(x) => Tok::Real(x),
                        Err(_) => {
                            return Err(Diagnostic::error(
                                line_no,
                                col,
                                format!("malformed number `{text}`"),
                            ))
                        }
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => {
                            return Err(Diagnostic::error(
                                line_no,
                                col,
                                format!("malformed number `{text}`"),
                            ))
                        }
                    }
                };
                toks.push((tok, col));
            }
            other => {
                return Err(Diagnostic::error(
                    line_no,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    Ok(toks)
}

struct LineParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: u32,
    /// Column just past the last token, for end-of-line errors.
    end_col: u32,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> u32 {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_col)
    }

    fn next(&mut self) -> Option<&Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.line, self.col(), message)
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, u32), Diagnostic> {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), c)) => {
                let out = (s.clone(), *c);
                self.pos += 1;
                Ok(out)
            }
            Some((t, c)) => Err(Diagnostic::error(
                self.line,
                *c,
                format!("expected {what}, found {t}"),
            )),
            None => Err(Diagnostic::error(
                self.line,
                self.end_col,
                format!("expected {what} at end of line"),
            )),
        }
    }

    fn expect_tok(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        match self.toks.get(self.pos) {
            Some((t, _)) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            Some((t, c)) => Err(Diagnostic::error(
                self.line,
                *c,
                format!("expected {tok}, found {t}"),
            )),
            None => Err(Diagnostic::error(
                self.line,
                self.end_col,
                format!("expected {tok} at end of line"),
            )),
        }
    }

    fn expect_end(&mut self) -> Result<(), Diagnostic> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some((t, c)) => Err(Diagnostic::error(
                self.line,
                *c,
                format!("unexpected trailing {t}"),
            )),
        }
    }
}

fn parse_domain(p: &mut LineParser) -> Result<DomainKind, Diagnostic> {
    match p.peek() {
        Some(Tok::LBrace) => {
            let brace_col = p.col();
            p.next();
            let mut values: Vec<String> = Vec::new();
            if p.peek() == Some(&Tok::RBrace) {
                p.next();
                return Err(Diagnostic::error(
                    p.line,
                    brace_col,
                    "empty categorical domain",
                ));
            }
            loop {
                let (value, col) = p.expect_ident("categorical value")?;
                if values.contains(&value) {
                    return Err(Diagnostic::error(
                        p.line,
                        col,
                        format!("duplicate categorical value `{value}`"),
                    ));
                }
                values.push(value);
                match p.next() {
                    Some((Tok::Comma, _)) => continue,
                    Some((Tok::RBrace, _)) => break,
                    Some((t, c)) => {
                        return Err(Diagnostic::error(
                            p.line,
                            *c,
                            format!("expected `,` or `}}`, found {t}"),
                        ))
                    }
                    None => {
                        return Err(Diagnostic::error(
                            p.line,
                            p.end_col,
                            "unterminated categorical domain",
                        ))
                    }
                }
            }
            Ok(DomainKind::Categorical(values))
        }
        Some(Tok::Ident(s)) if s == "bool" => {
            p.next();
            Ok(DomainKind::Boolean)
        }
        Some(Tok::Int(_)) | Some(Tok::Real(_)) => {
            let lo_col = p.col();
            let lo = p.next().unwrap().0.clone();
            p.expect_tok(Tok::DotDot)?;
            let hi_col = p.col();
            let hi = match p.next() {
                Some((t @ (Tok::Int(_) | Tok::Real(_)), _)) => t.clone(),
                Some((t, c)) => {
                    return Err(Diagnostic::error(
                        p.line,
                        *c,
                        format!("expected range upper bound, found {t}"),
                    ))
                }
                None => {
                    return Err(Diagnostic::error(
                        p.line,
                        p.end_col,
                        "expected range upper bound at end of line",
                    ))
                }
            };
            match (lo, hi) {
                (Tok::Int(a), Tok::Int(b)) => {
                    if a > b {
                        Err(Diagnostic::error(
                            p.line,
                            lo_col,
                            format!("inverted range: {a} > {b}"),
                        ))
                    } else {
                        Ok(DomainKind::IntegerRange { lo: a, hi: b })
                    }
                }
                (lo, hi) => {
                    let a = match lo {
                        Tok::Int(v) => v as f64,
                        Tok::Real(x) => x,
                        _ => unreachable!(),
                    };
                    let b = match hi {
                        Tok::Int(v) => v as f64,
                        Tok::Real(x) => x,
                        _ => unreachable!(),
                    };
                    if !(a.is_finite() && b.is_finite()) {
                        Err(Diagnostic::error(p.line, hi_col, "non-finite range bound"))
                    } else if a > b {
                        Err(Diagnostic::error(
                            p.line,
                            lo_col,
                            format!("inverted range: {a} > {b}"),
                        ))
                    } else {
                        Ok(DomainKind::RealRange { lo: a, hi: b })
                    }
                }
            }
        }
        Some(t) => {
            let msg = format!("expected a domain, found {t}");
            Err(p.error(msg))
        }
        None => Err(p.error("expected a domain at end of line")),
    }
}

/// Parses `.scen` text into a validated [`ScenarioSpec`].
///
/// On failure every diagnostic found is returned; parsing continues past
/// broken lines so a single pass reports all problems.
pub fn parse_spec(text: &str) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    let mut spec = ScenarioSpec::empty();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut saw_map = false;
    let mut saw_ego = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = (idx + 1) as u32;
        let toks = match lex_line(raw_line, line_no) {
            Ok(t) => t,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let end_col = (raw_line.chars().count() + 1) as u32;
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line: line_no,
            end_col,
        };
        let result = (|| -> Result<(), Diagnostic> {
            let (keyword, kw_col) = p.expect_ident("a statement keyword")?;
            match keyword.as_str() {
                "map" => {
                    let (id, col) = p.expect_ident("map identifier")?;
                    p.expect_end()?;
                    if saw_map {
                        return Err(Diagnostic::error(line_no, col, "duplicate map declaration"));
                    }
                    saw_map = true;
                    spec.map_id = id;
                    Ok(())
                }
                "ego" => {
                    let (role, col) = p.expect_ident("ego role")?;
                    p.expect_end()?;
                    if saw_ego {
                        return Err(Diagnostic::error(line_no, col, "duplicate ego declaration"));
                    }
                    saw_ego = true;
                    spec.ego_role = role;
                    Ok(())
                }
                "param" => {
                    let (name, name_col) = p.expect_ident("parameter name")?;
                    let (kw, kw_col) = p.expect_ident("`in`")?;
                    if kw != "in" {
                        return Err(Diagnostic::error(
                            line_no,
                            kw_col,
                            format!("expected `in`, found `{kw}`"),
                        ));
                    }
                    let kind = parse_domain(&mut p)?;
                    p.expect_end()?;
                    if spec.param(&name).is_some() {
                        return Err(Diagnostic::error(
                            line_no,
                            name_col,
                            format!("duplicate parameter name `{name}`"),
                        ));
                    }
                    spec.params.push(ParamDomain { name, kind });
                    Ok(())
                }
                "bind" => {
                    let (knob, knob_col) = p.expect_ident("knob name")?;
                    p.expect_tok(Tok::Equals)?;
                    let (param, param_col) = p.expect_ident("parameter name")?;
                    p.expect_end()?;
                    if spec.bindings.iter().any(|b| b.knob == knob) {
                        return Err(Diagnostic::error(
                            line_no,
                            knob_col,
                            format!("knob `{knob}` bound twice"),
                        ));
                    }
                    if spec.param(&param).is_none() {
                        return Err(Diagnostic::error(
                            line_no,
                            param_col,
                            format!("bind references undeclared parameter `{param}`"),
                        ));
                    }
                    spec.bindings.push(Binding { knob, param });
                    Ok(())
                }
                other => Err(Diagnostic::error(
                    line_no,
                    kw_col,
                    format!("unknown statement `{other}`"),
                )),
            }
        })();
        if let Err(d) = result {
            diags.push(d);
        }
    }

    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(diags)
    }
}

/// Canonical text for a spec; `parse_spec(format_spec(s)) == s` for every
/// valid spec.
pub fn format_spec(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    if spec.map_id != DEFAULT_MAP_ID {
        out.push_str(&format!("map {}\n", spec.map_id));
    }
    if spec.ego_role != DEFAULT_EGO_ROLE {
        out.push_str(&format!("ego {}\n", spec.ego_role));
    }
    for p in &spec.params {
        match &p.kind {
            DomainKind::Categorical(vals) => {
                out.push_str(&format!("param {} in {{{}}}\n", p.name, vals.join(", ")));
            }
            DomainKind::IntegerRange { lo, hi } => {
                out.push_str(&format!("param {} in {lo}..{hi}\n", p.name));
            }
            DomainKind::RealRange { lo, hi } => {
                out.push_str(&format!("param {} in {}..{}\n", p.name, real(*lo), real(*hi)));
            }
            DomainKind::Boolean => out.push_str(&format!("param {} in bool\n", p.name)),
        }
    }
    for b in &spec.bindings {
        out.push_str(&format!("bind {} = {}\n", b.knob, b.param));
    }
    out
}

/// Real bounds always carry a decimal point so they re-lex as reals.
fn real(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains('E') {
        s
    } else {
        format!("{s}.0")
    }
}
