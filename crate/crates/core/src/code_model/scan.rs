use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::lexer::{tokenize, Token, TokenKind};
use super::{FunctionBlockSite, LoopInventory, LoopStatement, ScanOptions, SourceUnit, Span};
use crate::error::ScanError;

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool", "bool",
];

const TYPE_WORDS: &[&str] = &[
    "char", "short", "int", "long", "float", "double", "signed", "unsigned", "void", "_Bool",
    "bool", "size_t", "ptrdiff_t", "const", "static", "register", "volatile", "int8_t",
    "int16_t", "int32_t", "int64_t", "uint8_t", "uint16_t", "uint32_t", "uint64_t",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];
const ARITH_OPS: &[&str] = &["+", "-", "*", "/", "%", "+=", "-=", "*=", "/=", "%="];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_type_word(s: &str) -> bool {
    TYPE_WORDS.contains(&s)
}

#[derive(Debug)]
pub(crate) struct FunctionDef {
    pub name: String,
    pub body_open: usize,
    pub body_close: usize,
}

#[derive(Debug)]
struct RawLoop {
    for_tok: usize,
    header_open: usize,
    header_close: usize,
    end_tok: usize,
    function: usize,
}

/// Token stream with bracket matching and function boundaries resolved.
pub(crate) struct Parsed<'a> {
    pub unit: &'a SourceUnit,
    pub tokens: Vec<Token>,
    /// For every opening bracket, the index of its partner (and vice versa).
    matching: HashMap<usize, usize>,
    pub functions: Vec<FunctionDef>,
}

impl<'a> Parsed<'a> {
    pub fn new(unit: &'a SourceUnit) -> Result<Self, ScanError> {
        let tokens = tokenize(&unit.path, &unit.text)?;
        let err = |offset: usize, message: String| ScanError {
            path: unit.path.clone(),
            offset,
            message,
        };

        let mut matching = HashMap::new();
        let mut stack: Vec<usize> = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.kind != TokenKind::Punct {
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => stack.push(i),
                ")" | "]" | "}" => {
                    let open = stack
                        .pop()
                        .ok_or_else(|| err(t.start, format!("unbalanced `{}`", t.text)))?;
                    let expected = match tokens[open].text.as_str() {
                        "(" => ")",
                        "[" => "]",
                        _ => "}",
                    };
                    if t.text != expected {
                        return Err(err(
                            t.start,
                            format!("`{}` closes `{}` opened at {}", t.text, tokens[open].text, tokens[open].start),
                        ));
                    }
                    matching.insert(open, i);
                    matching.insert(i, open);
                }
                _ => {}
            }
        }
        if let Some(&open) = stack.last() {
            return Err(err(tokens[open].start, format!("unclosed `{}`", tokens[open].text)));
        }

        let mut parsed = Parsed {
            unit,
            tokens,
            matching,
            functions: Vec::new(),
        };
        parsed.find_functions();
        Ok(parsed)
    }

    fn partner(&self, i: usize) -> usize {
        self.matching[&i]
    }

    fn text(&self, i: usize) -> &str {
        self.tokens.get(i).map_or("", |t| t.text.as_str())
    }

    fn find_functions(&mut self) {
        let mut i = 0;
        while i < self.tokens.len() {
            match self.text(i) {
                "{" => i = self.partner(i) + 1,
                "(" => {
                    let close = self.partner(i);
                    let named = i > 0 && self.tokens[i - 1].is_ident() && !is_keyword(self.text(i - 1));
                    if named && self.text(close + 1) == "{" {
                        let body_close = self.partner(close + 1);
                        self.functions.push(FunctionDef {
                            name: self.tokens[i - 1].text.clone(),
                            body_open: close + 1,
                            body_close,
                        });
                        i = body_close + 1;
                    } else {
                        i = close + 1;
                    }
                }
                _ => i += 1,
            }
        }
    }

    /// Index of the last token of the statement starting at `i`.
    fn statement_end(&self, i: usize) -> Result<usize, ScanError> {
        let err = |message: &str| ScanError {
            path: self.unit.path.clone(),
            offset: self.tokens.get(i).map_or(self.unit.text.len(), |t| t.start),
            message: message.to_string(),
        };
        match self.text(i) {
            "" => Err(err("statement expected")),
            "{" => Ok(self.partner(i)),
            ";" => Ok(i),
            "for" | "while" | "switch" if self.text(i + 1) == "(" => {
                self.statement_end(self.partner(i + 1) + 1)
            }
            "if" if self.text(i + 1) == "(" => {
                let end = self.statement_end(self.partner(i + 1) + 1)?;
                if self.text(end + 1) == "else" {
                    self.statement_end(end + 2)
                } else {
                    Ok(end)
                }
            }
            "do" => {
                let body_end = self.statement_end(i + 1)?;
                if self.text(body_end + 1) != "while" || self.text(body_end + 2) != "(" {
                    return Err(err("`do` without `while`"));
                }
                let close = self.partner(body_end + 2);
                if self.text(close + 1) != ";" {
                    return Err(err("missing `;` after do-while"));
                }
                Ok(close + 1)
            }
            _ => {
                let mut j = i;
                while j < self.tokens.len() {
                    match self.text(j) {
                        ";" => return Ok(j),
                        "(" | "[" | "{" => j = self.partner(j) + 1,
                        ")" | "]" | "}" => break,
                        _ => j += 1,
                    }
                }
                Err(err("unterminated statement"))
            }
        }
    }

    fn loops(&self) -> Result<Vec<RawLoop>, ScanError> {
        let mut out = Vec::new();
        for (fi, f) in self.functions.iter().enumerate() {
            for i in f.body_open + 1..f.body_close {
                if self.text(i) == "for" && self.text(i + 1) == "(" {
                    let header_close = self.partner(i + 1);
                    out.push(RawLoop {
                        for_tok: i,
                        header_open: i + 1,
                        header_close,
                        end_tok: self.statement_end(header_close + 1)?,
                        function: fi,
                    });
                }
            }
        }
        Ok(out)
    }

    /// (keyword token, last token) for every statement a `break` can leave.
    fn breakables(&self) -> Result<Vec<(usize, usize)>, ScanError> {
        let mut out = Vec::new();
        let mut do_tails = BTreeSet::new();
        for f in &self.functions {
            for i in f.body_open + 1..f.body_close {
                if self.text(i) == "do" {
                    let end = self.statement_end(i)?;
                    // `while` token of the do-while tail
                    do_tails.insert(self.partner(end - 1) - 1);
                    out.push((i, end));
                }
            }
        }
        for f in &self.functions {
            for i in f.body_open + 1..f.body_close {
                let kw = self.text(i);
                if matches!(kw, "for" | "while" | "switch")
                    && self.text(i + 1) == "("
                    && !do_tails.contains(&i)
                {
                    out.push((i, self.statement_end(self.partner(i + 1) + 1)?));
                }
            }
        }
        Ok(out)
    }

    fn span_of(&self, first: usize, last: usize) -> Span {
        Span::new(self.tokens[first].start, self.tokens[last].end)
    }

    fn line_of(&self, offset: usize) -> &str {
        let text = &self.unit.text;
        let start = text[..offset].rfind('\n').map_or(0, |p| p + 1);
        let end = text[offset..].find('\n').map_or(text.len(), |p| offset + p);
        text[start..end].trim()
    }

    /// Identifiers declared in tokens `lo..=hi`.
    fn declared_in(&self, lo: usize, hi: usize) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        let mut i = lo;
        while i <= hi {
            let starts_decl = is_type_word(self.text(i))
                && (i == lo || matches!(self.text(i - 1), ";" | "{" | "}" | "(" | ")"));
            if !starts_decl {
                i += 1;
                continue;
            }
            while i <= hi && (is_type_word(self.text(i)) || self.text(i) == "*") {
                i += 1;
            }
            if i <= hi && self.tokens[i].is_ident() {
                names.insert(self.tokens[i].text.clone());
            }
            while i <= hi && !matches!(self.text(i), ";" | ")") {
                match self.text(i) {
                    "(" | "[" | "{" => i = self.partner(i),
                    "," => {
                        let mut j = i + 1;
                        while self.text(j) == "*" {
                            j += 1;
                        }
                        if j <= hi && self.tokens[j].is_ident() {
                            names.insert(self.tokens[j].text.clone());
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
        }
        names
    }

    fn is_member(&self, i: usize) -> bool {
        i > 0 && matches!(self.text(i - 1), "." | "->")
    }

    /// Plain identifiers written (assigned or incremented) in `lo..=hi`.
    fn scalar_writes(&self, lo: usize, hi: usize) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for i in lo..=hi {
            let t = &self.tokens[i];
            if !t.is_ident() || is_keyword(&t.text) || self.is_member(i) {
                continue;
            }
            let next = self.text(i + 1);
            let postfix_or_assign = ASSIGN_OPS.contains(&next) || next == "++" || next == "--";
            let prefix = i > 0
                && matches!(self.text(i - 1), "++" | "--")
                && (i < 2 || !matches!(self.tokens[i - 2].kind, TokenKind::Ident | TokenKind::Number)
                    && !matches!(self.text(i - 2), ")" | "]"));
            if postfix_or_assign || prefix {
                names.insert(t.text.clone());
            }
        }
        names
    }

    /// True when the value of `name` left by tokens up to `after` may be read
    /// later: the next mention after the loop is not a plain overwrite, or an
    /// enclosing loop mentions it before `loop_start` (carried to the next
    /// outer iteration).
    fn live_after(&self, name: &str, loop_start: usize, after: usize, func_end: usize, outer_start: Option<usize>) -> bool {
        for i in after + 1..func_end {
            if self.tokens[i].text == name && !self.is_member(i) {
                let overwritten = self.text(i + 1) == "=" || is_type_word(self.text(i - 1));
                return !overwritten;
            }
        }
        if let Some(outer) = outer_start {
            for i in outer..loop_start {
                if self.tokens[i].text == name && !self.is_member(i) && self.text(i + 1) != "=" {
                    return true;
                }
            }
        }
        false
    }

    fn calls_in(&self, lo: usize, hi: usize) -> Vec<String> {
        (lo..hi)
            .filter(|&i| {
                let t = &self.tokens[i];
                t.is_ident()
                    && !is_keyword(&t.text)
                    && !is_type_word(&t.text)
                    && self.text(i + 1) == "("
                    && !self.is_member(i)
            })
            .map(|i| self.tokens[i].text.clone())
            .collect()
    }
}

pub fn scan_loops(unit: &Arc<SourceUnit>, options: &ScanOptions) -> Result<LoopInventory, ScanError> {
    let parsed = Parsed::new(unit)?;
    let raw = parsed.loops()?;
    let breakables = parsed.breakables()?;
    let p = &parsed;

    let mut loops = Vec::with_capacity(raw.len());
    for (id, l) in raw.iter().enumerate() {
        let body_lo = l.header_close + 1;
        let body_hi = l.end_tok;
        let func = &p.functions[l.function];
        let enclosing: Vec<&RawLoop> = raw
            .iter()
            .filter(|o| o.for_tok < l.for_tok && l.end_tok <= o.end_tok)
            .collect();
        let outermost = enclosing.iter().map(|o| o.for_tok).min();

        let mut reject = None;

        for i in body_lo..=body_hi {
            match p.text(i) {
                "goto" | "return" => {
                    reject = Some(format!("early exit `{}`", p.text(i)));
                    break;
                }
                "break" => {
                    let owner = breakables
                        .iter()
                        .filter(|(kw, end)| *kw < i && i <= *end)
                        .max_by_key(|(kw, _)| *kw)
                        .map(|(kw, _)| *kw);
                    if owner == Some(l.for_tok) {
                        reject = Some("early exit `break`".into());
                        break;
                    }
                }
                _ => {}
            }
        }

        if reject.is_none() {
            if let Some(callee) = p
                .calls_in(body_lo, body_hi + 1)
                .into_iter()
                .find(|c| !options.pure_functions.contains(c))
            {
                reject = Some(format!("calls `{callee}`"));
            }
        }

        if reject.is_none() {
            let mut declared = p.declared_in(body_lo, body_hi);
            declared.extend(p.declared_in(l.header_open + 1, l.header_close - 1));
            let mut written = p.scalar_writes(body_lo, body_hi);
            written.extend(p.scalar_writes(l.header_open + 1, l.header_close - 1));
            if let Some(name) = written.iter().find(|n| {
                !declared.contains(*n) && p.live_after(n, l.for_tok, body_hi, func.body_close, outermost)
            }) {
                reject = Some(format!("loop-carried scalar `{name}`"));
            }
        }

        let mut ops = 0u64;
        let mut accesses = 0u64;
        for i in body_lo..=body_hi {
            let t = &p.tokens[i];
            if t.kind == TokenKind::Punct && ARITH_OPS.contains(&t.text.as_str()) {
                ops += 1;
            }
            if t.is_ident() && p.text(i + 1) == "[" && p.text(i.wrapping_sub(1)) != "]" {
                accesses += 1;
            }
        }

        let span = p.span_of(l.for_tok, l.end_tok);
        loops.push(LoopStatement {
            id,
            span,
            nest_depth: enclosing.len(),
            header_text: p.line_of(span.start).to_string(),
            function: func.name.clone(),
            parallel_candidate: reject.is_none(),
            reject_reason: reject,
            static_op_count: ops,
            static_mem_bytes: accesses * 8,
            trip_count: 0,
        });
    }

    let candidates = loops.iter().filter(|l| l.parallel_candidate).map(|l| l.id).collect();
    Ok(LoopInventory {
        unit: Arc::clone(unit),
        loops,
        candidates,
    })
}

/// Canonical token sequence for clone detection: keywords and punctuation
/// verbatim, identifiers renamed by first appearance (`$0`, `$1`, ...),
/// literals collapsed to `$num` / `$str`.
pub fn normalize_tokens(tokens: &[Token]) -> Vec<String> {
    let mut names: HashMap<&str, usize> = HashMap::new();
    tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Ident if is_keyword(&t.text) || is_type_word(&t.text) => t.text.clone(),
            TokenKind::Ident => {
                let next = names.len();
                format!("${}", names.entry(t.text.as_str()).or_insert(next))
            }
            TokenKind::Number => "$num".into(),
            TokenKind::Str | TokenKind::Char => "$str".into(),
            TokenKind::Punct => t.text.clone(),
        })
        .collect()
}

pub(crate) fn normalized_body(parsed: &Parsed<'_>, f: &FunctionDef) -> Vec<String> {
    normalize_tokens(&parsed.tokens[f.body_open + 1..f.body_close])
}

/// Call sites whose callee is defined in `unit` or whose normalized name is in
/// `interest` (names declared by headers the registry cares about).
///
/// A site's id is the ordinal of its call among every call in the unit, so it
/// does not depend on `interest`.
pub fn scan_function_blocks(unit: &SourceUnit, interest: &[String]) -> Result<Vec<FunctionBlockSite>, ScanError> {
    let parsed = Parsed::new(unit)?;
    let interest: BTreeSet<String> = interest.iter().map(|n| crate::blocks::normalize_name(n)).collect();
    let defined: HashMap<&str, &FunctionDef> =
        parsed.functions.iter().map(|f| (f.name.as_str(), f)).collect();

    let mut sites = Vec::new();
    let mut calls = 0;
    for f in &parsed.functions {
        for i in f.body_open + 1..f.body_close {
            let t = &parsed.tokens[i];
            let is_call = t.is_ident()
                && !is_keyword(&t.text)
                && !is_type_word(&t.text)
                && parsed.text(i + 1) == "("
                && !parsed.is_member(i)
                && !is_type_word(parsed.text(i - 1));
            if !is_call {
                continue;
            }
            calls += 1;
            let callee = defined.get(t.text.as_str());
            if callee.is_none() && !interest.contains(&crate::blocks::normalize_name(&t.text)) {
                continue;
            }
            let close = parsed.partner(i + 1);
            sites.push(FunctionBlockSite {
                id: calls - 1,
                callee_name: t.text.clone(),
                span: parsed.span_of(i, close),
                caller: f.name.clone(),
                body_tokens: callee.map(|c| normalized_body(&parsed, c)).unwrap_or_default(),
            });
        }
    }
    Ok(sites)
}

/// Body span (braces included) of each function defined in `unit`.
pub(crate) fn function_bodies(unit: &SourceUnit) -> Result<Vec<(String, Span)>, ScanError> {
    let parsed = Parsed::new(unit)?;
    Ok(parsed
        .functions
        .iter()
        .map(|f| (f.name.clone(), parsed.span_of(f.body_open, f.body_close)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inventory(src: &str) -> LoopInventory {
        scan_loops(&Arc::new(SourceUnit::new("t.c", src)), &ScanOptions::default()).unwrap()
    }

    fn reason(inv: &LoopInventory, id: usize) -> Option<&str> {
        inv.loops[id].reject_reason.as_deref()
    }

    #[test]
    fn empty_function_has_no_loops() {
        let inv = inventory("void f(void) {}\n");
        assert!(inv.loops.is_empty());
        assert!(inv.candidates.is_empty());
    }

    #[test]
    fn empty_text_has_no_loops() {
        let inv = inventory("");
        assert_eq!(inv.loops.len(), 0);
    }

    #[test]
    fn break_excludes_the_loop() {
        let inv = inventory("void f(int *a, int n) {\n  int i;\n  for (i = 0; i < n; i++) {\n    if (a[i] < 0) break;\n    a[i] = 2 * a[i];\n  }\n}\n");
        assert_eq!(inv.loops.len(), 1);
        assert_eq!(inv.candidates.len(), 0);
        assert_eq!(reason(&inv, 0), Some("early exit `break`"));
    }

    #[test]
    fn break_of_inner_loop_only_excludes_inner() {
        let src = "void f(int a[8][8]) {\n  int i, j;\n  for (i = 0; i < 8; i++)\n    for (j = 0; j < 8; j++) {\n      if (a[i][j]) break;\n    }\n}\n";
        let inv = inventory(src);
        assert_eq!(inv.loops.len(), 2);
        assert_eq!(inv.candidates, vec![0]);
        assert_eq!(inv.loops[1].nest_depth, 1);
    }

    #[test]
    fn break_inside_switch_belongs_to_switch() {
        let src = "void f(int *a) {\n  int i;\n  for (i = 0; i < 4; i++) {\n    switch (a[i]) { case 0: a[i] = 1; break; default: a[i] = 2; }\n  }\n}\n";
        assert_eq!(inventory(src).candidates, vec![0]);
    }

    #[test]
    fn return_and_goto_exclude() {
        let inv = inventory("int f(int *a) {\n  int i;\n  for (i = 0; i < 4; i++) { if (a[i]) return i; }\n  for (i = 0; i < 4; i++) { if (a[i]) goto out; }\nout:\n  return 0;\n}\n");
        assert!(inv.candidates.is_empty());
    }

    #[test]
    fn impure_call_excludes_but_math_does_not() {
        let inv = inventory("void f(double *a) {\n  int i;\n  for (i = 0; i < 4; i++) a[i] = sqrt(a[i]);\n  for (i = 0; i < 4; i++) printf(\"%f\", a[i]);\n}\n");
        assert_eq!(inv.candidates, vec![0]);
        assert_eq!(reason(&inv, 1), Some("calls `printf`"));
    }

    #[test]
    fn reduction_read_after_loop_excludes() {
        let src = "double f(double *a) {\n  int i;\n  double s = 0.0;\n  for (i = 0; i < 4; i++) s += a[i];\n  return s;\n}\n";
        let inv = inventory(src);
        assert_eq!(reason(&inv, 0), Some("loop-carried scalar `s`"));
    }

    #[test]
    fn scalar_overwritten_after_loop_is_fine() {
        let src = "void f(double *a) {\n  int i;\n  double t;\n  for (i = 0; i < 4; i++) { t = a[i]; a[i] = t * t; }\n  t = 0.0;\n}\n";
        assert_eq!(inventory(src).candidates, vec![0]);
    }

    #[test]
    fn locally_declared_scalar_is_private() {
        let src = "double g;\nvoid f(double *a) {\n  for (int i = 0; i < 4; i++) { double t = a[i]; t += 1.0; a[i] = t; }\n  g = a[0];\n}\n";
        assert_eq!(inventory(src).candidates, vec![0]);
    }

    #[test]
    fn induction_variable_read_after_loop_excludes() {
        let src = "int f(int *a) {\n  int i;\n  for (i = 0; i < 4; i++) a[i] = 0;\n  return i;\n}\n";
        assert_eq!(inventory(src).candidates, Vec::<usize>::new());
    }

    #[test]
    fn scalar_carried_around_outer_loop_excludes_inner() {
        // `s` written by the inner loop is consumed at the top of the next
        // outer iteration.
        let src = "void f(double a[4][4], double *b) {\n  int i, j;\n  double s = 0;\n  for (i = 0; i < 4; i++) {\n    b[i] = s;\n    for (j = 0; j < 4; j++) s = a[i][j];\n  }\n}\n";
        let inv = inventory(src);
        assert!(!inv.loops[1].parallel_candidate);
    }

    #[test]
    fn nest_metrics() {
        let src = "void mm(double C[4][4], double A[4][4], double B[4][4]) {\n  int i, j, k;\n  for (i = 0; i < 4; i++)\n    for (j = 0; j < 4; j++)\n      for (k = 0; k < 4; ++k)\n        C[i][j] += A[i][k] * B[k][j];\n}\n";
        let inv = inventory(src);
        assert_eq!(inv.candidates, vec![0, 1, 2]);
        let depths: Vec<_> = inv.loops.iter().map(|l| l.nest_depth).collect();
        assert_eq!(depths, [0, 1, 2]);
        let inner = &inv.loops[2];
        assert_eq!(inner.static_op_count, 2);
        assert_eq!(inner.static_mem_bytes, 24);
        assert_eq!(inner.header_text, "for (k = 0; k < 4; ++k)");
        assert!(inv.loops[0].span.contains(&inner.span));
    }

    #[test]
    fn unbalanced_braces_are_rejected() {
        let unit = Arc::new(SourceUnit::new("bad.c", "void f() {\n  for (;;) {\n}\n"));
        let err = scan_loops(&unit, &ScanOptions::default()).unwrap_err();
        assert_eq!(err.path, "bad.c");
        assert!(err.message.contains("unclosed"));
    }

    #[test]
    fn call_sites_one_per_call() {
        let src = "static void k(int n) { int i; for (i = 0; i < n; i++) ; }\nint main(void) {\n  k(1);\n  k(2);\n  printf(\"x\");\n  return 0;\n}\n";
        let unit = SourceUnit::new("t.c", src);
        let sites = scan_function_blocks(&unit, &[]).unwrap();
        assert_eq!(sites.len(), 2);
        assert_eq!((sites[0].id, sites[1].id), (0, 1));
        assert!(sites.iter().all(|s| s.callee_name == "k" && s.caller == "main"));
        assert_eq!(&src[sites[1].span.start..sites[1].span.end], "k(2)");
        assert!(!sites[0].body_tokens.is_empty());
    }

    #[test]
    fn interest_list_admits_external_callees() {
        let unit = SourceUnit::new("t.c", "int main(void) { fft_forward(x, 8); return 0; }");
        assert!(scan_function_blocks(&unit, &[]).unwrap().is_empty());
        let sites = scan_function_blocks(&unit, &["FFT_Forward".to_string()]).unwrap();
        assert_eq!(sites.len(), 1);
        assert!(sites[0].body_tokens.is_empty());
    }

    #[test]
    fn no_calls_no_sites() {
        let unit = SourceUnit::new("t.c", "int main(void) { int a = 1; return a; }");
        assert!(scan_function_blocks(&unit, &[]).unwrap().is_empty());
    }

    #[test]
    fn normalization_is_rename_invariant() {
        let a = tokenize("a", "acc += x[i] * 2.0;").unwrap();
        let b = tokenize("b", "sum += y[k] * 3.5;").unwrap();
        assert_eq!(normalize_tokens(&a), normalize_tokens(&b));
        assert_eq!(normalize_tokens(&a)[0], "$0");
    }
}
