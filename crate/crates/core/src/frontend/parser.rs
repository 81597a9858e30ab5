//! Line-oriented parser for the supported Quil subset.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::expr::{BinOp, Expr, ExprError, ParamExpr};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Float(f64),
    Imag(f64),
    Label(String),
    Formal(String),
    Punct(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, line: usize, base_col: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        let col = base_col + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && ident_char(chars[i]) {
                i += 1;
            }
            let mut word: String = chars[start..i].iter().collect();
            if word == "JUMP" {
                for suffix in ["-UNLESS", "-WHEN"] {
                    let tail: String = chars[i..].iter().take(suffix.len()).collect();
                    if tail == suffix && !chars.get(i + suffix.len()).is_some_and(|&c| ident_char(c)) {
                        word.push_str(suffix);
                        i += suffix.len();
                    }
                }
            }
            out.push(Token { tok: Tok::Ident(word), col });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let imag = i < chars.len() && chars[i] == 'i' && !chars.get(i + 1).is_some_and(|&c| ident_char(c));
            let tok = if imag {
                i += 1;
                Tok::Imag(s.parse().map_err(|_| ParseError::new(line, col, "bad number"))?)
            } else if is_float {
                Tok::Float(s.parse().map_err(|_| ParseError::new(line, col, "bad number"))?)
            } else {
                Tok::Int(s.parse().map_err(|_| ParseError::new(line, col, "integer out of range"))?)
            };
            out.push(Token { tok, col });
        } else if c == '@' || c == '%' {
            i += 1;
            let start = i;
            while i < chars.len() && (ident_char(chars[i]) || chars[i] == '-') {
                i += 1;
            }
            if start == i {
                return Err(ParseError::new(line, col, format!("expected a name after '{c}'")));
            }
            let name: String = chars[start..i].iter().collect();
            let tok = if c == '@' { Tok::Label(name) } else { Tok::Formal(name) };
            out.push(Token { tok, col });
        } else if "()[],:+-*/^".contains(c) {
            out.push(Token { tok: Tok::Punct(c), col });
            i += 1;
        } else {
            return Err(ParseError::new(line, col, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, end_col: usize) -> Self {
        Cursor { toks, pos: 0, line, end_col }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col(), msg)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing tokens"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn int(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v as usize;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected an integer")),
        }
    }

    fn label(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Label(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a label such as @name")),
        }
    }

    fn memory_ref(&mut self) -> Result<MemoryRef, ParseError> {
        let name = self.ident()?;
        let index = if self.eat('[') {
            let i = self.int()?;
            self.expect(']')?;
            Some(i)
        } else {
            None
        };
        Ok(MemoryRef { name, index })
    }

    fn argument(&mut self) -> Result<Argument, ParseError> {
        match self.peek() {
            Some(Tok::Int(_)) => Ok(Argument::Qubit(self.int()?)),
            Some(Tok::Ident(_)) => {
                let m = self.memory_ref()?;
                Ok(match m.index {
                    Some(_) => Argument::Memory(m),
                    None => Argument::Name(m.name),
                })
            }
            _ => Err(self.err("expected a qubit or memory argument")),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Int(v)) => Ok(Expr::Number(v as f64)),
            Some(Tok::Float(v)) => Ok(Expr::Number(v)),
            Some(Tok::Imag(v)) => Ok(Expr::Binary(
                BinOp::Mul,
                Box::new(Expr::Number(v)),
                Box::new(Expr::Imaginary),
            )),
            Some(Tok::Formal(n)) => Ok(Expr::Formal(n)),
            Some(Tok::Punct('(')) => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.eat('(') {
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(name, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" | "PI" => return Ok(Expr::Pi),
                    "i" => return Ok(Expr::Imaginary),
                    _ => {}
                }
                if self.eat('[') {
                    let i = self.int()?;
                    self.expect(']')?;
                    Ok(Expr::Variable(format!("{name}[{i}]")))
                } else {
                    Ok(Expr::Variable(name))
                }
            }
            _ => Err(ParseError::new(self.line, col, "expected an expression")),
        }
    }
}

struct Line {
    number: usize,
    indented: bool,
    text: String,
    offset: usize,
}

fn split_lines(source: &str) -> Vec<Line> {
    source
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let code = raw.split('#').next().unwrap_or("");
            let trimmed = code.trim_end();
            let content = trimmed.trim_start();
            if content.is_empty() {
                return None;
            }
            Some(Line {
                number: i + 1,
                indented: trimmed.starts_with([' ', '\t']),
                offset: trimmed.len() - content.len(),
                text: content.to_string(),
            })
        })
        .collect()
}

fn parse_instruction(line: &Line) -> Result<Instruction, ParseError> {
    if let Some(rest) = line.text.strip_prefix("PRAGMA") {
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            let body = rest.trim();
            if body.is_empty() {
                return Err(ParseError::new(line.number, line.offset + 7, "PRAGMA needs a body"));
            }
            return Ok(Instruction::Pragma(body.to_string()));
        }
    }
    let toks = lex(&line.text, line.number, line.offset)?;
    let mut c = Cursor::new(&toks, line.number, line.offset + line.text.len() + 1);
    let head = c.ident()?;
    let ins = match head.as_str() {
        "MEASURE" => {
            let qubit = c.argument()?;
            if matches!(qubit, Argument::Memory(_)) {
                return Err(c.err("MEASURE expects a qubit"));
            }
            let target = if c.at_end() { None } else { Some(c.memory_ref()?) };
            Instruction::Measure { qubit, target }
        }
        "LABEL" => Instruction::Label(c.label()?),
        "JUMP" => Instruction::Jump(c.label()?),
        "JUMP-WHEN" => Instruction::JumpWhen {
            label: c.label()?,
            condition: c.memory_ref()?,
        },
        "JUMP-UNLESS" => Instruction::JumpUnless {
            label: c.label()?,
            condition: c.memory_ref()?,
        },
        "DECLARE" | "DEFGATE" | "DEFCIRCUIT" => {
            return Err(ParseError::new(line.number, line.offset + 1, format!("{head} is not allowed here")))
        }
        _ => {
            let mut params = Vec::new();
            if c.eat('(') {
                loop {
                    let col = c.col();
                    let e = c.expr()?;
                    let p = e
                        .to_affine(&BTreeMap::new())
                        .or_else(|err| match err {
                            // formals stay symbolic until circuit expansion
                            ExprError::UnboundFormal(_) => affine_with_formals(&e),
                            other => Err(other),
                        })
                        .map_err(|err| ParseError::new(line.number, col, err.to_string()))?;
                    params.push(p);
                    if c.eat(')') {
                        break;
                    }
                    c.expect(',')?;
                }
            }
            let mut args = Vec::new();
            while !c.at_end() {
                args.push(c.argument()?);
            }
            if args.is_empty() {
                return Err(c.err(format!("{head} needs at least one argument")));
            }
            Instruction::Gate(GateApplication { name: head, params, args })
        }
    };
    c.expect_end()?;
    Ok(ins)
}

/// Reduce an expression whose `%formal` names are kept as variables `%name`.
fn affine_with_formals(e: &Expr) -> Result<ParamExpr, ExprError> {
    let mut names = Vec::new();
    e.formals(&mut names);
    let env: BTreeMap<String, ParamExpr> = names
        .into_iter()
        .map(|n| (n.clone(), ParamExpr::var(format!("%{n}"))))
        .collect();
    e.to_affine(&env)
}

fn parse_formal_list(c: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut params = Vec::new();
    if c.eat('(') {
        loop {
            match c.next() {
                Some(Tok::Formal(n)) => params.push(n),
                _ => return Err(c.err("expected a %parameter")),
            }
            if c.eat(')') {
                break;
            }
            c.expect(',')?;
        }
    }
    Ok(params)
}

fn parse_header(line: &Line) -> Result<(String, Vec<String>, Vec<String>), ParseError> {
    let toks = lex(&line.text, line.number, line.offset)?;
    let mut c = Cursor::new(&toks, line.number, line.offset + line.text.len() + 1);
    c.ident()?;
    let name = c.ident()?;
    let params = parse_formal_list(&mut c)?;
    let mut formals = Vec::new();
    while let Some(Tok::Ident(_)) = c.peek() {
        formals.push(c.ident()?);
    }
    c.expect(':')?;
    c.expect_end()?;
    Ok((name, params, formals))
}

fn parse_matrix_row(line: &Line) -> Result<Vec<Expr>, ParseError> {
    let toks = lex(&line.text, line.number, line.offset)?;
    let mut c = Cursor::new(&toks, line.number, line.offset + line.text.len() + 1);
    let mut row = vec![c.expr()?];
    while c.eat(',') {
        row.push(c.expr()?);
    }
    c.expect_end()?;
    Ok(row)
}

/// Parse and validate a program.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let lines = split_lines(source);
    let mut program = Program::default();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        if line.indented {
            return Err(ParseError::new(line.number, line.offset + 1, "unexpected indentation"));
        }
        let head = line.text.split_whitespace().next().unwrap_or("");
        i += 1;
        match head {
            "DECLARE" => program.declarations.push(parse_declaration(line)?),
            "DEFGATE" => {
                let (name, params, formals) = parse_header(line)?;
                if !formals.is_empty() {
                    return Err(ParseError::new(line.number, 1, "DEFGATE takes no qubit names"));
                }
                let mut matrix = Vec::new();
                while i < lines.len() && lines[i].indented {
                    matrix.push(parse_matrix_row(&lines[i])?);
                    i += 1;
                }
                program.gate_defs.push(GateDefinition { name, params, matrix });
            }
            "DEFCIRCUIT" => {
                let (name, params, formals) = parse_header(line)?;
                let mut body = Vec::new();
                while i < lines.len() && lines[i].indented {
                    body.push(parse_instruction(&lines[i])?);
                    i += 1;
                }
                program.circuit_defs.push(CircuitDefinition { name, params, formals, body });
            }
            _ => program.body.push(parse_instruction(line)?),
        }
    }
    validate(&program, &lines)?;
    Ok(program)
}

fn parse_declaration(line: &Line) -> Result<Declaration, ParseError> {
    let toks = lex(&line.text, line.number, line.offset)?;
    let mut c = Cursor::new(&toks, line.number, line.offset + line.text.len() + 1);
    c.ident()?;
    let name = c.ident()?;
    let kind = match c.ident()?.as_str() {
        "BIT" => MemoryKind::Bit,
        "REAL" => MemoryKind::Real,
        other => return Err(c.err(format!("unsupported memory type {other}"))),
    };
    let length = if c.eat('[') {
        let n = c.int()?;
        c.expect(']')?;
        n
    } else {
        1
    };
    if length == 0 {
        return Err(c.err("memory regions need a positive length"));
    }
    c.expect_end()?;
    Ok(Declaration { name, kind, length })
}

fn validate(program: &Program, lines: &[Line]) -> Result<(), ParseError> {
    // errors found here are reported against the first line mentioning the name
    let locate = |needle: &str| -> usize {
        lines
            .iter()
            .find(|l| l.text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-')).any(|w| w == needle))
            .map_or(0, |l| l.number)
    };
    let fail = |needle: &str, msg: String| Err(ParseError::new(locate(needle), 1, msg));

    let mut seen = BTreeSet::new();
    for d in &program.declarations {
        if !seen.insert(d.name.clone()) {
            return fail(&d.name, format!("memory region {} declared twice", d.name));
        }
    }
    let mut gate_names = BTreeSet::new();
    for d in &program.gate_defs {
        if builtin_signature(&d.name).is_some() {
            return fail(&d.name, format!("DEFGATE {} shadows a builtin gate", d.name));
        }
        if !gate_names.insert(d.name.clone()) {
            return fail(&d.name, format!("gate {} defined twice", d.name));
        }
        let n = d.matrix.len();
        if n < 2 || !n.is_power_of_two() || n > 16 {
            return fail(&d.name, format!("DEFGATE {} must have 2, 4, 8 or 16 rows", d.name));
        }
        if d.matrix.iter().any(|r| r.len() != n) {
            return fail(&d.name, format!("DEFGATE {} matrix is not square", d.name));
        }
        let mut used = Vec::new();
        d.matrix.iter().flatten().for_each(|e| e.formals(&mut used));
        if let Some(u) = used.iter().find(|u| !d.params.contains(u)) {
            return fail(&d.name, format!("DEFGATE {} uses undeclared parameter %{u}", d.name));
        }
    }
    for d in &program.circuit_defs {
        if builtin_signature(&d.name).is_some() || gate_names.contains(&d.name) {
            return fail(&d.name, format!("DEFCIRCUIT {} shadows a gate", d.name));
        }
        if !gate_names.insert(d.name.clone()) {
            return fail(&d.name, format!("circuit {} defined twice", d.name));
        }
    }

    let check_body = |body: &[Instruction], formals: &[String], params: &[String]| -> Result<(), ParseError> {
        let labels: BTreeSet<&String> = body
            .iter()
            .filter_map(|i| match i {
                Instruction::Label(l) => Some(l),
                _ => None,
            })
            .collect();
        let mem_ok = |m: &MemoryRef| -> Result<(), ParseError> {
            if m.index.is_none() && formals.contains(&m.name) {
                return Ok(());
            }
            match program.declaration(&m.name) {
                None => fail(&m.name, format!("reference to undeclared memory region {}", m.name)),
                Some(d) if m.offset() >= d.length => {
                    fail(&m.name, format!("index {} out of range for {}", m.offset(), m.name))
                }
                Some(_) => Ok(()),
            }
        };
        for ins in body {
            match ins {
                Instruction::Gate(g) => {
                    let (np, nq) = if let Some(sig) = builtin_signature(&g.name) {
                        sig
                    } else if let Some(d) = program.gate_def(&g.name) {
                        (d.params.len(), d.qubit_count())
                    } else if let Some(d) = program.circuit_def(&g.name) {
                        (d.params.len(), d.formals.len())
                    } else {
                        return fail(&g.name, format!("unknown gate {}", g.name));
                    };
                    if g.params.len() != np {
                        return fail(&g.name, format!("{} expects {} parameter(s), got {}", g.name, np, g.params.len()));
                    }
                    if g.args.len() != nq {
                        return fail(&g.name, format!("{} expects {} argument(s), got {}", g.name, nq, g.args.len()));
                    }
                    let is_circuit = program.circuit_def(&g.name).is_some();
                    let mut qs = BTreeSet::new();
                    for a in &g.args {
                        match a {
                            Argument::Qubit(q) => {
                                if !qs.insert(format!("{q}")) {
                                    return fail(&g.name, format!("{} repeats qubit {}", g.name, q));
                                }
                            }
                            Argument::Name(n) if formals.contains(n) => {
                                if !qs.insert(n.clone()) {
                                    return fail(&g.name, format!("{} repeats qubit {}", g.name, n));
                                }
                            }
                            Argument::Name(n) if is_circuit => mem_ok(&MemoryRef::new(n.clone(), None))?,
                            Argument::Memory(m) if is_circuit => mem_ok(m)?,
                            other => return fail(&g.name, format!("{} needs qubit arguments, got {}", g.name, other)),
                        }
                    }
                    for p in &g.params {
                        for v in p.variables() {
                            if let Some(f) = v.strip_prefix('%') {
                                if !params.iter().any(|p| p == f) {
                                    return fail(&g.name, format!("unbound parameter %{f}"));
                                }
                                continue;
                            }
                            let base = v.split('[').next().unwrap_or(v);
                            match program.declaration(base) {
                                Some(d) if d.kind == MemoryKind::Real => {}
                                Some(_) => return fail(base, format!("{base} is not a REAL region")),
                                None => return fail(base, format!("reference to undeclared memory region {base}")),
                            }
                        }
                    }
                }
                Instruction::Measure { qubit, target } => {
                    if let Argument::Name(n) = qubit {
                        if !formals.contains(n) {
                            return fail(n, format!("unknown qubit {n}"));
                        }
                    }
                    if let Some(t) = target {
                        mem_ok(t)?;
                    }
                }
                Instruction::Jump(l) => {
                    if !labels.contains(l) {
                        return fail(l, format!("jump to undefined label @{l}"));
                    }
                }
                Instruction::JumpWhen { label, condition } | Instruction::JumpUnless { label, condition } => {
                    if !labels.contains(label) {
                        return fail(label, format!("jump to undefined label @{label}"));
                    }
                    mem_ok(condition)?;
                }
                Instruction::Label(_) | Instruction::Pragma(_) => {}
            }
        }
        Ok(())
    };
    for d in &program.circuit_defs {
        check_body(&d.body, &d.formals, &d.params)?;
    }
    check_body(&program.body, &[], &[])?;
    let mut labels = BTreeSet::new();
    for ins in &program.body {
        if let Instruction::Label(l) = ins {
            if !labels.insert(l) {
                return fail(l, format!("label @{l} defined twice"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_gates() {
        let p = parse_program("H 0\nCNOT 0 1\nRZ(pi/2) 1\n").unwrap();
        assert_eq!(p.body.len(), 3);
        assert_eq!(p.to_string(), "H 0\nCNOT 0 1\nRZ(pi/2) 1\n");
    }

    #[test]
    fn parses_declarations_and_symbolic_parameters() {
        let p = parse_program("DECLARE a REAL\nRZ(a) 0\nRZ(0.5*a) 0\n").unwrap();
        assert_eq!(p.declarations[0].kind, MemoryKind::Real);
        assert_eq!(p.to_string(), "DECLARE a REAL\nRZ(a) 0\nRZ(a/2) 0\n");
    }

    #[test]
    fn parses_control_flow_and_comments() {
        let src = "DECLARE ro BIT[2]  # two bits\nLABEL @top\nMEASURE 0 ro[1]\nJUMP-UNLESS @top ro[1]\nJUMP-WHEN @top ro\nJUMP @top\nPRAGMA INITIAL_REWIRING \"NAIVE\"\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.body.len(), 6);
        assert_eq!(
            p.body[2],
            Instruction::JumpUnless {
                label: "top".into(),
                condition: MemoryRef::new("ro", Some(1))
            }
        );
        assert_eq!(p.body[5], Instruction::Pragma("INITIAL_REWIRING \"NAIVE\"".into()));
    }

    #[test]
    fn parses_defgate_with_complex_entries() {
        let src = "DEFGATE SQX:\n    0.5+0.5i, 0.5-0.5i\n    0.5-0.5i, 0.5+0.5i\nDEFGATE P(%t):\n    1, 0\n    0, cis(%t)\nSQX 0\nP(pi) 1\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.gate_defs.len(), 2);
        assert_eq!(p.gate_defs[1].params, vec!["t".to_string()]);
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(again.body, p.body);
    }

    #[test]
    fn rejects_builtin_shadowing() {
        let err = parse_program("DEFGATE H:\n    1, 0\n    0, 1\n").unwrap_err();
        assert!(err.message.contains("shadows"));
    }

    #[test]
    fn rejects_undeclared_memory() {
        let err = parse_program("RZ(theta) 0\n").unwrap_err();
        assert!(err.message.contains("undeclared"), "{err}");
        let err = parse_program("MEASURE 0 ro[0]\n").unwrap_err();
        assert!(err.message.contains("undeclared"), "{err}");
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_program("H 0\nRZ(1 +) 0\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column > 1);
    }

    #[test]
    fn rejects_wrong_arity_and_repeated_qubits() {
        assert!(parse_program("CNOT 0\n").is_err());
        assert!(parse_program("CNOT 1 1\n").is_err());
        assert!(parse_program("RX 0\n").is_err());
        assert!(parse_program("FOO 0\n").is_err());
        assert!(parse_program("RESET 0\n").is_err());
    }

    #[test]
    fn parses_defcircuit() {
        let src = "DECLARE s BIT\nDEFCIRCUIT RESET q scratch:\n    MEASURE q scratch\n    JUMP-UNLESS @done scratch\n    X q\n    LABEL @done\nRESET 3 s\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.circuit_defs[0].formals, vec!["q".to_string(), "scratch".to_string()]);
        assert_eq!(p.circuit_defs[0].body.len(), 4);
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn scientific_and_fractional_numbers() {
        let p = parse_program("RX(1e-3) 0\nRX(.5) 0\n").unwrap();
        assert_eq!(p.to_string(), "RX(0.001) 0\nRX(0.5) 0\n");
    }
}
