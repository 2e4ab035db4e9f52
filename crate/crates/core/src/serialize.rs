//! JSON and OpenQASM 2.0 forms of [`Circuit`].
//!
//! Both emitters write angles with 17 significant digits, which pins every
//! `f64` exactly; parsing the emitted text reproduces the circuit bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::circuit::{Circuit, EncodingClass, GateKind, Instruction};
use crate::error::{CircuitError, ParseError};

/// `f64` in scientific notation with 17 significant digits.
pub fn format_angle(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

/// Canonical JSON text: one instruction per line.
pub fn emit_json(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"n_qubits\": {},", c.n_qubits());
    match c.label {
        Some(l) => {
            let _ = writeln!(out, "  \"label\": {},", json_string(l.name()));
        }
        None => out.push_str("  \"label\": null,\n"),
    }
    out.push_str("  \"meta\": {");
    for (i, (k, v)) in c.meta.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}: {}", json_string(k), json_string(v));
    }
    out.push_str("},\n");
    out.push_str("  \"instructions\": [");
    for (i, inst) in c.instructions().iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let qubits: Vec<String> = inst.qubits.iter().map(|q| q.to_string()).collect();
        let params: Vec<String> = inst.params.iter().map(|&p| format_angle(p)).collect();
        let _ = write!(
            out,
            "    {{\"kind\": \"{}\", \"qubits\": [{}], \"params\": [{}]}}",
            inst.kind.name(),
            qubits.join(", "),
            params.join(", ")
        );
    }
    if !c.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    n_qubits: usize,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    instructions: Vec<RawInstruction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstruction {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
}

pub fn parse_json(text: &str) -> Result<Circuit, ParseError> {
    let raw: RawCircuit = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.n_qubits == 0 {
        return Err(ParseError::Field {
            field: "n_qubits",
            source: CircuitError::ZeroQubits,
        });
    }
    let mut c = Circuit::new(raw.n_qubits);
    c.label = raw
        .label
        .as_deref()
        .map(str::parse::<EncodingClass>)
        .transpose()
        .map_err(|source| ParseError::Field {
            field: "label",
            source,
        })?;
    c.meta = raw.meta;
    for (index, ri) in raw.instructions.into_iter().enumerate() {
        let kind: GateKind = ri.kind.parse().map_err(|source| ParseError::Instruction {
            index,
            field: "kind",
            source,
        })?;
        let inst = Instruction::new(kind, ri.qubits, ri.params);
        c.push(inst).map_err(|source| {
            let field = match source {
                CircuitError::ParamCount { .. } => "params",
                _ => "qubits",
            };
            ParseError::Instruction {
                index,
                field,
                source,
            }
        })?;
    }
    Ok(c)
}

/// OpenQASM 2.0 text over a single register `q`.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", c.n_qubits());
    for inst in c.instructions() {
        out.push_str(inst.kind.qasm_name());
        if !inst.params.is_empty() {
            let ps: Vec<String> = inst.params.iter().map(|&p| format_angle(p)).collect();
            let _ = write!(out, "({})", ps.join(","));
        }
        let qs: Vec<String> = inst.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let _ = writeln!(out, " {};", qs.join(","));
    }
    out
}

/// Parses the subset written by [`emit_qasm`]. Parameter expressions may use
/// numbers, `pi`, unary minus, `+ - * /` and parentheses.
pub fn parse_qasm(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    let mut saw_header = false;
    for (lineno, raw_line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match raw_line.find("//") {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        for stmt in line.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let qasm_err = |message: String| ParseError::Qasm {
                line: line_no,
                message,
            };
            if let Some(rest) = stmt.strip_prefix("OPENQASM") {
                if rest.trim() != "2.0" {
                    return Err(qasm_err(format!("unsupported version `{}`", rest.trim())));
                }
                saw_header = true;
                continue;
            }
            if !saw_header {
                return Err(qasm_err("missing `OPENQASM 2.0;` header".into()));
            }
            if let Some(rest) = stmt.strip_prefix("include") {
                if rest.trim() != "\"qelib1.inc\"" {
                    return Err(qasm_err(format!("unsupported include {}", rest.trim())));
                }
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("qreg") {
                if circuit.is_some() {
                    return Err(qasm_err("only one quantum register is supported".into()));
                }
                let n = parse_register_decl(rest.trim())
                    .ok_or_else(|| qasm_err(format!("malformed register declaration `{stmt}`")))?;
                if n == 0 {
                    return Err(qasm_err("register must have at least one qubit".into()));
                }
                circuit = Some(Circuit::new(n));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| qasm_err("gate before `qreg q[n];`".into()))?;
            let inst = parse_gate_statement(stmt, line_no)?;
            c.push(inst).map_err(|e| qasm_err(e.to_string()))?;
        }
    }
    circuit.ok_or(ParseError::Qasm {
        line: text.lines().count(),
        message: "no `qreg q[n];` declaration".into(),
    })
}

fn parse_register_decl(s: &str) -> Option<usize> {
    let inner = s.strip_prefix("q[")?.strip_suffix(']')?;
    inner.trim().parse().ok()
}

fn parse_gate_statement(stmt: &str, line: usize) -> Result<Instruction, ParseError> {
    let name_end = stmt
        .find(|ch: char| ch == '(' || ch.is_whitespace())
        .unwrap_or(stmt.len());
    let name = &stmt[..name_end];
    let kind = GateKind::from_qasm_name(name).ok_or_else(|| ParseError::UnsupportedGate {
        line,
        name: name.to_string(),
    })?;
    let mut rest = stmt[name_end..].trim_start();
    let mut params = Vec::new();
    if rest.starts_with('(') {
        let close = matching_paren(rest).ok_or_else(|| ParseError::Qasm {
            line,
            message: "unbalanced parentheses".into(),
        })?;
        for expr in split_top_level(&rest[1..close]) {
            let v = eval_expr(expr).map_err(|message| ParseError::Qasm { line, message })?;
            params.push(v);
        }
        rest = rest[close + 1..].trim_start();
    }
    let mut qubits = Vec::new();
    for operand in rest.split(',').map(str::trim) {
        let q = parse_register_decl(operand).ok_or_else(|| ParseError::Qasm {
            line,
            message: format!("malformed operand `{operand}`"),
        })?;
        qubits.push(q);
    }
    Ok(Instruction::new(kind, qubits, params))
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

/// Recursive-descent evaluator for QASM parameter expressions.
fn eval_expr(s: &str) -> Result<f64, String> {
    struct P<'a> {
        s: &'a [u8],
        pos: usize,
    }
    impl P<'_> {
        fn ws(&mut self) {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.ws();
            self.s.get(self.pos).copied()
        }
        fn sum(&mut self) -> Result<f64, String> {
            let mut v = self.product()?;
            while let Some(op @ (b'+' | b'-')) = self.peek() {
                self.pos += 1;
                let r = self.product()?;
                v = if op == b'+' { v + r } else { v - r };
            }
            Ok(v)
        }
        fn product(&mut self) -> Result<f64, String> {
            let mut v = self.unary()?;
            while let Some(op @ (b'*' | b'/')) = self.peek() {
                self.pos += 1;
                let r = self.unary()?;
                v = if op == b'*' { v * r } else { v / r };
            }
            Ok(v)
        }
        fn unary(&mut self) -> Result<f64, String> {
            match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    Ok(-self.unary()?)
                }
                Some(b'+') => {
                    self.pos += 1;
                    self.unary()
                }
                _ => self.atom(),
            }
        }
        fn atom(&mut self) -> Result<f64, String> {
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let v = self.sum()?;
                    if self.peek() != Some(b')') {
                        return Err("expected `)`".into());
                    }
                    self.pos += 1;
                    Ok(v)
                }
                Some(b'p') if self.s[self.pos..].starts_with(b"pi") => {
                    self.pos += 2;
                    Ok(std::f64::consts::PI)
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let start = self.pos;
                    while self.pos < self.s.len() {
                        let c = self.s[self.pos];
                        let exp_sign = (c == b'+' || c == b'-')
                            && self.pos > start
                            && matches!(self.s[self.pos - 1], b'e' | b'E');
                        if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let lit = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                    lit.parse::<f64>()
                        .map_err(|_| format!("malformed number `{lit}`"))
                }
                Some(c) => Err(format!("unexpected `{}` in expression", c as char)),
                None => Err("empty expression".into()),
            }
        }
    }
    let mut p = P {
        s: s.as_bytes(),
        pos: 0,
    };
    let v = p.sum()?;
    if p.peek().is_some() {
        return Err(format!("trailing input in expression `{s}`"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> Circuit {
        let mut c = Circuit::new(3).with_label(EncodingClass::AngleRZ);
        c.meta.insert("seed".into(), "42".into());
        c.rz(0, 0.1 + 0.2)
            .sx(1)
            .cx(0, 2)
            .rx(2, -PI / 3.0)
            .barrier_all();
        c
    }

    #[test]
    fn json_canonical_round_trip() {
        let text = emit_json(&sample());
        let back = parse_json(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(emit_json(&back), text);
    }

    #[test]
    fn empty_circuit_json() {
        let c = Circuit::new(2);
        let text = emit_json(&c);
        assert_eq!(parse_json(&text).unwrap(), c);
    }

    #[test]
    fn json_rejects_duplicate_operand() {
        let t = r#"{"n_qubits": 2, "label": null, "meta": {}, "instructions": [{"kind":"CX","qubits":[0,0]}]}"#;
        let err = parse_json(t).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Instruction {
                index: 0,
                field: "qubits",
                source: CircuitError::DuplicateOperand { .. }
            }
        ));
    }

    #[test]
    fn json_rejects_missing_param() {
        let t = r#"{"n_qubits": 1, "label": null, "meta": {}, "instructions": [{"kind":"RZ","qubits":[0],"params":[]}]}"#;
        let err = parse_json(t).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Instruction {
                field: "params",
                source: CircuitError::ParamCount { .. },
                ..
            }
        ));
    }

    #[test]
    fn json_syntax_error_carries_position() {
        let err = parse_json("{\n  \"n_qubits\": 2,\n  oops\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_rejects_out_of_range_and_bad_label() {
        let t = r#"{"n_qubits": 2, "label": null, "meta": {}, "instructions": [{"kind":"X","qubits":[2]}]}"#;
        assert!(parse_json(t).is_err());
        let t = r#"{"n_qubits": 2, "label": "Dense", "meta": {}, "instructions": []}"#;
        assert!(matches!(
            parse_json(t),
            Err(ParseError::Field { field: "label", .. })
        ));
    }

    #[test]
    fn qasm_round_trip() {
        let mut c = sample();
        c.label = None;
        c.meta.clear();
        let text = emit_qasm(&c);
        assert!(text.starts_with("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n"));
        assert_eq!(parse_qasm(&text).unwrap(), c);
    }

    #[test]
    fn qasm_rejects_unsupported() {
        let t = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncz q[0],q[1];\n";
        assert!(matches!(
            parse_qasm(t),
            Err(ParseError::UnsupportedGate { line: 4, .. })
        ));
        let t = "OPENQASM 2.0;\ninclude \"other.inc\";\nqreg q[2];\n";
        assert!(parse_qasm(t).is_err());
    }

    #[test]
    fn qasm_expressions() {
        let t = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nrz(-pi/2) q[0];\nrx(2*(pi+1)) q[0];\nry(1e-3) q[0];\n";
        let c = parse_qasm(t).unwrap();
        assert_eq!(c.instructions()[0].params[0], -PI / 2.0);
        assert_eq!(c.instructions()[1].params[0], 2.0 * (PI + 1.0));
        assert_eq!(c.instructions()[2].params[0], 1e-3);
    }
}
