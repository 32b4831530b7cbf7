//! Gate-level circuits: the QASM subset parser, a serializer, and the
//! benchmark circuit families.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rz,
    Cnot,
    X,
    Z,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    /// Pauli gates are tracked in software on hardware; they still carry a
    /// phase in the ZX translation so that semantic checks stay exact.
    pub fn is_software_only(self) -> bool {
        matches!(self, GateKind::X | GateKind::Z)
    }

    fn qasm_name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cx",
            GateKind::X => "x",
            GateKind::Z => "z",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// Rotation angle in radians, `Some` exactly for `Rz`.
    pub angle: Option<f64>,
}

impl Gate {
    pub fn single(kind: GateKind, q: usize) -> Self {
        assert!(kind.arity() == 1 && kind != GateKind::Rz);
        Gate {
            kind,
            qubits: vec![q],
            angle: None,
        }
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Gate {
            kind: GateKind::Rz,
            qubits: vec![q],
            angle: Some(angle),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            angle: None,
        }
    }

    pub fn h(q: usize) -> Self {
        Gate::single(GateKind::H, q)
    }

    /// Z-rotation phase this gate contributes, for the diagonal gates.
    pub fn z_phase(&self) -> Option<f64> {
        match self.kind {
            GateKind::S => Some(PI / 2.0),
            GateKind::Sdg => Some(-PI / 2.0),
            GateKind::T => Some(PI / 4.0),
            GateKind::Tdg => Some(-PI / 4.0),
            GateKind::Rz => self.angle,
            GateKind::Z => Some(PI),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn with_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Circuit { num_qubits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        check_gate(&gate, self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::InvalidCircuit(
                "circuit needs at least one qubit".into(),
            ));
        }
        for g in &self.gates {
            check_gate(g, self.num_qubits)?;
        }
        Ok(())
    }

    /// As-soon-as-possible layering: `moments()[d]` lists the gate indices
    /// executed at depth `d`.
    pub fn moments(&self) -> Vec<Vec<usize>> {
        let mut frontier = vec![0usize; self.num_qubits];
        let mut moments: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let d = g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            for &q in &g.qubits {
                frontier[q] = d + 1;
            }
            if moments.len() <= d {
                moments.resize_with(d + 1, Vec::new);
            }
            moments[d].push(i);
        }
        moments
    }

    pub fn depth(&self) -> usize {
        self.moments().len()
    }

    /// Sub-circuit made of the gates whose moment lies in `range`.
    pub fn slice_moments(&self, range: std::ops::Range<usize>) -> Circuit {
        let moments = self.moments();
        let mut idx: Vec<usize> = moments
            [range.start.min(moments.len())..range.end.min(moments.len())]
            .iter()
            .flatten()
            .copied()
            .collect();
        idx.sort_unstable();
        Circuit {
            num_qubits: self.num_qubits,
            gates: idx.into_iter().map(|i| self.gates[i].clone()).collect(),
        }
    }

    pub fn to_qasm(&self) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        out.push_str(&format!("qreg q[{}];\n", self.num_qubits));
        for g in &self.gates {
            match g.kind {
                GateKind::Cnot => {
                    out.push_str(&format!("cx q[{}],q[{}];\n", g.qubits[0], g.qubits[1]))
                }
                GateKind::Rz => out.push_str(&format!(
                    "rz({:?}) q[{}];\n",
                    g.angle.unwrap_or(0.0),
                    g.qubits[0]
                )),
                k => out.push_str(&format!("{} q[{}];\n", k.qasm_name(), g.qubits[0])),
            }
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_qasm())
    }
}

fn check_gate(g: &Gate, n: usize) -> Result<()> {
    if g.qubits.len() != g.kind.arity() {
        return Err(Error::InvalidCircuit(format!(
            "{:?} expects {} qubit(s), got {}",
            g.kind,
            g.kind.arity(),
            g.qubits.len()
        )));
    }
    if let Some(&q) = g.qubits.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidCircuit(format!(
            "qubit index {q} out of range for {n} qubits"
        )));
    }
    if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
        return Err(Error::InvalidCircuit(format!(
            "duplicate qubit {} in two-qubit gate",
            g.qubits[0]
        )));
    }
    match (g.kind, g.angle) {
        (GateKind::Rz, Some(a)) if a.is_finite() => Ok(()),
        (GateKind::Rz, _) => Err(Error::InvalidCircuit("rz needs a finite angle".into())),
        (_, None) => Ok(()),
        (k, Some(_)) => Err(Error::InvalidCircuit(format!("{k:?} takes no angle"))),
    }
}

// ---------------------------------------------------------------------------
// QASM subset parser

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while let Some(c) = self.bump() {
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.bump();
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            _ => Err(self.err(format!("expected '{}'", c as char))),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err("expected integer"))
    }

    /// Skip to the next ';' (inclusive).
    fn skip_statement(&mut self) -> Result<()> {
        while let Some(c) = self.bump() {
            if c == b';' {
                return Ok(());
            }
        }
        Err(self.err("unterminated statement"))
    }

    // float-expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.bump();
                    v += self.term()?;
                }
                Some(b'-') => {
                    self.bump();
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.bump();
                    v *= self.factor()?;
                }
                Some(b'/') => {
                    self.bump();
                    let d = self.factor()?;
                    if d == 0.0 {
                        return Err(self.err("division by zero in angle"));
                    }
                    v /= d;
                }
                _ => return Ok(v),
            }
        }
    }

    fn factor(&mut self) -> Result<f64> {
        self.skip_ws();
        match self.peek() {
            Some(b'-') => {
                self.bump();
                Ok(-self.factor()?)
            }
            Some(b'+') => {
                self.bump();
                self.factor()
            }
            Some(b'(') => {
                self.bump();
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
                    self.bump();
                }
                if matches!(self.peek(), Some(b'e') | Some(b'E')) {
                    self.bump();
                    if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                        self.bump();
                    }
                    while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        self.bump();
                    }
                }
                std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| self.err("malformed number"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let id = self.ident()?;
                if id == "pi" {
                    Ok(PI)
                } else {
                    Err(self.err(format!("unknown symbol '{id}' in angle")))
                }
            }
            _ => Err(self.err("expected angle expression")),
        }
    }
}

/// Parse the supported QASM-2 subset: one `qreg`, the gates
/// `h s sdg t tdg x z rz cx`, `//` comments, header lines ignored.
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let mut lx = Lexer::new(text);
    let mut reg: Option<(String, usize)> = None;
    let mut gates = Vec::new();

    while !lx.at_end() {
        let (line, col) = (lx.line, lx.col);
        let word = lx.ident()?;
        match word.as_str() {
            "OPENQASM" | "include" => lx.skip_statement()?,
            "qreg" => {
                if reg.is_some() {
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: "only one qreg is supported".into(),
                    });
                }
                let name = lx.ident()?;
                lx.expect(b'[')?;
                let n = lx.integer()?;
                lx.expect(b']')?;
                lx.expect(b';')?;
                if n == 0 {
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: "qreg must have at least one qubit".into(),
                    });
                }
                reg = Some((name, n));
            }
            "measure" | "reset" | "if" | "creg" | "barrier" | "gate" | "opaque" => {
                return Err(Error::Unsupported {
                    line,
                    col,
                    what: word,
                });
            }
            _ => {
                let kind = match word.as_str() {
                    "h" => GateKind::H,
                    "s" => GateKind::S,
                    "sdg" => GateKind::Sdg,
                    "t" => GateKind::T,
                    "tdg" => GateKind::Tdg,
                    "x" => GateKind::X,
                    "z" => GateKind::Z,
                    "rz" => GateKind::Rz,
                    "cx" | "CX" => GateKind::Cnot,
                    _ => {
                        return Err(Error::Unsupported {
                            line,
                            col,
                            what: word,
                        })
                    }
                };
                let (rname, n) = reg.clone().ok_or(Error::Parse {
                    line,
                    col,
                    msg: "gate before qreg declaration".into(),
                })?;
                let angle = if kind == GateKind::Rz {
                    lx.expect(b'(')?;
                    let a = lx.expr()?;
                    lx.expect(b')')?;
                    Some(a)
                } else {
                    None
                };
                let mut qubits = Vec::new();
                for i in 0..kind.arity() {
                    if i > 0 {
                        lx.expect(b',')?;
                    }
                    let (l, c) = (lx.line, lx.col);
                    let r = lx.ident()?;
                    if r != rname {
                        return Err(Error::Parse {
                            line: l,
                            col: c,
                            msg: format!("unknown register '{r}'"),
                        });
                    }
                    lx.expect(b'[')?;
                    let q = lx.integer()?;
                    lx.expect(b']')?;
                    if q >= n {
                        return Err(Error::Parse {
                            line: l,
                            col: c,
                            msg: format!("qubit index {q} out of range for {n} qubits"),
                        });
                    }
                    qubits.push(q);
                }
                lx.expect(b';')?;
                if qubits.len() == 2 && qubits[0] == qubits[1] {
                    return Err(Error::Parse {
                        line,
                        col,
                        msg: format!("duplicate qubit {}", qubits[0]),
                    });
                }
                gates.push(Gate {
                    kind,
                    qubits,
                    angle,
                });
            }
        }
    }
    let (_, n) = reg.ok_or(Error::Parse {
        line: lx.line,
        col: lx.col,
        msg: "missing qreg".into(),
    })?;
    Circuit::with_gates(n, gates)
}

// ---------------------------------------------------------------------------
// Benchmark families

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Ghz,
    Ladder,
    Bv,
    Dj,
    RandomClifford,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz" => Ok(Family::Ghz),
            "ladder" => Ok(Family::Ladder),
            "bv" => Ok(Family::Bv),
            "dj" => Ok(Family::Dj),
            "random_clifford" | "clifford" => Ok(Family::RandomClifford),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ghz => "ghz",
            Family::Ladder => "ladder",
            Family::Bv => "bv",
            Family::Dj => "dj",
            Family::RandomClifford => "random_clifford",
        })
    }
}

/// Build a benchmark circuit. BV uses the all-ones hidden string and DJ the
/// constant-zero oracle; the last qubit is the oracle ancilla.
pub fn generate_benchmark(family: Family, n: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidCircuit(format!(
            "benchmark size must be >= 2, got {n}"
        )));
    }
    let mut c = Circuit::new(n);
    let anc = n - 1;
    match family {
        Family::Ghz => {
            c.push(Gate::h(0))?;
            for q in 0..n - 1 {
                c.push(Gate::cnot(q, q + 1))?;
            }
        }
        Family::Ladder => {
            for q in 0..n - 1 {
                c.push(Gate::cnot(q, q + 1))?;
            }
        }
        Family::Bv | Family::Dj => {
            c.push(Gate::single(GateKind::X, anc))?;
            for q in 0..n {
                c.push(Gate::h(q))?;
            }
            if family == Family::Bv {
                for q in 0..anc {
                    c.push(Gate::cnot(q, anc))?;
                }
            }
            for q in 0..anc {
                c.push(Gate::h(q))?;
            }
        }
        Family::RandomClifford => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..3 * n {
                match rng.gen_range(0..3) {
                    0 => c.push(Gate::h(rng.gen_range(0..n)))?,
                    1 => c.push(Gate::single(GateKind::S, rng.gen_range(0..n)))?,
                    _ => {
                        let a = rng.gen_range(0..n);
                        let b = (a + rng.gen_range(1..n)) % n;
                        c.push(Gate::cnot(a, b))?;
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Random circuit over {H, S, T, Rz, CNOT, X, Z}, used by the
/// semantic-equivalence suites.
pub fn random_circuit(num_qubits: usize, num_gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(num_qubits);
    for _ in 0..num_gates {
        let q = rng.gen_range(0..num_qubits);
        let pick = if num_qubits > 1 {
            rng.gen_range(0..7)
        } else {
            rng.gen_range(0..6)
        };
        let g = match pick {
            0 => Gate::h(q),
            1 => Gate::single(GateKind::S, q),
            2 => Gate::single(GateKind::T, q),
            3 => Gate::rz(q, rng.gen_range(-PI..PI)),
            4 => Gate::single(GateKind::X, q),
            5 => Gate::single(GateKind::Z, q),
            _ => Gate::cnot(q, (q + rng.gen_range(1..num_qubits)) % num_qubits),
        };
        c.gates.push(g);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let c = parse_qasm("qreg q[2]; cx q[0],q[1];").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.gates, vec![Gate::cnot(0, 1)]);
    }

    #[test]
    fn duplicate_qubit_rejected() {
        let err = parse_qasm("qreg q[2];\ncx q[0],q[0];").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn out_of_range_and_unsupported() {
        assert!(parse_qasm("qreg q[2]; h q[2];").is_err());
        assert!(matches!(
            parse_qasm("qreg q[1]; measure q[0];"),
            Err(Error::Unsupported { .. })
        ));
        assert!(matches!(
            parse_qasm("qreg q[1]; ccx q[0];"),
            Err(Error::Unsupported { .. })
        ));
        let e = parse_qasm("qreg q[1];\n  h q[0]\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn header_comments_and_angles() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n// comment\nqreg q[3];\n\
                   rz(pi/4) q[1]; rz(-2*pi/3 + 0.5) q[2];\nsdg q[0]; tdg q[0]; x q[1]; z q[2];";
        let c = parse_qasm(src).unwrap();
        assert_eq!(c.gates.len(), 6);
        assert!((c.gates[0].angle.unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((c.gates[1].angle.unwrap() - (-2.0 * PI / 3.0 + 0.5)).abs() < 1e-15);
        assert!(c.gates[4].kind.is_software_only());
    }

    #[test]
    fn ghz_shape() {
        let c = generate_benchmark(Family::Ghz, 3, 0).unwrap();
        assert_eq!(
            c.gates,
            vec![Gate::h(0), Gate::cnot(0, 1), Gate::cnot(1, 2)]
        );
        let c16 = generate_benchmark(Family::Ghz, 16, 0).unwrap();
        assert_eq!(c16.gates.len(), 16);
        assert_eq!(c16.depth(), 16);
    }

    #[test]
    fn ladder_shape() {
        let c = generate_benchmark(Family::Ladder, 5, 0).unwrap();
        assert_eq!(c.gates.len(), 4);
        for (i, g) in c.gates.iter().enumerate() {
            assert_eq!(g, &Gate::cnot(i, i + 1));
        }
    }

    #[test]
    fn benchmark_errors() {
        assert!(generate_benchmark(Family::Ghz, 1, 0).is_err());
        assert!("qft".parse::<Family>().is_err());
    }

    #[test]
    fn random_clifford_is_seeded() {
        let a = generate_benchmark(Family::RandomClifford, 6, 7).unwrap();
        let b = generate_benchmark(Family::RandomClifford, 6, 7).unwrap();
        let c = generate_benchmark(Family::RandomClifford, 6, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a
            .gates
            .iter()
            .all(|g| matches!(g.kind, GateKind::H | GateKind::S | GateKind::Cnot)));
    }

    #[test]
    fn moments_are_asap() {
        let c = Circuit::with_gates(
            3,
            vec![Gate::h(0), Gate::h(2), Gate::cnot(0, 1), Gate::cnot(1, 2)],
        )
        .unwrap();
        assert_eq!(c.moments(), vec![vec![0, 1], vec![2], vec![3]]);
        assert_eq!(
            c.slice_moments(1..3).gates,
            vec![Gate::cnot(0, 1), Gate::cnot(1, 2)]
        );
    }

    proptest::proptest! {
        #[test]
        fn qasm_round_trip(n in 1usize..5, len in 0usize..20, seed in 0u64..1000) {
            let c = random_circuit(n, len, seed);
            let back = parse_qasm(&c.to_qasm()).unwrap();
            proptest::prop_assert_eq!(back, c);
        }

        #[test]
        fn ghz_depth_is_n(n in 2usize..40) {
            proptest::prop_assert_eq!(generate_benchmark(Family::Ghz, n, 0).unwrap().depth(), n);
        }
    }
}
