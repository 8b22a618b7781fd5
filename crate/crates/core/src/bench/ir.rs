//! Three-wire circuit IR and its line-oriented text form.
//!
//! One gate per line, `GATE wire[,wire] [param]`:
//!
//! ```text
//! H p
//! P p 0.5
//! CZ p,P
//! CNOT P,p            # control, target
//! U2 M re00,im00,re01,im01,re10,im10,re11,im11
//! CU0 p,P <8 numbers> # matrix applied when control = 0
//! CU1 p,P <8 numbers> # matrix applied when control = 1
//! ```

use std::fmt;

use super::{Diagnostic, DiagnosticKind};
use crate::state::{
    controlled, controlled_on, hadamard_matrix, lift_matrix, mat2, phase_matrix, Gate2, Mat2, Operator8, Pauli, Wire,
    C64, EXACT_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(Wire),
    Phase { wire: Wire, phi: f64 },
    Cz(Wire, Wire),
    Cnot { control: Wire, target: Wire },
    U2 { wire: Wire, matrix: Mat2 },
    Cu { control: Wire, value: u8, target: Wire, matrix: Mat2 },
}

impl Gate {
    pub fn wires(&self) -> Vec<Wire> {
        match *self {
            Gate::H(w) | Gate::Phase { wire: w, .. } | Gate::U2 { wire: w, .. } => vec![w],
            Gate::Cz(a, b) => vec![a, b],
            Gate::Cnot { control, target } | Gate::Cu { control, target, .. } => vec![control, target],
        }
    }

    pub fn touches(&self, w: Wire) -> bool {
        self.wires().contains(&w)
    }

    fn check(&self) -> Result<(), String> {
        let w = self.wires();
        if w.len() == 2 && w[0] == w[1] {
            return Err(format!("two-wire gate uses wire {} twice", w[0]));
        }
        match self {
            Gate::U2 { matrix, .. } | Gate::Cu { matrix, .. } if !mat2::is_unitary(matrix, EXACT_TOL) => {
                Err("matrix is not unitary".into())
            }
            Gate::Cu { value, .. } if *value > 1 => Err("control value must be 0 or 1".into()),
            Gate::Phase { phi, .. } if !phi.is_finite() => Err("phase must be finite".into()),
            _ => Ok(()),
        }
    }

    pub fn operator(&self) -> Operator8 {
        match *self {
            Gate::H(w) => lift_matrix(&hadamard_matrix(), w),
            Gate::Phase { wire, phi } => lift_matrix(&phase_matrix(phi), wire),
            Gate::U2 { wire, matrix } => lift_matrix(&matrix, wire),
            Gate::Cz(a, b) => controlled(a, &Gate2::pauli(Pauli::Z, b)).expect("validated wires"),
            Gate::Cnot { control, target } => {
                controlled(control, &Gate2::pauli(Pauli::X, target)).expect("validated wires")
            }
            Gate::Cu { control, value, target, matrix } => {
                controlled_on(control, value, &Gate2::new_unchecked(matrix, target)).expect("validated gate")
            }
        }
    }

    /// Structural equality with matrices compared to within `tol`.
    pub fn approx_eq(&self, other: &Gate, tol: f64) -> bool {
        match (self, other) {
            (Gate::Phase { wire: a, phi: x }, Gate::Phase { wire: b, phi: y }) => a == b && (x - y).abs() <= tol,
            (Gate::U2 { wire: a, matrix: m }, Gate::U2 { wire: b, matrix: n }) => {
                a == b && mat2::max_abs_diff(m, n) <= tol
            }
            (
                Gate::Cu { control: c1, value: v1, target: t1, matrix: m },
                Gate::Cu { control: c2, value: v2, target: t2, matrix: n },
            ) => c1 == c2 && v1 == v2 && t1 == t2 && mat2::max_abs_diff(m, n) <= tol,
            _ => self == other,
        }
    }
}

fn write_matrix(f: &mut fmt::Formatter<'_>, m: &Mat2) -> fmt::Result {
    let mut sep = "";
    for row in m {
        for e in row {
            write!(f, "{sep}{},{}", e.re, e.im)?;
            sep = ",";
        }
    }
    Ok(())
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(w) => write!(f, "H {w}"),
            Gate::Phase { wire, phi } => write!(f, "P {wire} {phi}"),
            Gate::Cz(a, b) => write!(f, "CZ {a},{b}"),
            Gate::Cnot { control, target } => write!(f, "CNOT {control},{target}"),
            Gate::U2 { wire, matrix } => {
                write!(f, "U2 {wire} ")?;
                write_matrix(f, matrix)
            }
            Gate::Cu { control, value, target, matrix } => {
                write!(f, "CU{value} {control},{target} ")?;
                write_matrix(f, matrix)
            }
        }
    }
}

/// Ordered gate list; the first gate is applied first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitIR {
    gates: Vec<Gate>,
}

impl CircuitIR {
    pub fn new(gates: Vec<Gate>) -> Result<Self, String> {
        for (i, g) in gates.iter().enumerate() {
            g.check().map_err(|e| format!("gate {i} ({g}): {e}"))?;
        }
        Ok(Self { gates })
    }

    pub(crate) fn from_gates_unchecked(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Composed unitary G_n ⋯ G_1.
    pub fn unitary(&self) -> Operator8 {
        let ops: Vec<Operator8> = self.gates.iter().map(Gate::operator).collect();
        Operator8::sequence(&ops)
    }

    pub fn approx_eq(&self, other: &CircuitIR, tol: f64) -> bool {
        self.len() == other.len() && self.gates.iter().zip(&other.gates).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Parses the text form produced by `Display`. Blank lines and `#`
    /// comments are ignored.
    pub fn parse_dump(text: &str) -> Result<Self, Diagnostic> {
        let mut gates = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let col = raw.len() - raw.trim_start().len() + 1;
            let err = |msg: String| Diagnostic::new(DiagnosticKind::Syntax, ln + 1, col, msg);
            let fields: Vec<&str> = line.split_whitespace().collect();
            let wires: Vec<Wire> = fields
                .get(1)
                .ok_or_else(|| err("missing wire list".into()))?
                .split(',')
                .map(|w| w.parse::<Wire>())
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let want_wires = |n: usize| {
                if wires.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {n} wire(s), got {}", fields[0], wires.len())))
                }
            };
            let param = |idx: usize| fields.get(idx).copied().ok_or_else(|| err("missing parameter".into()));
            let parse_matrix = |s: &str| -> Result<Mat2, Diagnostic> {
                let nums: Vec<f64> = s
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(format!("bad matrix entry: {e}")))?;
                if nums.len() != 8 {
                    return Err(err(format!("matrix needs 8 numbers, got {}", nums.len())));
                }
                let c = |k: usize| C64::new(nums[2 * k], nums[2 * k + 1]);
                Ok([[c(0), c(1)], [c(2), c(3)]])
            };
            let gate = match fields[0] {
                "H" => {
                    want_wires(1)?;
                    Gate::H(wires[0])
                }
                "P" => {
                    want_wires(1)?;
                    let phi = param(2)?.parse().map_err(|e| err(format!("bad phase: {e}")))?;
                    Gate::Phase { wire: wires[0], phi }
                }
                "CZ" => {
                    want_wires(2)?;
                    Gate::Cz(wires[0], wires[1])
                }
                "CNOT" => {
                    want_wires(2)?;
                    Gate::Cnot { control: wires[0], target: wires[1] }
                }
                "U2" => {
                    want_wires(1)?;
                    Gate::U2 { wire: wires[0], matrix: parse_matrix(param(2)?)? }
                }
                name @ ("CU0" | "CU1") => {
                    want_wires(2)?;
                    let value = if name == "CU0" { 0 } else { 1 };
                    Gate::Cu { control: wires[0], value, target: wires[1], matrix: parse_matrix(param(2)?)? }
                }
                other => return Err(err(format!("unknown gate `{other}`"))),
            };
            if fields.len() > 3 || (matches!(gate, Gate::H(_) | Gate::Cz(..) | Gate::Cnot { .. }) && fields.len() > 2) {
                return Err(err("trailing tokens".into()));
            }
            gate.check().map_err(err)?;
            gates.push(gate);
        }
        Ok(Self { gates })
    }
}

impl fmt::Display for CircuitIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::state::Operator8;
    use proptest::prelude::*;

    pub(crate) fn arb_gate() -> impl Strategy<Value = Gate> {
        let wire = || prop_oneof![Just(Wire::Path), Just(Wire::Pol), Just(Wire::Mode)];
        let pair = || (wire(), wire()).prop_filter("distinct wires", |(a, b)| a != b);
        let unitary = || {
            (-3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(|(a, b, t)| {
                let g = C64::from_polar(1.0, a);
                let e = C64::from_polar(1.0, b);
                [[g * t.cos(), -g * e * t.sin()], [g * t.sin(), g * e * t.cos()]]
            })
        };
        // Weighted toward H and CZ so rewrite patterns show up often.
        prop_oneof![
            3 => wire().prop_map(Gate::H),
            1 => (wire(), -7.0f64..7.0).prop_map(|(wire, phi)| Gate::Phase { wire, phi }),
            3 => pair().prop_map(|(a, b)| Gate::Cz(a, b)),
            1 => pair().prop_map(|(control, target)| Gate::Cnot { control, target }),
            1 => (wire(), unitary()).prop_map(|(wire, matrix)| Gate::U2 { wire, matrix }),
            1 => (pair(), 0u8..2, unitary())
                .prop_map(|((control, target), value, matrix)| Gate::Cu { control, value, target, matrix }),
        ]
    }

    #[test]
    fn cz_is_symmetric() {
        let a = Gate::Cz(Wire::Path, Wire::Pol).operator();
        let b = Gate::Cz(Wire::Pol, Wire::Path).operator();
        assert!(a.distance(&b) < EXACT_TOL);
    }

    #[test]
    fn invalid_gates_rejected() {
        assert!(CircuitIR::new(vec![Gate::Cz(Wire::Pol, Wire::Pol)]).is_err());
        let bad = mat2::real(1.0, 1.0, 0.0, 1.0);
        assert!(CircuitIR::new(vec![Gate::U2 { wire: Wire::Mode, matrix: bad }]).is_err());
    }

    #[test]
    fn empty_ir_is_identity() {
        assert!(CircuitIR::default().unitary().distance(&Operator8::identity()) < EXACT_TOL);
    }

    #[test]
    fn dump_text_form() {
        let ir = CircuitIR::new(vec![
            Gate::H(Wire::Path),
            Gate::Phase { wire: Wire::Path, phi: 0.25 },
            Gate::Cz(Wire::Path, Wire::Pol),
            Gate::Cnot { control: Wire::Mode, target: Wire::Path },
        ])
        .unwrap();
        assert_eq!(ir.to_string(), "H p\nP p 0.25\nCZ p,P\nCNOT M,p\n");
    }

    #[test]
    fn dump_parse_errors_have_positions() {
        let err = CircuitIR::parse_dump("H p\n  FOO p\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert!(CircuitIR::parse_dump("CZ p,p").is_err());
        assert!(CircuitIR::parse_dump("U2 P 1,0,0").is_err());
        assert!(CircuitIR::parse_dump("H p extra").is_err());
    }

    proptest! {
        #[test]
        fn dump_round_trips(gates in prop::collection::vec(arb_gate(), 0..12)) {
            let ir = CircuitIR::new(gates).unwrap();
            let back = CircuitIR::parse_dump(&ir.to_string()).unwrap();
            prop_assert_eq!(back, ir);
        }
    }
}
