use super::{BenchProgram, CircuitIR, Gate, StatementKind};
use crate::elements::{ElementKind, ElementOp};
use crate::error::{Error, Result};
use crate::state::{hadamard_matrix, mat2, Mat2, Wire, EXACT_TOL};

/// Compiles a bench into a circuit whose unitary equals the product of the
/// elements' lifted operators.
///
/// A blocker is not unitary and is rejected here.
pub fn compile(bp: &BenchProgram) -> Result<CircuitIR> {
    let mut gates = Vec::new();
    for stmt in &bp.statements {
        match stmt.kind {
            StatementKind::Mzim { phi } => gates.extend([
                Gate::H(Wire::Path),
                Gate::Phase { wire: Wire::Path, phi },
                Gate::Cz(Wire::Path, Wire::Pol),
                Gate::Cz(Wire::Path, Wire::Mode),
                Gate::H(Wire::Path),
            ]),
            StatementKind::Element(op) => lower(&op, stmt.line, &mut gates)?,
        }
    }
    Ok(CircuitIR::from_gates_unchecked(factor_arm_pairs(gates)))
}

fn single(wire: Wire, matrix: Mat2) -> Gate {
    if mat2::max_abs_diff(&matrix, &hadamard_matrix()) <= EXACT_TOL {
        Gate::H(wire)
    } else {
        Gate::U2 { wire, matrix }
    }
}

fn lower(op: &ElementOp, line: usize, out: &mut Vec<Gate>) -> Result<()> {
    match op.kind {
        ElementKind::Blocker => return Err(Error::BlockerInCircuit { line }),
        ElementKind::Swp => out.extend([Gate::H(Wire::Pol), Gate::Cnot { control: Wire::Pol, target: Wire::Mode }]),
        ElementKind::MirrorPair => out.extend([Gate::Cz(Wire::Path, Wire::Pol), Gate::Cz(Wire::Path, Wire::Mode)]),
        ElementKind::Bs => out.push(Gate::H(Wire::Path)),
        ElementKind::PhaseShifter => {
            let g = op.gate().expect("phase shifter is a single-wire element");
            match op.arm {
                Some(crate::elements::Arm::Arm0) => out.push(Gate::U2 { wire: Wire::Path, matrix: *g.matrix() }),
                _ => out.push(Gate::Phase { wire: Wire::Path, phi: op.param.unwrap_or(0.0) }),
            }
        }
        ElementKind::Hwp | ElementKind::Dp => {
            let g = op.gate().expect("retarders are single-wire elements");
            out.push(match op.arm {
                None => single(g.target(), *g.matrix()),
                Some(arm) => {
                    Gate::Cu { control: Wire::Path, value: arm.index(), target: g.target(), matrix: *g.matrix() }
                }
            });
        }
    }
    Ok(())
}

/// The same single-wire gate placed on both arms is path independent.
fn factor_arm_pairs(gates: Vec<Gate>) -> Vec<Gate> {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    for g in gates {
        if let (
            Some(&Gate::Cu { control: Wire::Path, value: v1, target: t1, matrix: m1 }),
            Gate::Cu { control: Wire::Path, value: v2, target: t2, matrix: m2 },
        ) = (out.last(), &g)
        {
            if v1 != *v2 && t1 == *t2 && mat2::max_abs_diff(&m1, m2) <= EXACT_TOL {
                out.pop();
                out.push(single(t1, m1));
                continue;
            }
        }
        out.push(g);
    }
    out
}
