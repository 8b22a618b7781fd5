//! Pattern rewriting over [`CircuitIR`] and unitary equivalence checks.
//!
//! Rules are templates over wire variables. A pattern matches a chain of
//! gates where each step is the next gate touching one of the step's bound
//! wires, and every unmatched gate inside the span is disjoint from all bound
//! wires. The replacement is spliced in at the first matched position.
//!
//! The standard rule set, tried in this order:
//!
//! 1. `H(i) H(i) → ∅`
//! 2. `H(i) CZ(i,j) H(i) → CNOT(j→i)`
//! 3. `CZ(i,j) H(i) → H(i) CNOT(j→i)`
//! 4. `H(i) CZ(i,j) → CNOT(j→i) H(i)`
//!
//! Rule 1 removes two gates and rules 2-4 each remove one CZ without creating
//! any, so (CZ count, gate count) decreases lexicographically and rewriting
//! terminates.

use std::fmt;

use super::{CircuitIR, Gate};
use crate::error::{Error, Result};
use crate::state::{Operator8, Wire, C64, EXACT_TOL};

/// A gate over wire variables `0, 1, …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemplateGate {
    H(usize),
    Cz(usize, usize),
    Cnot { control: usize, target: usize },
}

impl TemplateGate {
    fn vars(&self) -> Vec<usize> {
        match *self {
            TemplateGate::H(a) => vec![a],
            TemplateGate::Cz(a, b) => vec![a, b],
            TemplateGate::Cnot { control, target } => vec![control, target],
        }
    }

    fn instantiate(&self, binding: &[Option<Wire>]) -> Gate {
        let w = |v: usize| binding[v].expect("replacement uses only pattern variables");
        match *self {
            TemplateGate::H(a) => Gate::H(w(a)),
            TemplateGate::Cz(a, b) => Gate::Cz(w(a), w(b)),
            TemplateGate::Cnot { control, target } => Gate::Cnot { control: w(control), target: w(target) },
        }
    }

    /// Candidate bindings under which `gate` matches this template.
    fn unify(&self, gate: &Gate, binding: &[Option<Wire>]) -> Vec<Vec<Option<Wire>>> {
        let try_bind = |pairs: &[(usize, Wire)]| -> Option<Vec<Option<Wire>>> {
            let mut b = binding.to_vec();
            for &(v, w) in pairs {
                match b[v] {
                    Some(existing) if existing != w => return None,
                    Some(_) => {}
                    None => {
                        if b.contains(&Some(w)) {
                            return None;
                        }
                        b[v] = Some(w);
                    }
                }
            }
            Some(b)
        };
        match (*self, *gate) {
            (TemplateGate::H(a), Gate::H(w)) => try_bind(&[(a, w)]).into_iter().collect(),
            (TemplateGate::Cz(a, b), Gate::Cz(x, y)) => {
                // CZ is symmetric in its wires.
                [try_bind(&[(a, x), (b, y)]), try_bind(&[(a, y), (b, x)])].into_iter().flatten().collect()
            }
            (TemplateGate::Cnot { control, target }, Gate::Cnot { control: c, target: t }) => {
                try_bind(&[(control, c), (target, t)]).into_iter().collect()
            }
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for TemplateGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; 4] = ["i", "j", "k", "l"];
        let n = |v: usize| NAMES.get(v).copied().unwrap_or("?");
        match *self {
            TemplateGate::H(a) => write!(f, "H({})", n(a)),
            TemplateGate::Cz(a, b) => write!(f, "CZ({},{})", n(a), n(b)),
            TemplateGate::Cnot { control, target } => write!(f, "CNOT({}→{})", n(control), n(target)),
        }
    }
}

/// A validated rewrite rule.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    name: String,
    pattern: Vec<TemplateGate>,
    replacement: Vec<TemplateGate>,
    predicate: fn(&[Gate]) -> bool,
    vars: usize,
}

fn always(_: &[Gate]) -> bool {
    true
}

impl RewriteRule {
    /// Registers a rule, checking that pattern and replacement have the same
    /// unitary up to global phase for every assignment of wires to variables.
    pub fn new(name: &str, pattern: Vec<TemplateGate>, replacement: Vec<TemplateGate>) -> Result<Self> {
        Self::with_predicate(name, pattern, replacement, always)
    }

    pub fn with_predicate(
        name: &str,
        pattern: Vec<TemplateGate>,
        replacement: Vec<TemplateGate>,
        predicate: fn(&[Gate]) -> bool,
    ) -> Result<Self> {
        let unsound = || Error::UnsoundRule(name.to_string());
        let vars = pattern.iter().flat_map(TemplateGate::vars).max().map_or(0, |m| m + 1);
        if pattern.is_empty()
            || vars > Wire::ALL.len()
            || replacement.iter().flat_map(TemplateGate::vars).any(|v| v >= vars)
            || pattern.iter().chain(&replacement).any(|t| {
                let v = t.vars();
                v.len() == 2 && v[0] == v[1]
            })
        {
            return Err(unsound());
        }
        let rule = Self { name: name.to_string(), pattern, replacement, predicate, vars };
        for binding in injective_bindings(vars) {
            let lhs = CircuitIR::from_gates_unchecked(rule.pattern.iter().map(|t| t.instantiate(&binding)).collect());
            let rhs =
                CircuitIR::from_gates_unchecked(rule.replacement.iter().map(|t| t.instantiate(&binding)).collect());
            if !equivalent(&lhs, &rhs).equivalent {
                return Err(unsound());
            }
        }
        Ok(rule)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pattern(&self) -> &[TemplateGate] {
        &self.pattern
    }

    pub fn replacement(&self) -> &[TemplateGate] {
        &self.replacement
    }

    /// Leftmost match: matched positions and the wire binding.
    fn find(&self, gates: &[Gate]) -> Option<(Vec<usize>, Vec<Option<Wire>>)> {
        (0..gates.len()).find_map(|start| self.match_at(gates, start))
    }

    fn match_at(&self, gates: &[Gate], start: usize) -> Option<(Vec<usize>, Vec<Option<Wire>>)> {
        let empty = vec![None; self.vars];
        self.pattern[0].unify(&gates[start], &empty).into_iter().find_map(|b| {
            let (positions, binding) = self.extend(gates, vec![start], b)?;
            let bound: Vec<Wire> = binding.iter().flatten().copied().collect();
            let last = *positions.last().unwrap();
            let clear =
                (start..=last).filter(|i| !positions.contains(i)).all(|i| bound.iter().all(|&w| !gates[i].touches(w)));
            let matched: Vec<Gate> = positions.iter().map(|&i| gates[i]).collect();
            (clear && (self.predicate)(&matched)).then_some((positions, binding))
        })
    }

    fn extend(
        &self,
        gates: &[Gate],
        positions: Vec<usize>,
        binding: Vec<Option<Wire>>,
    ) -> Option<(Vec<usize>, Vec<Option<Wire>>)> {
        let step = positions.len();
        if step == self.pattern.len() {
            return Some((positions, binding));
        }
        let template = &self.pattern[step];
        let anchors: Vec<Wire> = template.vars().iter().filter_map(|&v| binding[v]).collect();
        let prev = *positions.last().unwrap();
        let next = if anchors.is_empty() {
            prev + 1
        } else {
            (prev + 1..gates.len()).find(|&i| anchors.iter().any(|&w| gates[i].touches(w)))?
        };
        let gate = gates.get(next)?;
        template.unify(gate, &binding).into_iter().find_map(|b| {
            let mut p = positions.clone();
            p.push(next);
            self.extend(gates, p, b)
        })
    }

    /// Applies the rule once at its leftmost match.
    fn apply_once(&self, gates: &mut Vec<Gate>) -> bool {
        let Some((positions, binding)) = self.find(gates) else {
            return false;
        };
        let insert_at = positions[0];
        for &i in positions.iter().rev() {
            gates.remove(i);
        }
        let replacement: Vec<Gate> = self.replacement.iter().map(|t| t.instantiate(&binding)).collect();
        gates.splice(insert_at..insert_at, replacement);
        true
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |ts: &[TemplateGate]| {
            if ts.is_empty() {
                "∅".to_string()
            } else {
                ts.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            }
        };
        write!(f, "{}: {} → {}", self.name, seq(&self.pattern), seq(&self.replacement))
    }
}

fn injective_bindings(vars: usize) -> Vec<Vec<Option<Wire>>> {
    fn go(vars: usize, acc: &mut Vec<Option<Wire>>, out: &mut Vec<Vec<Option<Wire>>>) {
        if acc.len() == vars {
            out.push(acc.clone());
            return;
        }
        for w in Wire::ALL {
            if !acc.contains(&Some(w)) {
                acc.push(Some(w));
                go(vars, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(vars, &mut Vec::new(), &mut out);
    out
}

/// The four standard rules, in application priority order.
pub fn standard_rules() -> Vec<RewriteRule> {
    use TemplateGate::*;
    let rules = [
        ("hadamard-square", vec![H(0), H(0)], vec![]),
        ("hadamard-cz-fusion", vec![H(0), Cz(0, 1), H(0)], vec![Cnot { control: 1, target: 0 }]),
        ("cz-hadamard-swap", vec![Cz(0, 1), H(0)], vec![H(0), Cnot { control: 1, target: 0 }]),
        ("hadamard-cz-swap", vec![H(0), Cz(0, 1)], vec![Cnot { control: 1, target: 0 }, H(0)]),
    ];
    rules.into_iter().map(|(name, p, r)| RewriteRule::new(name, p, r).expect("standard rules are sound")).collect()
}

/// Rewrites to a fixed point with [`standard_rules`].
pub fn rewrite(ir: &CircuitIR) -> CircuitIR {
    rewrite_with(ir, &standard_rules())
}

/// Rewrites to a fixed point: repeatedly applies the first rule (in the given
/// order) that has a match, at its leftmost match.
pub fn rewrite_with(ir: &CircuitIR, rules: &[RewriteRule]) -> CircuitIR {
    let mut gates = ir.gates().to_vec();
    while rules.iter().any(|r| r.apply_once(&mut gates)) {}
    CircuitIR::from_gates_unchecked(gates)
}

/// Result of comparing two circuits' unitaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Global phase `e^{iθ}` with `U_b = e^{iθ}·U_a`, when equivalent.
    pub phase: Option<C64>,
    /// ‖U_b − e^{iθ}U_a‖_max for the best-fitting phase.
    pub deviation: f64,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Some(p) if self.equivalent => {
                let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
                let (re, im) = (clean(p.re), clean(p.im));
                if im == 0.0 {
                    write!(f, "equivalent (phase {re})")
                } else {
                    write!(f, "equivalent (phase {re}{im:+}i)")
                }
            }
            _ => write!(f, "not equivalent (deviation {:.3e})", self.deviation),
        }
    }
}

/// Checks `U_b = e^{iθ} U_a` within 1e-12.
pub fn equivalent(a: &CircuitIR, b: &CircuitIR) -> Equivalence {
    equivalent_unitaries(&a.unitary(), &b.unitary())
}

pub fn equivalent_unitaries(ua: &Operator8, ub: &Operator8) -> Equivalence {
    // The phase is read off the largest entry of U_a.
    let mut best = (0, 0);
    let mut best_norm = -1.0;
    for i in 0..8 {
        for j in 0..8 {
            let n = ua.entry(i, j).norm();
            if n > best_norm {
                best_norm = n;
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let ratio = ub.entry(i, j) / ua.entry(i, j);
    let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { C64::new(1.0, 0.0) };
    let deviation = ub.distance(&ua.scaled(phase));
    let equivalent = deviation <= EXACT_TOL;
    Equivalence { equivalent, phase: equivalent.then_some(phase), deviation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::ir::tests::arb_gate;
    use crate::bench::{compile, parse, MZIM_BENCH};
    use proptest::prelude::*;

    fn ir(gates: Vec<Gate>) -> CircuitIR {
        CircuitIR::new(gates).unwrap()
    }

    fn fig3b(phi: f64) -> CircuitIR {
        ir(vec![
            Gate::H(Wire::Path),
            Gate::Phase { wire: Wire::Path, phi },
            Gate::H(Wire::Path),
            Gate::Cnot { control: Wire::Pol, target: Wire::Path },
            Gate::Cnot { control: Wire::Mode, target: Wire::Path },
        ])
    }

    #[test]
    fn hadamard_pair_vanishes() {
        assert!(rewrite(&ir(vec![Gate::H(Wire::Path), Gate::H(Wire::Path)])).is_empty());
    }

    #[test]
    fn hadamard_sandwich_fuses() {
        let out = rewrite(&ir(vec![Gate::H(Wire::Path), Gate::Cz(Wire::Path, Wire::Pol), Gate::H(Wire::Path)]));
        assert_eq!(out.gates(), &[Gate::Cnot { control: Wire::Pol, target: Wire::Path }]);
        // The other wire of a CZ works too.
        let out = rewrite(&ir(vec![Gate::H(Wire::Pol), Gate::Cz(Wire::Path, Wire::Pol), Gate::H(Wire::Pol)]));
        assert_eq!(out.gates(), &[Gate::Cnot { control: Wire::Path, target: Wire::Pol }]);
    }

    #[test]
    fn mzim_direct_translation_rewrites_to_simplified_form() {
        for phi in [0.0, 0.3, std::f64::consts::PI] {
            let a = compile(&parse(&format!("mzim(phi={phi})")).unwrap()).unwrap();
            let b = rewrite(&a);
            assert_eq!(b, fig3b(phi), "phi = {phi}");
            let eq = equivalent(&a, &b);
            assert!(eq.equivalent);
            assert!((eq.phase.unwrap() - C64::new(1.0, 0.0)).norm() < EXACT_TOL);
        }
        let _ = MZIM_BENCH;
    }

    #[test]
    fn equivalence_examples() {
        let a = compile(&parse(MZIM_BENCH).unwrap()).unwrap();
        assert!(equivalent(&a, &fig3b(0.0)).equivalent);
        assert!(!equivalent(&ir(vec![Gate::H(Wire::Path)]), &ir(vec![Gate::H(Wire::Pol)])).equivalent);
        let full_turn = ir(vec![Gate::Phase { wire: Wire::Path, phi: std::f64::consts::TAU }]);
        let eq = equivalent(&CircuitIR::default(), &full_turn);
        assert!(eq.equivalent);
        assert!((eq.phase.unwrap() - C64::new(1.0, 0.0)).norm() < EXACT_TOL);
        assert_eq!(eq.to_string(), "equivalent (phase 1)");
    }

    #[test]
    fn global_phase_is_reported() {
        let a = ir(vec![Gate::Phase { wire: Wire::Path, phi: 0.5 }]);
        let b = ir(vec![Gate::U2 {
            wire: Wire::Path,
            matrix: [[C64::from_polar(1.0, 0.2), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::from_polar(1.0, 0.7)]],
        }]);
        let eq = equivalent(&a, &b);
        assert!(eq.equivalent);
        assert!((eq.phase.unwrap() - C64::from_polar(1.0, 0.2)).norm() < EXACT_TOL);
    }

    #[test]
    fn unsound_rule_is_refused_at_registration() {
        use TemplateGate::*;
        let err = RewriteRule::new("bogus", vec![H(0), Cz(0, 1)], vec![Cnot { control: 1, target: 0 }]).unwrap_err();
        assert_eq!(err, Error::UnsoundRule("bogus".into()));
        assert!(RewriteRule::new("empty", vec![], vec![]).is_err());
    }

    #[test]
    fn blocked_span_does_not_match() {
        // CNOT on p between the Hadamards blocks H² elimination.
        let gates =
            vec![Gate::H(Wire::Path), Gate::Cnot { control: Wire::Mode, target: Wire::Path }, Gate::H(Wire::Path)];
        assert_eq!(rewrite(&ir(gates.clone())).gates(), &gates[..]);
        // A gate on a disjoint wire does not.
        let out = rewrite(&ir(vec![Gate::H(Wire::Path), Gate::H(Wire::Mode), Gate::H(Wire::Path)]));
        assert_eq!(out.gates(), &[Gate::H(Wire::Mode)]);
    }

    #[test]
    fn rule_display() {
        let rules = standard_rules();
        assert_eq!(rules[1].to_string(), "hadamard-cz-fusion: H(i) CZ(i,j) H(i) → CNOT(j→i)");
        assert_eq!(rules[0].to_string(), "hadamard-square: H(i) H(i) → ∅");
    }

    fn cz_count(ir: &CircuitIR) -> usize {
        ir.gates().iter().filter(|g| matches!(g, Gate::Cz(..))).count()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rewrite_preserves_semantics(gates in prop::collection::vec(arb_gate(), 0..=20)) {
            let input = CircuitIR::new(gates).unwrap();
            let output = rewrite(&input);
            prop_assert!(equivalent(&input, &output).equivalent);
            prop_assert!(cz_count(&output) <= cz_count(&input));
            prop_assert!(output.len() <= input.len());
        }
    }

    proptest! {
        #[test]
        fn rewrite_is_idempotent(gates in prop::collection::vec(arb_gate(), 0..=20)) {
            let once = rewrite(&CircuitIR::new(gates).unwrap());
            prop_assert_eq!(rewrite(&once), once);
        }
    }
}
