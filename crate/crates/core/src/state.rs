//! Three-wire state vectors and operators.
//!
//! The beam carries three dichotomic degrees of freedom: the path `p`, the
//! polarization `P` (|0⟩ = horizontal, |1⟩ = vertical) and the first-order
//! transverse mode `M` (|0⟩ = HG01, |1⟩ = HG10). Amplitudes are stored in the
//! fixed order `index = 4·p + 2·P + M`.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

pub const DIM: usize = 8;

/// Tolerance for exact algebra (single gates, short products).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for composed pipelines (preparation + measurement + readout).
pub const PIPELINE_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wire {
    Path,
    Pol,
    Mode,
}

impl Wire {
    pub const ALL: [Wire; 3] = [Wire::Path, Wire::Pol, Wire::Mode];

    /// Bit position of this wire inside a basis index.
    pub fn shift(self) -> usize {
        match self {
            Wire::Path => 2,
            Wire::Pol => 1,
            Wire::Mode => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Wire::Path => "p",
            Wire::Pol => "P",
            Wire::Mode => "M",
        }
    }

    #[inline]
    pub(crate) fn bit(self, index: usize) -> usize {
        (index >> self.shift()) & 1
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Wire {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "p" => Ok(Wire::Path),
            "P" => Ok(Wire::Pol),
            "M" => Ok(Wire::Mode),
            other => Err(format!("unknown wire `{other}` (expected p, P or M)")),
        }
    }
}

pub(crate) fn basis_index(p: u8, pol: u8, mode: u8) -> usize {
    debug_assert!(p < 2 && pol < 2 && mode < 2);
    4 * p as usize + 2 * pol as usize + mode as usize
}

// ---------------------------------------------------------------------------
// 2×2 helpers

pub mod mat2 {
    use super::{Mat2, C64, ONE, ZERO};

    pub fn identity() -> Mat2 {
        [[ONE, ZERO], [ZERO, ONE]]
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        [[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(c, 0.0), C64::new(d, 0.0)]]
    }

    pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    pub fn dagger(a: &Mat2) -> Mat2 {
        [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
    }

    pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((a[i][j] - b[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(a: &Mat2, tol: f64) -> bool {
        max_abs_diff(&mul(&dagger(a), a), &identity()) <= tol
    }
}

// ---------------------------------------------------------------------------
// TriState

/// Normalized amplitude vector over |p, P, M⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriState {
    amps: [C64; DIM],
}

impl TriState {
    /// Computational basis state |p P M⟩.
    pub fn basis(p: u8, pol: u8, mode: u8) -> Self {
        Self::basis_at(basis_index(p, pol, mode))
    }

    pub fn basis_at(index: usize) -> Self {
        let mut amps = [ZERO; DIM];
        amps[index] = ONE;
        Self { amps }
    }

    /// Accepts amplitudes whose norm is 1 within the pipeline tolerance and
    /// rescales them to unit norm.
    pub fn from_amplitudes(amps: [C64; DIM]) -> Result<Self> {
        let n2 = norm_sqr(&amps);
        if (n2 - 1.0).abs() > PIPELINE_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self::rescaled(amps, n2))
    }

    /// Normalizes an arbitrary non-zero amplitude vector.
    pub fn normalized(amps: [C64; DIM]) -> Result<Self> {
        let n2 = norm_sqr(&amps);
        if n2 < 1e-300 || !n2.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self::rescaled(amps, n2))
    }

    fn rescaled(mut amps: [C64; DIM], n2: f64) -> Self {
        let inv = n2.sqrt().recip();
        for a in &mut amps {
            *a *= inv;
        }
        Self { amps }
    }

    /// (|000⟩ − |011⟩ − |101⟩ − |110⟩)/2, the GHZ variant with ⟨ZZZ⟩ = +1.
    pub fn ghz_mermin() -> Self {
        let mut amps = [ZERO; DIM];
        amps[basis_index(0, 0, 0)] = C64::new(0.5, 0.0);
        amps[basis_index(0, 1, 1)] = C64::new(-0.5, 0.0);
        amps[basis_index(1, 0, 1)] = C64::new(-0.5, 0.0);
        amps[basis_index(1, 1, 0)] = C64::new(-0.5, 0.0);
        Self { amps }
    }

    /// Tensor product |path⟩ ⊗ |pair⟩.
    pub fn product(path: [C64; 2], pair: &PairState) -> Result<Self> {
        let mut amps = [ZERO; DIM];
        for (p, &a) in path.iter().enumerate() {
            for (k, &b) in pair.amplitudes().iter().enumerate() {
                amps[4 * p + k] = a * b;
            }
        }
        Self::normalized(amps)
    }

    /// Samples a state from the unitarily invariant measure.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut amps = [ZERO; DIM];
        for a in &mut amps {
            *a = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        // Gaussian vectors are non-zero with probability one.
        Self::normalized(amps).expect("gaussian sample was zero")
    }

    pub fn amplitudes(&self) -> &[C64; DIM] {
        &self.amps
    }

    pub fn amp(&self, p: u8, pol: u8, mode: u8) -> C64 {
        self.amps[basis_index(p, pol, mode)]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &TriState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Probability mass carried by path `p`.
    pub fn path_probability(&self, p: u8) -> f64 {
        self.amps[4 * p as usize..4 * p as usize + 4].iter().map(|a| a.norm_sqr()).sum()
    }

    /// The (P, M) amplitudes on path `p`, unnormalized.
    pub fn path_component(&self, p: u8) -> [C64; 4] {
        let base = 4 * p as usize;
        [self.amps[base], self.amps[base + 1], self.amps[base + 2], self.amps[base + 3]]
    }

    /// Equality up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &TriState, tol: f64) -> bool {
        (1.0 - fidelity(self, other)).abs() <= tol
    }
}

fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

impl fmt::Display for TriState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "({:+.6}{:+.6}i)|{}{}{}⟩", a.re, a.im, (i >> 2) & 1, (i >> 1) & 1, i & 1)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Two-wire state on (P, M), index = 2·P + M.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairState {
    amps: [C64; 4],
}

impl PairState {
    pub fn normalized(amps: [C64; 4]) -> Result<Self> {
        let n2 = norm_sqr(&amps);
        if n2 < 1e-300 || !n2.is_finite() {
            return Err(Error::ZeroVector);
        }
        let inv = n2.sqrt().recip();
        Ok(Self { amps: amps.map(|a| a * inv) })
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// Tr(ρ_P²) of the polarization marginal.
    pub fn polarization_purity(&self) -> f64 {
        // ρ_P[a][b] = Σ_m ψ[a,m] ψ*[b,m]
        let mut rho = [[ZERO; 2]; 2];
        for (a, row) in rho.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                *entry = (0..2).map(|m| self.amps[2 * a + m] * self.amps[2 * b + m].conj()).sum();
            }
        }
        purity(&rho)
    }

    /// Tr(ρ_M²) of the mode marginal.
    pub fn mode_purity(&self) -> f64 {
        let mut rho = [[ZERO; 2]; 2];
        for (a, row) in rho.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                *entry = (0..2).map(|p| self.amps[2 * p + a] * self.amps[2 * p + b].conj()).sum();
            }
        }
        purity(&rho)
    }
}

fn purity(rho: &Mat2) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += (rho[i][j] * rho[j][i]).re;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Gate2 / Operator8

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::I => mat2::identity(),
            Pauli::X => mat2::real(0.0, 1.0, 1.0, 0.0),
            Pauli::Y => [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]],
            Pauli::Z => mat2::real(1.0, 0.0, 0.0, -1.0),
        }
    }
}

pub fn hadamard_matrix() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    mat2::real(s, s, s, -s)
}

pub fn phase_matrix(phi: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, phi)]]
}

/// A unitary 2×2 gate acting on a single wire.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate2 {
    matrix: Mat2,
    target: Wire,
}

impl Gate2 {
    pub fn new(matrix: Mat2, target: Wire) -> Result<Self> {
        if !mat2::is_unitary(&matrix, EXACT_TOL) {
            return Err(Error::NonUnitary);
        }
        Ok(Self { matrix, target })
    }

    pub(crate) fn new_unchecked(matrix: Mat2, target: Wire) -> Self {
        Self { matrix, target }
    }

    pub fn pauli(p: Pauli, target: Wire) -> Self {
        Self::new_unchecked(p.matrix(), target)
    }

    pub fn hadamard(target: Wire) -> Self {
        Self::new_unchecked(hadamard_matrix(), target)
    }

    pub fn phase(target: Wire, phi: f64) -> Self {
        Self::new_unchecked(phase_matrix(phi), target)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn target(&self) -> Wire {
        self.target
    }
}

/// A linear operator on the 8-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator8 {
    m: [[C64; DIM]; DIM],
    unitary: bool,
}

impl Operator8 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m, unitary: true }
    }

    /// Wraps a matrix, flagging it unitary when U†U = I within 1e-12.
    pub fn from_matrix(m: [[C64; DIM]; DIM]) -> Self {
        let mut op = Self { m, unitary: false };
        op.unitary = op.check_unitary(EXACT_TOL);
        op
    }

    pub fn diagonal(d: [C64; DIM]) -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for i in 0..DIM {
            m[i][i] = d[i];
        }
        Self::from_matrix(m)
    }

    /// Kronecker product P_p ⊗ P_P ⊗ P_M.
    pub fn pauli_string(paulis: [Pauli; 3]) -> Self {
        let mats = paulis.map(Pauli::matrix);
        let mut m = [[ZERO; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let mut acc = ONE;
                for (k, w) in Wire::ALL.iter().enumerate() {
                    acc *= mats[k][w.bit(i)][w.bit(j)];
                }
                *entry = acc;
            }
        }
        Self::from_matrix(m)
    }

    /// Product of operators listed in application order (first applied first).
    pub fn sequence<'a, I: IntoIterator<Item = &'a Operator8>>(ops: I) -> Self {
        ops.into_iter().fold(Self::identity(), |acc, op| op * &acc)
    }

    pub fn matrix(&self) -> &[[C64; DIM]; DIM] {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn dagger(&self) -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                m[i][j] = self.m[j][i].conj();
            }
        }
        Self { m, unitary: self.unitary }
    }

    fn check_unitary(&self, tol: f64) -> bool {
        let prod = matmul(&self.dagger().m, &self.m);
        max_abs_diff(&prod, &Self::identity().m) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs_diff(&self.m, &self.dagger().m) <= tol
    }

    /// Largest entrywise distance ‖A − B‖_max.
    pub fn distance(&self, other: &Operator8) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    /// Applies the operator without requiring unitarity; the result is not
    /// renormalized.
    pub fn apply_raw(&self, amps: &[C64; DIM]) -> [C64; DIM] {
        let mut out = [ZERO; DIM];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.m[i].iter().zip(amps).map(|(u, a)| u * a).sum();
        }
        out
    }

    pub fn apply(&self, s: &TriState) -> Result<TriState> {
        apply(self, s)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut m = self.m;
        for row in &mut m {
            for e in row.iter_mut() {
                *e *= factor;
            }
        }
        Self::from_matrix(m)
    }
}

fn matmul(a: &[[C64; DIM]; DIM], b: &[[C64; DIM]; DIM]) -> [[C64; DIM]; DIM] {
    let mut out = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..DIM {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn max_abs_diff(a: &[[C64; DIM]; DIM], b: &[[C64; DIM]; DIM]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for j in 0..DIM {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

impl Mul<&Operator8> for &Operator8 {
    type Output = Operator8;

    fn mul(self, rhs: &Operator8) -> Operator8 {
        let m = matmul(&self.m, &rhs.m);
        if self.unitary && rhs.unitary {
            // Products of unitaries stay unitary; skip the O(n³) recheck.
            Operator8 { m, unitary: true }
        } else {
            Operator8::from_matrix(m)
        }
    }
}

impl Mul for Operator8 {
    type Output = Operator8;

    fn mul(self, rhs: Operator8) -> Operator8 {
        &self * &rhs
    }
}

// ---------------------------------------------------------------------------
// Free operations

/// Embeds a single-wire gate into the 8-dimensional space.
pub fn lift(g: &Gate2) -> Result<Operator8> {
    if !mat2::is_unitary(g.matrix(), EXACT_TOL) {
        return Err(Error::NonUnitary);
    }
    Ok(lift_matrix(g.matrix(), g.target()))
}

pub(crate) fn lift_matrix(u: &Mat2, target: Wire) -> Operator8 {
    let mask = !(1usize << target.shift()) & 0b111;
    let mut m = [[ZERO; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            if i & mask == j & mask {
                *entry = u[target.bit(i)][target.bit(j)];
            }
        }
    }
    Operator8::from_matrix(m)
}

/// `g` on the subspace where `control` = 1, identity elsewhere.
pub fn controlled(control: Wire, g: &Gate2) -> Result<Operator8> {
    controlled_on(control, 1, g)
}

/// `g` on the subspace where `control` = `value`, identity elsewhere.
pub fn controlled_on(control: Wire, value: u8, g: &Gate2) -> Result<Operator8> {
    if control == g.target() {
        return Err(Error::SameWire(control));
    }
    if !mat2::is_unitary(g.matrix(), EXACT_TOL) {
        return Err(Error::NonUnitary);
    }
    let lifted = lift_matrix(g.matrix(), g.target());
    let mut m = [[ZERO; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            if control.bit(i) != control.bit(j) {
                continue;
            }
            *entry = if control.bit(i) == value as usize {
                lifted.m[i][j]
            } else if i == j {
                ONE
            } else {
                ZERO
            };
        }
    }
    Ok(Operator8::from_matrix(m))
}

pub fn apply(u: &Operator8, s: &TriState) -> Result<TriState> {
    if !u.is_unitary() {
        return Err(Error::NonUnitary);
    }
    Ok(TriState { amps: u.apply_raw(&s.amps) })
}

/// ⟨s|O|s⟩ for Hermitian `O`.
pub fn expectation(s: &TriState, o: &Operator8) -> Result<f64> {
    if !o.is_hermitian(EXACT_TOL) {
        return Err(Error::NonHermitian);
    }
    let os = o.apply_raw(&s.amps);
    Ok(s.amps.iter().zip(&os).map(|(a, b)| a.conj() * b).sum::<C64>().re)
}

/// |⟨a|b⟩|²
pub fn fidelity(a: &TriState, b: &TriState) -> f64 {
    a.inner(b).norm_sqr()
}
