//! Optical elements and the gates they implement.
//!
//! Waveplates and Dove prisms share the matrix family
//! `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`, acting on {H, V} and on
//! {HG01, HG10} respectively. At 22.5° both are exact Hadamards, at 0° both
//! are Pauli Z and at −45° both are −X. The −X sign at −45° is what makes the
//! preparation chain `swp; bs; hwp@0 on arm0; hwp@-45 on arm1` land exactly on
//! (|000⟩ − |011⟩ − |101⟩ − |110⟩)/2.

use std::fmt;

use crate::error::{Error, Result};
use crate::state::{
    controlled, controlled_on, hadamard_matrix, lift_matrix, mat2, phase_matrix, Gate2, Mat2, Operator8, PairState,
    Pauli, TriState, Wire, C64, EXACT_TOL, ONE, ZERO,
};

/// Matrix convention used for a balanced beam splitter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BsConvention {
    /// Real Hadamard, the convention the circuit translation assumes.
    #[default]
    Hadamard,
    /// Symmetric `(1/√2)[[1, i], [i, 1]]`.
    Symmetric,
}

/// One of the two interferometer arms (path basis states).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Arm0,
    Arm1,
}

impl Arm {
    pub fn index(self) -> u8 {
        match self {
            Arm::Arm0 => 0,
            Arm::Arm1 => 1,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arm{}", self.index())
    }
}

pub(crate) fn retarder_matrix(theta_deg: f64) -> Mat2 {
    let (s, c) = (2.0 * theta_deg.to_radians()).sin_cos();
    mat2::real(c, s, s, -c)
}

/// Half-wave plate with its fast axis at `theta_deg` from horizontal.
pub fn hwp(theta_deg: f64) -> Gate2 {
    Gate2::new(retarder_matrix(theta_deg), Wire::Pol).expect("retarder is unitary")
}

/// Dove prism at `theta_deg`, acting on the first-order mode pair.
///
/// `dove_prism(0.0)` leaves HG01 unchanged and flips the sign of HG10.
pub fn dove_prism(theta_deg: f64) -> Gate2 {
    Gate2::new(retarder_matrix(theta_deg), Wire::Mode).expect("retarder is unitary")
}

/// Balanced 50/50 beam splitter on the path wire (Hadamard convention).
pub fn beam_splitter() -> Gate2 {
    beam_splitter_with(BsConvention::Hadamard)
}

pub fn beam_splitter_with(convention: BsConvention) -> Gate2 {
    let m = match convention {
        BsConvention::Hadamard => hadamard_matrix(),
        BsConvention::Symmetric => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[C64::new(s, 0.0), C64::new(0.0, s)], [C64::new(0.0, s), C64::new(s, 0.0)]]
        }
    };
    Gate2::new(m, Wire::Path).expect("beam splitter is unitary")
}

/// Real split matrix `[[√t, √r], [√r, −√t]]` for intensity transmittance
/// `t` (r = 1 − t). Equals the Hadamard at t = 0.5.
pub fn split_matrix(t: f64) -> Mat2 {
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    mat2::real(st, sr, sr, -st)
}

pub fn unbalanced_beam_splitter(t: f64) -> Result<Gate2> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!("beam splitter transmittance {t} outside [0, 1]")));
    }
    Gate2::new(split_matrix(t), Wire::Path)
}

pub fn phase_shifter(phi: f64) -> Gate2 {
    Gate2::new(phase_matrix(phi), Wire::Path).expect("phase gate is unitary")
}

/// Radial/azimuthal conversion of a linearly polarized fundamental beam.
///
/// Vertical input (90°) gives (|0_P 0_M⟩ + |1_P 1_M⟩)/√2. Horizontal input
/// (0°) gives the same field pattern rotated by 90°:
/// (|1_P 0_M⟩ − |0_P 1_M⟩)/√2.
pub fn s_waveplate(input_pol_deg: f64) -> Result<PairState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pol = input_pol_deg.rem_euclid(180.0);
    let amps = if (pol - 90.0).abs() < 1e-9 {
        [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]
    } else if pol < 1e-9 || (180.0 - pol) < 1e-9 {
        [ZERO, C64::new(-s, 0.0), C64::new(s, 0.0), ZERO]
    } else {
        return Err(Error::UnsupportedPolarization(input_pol_deg));
    };
    PairState::normalized(amps)
}

/// The s-waveplate as a unitary on (P, M).
///
/// Bench programs start from the reference state |000⟩, which stands for a
/// vertically polarized fundamental-mode beam entering on path 0. This
/// operator (H on P followed by CNOT P→M) maps that reference onto the
/// s-waveplate output and is unitary on the whole space.
pub fn swp_operator() -> Operator8 {
    let h = lift_matrix(&hadamard_matrix(), Wire::Pol);
    let cnot = controlled(Wire::Pol, &Gate2::pauli(Pauli::X, Wire::Mode)).expect("distinct wires");
    &cnot * &h
}

/// Double reflection in arm 1: CZ(p, P)·CZ(p, M).
pub fn mirror_pair() -> Operator8 {
    let cz_pol = controlled(Wire::Path, &Gate2::pauli(Pauli::Z, Wire::Pol)).expect("distinct wires");
    let cz_mode = controlled(Wire::Path, &Gate2::pauli(Pauli::Z, Wire::Mode)).expect("distinct wires");
    &cz_pol * &cz_mode
}

/// Blocks one path. Returns the renormalized survivor and the fraction of
/// intensity that was discarded.
pub fn blocker(path: u8, s: &TriState) -> Result<(TriState, f64)> {
    let discarded = s.path_probability(path);
    if 1.0 - discarded < EXACT_TOL {
        return Err(Error::TotalBlockage { path });
    }
    let mut amps = *s.amplitudes();
    for a in &mut amps[4 * path as usize..4 * path as usize + 4] {
        *a = ZERO;
    }
    Ok((TriState::normalized(amps)?, discarded))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Swp,
    Bs,
    Hwp,
    Dp,
    MirrorPair,
    PhaseShifter,
    Blocker,
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Swp => "swp",
            ElementKind::Bs => "bs",
            ElementKind::Hwp => "hwp",
            ElementKind::Dp => "dp",
            ElementKind::MirrorPair => "mirrors",
            ElementKind::PhaseShifter => "ps",
            ElementKind::Blocker => "block",
        }
    }
}

/// A placed optical element: kind, parameter (degrees for hwp/dp, radians for
/// the phase shifter) and optional arm restriction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementOp {
    pub kind: ElementKind,
    pub param: Option<f64>,
    pub arm: Option<Arm>,
}

impl ElementOp {
    pub fn new(kind: ElementKind, param: Option<f64>, arm: Option<Arm>) -> Self {
        Self { kind, param, arm }
    }

    /// Single-wire gate this element applies (before any arm restriction),
    /// if it is a single-wire element.
    pub fn gate(&self) -> Option<Gate2> {
        let p = self.param.unwrap_or(0.0);
        match self.kind {
            ElementKind::Bs => Some(beam_splitter()),
            ElementKind::Hwp => Some(hwp(p)),
            ElementKind::Dp => Some(dove_prism(p)),
            ElementKind::PhaseShifter => Some(match self.arm {
                // Phase on arm 0 is diag(e^{iφ}, 1).
                Some(Arm::Arm0) => {
                    Gate2::new([[C64::from_polar(1.0, p), ZERO], [ZERO, ONE]], Wire::Path).expect("unitary")
                }
                _ => phase_shifter(p),
            }),
            ElementKind::Swp | ElementKind::MirrorPair | ElementKind::Blocker => None,
        }
    }

    /// Lifted operator, or `None` for the blocker.
    pub fn operator(&self) -> Option<Operator8> {
        match self.kind {
            ElementKind::Blocker => None,
            ElementKind::Swp => Some(swp_operator()),
            ElementKind::MirrorPair => Some(mirror_pair()),
            ElementKind::PhaseShifter => Some(lift_matrix(self.gate()?.matrix(), Wire::Path)),
            _ => {
                let g = self.gate()?;
                Some(match self.arm {
                    Some(arm) => controlled_on(Wire::Path, arm.index(), &g).ok()?,
                    None => lift_matrix(g.matrix(), g.target()),
                })
            }
        }
    }
}
