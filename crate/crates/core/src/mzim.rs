//! Mach-Zehnder interferometer with a mirror pair in arm 1.
//!
//! Element order: BS₁, phase φ on arm 1, mirror pair, BS₂. At φ = 0 with
//! balanced splitters the input |p P M⟩ leaves through port p ⊕ P ⊕ M.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::elements::{mirror_pair, split_matrix};
use crate::error::{Error, Result};
use crate::imperfection::ImperfectionConfig;
use crate::state::{lift_matrix, phase_matrix, Operator8, TriState, Wire, C64, DIM, EXACT_TOL, ZERO};

/// Corrected port sums below this are treated as "no light".
pub const MIN_INTENSITY: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MzimModel {
    pub phi: f64,
    pub bs1_t: f64,
    pub bs2_t: f64,
    /// Fraction of the arm fields that overlap coherently at BS₂.
    pub visibility: f64,
}

impl Default for MzimModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl MzimModel {
    pub fn ideal() -> Self {
        Self { phi: 0.0, bs1_t: 0.5, bs2_t: 0.5, visibility: 1.0 }
    }

    pub fn with_phi(phi: f64) -> Self {
        Self { phi, ..Self::ideal() }
    }

    /// Interferometer as configured by `cfg`: both splitters share
    /// `bs_mzim_t` and the calibrated phase is off by `residual_phase`.
    pub fn from_config(cfg: &ImperfectionConfig) -> Self {
        Self { phi: cfg.residual_phase, bs1_t: cfg.bs_mzim_t, bs2_t: cfg.bs_mzim_t, visibility: cfg.visibility }
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.bs1_t, self.bs2_t] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!("interferometer transmittance {t} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::InvalidConfig(format!("visibility {} outside [0, 1]", self.visibility)));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidConfig("phase must be finite".into()));
        }
        Ok(())
    }

    fn first_half(&self) -> Operator8 {
        let bs1 = lift_matrix(&split_matrix(self.bs1_t), Wire::Path);
        let ps = lift_matrix(&phase_matrix(self.phi), Wire::Path);
        &ps * &bs1
    }

    fn second_half(&self) -> Operator8 {
        let bs2 = lift_matrix(&split_matrix(self.bs2_t), Wire::Path);
        &bs2 * &mirror_pair()
    }

    /// Full coherent transfer matrix.
    pub fn unitary(&self) -> Operator8 {
        &self.second_half() * &self.first_half()
    }

    /// Output field as an incoherent mixture of amplitude vectors with
    /// weights: the fraction `v` that interferes, plus each arm propagated on
    /// its own with weight 1 − v. Weights of zero are dropped.
    pub fn output_components(&self, s: &TriState) -> Vec<(f64, [C64; DIM])> {
        let v = self.visibility;
        let mut parts = Vec::with_capacity(3);
        if v > 0.0 {
            parts.push((v, self.unitary().apply_raw(s.amplitudes())));
        }
        if v < 1.0 {
            let mid = self.first_half().apply_raw(s.amplitudes());
            let second = self.second_half();
            for arm in 0..2 {
                let mut part = [ZERO; DIM];
                part[4 * arm..4 * arm + 4].copy_from_slice(&mid[4 * arm..4 * arm + 4]);
                parts.push((1.0 - v, second.apply_raw(&part)));
            }
        }
        parts
    }

    /// Normalized output intensities `[I₀, I₁]` of the two ports.
    pub fn port_intensities(&self, s: &TriState) -> [f64; 2] {
        self.output_components(s).iter().fold([0.0; 2], |acc, (w, amps)| {
            let [a, b] = port_sums(amps);
            [acc[0] + w * a, acc[1] + w * b]
        })
    }
}

pub(crate) fn port_sums(amps: &[C64; DIM]) -> [f64; 2] {
    let sum = |k: usize| amps[4 * k..4 * k + 4].iter().map(|a| a.norm_sqr()).sum();
    [sum(0), sum(1)]
}

/// Camera readout of both ports: raw integrated intensities `i0`, `i1`,
/// background levels `b0`, `b1` recorded with the beam off, and the
/// interferometer phase they were taken at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortIntensities {
    pub i0: f64,
    pub i1: f64,
    pub b0: f64,
    pub b1: f64,
    pub phi: f64,
}

impl PortIntensities {
    pub fn corrected(&self) -> (f64, f64) {
        (self.i0 - self.b0, self.i1 - self.b1)
    }

    /// (I₀ − I₁)/(I₀ + I₁) after background subtraction.
    pub fn expectation(&self) -> Result<f64> {
        let (c0, c1) = self.corrected();
        let total = c0 + c1;
        if total.abs() < MIN_INTENSITY {
            return Err(Error::NoIntensity(total));
        }
        Ok((c0 - c1) / total)
    }
}

impl fmt::Display for PortIntensities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I0={} I1={} b0={} b1={} phi={}", self.i0, self.i1, self.b0, self.b1, self.phi)
    }
}

impl FromStr for PortIntensities {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut fields = [None; 5];
        for tok in s.split_whitespace() {
            let (k, v) =
                tok.split_once('=').ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{tok}`")))?;
            let idx = ["I0", "I1", "b0", "b1", "phi"]
                .iter()
                .position(|&name| name == k)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown intensity field `{k}`")))?;
            let v: f64 = v.parse().map_err(|_| Error::InvalidConfig(format!("`{k}`: `{v}` is not a number")))?;
            fields[idx] = Some(v);
        }
        let get =
            |i: usize, name: &str| fields[i].ok_or_else(|| Error::InvalidConfig(format!("missing field `{name}`")));
        Ok(Self { i0: get(0, "I0")?, i1: get(1, "I1")?, b0: get(2, "b0")?, b1: get(3, "b1")?, phi: get(4, "phi")? })
    }
}

/// Reads both ports. With `noise`, each port reads `η·I + b` and the
/// background `b` is reported alongside so it can be subtracted.
pub fn read_ports(m: &MzimModel, s: &TriState, noise: Option<&ImperfectionConfig>) -> PortIntensities {
    let [i0, i1] = m.port_intensities(s);
    let (eta, b) = noise.map_or((1.0, 0.0), |c| (c.detector_efficiency, c.dark_noise));
    PortIntensities { i0: eta * i0 + b, i1: eta * i1 + b, b0: b, b1: b, phi: m.phi }
}

/// Finds the phase in [0, 2π) that maximizes the light leaving `target_port`
/// for a probe confined to one path.
///
/// A 64-point scan brackets the maximum, golden-section search refines it.
pub fn calibrate(m: &MzimModel, probe: &TriState, target_port: u8) -> Result<f64> {
    m.validate()?;
    if target_port > 1 {
        return Err(Error::InvalidConfig(format!("port {target_port} does not exist")));
    }
    if probe.path_probability(0) > EXACT_TOL && probe.path_probability(1) > EXACT_TOL {
        return Err(Error::ProbeOnBothPaths);
    }
    let port = target_port as usize;
    let intensity = |phi: f64| MzimModel { phi, ..*m }.port_intensities(probe)[port];

    const COARSE: usize = 64;
    let step = TAU / COARSE as f64;
    let best =
        (0..COARSE).map(|k| k as f64 * step).max_by(|a, b| intensity(*a).total_cmp(&intensity(*b))).unwrap_or(0.0);
    let phi = golden_section_max(intensity, best - step, best + step, 1e-8);
    let phi = phi.rem_euclid(TAU);
    // fold values a rounding step below 2π back to 0
    Ok(if TAU - phi < 1e-7 { 0.0 } else { phi })
}

/// Maximizes a unimodal function on [a, b] to within `tol` in the argument.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Port intensities over `steps` evenly spaced phases from `from` to `to`.
pub fn sweep_phi(m: &MzimModel, probe: &TriState, from: f64, to: f64, steps: usize) -> Result<Vec<(f64, f64, f64)>> {
    m.validate()?;
    if steps < 2 {
        return Err(Error::InvalidConfig(format!("a sweep needs at least 2 steps, got {steps}")));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidConfig("sweep bounds must be finite".into()));
    }
    Ok((0..steps)
        .map(|k| {
            let phi = from + (to - from) * k as f64 / (steps - 1) as f64;
            let [i0, i1] = MzimModel { phi, ..*m }.port_intensities(probe);
            (phi, i0, i1)
        })
        .collect())
}

/// Angular distance on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{expectation, Operator8, Pauli, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn routes_basis_states_by_parity() {
        let m = MzimModel::ideal();
        for i in 0..DIM {
            let parity = (i.count_ones() % 2) as usize;
            let [i0, i1] = m.port_intensities(&TriState::basis_at(i));
            let out = [i0, i1];
            assert!((out[parity] - 1.0).abs() < EXACT_TOL, "basis {i}: {out:?}");
            assert!(out[1 - parity].abs() < EXACT_TOL);
        }
    }

    #[test]
    fn ports_conserve_intensity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = TriState::random(&mut rng);
            for m in [MzimModel::with_phi(1.3), MzimModel { visibility: 0.4, bs1_t: 0.3, bs2_t: 0.8, phi: 2.0 }] {
                let [i0, i1] = m.port_intensities(&s);
                assert!((i0 + i1 - 1.0).abs() < EXACT_TOL);
            }
        }
    }

    #[test]
    fn single_path_probe_fringe_is_cos_squared() {
        let probe = TriState::basis(0, 0, 0);
        for k in 0..=40 {
            let phi = k as f64 * TAU / 40.0;
            let [i0, _] = MzimModel::with_phi(phi).port_intensities(&probe);
            assert!((i0 - (phi / 2.0).cos().powi(2)).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn transfer_matrix_is_unitary() {
        let m = MzimModel { bs1_t: 0.2, bs2_t: 0.7, phi: 0.3, visibility: 1.0 };
        let u = m.unitary();
        let uu = &u.dagger() * &u;
        assert!(uu.distance(&Operator8::identity()) < EXACT_TOL);
    }

    #[test]
    fn intensity_difference_equals_zzz() {
        let zzz = Operator8::pauli_string([Pauli::Z; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let s = TriState::random(&mut rng);
            let e = read_ports(&MzimModel::ideal(), &s, None).expectation().unwrap();
            assert!((e - expectation(&s, &zzz).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn unbalanced_splitters_shrink_zzz() {
        let t = 0.6;
        let m = MzimModel { bs1_t: t, bs2_t: t, ..MzimModel::ideal() };
        let e = read_ports(&m, &TriState::ghz_mermin(), None).expectation().unwrap();
        assert!((e - (1.0 - (2.0 * t - 1.0).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn equal_path_superposition_splits_evenly() {
        let s = TriState::normalized([ONE, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ZERO]).unwrap();
        let p = read_ports(&MzimModel::ideal(), &s, None);
        assert!((p.i0 - 0.5).abs() < 1e-12 && (p.i1 - 0.5).abs() < 1e-12);
        assert!(p.expectation().unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_visibility_splits_single_path_evenly() {
        let m = MzimModel { visibility: 0.0, ..MzimModel::ideal() };
        for i in 0..DIM {
            let [i0, i1] = m.port_intensities(&TriState::basis_at(i));
            assert!((i0 - 0.5).abs() < 1e-12 && (i1 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_cancels_after_subtraction() {
        let cfg = ImperfectionConfig { detector_efficiency: 0.7, dark_noise: 0.05, ..ImperfectionConfig::ideal() };
        let s = TriState::ghz_mermin();
        let clean = read_ports(&MzimModel::ideal(), &s, None).expectation().unwrap();
        let noisy = read_ports(&MzimModel::ideal(), &s, Some(&cfg));
        assert!((noisy.i0 - (0.7 + 0.05)).abs() < 1e-12);
        assert!((noisy.expectation().unwrap() - clean).abs() < 1e-12);
    }

    #[test]
    fn no_light_is_an_error() {
        let p = PortIntensities { i0: 0.1, i1: 0.1, b0: 0.1, b1: 0.1, phi: 0.0 };
        assert!(matches!(p.expectation(), Err(Error::NoIntensity(_))));
    }

    #[test]
    fn record_round_trips() {
        let p = PortIntensities { i0: 0.25, i1: 0.75, b0: 0.001, b1: 0.002, phi: -0.5 };
        assert_eq!(p.to_string().parse::<PortIntensities>().unwrap(), p);
        assert!("I0=1 I1=2".parse::<PortIntensities>().is_err());
        assert!("I0=1 I1=2 b0=0 b1=0 phi=x".parse::<PortIntensities>().is_err());
    }

    #[test]
    fn calibration_finds_parity_phase() {
        let m = MzimModel::ideal();
        let even = TriState::basis(0, 1, 1);
        let odd = TriState::basis(0, 0, 1);
        assert!(phase_distance(calibrate(&m, &even, 0).unwrap(), 0.0) < 1e-6);
        assert!(phase_distance(calibrate(&m, &odd, 1).unwrap(), 0.0) < 1e-6);
        assert!(phase_distance(calibrate(&m, &odd, 0).unwrap(), PI) < 1e-6);
        let on_arm1 = TriState::basis(1, 0, 0);
        assert!(phase_distance(calibrate(&m, &on_arm1, 1).unwrap(), 0.0) < 1e-6);
    }

    #[test]
    fn calibration_agrees_with_dense_sweep() {
        let m = MzimModel::ideal();
        let probe = TriState::product(
            [ONE, ZERO],
            &crate::state::PairState::normalized([c(0.6), c(0.0), c(0.0), c(0.8)]).unwrap(),
        )
        .unwrap();
        let found = calibrate(&m, &probe, 1).unwrap();
        let sweep = sweep_phi(&m, &probe, 0.0, TAU, 100_001).unwrap();
        let oracle = sweep.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap().0;
        assert!(phase_distance(found, oracle) < 1e-4, "{found} vs {oracle}");
        assert!((0.0..TAU).contains(&found));
    }

    #[test]
    fn calibration_rejects_two_path_probe() {
        assert_eq!(calibrate(&MzimModel::ideal(), &TriState::ghz_mermin(), 0).unwrap_err(), Error::ProbeOnBothPaths);
    }

    #[test]
    fn sweep_validates_steps() {
        let probe = TriState::basis(0, 0, 0);
        assert!(sweep_phi(&MzimModel::ideal(), &probe, 0.0, 1.0, 1).is_err());
        let rows = sweep_phi(&MzimModel::ideal(), &probe, 0.0, TAU, 5).unwrap();
        assert_eq!(rows.len(), 5);
        assert!((rows[4].0 - TAU).abs() < 1e-15);
    }
}
