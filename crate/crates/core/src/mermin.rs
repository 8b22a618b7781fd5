//! Mermin-inequality experiment: preparation, basis changes, readout and the
//! statistics over camera frames.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::elements::{dove_prism, hwp, split_matrix, swp_operator};
use crate::error::{Error, Result};
pub use crate::imperfection::ImperfectionConfig;
use crate::mzim::{read_ports, MzimModel, PortIntensities};
use crate::render::{render_amplitudes, Grid, IntensityImage, ModeBasis};
use crate::state::{
    controlled_on, expectation, hadamard_matrix, lift_matrix, Operator8, Pauli, TriState, Wire, C64, ZERO,
};

/// Local basis of one wire: Z is read directly, X after a Hadamard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

/// Measurement basis of the three wires in (p, P, M) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementSetting(pub [Basis; 3]);

impl MeasurementSetting {
    pub const ZZZ: Self = Self([Basis::Z, Basis::Z, Basis::Z]);
    pub const XXZ: Self = Self([Basis::X, Basis::X, Basis::Z]);
    pub const XZX: Self = Self([Basis::X, Basis::Z, Basis::X]);
    pub const ZXX: Self = Self([Basis::Z, Basis::X, Basis::X]);

    /// The four Mermin terms in reporting order.
    pub const MERMIN: [Self; 4] = [Self::ZZZ, Self::XXZ, Self::XZX, Self::ZXX];

    pub fn is_x(&self, w: Wire) -> bool {
        self.0[2 - w.shift()] == Basis::X
    }

    pub fn pauli_string(&self) -> Operator8 {
        Operator8::pauli_string(self.0.map(|b| match b {
            Basis::Z => Pauli::Z,
            Basis::X => Pauli::X,
        }))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(match b {
                Basis::Z => "Z",
                Basis::X => "X",
            })?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 3 {
            return Err(Error::InvalidConfig(format!("setting `{s}` must have three letters")));
        }
        let mut out = [Basis::Z; 3];
        for (slot, c) in out.iter_mut().zip(chars) {
            *slot = match c.to_ascii_uppercase() {
                'Z' => Basis::Z,
                'X' => Basis::X,
                _ => return Err(Error::InvalidConfig(format!("setting `{s}`: `{c}` is neither Z nor X"))),
            };
        }
        Ok(Self(out))
    }
}

/// Ideal basis change: a Hadamard on every X wire.
pub fn basis_change(setting: MeasurementSetting) -> Operator8 {
    let mut u = Operator8::identity();
    for w in [Wire::Path, Wire::Pol, Wire::Mode] {
        if setting.is_x(w) {
            u = &lift_matrix(&hadamard_matrix(), w) * &u;
        }
    }
    u
}

/// ⟨s|σ⊗σ⊗σ|s⟩ computed directly from the Pauli string.
pub fn algebraic_expectation(s: &TriState, setting: MeasurementSetting) -> f64 {
    expectation(s, &setting.pauli_string()).expect("Pauli strings are Hermitian")
}

/// Orientation errors of one camera frame, in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameJitter {
    pub prep_hwp: [f64; 2],
    pub meas_hwp: f64,
    pub meas_dp: f64,
}

impl FrameJitter {
    /// Draws the four angles in a fixed order so that a seed pins every frame.
    pub fn sample<R: Rng + ?Sized>(sigma_deg: f64, rng: &mut R) -> Self {
        let mut draw = || sigma_deg * rng.sample::<f64, _>(StandardNormal);
        let (a, b, c, d) = (draw(), draw(), draw(), draw());
        Self { prep_hwp: [a, b], meas_hwp: c, meas_dp: d }
    }
}

/// The preparation chain from |000⟩: SWP, BS, HWP@0° on arm 0, HWP@−45° on arm 1.
pub fn preparation_operator(cfg: &ImperfectionConfig, jitter: &FrameJitter) -> Operator8 {
    let bs = lift_matrix(&split_matrix(cfg.bs_prep_t), Wire::Path);
    let h0 = controlled_on(Wire::Path, 0, &hwp(jitter.prep_hwp[0])).expect("distinct wires");
    let h1 = controlled_on(Wire::Path, 1, &hwp(-45.0 + jitter.prep_hwp[1])).expect("distinct wires");
    Operator8::sequence(&[swp_operator(), bs, h0, h1])
}

pub fn prepare_ghz_with(cfg: &ImperfectionConfig, jitter: &FrameJitter) -> TriState {
    preparation_operator(cfg, jitter).apply(&TriState::basis(0, 0, 0)).expect("preparation chain is unitary")
}

/// Prepared state; with jitter, one frame drawn from `cfg.seed`.
pub fn prepare_ghz(cfg: Option<&ImperfectionConfig>) -> TriState {
    let cfg = cfg.copied().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    prepare_ghz_with(&cfg, &FrameJitter::sample(cfg.angle_jitter_deg, &mut rng))
}

/// Basis change built from the physical elements: the measurement BS on the
/// path, a HWP at 22.5° on the polarization and a Dove prism at 22.5° on the
/// mode, each with its configured error.
pub fn physical_basis_change(setting: MeasurementSetting, cfg: &ImperfectionConfig, jitter: &FrameJitter) -> Operator8 {
    let mut u = Operator8::identity();
    if setting.is_x(Wire::Path) {
        u = &lift_matrix(&split_matrix(cfg.bs_meas_t), Wire::Path) * &u;
    }
    if setting.is_x(Wire::Pol) {
        let g = hwp(22.5 + cfg.hwp_offset_deg + jitter.meas_hwp);
        u = &lift_matrix(g.matrix(), Wire::Pol) * &u;
    }
    if setting.is_x(Wire::Mode) {
        let g = dove_prism(22.5 + cfg.dp_offset_deg + jitter.meas_dp);
        u = &lift_matrix(g.matrix(), Wire::Mode) * &u;
    }
    u
}

/// One frame: basis change, interferometer, camera readout.
pub fn measure_frame(
    s: &TriState,
    setting: MeasurementSetting,
    cfg: &ImperfectionConfig,
    jitter: &FrameJitter,
) -> PortIntensities {
    let rotated = physical_basis_change(setting, cfg, jitter).apply(s).expect("basis change is unitary");
    read_ports(&MzimModel::from_config(cfg), &rotated, Some(cfg))
}

/// Noise-free expectation of one setting (systematic errors only).
pub fn measure_setting(s: &TriState, setting: MeasurementSetting, cfg: Option<&ImperfectionConfig>) -> Result<f64> {
    let cfg = cfg.copied().unwrap_or_default();
    cfg.validate()?;
    measure_frame(s, setting, &cfg, &FrameJitter::default()).expectation()
}

/// Camera images of both ports for one setting, systematic errors included
/// and frame jitter left out. Each image carries the dark level and is scaled
/// by the detector efficiency, like the raw frames.
pub fn render_setting(
    setting: MeasurementSetting,
    cfg: &ImperfectionConfig,
    grid: Grid,
) -> Result<[IntensityImage; 2]> {
    cfg.validate()?;
    let basis = ModeBasis::new(Grid::new(grid.n, grid.extent)?);
    let jitter = FrameJitter::default();
    let rotated = physical_basis_change(setting, cfg, &jitter)
        .apply(&prepare_ghz_with(cfg, &jitter))
        .expect("basis change is unitary");
    let components = MzimModel::from_config(cfg).output_components(&rotated);
    let mut out = Vec::with_capacity(2);
    for port in 0..2u8 {
        let images = components
            .iter()
            .map(|(w, amps)| {
                let pair = [0, 1, 2, 3].map(|k| amps[4 * port as usize + k]);
                render_amplitudes(&basis, &pair, port).map(|img| (*w, img))
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<(f64, &IntensityImage)> = images.iter().map(|(w, img)| (*w, img)).collect();
        out.push(
            IntensityImage::combine(port, &refs)?
                .scaled(cfg.detector_efficiency)
                .with_offset(cfg.dark_noise / area(&grid)),
        );
    }
    Ok([out.remove(0), out.remove(0)])
}

/// Dark level per unit area so that it integrates to `dark_noise`.
fn area(grid: &Grid) -> f64 {
    (2.0 * grid.extent).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermResult {
    pub setting: MeasurementSetting,
    pub mean: f64,
    /// Standard error of the mean; needs at least two frames.
    pub stderr: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRecord {
    pub setting: MeasurementSetting,
    pub frame: usize,
    pub ports: PortIntensities,
    pub expectation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MerminResult {
    /// In `MeasurementSetting::MERMIN` order.
    pub terms: [TermResult; 4],
    pub m: f64,
    pub m_stderr: Option<f64>,
    pub frames: Vec<FrameRecord>,
}

impl MerminResult {
    pub fn means(&self) -> [f64; 4] {
        self.terms.map(|t| t.mean)
    }

    /// Fixed-width summary: one column per correlator followed by M.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let mut header = String::new();
        let mut means = String::new();
        let mut errs = String::new();
        for t in &self.terms {
            header.push_str(&format!("{:>10}", format!("<{}>", t.setting)));
            means.push_str(&format!("{:>10.4}", t.mean));
            errs.push_str(&format!("{:>10}", t.stderr.map_or("-".to_string(), |e| format!("±{e:.4}"))));
        }
        header.push_str(&format!("{:>10}", "M"));
        means.push_str(&format!("{:>10.4}", self.m));
        errs.push_str(&format!("{:>10}", self.m_stderr.map_or("-".to_string(), |e| format!("±{e:.4}"))));
        for line in [header, means, errs] {
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// One row per frame: `setting,frame,phi,I0,I1,b0,b1,expectation`.
    pub fn frames_csv(&self) -> String {
        let mut out = String::from("setting,frame,phi,I0,I1,b0,b1,expectation\n");
        for r in &self.frames {
            let p = &r.ports;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.setting, r.frame, p.phi, p.i0, p.i1, p.b0, p.b1, r.expectation
            ));
        }
        out
    }
}

/// M = ⟨ZZZ⟩ − ⟨XXZ⟩ − ⟨XZX⟩ − ⟨ZXX⟩
pub fn mermin_combination(means: [f64; 4]) -> f64 {
    means[0] - means[1] - means[2] - means[3]
}

/// Measures a fixed state over `frames` frames per setting.
///
/// Only the measurement elements jitter here; the state is reused as given.
pub fn mermin_m(s: &TriState, cfg: &ImperfectionConfig, frames: usize) -> Result<MerminResult> {
    run_frames(cfg, frames, |_| *s)
}

/// Full experiment: every frame re-prepares the state with its own jitter.
pub fn run_experiment(cfg: &ImperfectionConfig, frames: usize) -> Result<MerminResult> {
    run_frames(cfg, frames, |j| prepare_ghz_with(cfg, j))
}

fn run_frames<F: Fn(&FrameJitter) -> TriState>(
    cfg: &ImperfectionConfig,
    frames: usize,
    state: F,
) -> Result<MerminResult> {
    cfg.validate()?;
    if frames == 0 {
        return Err(Error::InvalidConfig("at least one frame is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(4 * frames);
    let mut terms = [TermResult { setting: MeasurementSetting::ZZZ, mean: 0.0, stderr: None }; 4];
    for (term, setting) in terms.iter_mut().zip(MeasurementSetting::MERMIN) {
        let mut values = Vec::with_capacity(frames);
        for frame in 0..frames {
            let jitter = FrameJitter::sample(cfg.angle_jitter_deg, &mut rng);
            let ports = measure_frame(&state(&jitter), setting, cfg, &jitter);
            let e = ports.expectation()?;
            values.push(e);
            records.push(FrameRecord { setting, frame, ports, expectation: e });
        }
        let (mean, stderr) = mean_and_stderr(&values);
        *term = TermResult { setting, mean, stderr };
    }
    let m = mermin_combination(terms.map(|t| t.mean));
    let m_stderr = if frames >= 2 {
        Some(terms.iter().map(|t| t.stderr.unwrap_or(0.0).powi(2)).sum::<f64>().sqrt())
    } else {
        None
    };
    Ok(MerminResult { terms, m, m_stderr, frames: records })
}

fn mean_and_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Result of searching product states for the largest Mermin value.
#[derive(Clone, Debug)]
pub struct SeparableScan {
    pub best_m: f64,
    pub best_state: TriState,
    /// Bloch angles (θ, φ) of the three factors at the optimum.
    pub angles: [(f64, f64); 3],
}

/// Mermin value of a product state from the factors' Bloch angles.
fn product_m(angles: &[(f64, f64); 3]) -> f64 {
    let z = angles.map(|(t, _)| t.cos());
    let x = angles.map(|(t, p)| t.sin() * p.cos());
    z[0] * z[1] * z[2] - x[0] * x[1] * z[2] - x[0] * z[1] * x[2] - z[0] * x[1] * x[2]
}

fn product_state(angles: &[(f64, f64); 3]) -> TriState {
    let q = angles.map(|(t, p)| [C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)]);
    let mut amps = [ZERO; 8];
    for (i, a) in amps.iter_mut().enumerate() {
        *a = q[0][(i >> 2) & 1] * q[1][(i >> 1) & 1] * q[2][i & 1];
    }
    TriState::normalized(amps).expect("product of unit vectors")
}

/// Maximizes M over product states by random restarts plus gradient ascent
/// on the six Bloch angles. |000⟩ is always among the starting points.
pub fn separable_bound_scan(restarts: usize, steps: usize, seed: u64) -> SeparableScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = ([(0.0, 0.0); 3], product_m(&[(0.0, 0.0); 3]));
    for r in 0..restarts.max(1) {
        let mut a = if r == 0 {
            [(0.0, 0.0); 3]
        } else {
            [(); 3].map(|_| {
                let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
                (theta, rng.random::<f64>() * std::f64::consts::TAU)
            })
        };
        let mut lr = 0.2;
        let mut value = product_m(&a);
        for _ in 0..steps {
            let g = product_m_gradient(&a);
            let mut trial = a;
            for (k, (t, p)) in trial.iter_mut().enumerate() {
                *t += lr * g[k].0;
                *p += lr * g[k].1;
            }
            let v = product_m(&trial);
            if v > value {
                a = trial;
                value = v;
                lr *= 1.2;
            } else {
                lr *= 0.5;
                if lr < 1e-12 {
                    break;
                }
            }
        }
        if value > best.1 {
            best = (a, value);
        }
    }
    let state = product_state(&best.0);
    let best_m = mermin_combination(MeasurementSetting::MERMIN.map(|s| algebraic_expectation(&state, s)));
    SeparableScan { best_m, best_state: state, angles: best.0 }
}

fn product_m_gradient(a: &[(f64, f64); 3]) -> [(f64, f64); 3] {
    let z = a.map(|(t, _)| t.cos());
    let x = a.map(|(t, p)| t.sin() * p.cos());
    // ∂M/∂z_k and ∂M/∂x_k with the other two factors fixed
    let dz = [z[1] * z[2] - x[1] * x[2], z[0] * z[2] - x[0] * x[2], z[0] * z[1] - x[0] * x[1]];
    let dx = [-x[1] * z[2] - z[1] * x[2], -x[0] * z[2] - z[0] * x[2], -x[0] * z[1] - z[0] * x[1]];
    let mut g = [(0.0, 0.0); 3];
    for k in 0..3 {
        let (t, p) = a[k];
        g[k] = (dz[k] * -t.sin() + dx[k] * t.cos() * p.cos(), dx[k] * -t.sin() * p.sin());
    }
    g
}

/// Largest M reachable when every local observable has a predetermined ±1
/// value (local hidden variables), by enumeration of all 64 assignments.
pub fn lhv_bound() -> f64 {
    (0..64u32)
        .map(|bits| {
            let v = |k: u32| if bits >> k & 1 == 1 { -1.0 } else { 1.0 };
            let (z, x) = ([v(0), v(1), v(2)], [v(3), v(4), v(5)]);
            z[0] * z[1] * z[2] - x[0] * x[1] * z[2] - x[0] * z[1] * x[2] - z[0] * x[1] * x[2]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of fitting imperfection knobs to four target correlators.
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub config: ImperfectionConfig,
    pub achieved: [f64; 4],
    pub residuals: [f64; 4],
    pub feasible: bool,
}

/// Frames per setting used when fitting.
pub const FIT_FRAMES: usize = 9;

/// Fits the imperfection knobs so that the frame means of the four settings
/// (in `MeasurementSetting::MERMIN` order) match `targets` within `tol`.
pub fn fit_table1(targets: [f64; 4], tol: f64) -> Result<FitReport> {
    fit_from(&ImperfectionConfig::ideal(), targets, None, tol, FIT_FRAMES)
}

/// Coordinate descent on the squared residuals starting at `start`.
///
/// With `stderr_targets`, the squared mismatch of the standard errors is added
/// to the cost; it mostly pins the jitter, which barely moves the means.
/// Feasibility is judged on the means alone.
pub fn fit_from(
    start: &ImperfectionConfig,
    targets: [f64; 4],
    stderr_targets: Option<[f64; 4]>,
    tol: f64,
    frames: usize,
) -> Result<FitReport> {
    if let Some(t) = targets.iter().find(|t| !(-1.0..=1.0).contains(*t)) {
        return Err(Error::InvalidConfig(format!("target correlator {t} outside [-1, 1]")));
    }
    start.validate()?;
    let eval = |c: &ImperfectionConfig| -> Option<([f64; 4], f64)> {
        let r = run_experiment(c, frames).ok()?;
        let means = r.means();
        let mut cost: f64 = means.iter().zip(&targets).map(|(a, b)| (a - b).powi(2)).sum();
        if let Some(errs) = stderr_targets {
            cost += r.terms.iter().zip(errs).map(|(t, e)| (t.stderr.unwrap_or(0.0) - e).powi(2)).sum::<f64>();
        }
        Some((means, cost))
    };
    let mut cfg = *start;
    let (mut means, mut cost) =
        eval(&cfg).ok_or_else(|| Error::InvalidConfig("start point cannot be evaluated".into()))?;

    type Knob = (fn(&mut ImperfectionConfig) -> &mut f64, f64, f64, f64);
    let knobs: [Knob; 6] = [
        (|c| &mut c.visibility, 0.0, 1.0, 0.05),
        (|c| &mut c.bs_meas_t, 0.05, 0.95, 0.05),
        (|c| &mut c.hwp_offset_deg, -45.0, 45.0, 4.0),
        (|c| &mut c.dp_offset_deg, -45.0, 45.0, 4.0),
        (|c| &mut c.bs_mzim_t, 0.05, 0.95, 0.02),
        (|c| &mut c.angle_jitter_deg, 0.0, 10.0, 0.5),
    ];
    let mut steps: Vec<f64> = knobs.iter().map(|k| k.3).collect();
    for _ in 0..400 {
        if cost.sqrt() < tol * 1e-3 || steps.iter().all(|s| *s < 1e-9) {
            break;
        }
        for (k, (field, lo, hi, _)) in knobs.iter().enumerate() {
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let mut trial = cfg;
                let v = field(&mut trial);
                *v = (*v + dir * steps[k]).clamp(*lo, *hi);
                if trial == cfg {
                    continue;
                }
                if let Some((m, c)) = eval(&trial) {
                    if c < cost {
                        cfg = trial;
                        means = m;
                        cost = c;
                        improved = true;
                        break;
                    }
                }
            }
            if improved {
                steps[k] *= 1.5;
            } else {
                steps[k] *= 0.5;
            }
        }
    }
    let residuals = [0, 1, 2, 3].map(|i| means[i] - targets[i]);
    let report =
        FitReport { config: cfg, achieved: means, residuals, feasible: residuals.iter().all(|r| r.abs() <= tol) };
    if report.feasible {
        Ok(report)
    } else {
        Err(Error::Infeasible { residuals, best: Box::new(cfg) })
    }
}

/// Reported correlators in `MeasurementSetting::MERMIN` order.
pub const TABLE1_TARGETS: [f64; 4] = [0.87, -0.53, -0.63, -0.59];
/// Reported statistical errors of the same four correlators.
pub const TABLE1_STDERRS: [f64; 4] = [0.03, 0.02, 0.02, 0.02];

/// Starting point used to produce the committed Table-1 preset.
pub fn table1_fit_start() -> ImperfectionConfig {
    ImperfectionConfig {
        angle_jitter_deg: 1.5,
        detector_efficiency: 0.98,
        dark_noise: 0.004,
        ..ImperfectionConfig::ideal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::fidelity;
    use proptest::prelude::*;

    const SETTINGS: [MeasurementSetting; 4] = MeasurementSetting::MERMIN;

    #[test]
    fn setting_labels_round_trip() {
        for s in SETTINGS {
            assert_eq!(s.to_string().parse::<MeasurementSetting>().unwrap(), s);
        }
        assert!("XY Z".parse::<MeasurementSetting>().is_err());
        assert!("XYZ".parse::<MeasurementSetting>().is_err());
        assert!(MeasurementSetting::XXZ.is_x(Wire::Path) && MeasurementSetting::XXZ.is_x(Wire::Pol));
        assert!(!MeasurementSetting::XXZ.is_x(Wire::Mode));
    }

    #[test]
    fn ideal_preparation_is_the_mermin_state() {
        let s = prepare_ghz(None);
        assert!(fidelity(&s, &TriState::ghz_mermin()) > 1.0 - 1e-12);
    }

    #[test]
    fn ideal_experiment_reaches_four() {
        let r = run_experiment(&ImperfectionConfig::ideal(), 3).unwrap();
        assert!((r.m - 4.0).abs() < 1e-9);
        for (t, want) in r.terms.iter().zip([1.0, -1.0, -1.0, -1.0]) {
            assert!((t.mean - want).abs() < 1e-9);
            assert!(t.stderr.unwrap() < 1e-9);
        }
    }

    #[test]
    fn single_frame_has_no_error_bars() {
        let r = run_experiment(&ImperfectionConfig::ideal(), 1).unwrap();
        assert!(r.terms.iter().all(|t| t.stderr.is_none()) && r.m_stderr.is_none());
        assert!(run_experiment(&ImperfectionConfig::ideal(), 0).is_err());
    }

    #[test]
    fn basis_state_gives_one() {
        let r = mermin_m(&TriState::basis(0, 0, 0), &ImperfectionConfig::ideal(), 1).unwrap();
        assert!((r.m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn physical_basis_change_is_ideal_without_errors() {
        let cfg = ImperfectionConfig::ideal();
        for s in SETTINGS {
            let d = physical_basis_change(s, &cfg, &FrameJitter::default()).distance(&basis_change(s));
            assert!(d < 1e-12, "{s}: {d}");
        }
    }

    #[test]
    fn interferometer_reads_every_correlator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let s = TriState::random(&mut rng);
            for setting in SETTINGS {
                let e = measure_setting(&s, setting, None).unwrap();
                assert!((e - algebraic_expectation(&s, setting)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = ImperfectionConfig::table1();
        assert_eq!(run_experiment(&cfg, 5).unwrap(), run_experiment(&cfg, 5).unwrap());
        let other = ImperfectionConfig { seed: cfg.seed + 1, ..cfg };
        assert_ne!(run_experiment(&cfg, 5).unwrap().m, run_experiment(&other, 5).unwrap().m);
    }

    #[test]
    fn jitter_slightly_lowers_fidelity() {
        let cfg = ImperfectionConfig { angle_jitter_deg: 1.0, ..ImperfectionConfig::ideal() };
        let f = fidelity(&prepare_ghz(Some(&cfg)), &TriState::ghz_mermin());
        assert!(f > 0.99 && f < 1.0, "{f}");
    }

    #[test]
    fn violation_falls_with_visibility() {
        let m_at =
            |v: f64| run_experiment(&ImperfectionConfig { visibility: v, ..ImperfectionConfig::ideal() }, 1).unwrap().m;
        let values: Vec<f64> = (0..=10).map(|k| m_at(k as f64 / 10.0)).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{values:?}");
        assert!(values[0].abs() < 1e-12 && (values[10] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rendered_ports_reproduce_readout() {
        let cfg = ImperfectionConfig::table1();
        let grid = Grid::new(128, 4.0).unwrap();
        let s = prepare_ghz_with(&cfg, &FrameJitter::default());
        for setting in SETTINGS {
            let [a, b] = render_setting(setting, &cfg, grid).unwrap();
            let ports = measure_frame(&s, setting, &cfg, &FrameJitter::default());
            assert!((crate::render::integrate(&a) - ports.i0).abs() < 1e-3, "{setting}");
            assert!((crate::render::integrate(&b) - ports.i1).abs() < 1e-3, "{setting}");
        }
    }

    #[test]
    fn lhv_enumeration_gives_two() {
        assert_eq!(lhv_bound(), 2.0);
    }

    /// Coarse grid over the Bloch spheres, independent of the ascent.
    fn grid_product_max(n: usize) -> f64 {
        let angles: Vec<(f64, f64)> = (0..=n)
            .flat_map(|i| {
                (0..2 * n).map(move |j| {
                    (std::f64::consts::PI * i as f64 / n as f64, std::f64::consts::PI * j as f64 / n as f64)
                })
            })
            .collect();
        let bloch: Vec<(f64, f64)> = angles.iter().map(|(t, p)| (t.cos(), t.sin() * p.cos())).collect();
        let mut best = f64::NEG_INFINITY;
        for a in &bloch {
            for b in &bloch {
                for c in &bloch {
                    let m = a.0 * b.0 * c.0 - a.1 * b.1 * c.0 - a.1 * b.0 * c.1 - a.0 * b.1 * c.1;
                    best = best.max(m);
                }
            }
        }
        best
    }

    #[test]
    fn separable_scan_agrees_with_grid() {
        let scan = separable_bound_scan(200, 200, 9);
        let grid = grid_product_max(12);
        assert!(scan.best_m <= 2.0 + 1e-9);
        assert!(scan.best_m >= grid - 1e-9, "scan {} below grid {grid}", scan.best_m);
        assert!((scan.best_m - product_m(&scan.angles)).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_out_of_range_targets() {
        assert!(matches!(fit_table1([1.2, -0.5, -0.5, -0.5], 0.01), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn fit_of_ideal_targets_is_ideal() {
        let r = fit_table1([1.0, -1.0, -1.0, -1.0], 1e-6).unwrap();
        assert!(r.config.is_ideal());
    }

    #[test]
    fn fit_reports_infeasible_targets() {
        // ⟨ZZZ⟩ = 1 forces perfect visibility and balance, which pins the rest
        match fit_from(&ImperfectionConfig::ideal(), [1.0, 0.9, 0.9, 0.9], None, 1e-3, 1) {
            Err(Error::Infeasible { residuals, .. }) => assert!(residuals.iter().any(|r| r.abs() > 1e-3)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn mermin_value_is_bounded(seed in any::<u64>(), v in 0.0f64..=1.0, t in 0.1f64..0.9, off in -20.0f64..20.0) {
            let s = TriState::random(&mut ChaCha8Rng::seed_from_u64(seed));
            let cfg = ImperfectionConfig { visibility: v, bs_mzim_t: t, hwp_offset_deg: off, ..ImperfectionConfig::ideal() };
            let r = mermin_m(&s, &cfg, 1).unwrap();
            prop_assert!(r.m.abs() <= 4.0 + 1e-9);
        }
    }
}
