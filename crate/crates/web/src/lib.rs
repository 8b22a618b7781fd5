//! Browser bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function returning
//! `Result<_, String>`, so the logic can be tested on the host.

use ghz_optics::imperfection::ImperfectionConfig;
use ghz_optics::mermin::{render_setting, run_experiment, MeasurementSetting};
use ghz_optics::mzim::{sweep_phi, MzimModel};
use ghz_optics::render::{composite, Grid};
use ghz_optics::state::TriState;
use wasm_bindgen::prelude::*;

/// Imperfection knobs exposed as sliders.
#[wasm_bindgen]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knobs {
    pub visibility: f64,
    pub bs_mzim_t: f64,
    pub bs_meas_t: f64,
    pub hwp_offset_deg: f64,
    pub dp_offset_deg: f64,
    pub angle_jitter_deg: f64,
    pub seed: u32,
}

#[wasm_bindgen]
impl Knobs {
    pub fn ideal() -> Knobs {
        Knobs::from_config(&ImperfectionConfig::ideal())
    }

    pub fn table1() -> Knobs {
        Knobs::from_config(&ImperfectionConfig::table1())
    }
}

impl Knobs {
    fn from_config(c: &ImperfectionConfig) -> Knobs {
        Knobs {
            visibility: c.visibility,
            bs_mzim_t: c.bs_mzim_t,
            bs_meas_t: c.bs_meas_t,
            hwp_offset_deg: c.hwp_offset_deg,
            dp_offset_deg: c.dp_offset_deg,
            angle_jitter_deg: c.angle_jitter_deg,
            seed: c.seed as u32,
        }
    }

    /// Knob values on top of the Table-1 camera model (efficiency, dark level).
    pub fn to_config(&self) -> Result<ImperfectionConfig, String> {
        let base = ImperfectionConfig::table1();
        let cfg = ImperfectionConfig {
            visibility: self.visibility,
            bs_mzim_t: self.bs_mzim_t,
            bs_meas_t: self.bs_meas_t,
            hwp_offset_deg: self.hwp_offset_deg,
            dp_offset_deg: self.dp_offset_deg,
            angle_jitter_deg: self.angle_jitter_deg,
            seed: self.seed as u64,
            detector_efficiency: if self.is_ideal() { 1.0 } else { base.detector_efficiency },
            dark_noise: if self.is_ideal() { 0.0 } else { base.dark_noise },
            ..ImperfectionConfig::ideal()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn is_ideal(&self) -> bool {
        let ideal = Knobs { seed: self.seed, ..Knobs::ideal() };
        *self == ideal
    }
}

/// Side-by-side image of both ports as RGBA bytes, `width` = 2·size + gap.
#[derive(Debug)]
pub struct PortImage {
    pub width: usize,
    pub height: usize,
    pub rgba: Vec<u8>,
}

pub fn port_image(knobs: &Knobs, setting: &str, size: usize) -> Result<PortImage, String> {
    let cfg = knobs.to_config()?;
    let setting: MeasurementSetting = setting.parse().map_err(|e: ghz_optics::Error| e.to_string())?;
    let grid = Grid::new(size, 3.0).map_err(|e| e.to_string())?;
    let ports = render_setting(setting, &cfg, grid).map_err(|e| e.to_string())?;
    let scale = ports[0].max().max(ports[1].max());
    let (width, height, pixels) = composite(&[&ports[0], &ports[1]], size / 16).map_err(|e| e.to_string())?;
    let mut rgba = Vec::with_capacity(4 * pixels.len());
    for p in pixels {
        let t = if scale > 0.0 { (p / scale).clamp(0.0, 1.0) } else { 0.0 };
        rgba.extend_from_slice(&heat(t));
    }
    Ok(PortImage { width, height, rgba })
}

/// Black → red → yellow → white.
fn heat(t: f64) -> [u8; 4] {
    let ch = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(3.0 * t), ch(3.0 * t - 1.0), ch(3.0 * t - 2.0), 255]
}

/// Flat `[φ, I₀, I₁, φ, I₀, I₁, …]` over one period for a single-path probe.
pub fn phase_sweep(knobs: &Knobs, odd_probe: bool, steps: usize) -> Result<Vec<f64>, String> {
    let cfg = knobs.to_config()?;
    let probe = if odd_probe { TriState::basis(0, 0, 1) } else { TriState::basis(0, 0, 0) };
    let model = MzimModel { phi: 0.0, ..MzimModel::from_config(&cfg) };
    let rows = sweep_phi(&model, &probe, 0.0, std::f64::consts::TAU, steps).map_err(|e| e.to_string())?;
    Ok(rows.into_iter().flat_map(|(p, a, b)| [p, a, b]).collect())
}

/// `[ZZZ, XXZ, XZX, ZXX, M, err ZZZ, err XXZ, err XZX, err ZXX, err M]`;
/// errors are NaN for a single frame.
pub fn mermin_values(knobs: &Knobs, frames: usize) -> Result<Vec<f64>, String> {
    let r = run_experiment(&knobs.to_config()?, frames).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = r.means().to_vec();
    out.push(r.m);
    out.extend(r.terms.iter().map(|t| t.stderr.unwrap_or(f64::NAN)));
    out.push(r.m_stderr.unwrap_or(f64::NAN));
    Ok(out)
}

#[wasm_bindgen]
pub struct RenderedPorts {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl RenderedPorts {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

#[wasm_bindgen]
pub fn render_ports(knobs: &Knobs, setting: &str, size: usize) -> Result<RenderedPorts, JsError> {
    let img = port_image(knobs, setting, size).map_err(|e| JsError::new(&e))?;
    Ok(RenderedPorts { width: img.width, height: img.height, rgba: img.rgba })
}

#[wasm_bindgen]
pub fn sweep(knobs: &Knobs, odd_probe: bool, steps: usize) -> Result<Vec<f64>, JsError> {
    phase_sweep(knobs, odd_probe, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mermin(knobs: &Knobs, frames: usize) -> Result<Vec<f64>, JsError> {
    mermin_values(knobs, frames).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_knobs_give_four() {
        let v = mermin_values(&Knobs::ideal(), 3).unwrap();
        assert!((v[4] - 4.0).abs() < 1e-9);
        assert!(v[5..].iter().all(|e| e.abs() < 1e-9));
    }

    #[test]
    fn table1_knobs_match_cli_preset() {
        let v = mermin_values(&Knobs::table1(), 9).unwrap();
        let cli = run_experiment(&ImperfectionConfig::table1(), 9).unwrap();
        assert_eq!(v[..4], cli.means());
        assert_eq!(v[4], cli.m);
    }

    #[test]
    fn single_frame_errors_are_nan() {
        let v = mermin_values(&Knobs::ideal(), 1).unwrap();
        assert!(v[5..].iter().all(|e| e.is_nan()));
    }

    #[test]
    fn invalid_knobs_are_reported() {
        let k = Knobs { visibility: 1.5, ..Knobs::ideal() };
        assert!(mermin_values(&k, 1).unwrap_err().contains("visibility"));
        assert!(port_image(&Knobs::ideal(), "ABC", 64).is_err());
        assert!(port_image(&Knobs::ideal(), "ZZZ", 8).is_err());
    }

    #[test]
    fn port_image_has_dark_second_port_when_ideal() {
        let img = port_image(&Knobs::ideal(), "ZZZ", 64).unwrap();
        assert_eq!((img.width, img.height), (132, 64));
        assert_eq!(img.rgba.len(), 4 * 132 * 64);
        let right_half_lit = (0..64).any(|r| (68..132).any(|c| img.rgba[4 * (r * 132 + c)] > 0));
        let left_half_lit = (0..64).any(|r| (0..64).any(|c| img.rgba[4 * (r * 132 + c)] > 0));
        assert!(left_half_lit && !right_half_lit);
    }

    #[test]
    fn sweep_is_flat_without_visibility() {
        let k = Knobs { visibility: 0.0, ..Knobs::ideal() };
        let v = phase_sweep(&k, false, 11).unwrap();
        assert_eq!(v.len(), 33);
        assert!(v.chunks(3).all(|c| (c[1] - 0.5).abs() < 1e-12));
        let ideal = phase_sweep(&Knobs::ideal(), true, 3).unwrap();
        // odd probe starts in port 1
        assert!(ideal[1].abs() < 1e-12 && (ideal[2] - 1.0).abs() < 1e-12);
    }
}
