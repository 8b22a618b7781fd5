//! Physical error knobs and their flat `key = value` file format.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Imperfections of the optical setup and the camera.
///
/// Angles are in degrees, the residual phase in radians and the dark-noise
/// level is a fraction of the full beam intensity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImperfectionConfig {
    /// Intensity transmittance of the preparation beam splitter.
    pub bs_prep_t: f64,
    /// Transmittance shared by both interferometer beam splitters.
    pub bs_mzim_t: f64,
    /// Transmittance of the extra beam splitter used for X on the path.
    pub bs_meas_t: f64,
    /// Zero-mean Gaussian orientation jitter of every waveplate and Dove
    /// prism, redrawn each frame.
    pub angle_jitter_deg: f64,
    /// Fixed orientation error of the measurement half-wave plate.
    pub hwp_offset_deg: f64,
    /// Fixed orientation error of the measurement Dove prism.
    pub dp_offset_deg: f64,
    /// Fringe visibility of the interferometer, 1 = perfect overlap.
    pub visibility: f64,
    pub detector_efficiency: f64,
    pub dark_noise: f64,
    /// Phase left over after calibration.
    pub residual_phase: f64,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 20_240_517;

impl Default for ImperfectionConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Keys accepted in configuration files, in canonical order.
pub const CONFIG_KEYS: [&str; 11] = [
    "bs_prep_t",
    "bs_mzim_t",
    "bs_meas_t",
    "angle_jitter_deg",
    "hwp_offset_deg",
    "dp_offset_deg",
    "visibility",
    "detector_efficiency",
    "dark_noise",
    "residual_phase",
    "seed",
];

impl ImperfectionConfig {
    pub fn ideal() -> Self {
        Self {
            bs_prep_t: 0.5,
            bs_mzim_t: 0.5,
            bs_meas_t: 0.5,
            angle_jitter_deg: 0.0,
            hwp_offset_deg: 0.0,
            dp_offset_deg: 0.0,
            visibility: 1.0,
            detector_efficiency: 1.0,
            dark_noise: 0.0,
            residual_phase: 0.0,
            seed: DEFAULT_SEED,
        }
    }

    /// Fitted preset that reproduces the reported four correlators over nine
    /// frames with the default seed. Not a measurement of any real setup.
    pub fn table1() -> Self {
        Self::parse(TABLE1_PRESET).expect("committed preset parses")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, t) in [("bs_prep_t", self.bs_prep_t), ("bs_mzim_t", self.bs_mzim_t), ("bs_meas_t", self.bs_meas_t)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("{name} = {t} must lie in (0, 1)"));
            }
        }
        if !(self.angle_jitter_deg >= 0.0 && self.angle_jitter_deg.is_finite()) {
            return bad(format!("angle_jitter_deg = {} must be finite and ≥ 0", self.angle_jitter_deg));
        }
        for (name, v) in [
            ("hwp_offset_deg", self.hwp_offset_deg),
            ("dp_offset_deg", self.dp_offset_deg),
            ("residual_phase", self.residual_phase),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("visibility", self.visibility), ("detector_efficiency", self.detector_efficiency)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if self.detector_efficiency == 0.0 {
            return bad("detector_efficiency must be positive".into());
        }
        if !(self.dark_noise >= 0.0 && self.dark_noise.is_finite()) {
            return bad(format!("dark_noise = {} must be finite and ≥ 0", self.dark_noise));
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the ideal configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::ideal();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", ln + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", ln + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num =
            || value.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("`{key}`: `{value}` is not a number")));
        match key {
            "bs_prep_t" => self.bs_prep_t = num()?,
            "bs_mzim_t" => self.bs_mzim_t = num()?,
            "bs_meas_t" => self.bs_meas_t = num()?,
            "angle_jitter_deg" => self.angle_jitter_deg = num()?,
            "hwp_offset_deg" => self.hwp_offset_deg = num()?,
            "dp_offset_deg" => self.dp_offset_deg = num()?,
            "visibility" => self.visibility = num()?,
            "detector_efficiency" => self.detector_efficiency = num()?,
            "dark_noise" => self.dark_noise = num()?,
            "residual_phase" => self.residual_phase = num()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("`seed`: `{value}` is not an unsigned integer")))?
            }
            other => {
                return Err(Error::InvalidConfig(format!("unknown key `{other}` (known: {})", CONFIG_KEYS.join(", "))))
            }
        }
        Ok(())
    }

    /// Serializes every key in canonical order; `parse` reads it back exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let values = [
            self.bs_prep_t,
            self.bs_mzim_t,
            self.bs_meas_t,
            self.angle_jitter_deg,
            self.hwp_offset_deg,
            self.dp_offset_deg,
            self.visibility,
            self.detector_efficiency,
            self.dark_noise,
            self.residual_phase,
        ];
        for (key, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(s, "{key} = {v}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    pub fn is_ideal(&self) -> bool {
        let ideal = Self { seed: self.seed, ..Self::ideal() };
        *self == ideal
    }
}

/// Committed Table-1 preset (also shipped as `presets/table1.cfg`).
pub const TABLE1_PRESET: &str = include_str!("../../../presets/table1.cfg");

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ideal_is_valid_and_ideal() {
        let cfg = ImperfectionConfig::ideal();
        cfg.validate().unwrap();
        assert!(cfg.is_ideal());
        assert!(ImperfectionConfig::parse("").unwrap().is_ideal());
    }

    #[test]
    fn parse_reads_keys_and_comments() {
        let cfg = ImperfectionConfig::parse("# comment\nvisibility = 0.9  # trailing\n\nseed=7\n").unwrap();
        assert_eq!(cfg.visibility, 0.9);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn parse_rejects_bad_input() {
        for text in [
            "visibility = 1.5",
            "bs_mzim_t = 0",
            "angle_jitter_deg = -1",
            "dark_noise = -0.1",
            "colour = blue",
            "visibility 0.9",
            "seed = -3",
            "visibility = abc",
            "detector_efficiency = 0",
        ] {
            assert!(matches!(ImperfectionConfig::parse(text), Err(Error::InvalidConfig(_))), "{text}");
        }
        let err = ImperfectionConfig::parse("visibility = 0.9\nfoo = 1").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn table1_preset_is_valid() {
        let cfg = ImperfectionConfig::table1();
        cfg.validate().unwrap();
        assert!(!cfg.is_ideal());
    }

    proptest! {
        #[test]
        fn config_text_round_trips(
            t in 0.01f64..0.99, v in 0.0f64..=1.0, j in 0.0f64..5.0, off in -30.0f64..30.0, seed in any::<u64>()
        ) {
            let cfg = ImperfectionConfig {
                bs_meas_t: t, visibility: v, angle_jitter_deg: j, hwp_offset_deg: off, seed,
                ..ImperfectionConfig::ideal()
            };
            prop_assert_eq!(ImperfectionConfig::parse(&cfg.to_config_string()).unwrap(), cfg);
        }
    }
}
