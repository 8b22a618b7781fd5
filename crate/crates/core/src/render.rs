//! Transverse intensity images of the output ports and PGM export.
//!
//! Lengths are in units of the beam waist w. Mode |0⟩ is HG01 ∝ y·e^{−r²/w²},
//! mode |1⟩ is HG10 ∝ x·e^{−r²/w²}; both are normalized numerically on the grid
//! so that an image integrates to the port's share of the beam power.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::state::{TriState, C64};

pub const MIN_GRID: usize = 32;
pub const MIN_EXTENT: f64 = 2.0;
pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_EXTENT: f64 = 3.0;

/// Square pixel grid centred on the beam axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n: usize,
    /// Half-width of the field of view.
    pub extent: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { n: DEFAULT_GRID, extent: DEFAULT_EXTENT }
    }
}

impl Grid {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::InvalidGrid(format!("{n} pixels per side, need at least {MIN_GRID}")));
        }
        if !(extent >= MIN_EXTENT && extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width {extent} w, need at least {MIN_EXTENT} w")));
        }
        Ok(Self { n, extent })
    }

    pub fn pitch(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Centre of column `c`.
    pub fn x(&self, c: usize) -> f64 {
        -self.extent + (c as f64 + 0.5) * self.pitch()
    }

    /// Centre of row `r`; row 0 is the top of the image.
    pub fn y(&self, r: usize) -> f64 {
        self.extent - (r as f64 + 0.5) * self.pitch()
    }
}

/// HG01 and HG10 sampled on a grid, each with unit discrete norm.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    grid: Grid,
    hg01: Vec<f64>,
    hg10: Vec<f64>,
}

impl ModeBasis {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n;
        let mut hg01 = Vec::with_capacity(n * n);
        let mut hg10 = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let (x, y) = (grid.x(c), grid.y(r));
                let g = (-(x * x + y * y)).exp();
                hg01.push(y * g);
                hg10.push(x * g);
            }
        }
        let area = grid.pitch() * grid.pitch();
        for v in [&mut hg01, &mut hg10] {
            let norm = (v.iter().map(|a| a * a).sum::<f64>() * area).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        Self { grid, hg01, hg10 }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Intensity |E_x|² + |E_y|² of the field whose (P, M) amplitudes are
    /// `pair` in the order |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn intensity(&self, pair: &[C64; 4]) -> Vec<f64> {
        self.hg01
            .iter()
            .zip(&self.hg10)
            .map(|(&m0, &m1)| {
                let ex = pair[0] * m0 + pair[1] * m1;
                let ey = pair[2] * m0 + pair[3] * m1;
                ex.norm_sqr() + ey.norm_sqr()
            })
            .collect()
    }
}

/// Intensity image of one port, row-major with row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityImage {
    pub grid: Grid,
    pub port: u8,
    pixels: Vec<f64>,
}

impl IntensityImage {
    pub fn from_pixels(grid: Grid, port: u8, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != grid.n * grid.n {
            return Err(Error::InvalidGrid(format!("{} pixels for a {}×{} grid", pixels.len(), grid.n, grid.n)));
        }
        Ok(Self { grid, port, pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.grid.n + col]
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    /// Bilinear interpolation at (x, y); zero outside the sampled area.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fc = (x + g.extent) / g.pitch() - 0.5;
        let fr = (g.extent - y) / g.pitch() - 0.5;
        if fc < 0.0 || fr < 0.0 || fc > (g.n - 1) as f64 || fr > (g.n - 1) as f64 {
            return 0.0;
        }
        let (c0, r0) = (fc.floor() as usize, fr.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(g.n - 1), (r0 + 1).min(g.n - 1));
        let (tx, ty) = (fc - c0 as f64, fr - r0 as f64);
        let top = self.pixel(r0, c0) * (1.0 - tx) + self.pixel(r0, c1) * tx;
        let bottom = self.pixel(r1, c0) * (1.0 - tx) + self.pixel(r1, c1) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { pixels: self.pixels.iter().map(|p| p * factor).collect(), ..self.clone() }
    }

    pub fn with_offset(&self, level: f64) -> Self {
        Self { pixels: self.pixels.iter().map(|p| p + level).collect(), ..self.clone() }
    }

    /// Pixel-wise weighted sum of images on the same grid.
    pub fn combine(port: u8, parts: &[(f64, &IntensityImage)]) -> Result<Self> {
        let grid =
            parts.first().map(|(_, img)| img.grid).ok_or_else(|| Error::InvalidGrid("nothing to combine".into()))?;
        if parts.iter().any(|(_, img)| img.grid != grid) {
            return Err(Error::InvalidGrid("images have different grids".into()));
        }
        let mut pixels = vec![0.0; grid.n * grid.n];
        for (w, img) in parts {
            for (acc, p) in pixels.iter_mut().zip(&img.pixels) {
                *acc += w * p;
            }
        }
        Ok(Self { grid, port, pixels })
    }
}

/// Intensity at output port `port` of the (post-interferometer) state `s`.
pub fn render_port(s: &TriState, port: u8, grid: Grid) -> Result<IntensityImage> {
    render_with(&ModeBasis::new(Grid::new(grid.n, grid.extent)?), s, port)
}

/// As `render_port`, reusing precomputed mode functions.
pub fn render_with(basis: &ModeBasis, s: &TriState, port: u8) -> Result<IntensityImage> {
    render_amplitudes(basis, &s.path_component(check_port(port)?), port)
}

/// Renders raw (P, M) amplitudes of one port, which need not be normalized.
pub fn render_amplitudes(basis: &ModeBasis, pair: &[C64; 4], port: u8) -> Result<IntensityImage> {
    check_port(port)?;
    Ok(IntensityImage { grid: basis.grid, port, pixels: basis.intensity(pair) })
}

fn check_port(port: u8) -> Result<u8> {
    if port > 1 {
        return Err(Error::InvalidConfig(format!("port {port} does not exist")));
    }
    Ok(port)
}

/// Riemann sum of the image over the field of view.
pub fn integrate(img: &IntensityImage) -> f64 {
    img.pixels.iter().sum::<f64>() * img.grid.pitch() * img.grid.pitch()
}

/// Removes a constant dark level per pixel.
pub fn subtract_background(img: &IntensityImage, level: f64) -> IntensityImage {
    img.with_offset(-level)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmDepth {
    Eight,
    Sixteen,
}

impl PgmDepth {
    fn maxval(self) -> u32 {
        match self {
            PgmDepth::Eight => 255,
            PgmDepth::Sixteen => 65535,
        }
    }
}

/// Binary PGM (P5). Pixel values are scaled so that `full_scale` maps to the
/// maximum grey level; pass the largest pixel across both ports to keep them
/// comparable. Negative values clamp to black.
pub fn to_pgm(img: &IntensityImage, full_scale: f64, depth: PgmDepth) -> Vec<u8> {
    pgm_bytes(img.grid.n, img.grid.n, &img.pixels, full_scale, depth)
}

/// As `to_pgm` for an arbitrary `width`×`height` row-major raster.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[f64], full_scale: f64, depth: PgmDepth) -> Vec<u8> {
    let maxval = depth.maxval();
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for &p in pixels {
        let v = if full_scale > 0.0 { ((p / full_scale).clamp(0.0, 1.0) * maxval as f64).round() as u32 } else { 0 };
        match depth {
            PgmDepth::Eight => out.push(v as u8),
            PgmDepth::Sixteen => out.extend_from_slice(&(v as u16).to_be_bytes()),
        }
    }
    out
}

pub fn write_pgm(path: &Path, img: &IntensityImage, full_scale: f64, depth: PgmDepth) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_pgm(img, full_scale, depth))
}

/// Reads back a binary PGM written by `to_pgm`: (width, height, maxval, levels).
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, u32, Vec<u32>)> {
    let bad = |m: &str| Error::InvalidGrid(format!("malformed PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?.to_string());
    }
    if fields[0] != "P5" {
        return Err(bad("magic is not P5"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("non-numeric header field"));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])? as u32);
    let data = &bytes[pos + 1..];
    let levels: Vec<u32> = if maxval < 256 {
        data.iter().map(|&b| b as u32).collect()
    } else {
        data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32).collect()
    };
    if levels.len() != w * h {
        return Err(bad("pixel count does not match header"));
    }
    Ok((w, h, maxval, levels))
}

/// Places images side by side with a `gap`-pixel black column between them.
pub fn composite(images: &[&IntensityImage], gap: usize) -> Result<(usize, usize, Vec<f64>)> {
    let first = images.first().ok_or_else(|| Error::InvalidGrid("nothing to composite".into()))?;
    let n = first.grid.n;
    if images.iter().any(|img| img.grid.n != n) {
        return Err(Error::InvalidGrid("images have different sizes".into()));
    }
    let width = images.len() * n + (images.len() - 1) * gap;
    let mut pixels = vec![0.0; width * n];
    for (k, img) in images.iter().enumerate() {
        let x0 = k * (n + gap);
        for r in 0..n {
            pixels[r * width + x0..r * width + x0 + n].copy_from_slice(&img.pixels[r * n..(r + 1) * n]);
        }
    }
    Ok((width, n, pixels))
}
