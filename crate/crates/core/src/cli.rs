//! Command-line front end. `run` does the work so tests can drive it without
//! spawning a process.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{compile, parse, rewrite};
use crate::error::Error;
use crate::imperfection::ImperfectionConfig;
use crate::mermin::{
    algebraic_expectation, fit_from, prepare_ghz, render_setting, run_experiment, table1_fit_start, MeasurementSetting,
    TABLE1_STDERRS, TABLE1_TARGETS,
};
use crate::mzim::{sweep_phi, MzimModel};
use crate::render::{composite, pgm_bytes, to_pgm, Grid, IntensityImage, PgmDepth, DEFAULT_EXTENT, DEFAULT_GRID};
use crate::state::{fidelity, TriState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "ghz-optics", version, about = "Classical-light GHZ/Mermin experiment simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a bench file, rewrite it and check the two circuits agree.
    Compile { bench: PathBuf },
    /// Run the preparation chain and report the resulting state.
    Prepare {
        #[command(flatten)]
        setup: Setup,
    },
    /// Measure the four Mermin correlators and write summary, CSV and images.
    Mermin {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 9)]
        frames: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
        /// Skip writing port images.
        #[arg(long)]
        no_images: bool,
    },
    /// Sweep the interferometer phase for a single-path probe.
    SweepPhi {
        #[command(flatten)]
        setup: Setup,
        /// Parity of the probe's (P, M) state, injected on input path 0.
        #[arg(long, value_enum, default_value_t = Parity::Even)]
        probe: Parity,
        #[arg(long, default_value = "0", value_parser = parse_angle, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value = "2pi", value_parser = parse_angle, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the two output ports for one or all settings.
    Render {
        #[command(flatten)]
        setup: Setup,
        /// ZZZ, XXZ, XZX, ZXX or `all`.
        #[arg(long, default_value = "all")]
        setting: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Fit imperfection knobs to four target correlators and print the config.
    Fit {
        /// ZZZ,XXZ,XZX,ZXX targets. Defaults to the reported values, in which
        /// case the reported error bars are matched as well.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        targets: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.005)]
        tolerance: f64,
        #[arg(long, default_value_t = 9)]
        frames: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Setup {
    /// Imperfection config file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Half-width of the field of view in beam waists.
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    extent: f64,
    #[arg(long, value_enum, default_value_t = Depth::Eight)]
    depth: Depth,
    /// Also write both ports side by side as `<setting>_ports.pgm`.
    #[arg(long)]
    composite: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Ideal,
    Table1,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => EXIT_PARSE,
            Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::Infeasible { .. } => EXIT_CONFIG,
            _ => EXIT_INTERNAL,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) }
}

/// Accepts plain numbers and multiples of π such as `pi`, `2pi`, `-0.5*pi`.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*').trim();
        let k = match coef {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| format!("`{s}` is not an angle"))?,
        };
        return Ok(k * std::f64::consts::PI);
    }
    t.parse::<f64>().map_err(|_| format!("`{s}` is not an angle"))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Compile { bench } => cmd_compile(&bench, out),
        Command::Prepare { setup } => cmd_prepare(&load_config(&setup)?, out),
        Command::Mermin { setup, frames, out: dir, image, no_images } => {
            let cfg = load_config(&setup)?;
            cmd_mermin(&cfg, frames, &dir, (!no_images).then_some(&image), out)
        }
        Command::SweepPhi { setup, probe, from, to, steps, out: dest } => {
            let csv = cmd_sweep_phi(&load_config(&setup)?, probe == Parity::Odd, from, to, steps)?;
            match dest {
                Some(path) => write_file(&path, csv.as_bytes())?,
                None => out.write_all(csv.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?,
            }
            Ok(EXIT_OK)
        }
        Command::Render { setup, setting, out: dir, image } => {
            let cfg = load_config(&setup)?;
            let settings = if setting.eq_ignore_ascii_case("all") {
                MeasurementSetting::MERMIN.to_vec()
            } else {
                vec![setting.parse::<MeasurementSetting>()?]
            };
            create_dir(&dir)?;
            for s in settings {
                write_setting_images(&cfg, s, &dir, &image)?;
                let _ = writeln!(out, "{}", dir.join(format!("{s}_port0.pgm")).display());
                let _ = writeln!(out, "{}", dir.join(format!("{s}_port1.pgm")).display());
            }
            Ok(EXIT_OK)
        }
        Command::Fit { targets, tolerance, frames, seed, out: dest } => {
            let (targets, errs) = match targets {
                Some(v) => (
                    v.try_into().map_err(|_| CliError { code: EXIT_CONFIG, message: "need four targets".into() })?,
                    None,
                ),
                None => (TABLE1_TARGETS, Some(TABLE1_STDERRS)),
            };
            let mut start = table1_fit_start();
            if let Some(seed) = seed {
                start.seed = seed;
            }
            let report = fit_from(&start, targets, errs, tolerance, frames)?;
            let mut text = String::new();
            let _ = writeln!(text, "# imperfections fitted to <ZZZ>, <XXZ>, <XZX>, <ZXX> = {targets:?}");
            let _ = writeln!(text, "# over {frames} frames per setting; produced by `ghz-optics fit`");
            text.push_str(&report.config.to_config_string());
            match dest {
                Some(path) => write_file(&path, text.as_bytes())?,
                None => out.write_all(text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn load_config(setup: &Setup) -> Result<ImperfectionConfig, CliError> {
    let mut cfg = match (&setup.config, setup.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            ImperfectionConfig::parse(&text)
                .map_err(|e| CliError { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) })?
        }
        (None, Some(Preset::Table1)) => ImperfectionConfig::table1(),
        (None, _) => ImperfectionConfig::ideal(),
    };
    if let Some(seed) = setup.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn cmd_compile(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let program = parse(&src).map_err(|d| CliError { code: EXIT_PARSE, message: format!("{}:{d}", path.display()) })?;
    let original = compile(&program)?;
    let rewritten = rewrite(&original);
    let verdict = crate::bench::equivalent(&original, &rewritten);
    let mut text = String::new();
    let _ = writeln!(text, "# original ({} gates)", original.len());
    let _ = write!(text, "{original}");
    let _ = writeln!(text, "# rewritten ({} gates)", rewritten.len());
    let _ = write!(text, "{rewritten}");
    let _ = writeln!(text, "{verdict}");
    out.write_all(text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?;
    Ok(if verdict.equivalent { EXIT_OK } else { EXIT_INTERNAL })
}

fn cmd_prepare(cfg: &ImperfectionConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    cfg.validate()?;
    let s = prepare_ghz(Some(cfg));
    let mut text = String::new();
    let _ = writeln!(text, "# amplitudes |p P M>");
    for i in 0..8 {
        let a = s.amplitudes()[i];
        let _ = writeln!(text, "|{}{}{}>  {:+.6} {:+.6}i", i >> 2 & 1, i >> 1 & 1, i & 1, a.re, a.im);
    }
    let _ = writeln!(text, "fidelity {:.12}", fidelity(&s, &TriState::ghz_mermin()));
    for setting in MeasurementSetting::MERMIN {
        let _ = writeln!(text, "<{setting}> {:+.6}", algebraic_expectation(&s, setting));
    }
    out.write_all(text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

/// Writes `summary.txt`, `frames.csv` and, with `image`, the port images.
fn cmd_mermin(
    cfg: &ImperfectionConfig,
    frames: usize,
    dir: &Path,
    image: Option<&ImageArgs>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let result = run_experiment(cfg, frames)?;
    if result.m.is_nan() || result.m.abs() > 4.0 + 1e-9 {
        return Err(CliError { code: EXIT_INTERNAL, message: format!("M = {} exceeds the algebraic bound", result.m) });
    }
    create_dir(dir)?;
    let summary = result.summary_table();
    write_file(&dir.join("summary.txt"), summary.as_bytes())?;
    write_file(&dir.join("frames.csv"), result.frames_csv().as_bytes())?;
    if let Some(image) = image {
        for s in MeasurementSetting::MERMIN {
            write_setting_images(cfg, s, dir, image)?;
        }
    }
    out.write_all(summary.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

fn cmd_sweep_phi(cfg: &ImperfectionConfig, odd: bool, from: f64, to: f64, steps: usize) -> Result<String, CliError> {
    cfg.validate()?;
    let probe = if odd { TriState::basis(0, 0, 1) } else { TriState::basis(0, 0, 0) };
    let model = MzimModel { phi: 0.0, ..MzimModel::from_config(cfg) };
    let rows = sweep_phi(&model, &probe, from, to, steps)?;
    let mut csv = String::from("phi,I0,I1\n");
    for (phi, i0, i1) in rows {
        let _ = writeln!(csv, "{phi},{i0},{i1}");
    }
    Ok(csv)
}

fn write_setting_images(
    cfg: &ImperfectionConfig,
    setting: MeasurementSetting,
    dir: &Path,
    image: &ImageArgs,
) -> Result<(), CliError> {
    let grid = Grid::new(image.grid, image.extent)?;
    let ports: [IntensityImage; 2] = render_setting(setting, cfg, grid)?;
    let full_scale = ports[0].max().max(ports[1].max());
    let depth = match image.depth {
        Depth::Eight => PgmDepth::Eight,
        Depth::Sixteen => PgmDepth::Sixteen,
    };
    for img in &ports {
        let bytes = to_pgm(img, full_scale, depth);
        write_file(&dir.join(format!("{setting}_port{}.pgm", img.port)), &bytes)?;
    }
    if image.composite {
        let (w, h, pixels) = composite(&[&ports[0], &ports[1]], image.grid / 16)?;
        write_file(&dir.join(format!("{setting}_ports.pgm")), &pgm_bytes(w, h, &pixels, full_scale, depth))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_accept_multiples_of_pi() {
        use std::f64::consts::PI;
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("-0.5*pi").unwrap(), -0.5 * PI);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn error_codes_follow_error_kind() {
        assert_eq!(CliError::from(Error::InvalidConfig("x".into())).code, EXIT_CONFIG);
        assert_eq!(CliError::from(Error::NonUnitary).code, EXIT_INTERNAL);
    }
}
