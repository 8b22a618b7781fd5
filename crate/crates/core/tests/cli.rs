use std::path::Path;
use std::process::Command;

use ghz_optics::cli::{run, EXIT_CONFIG, EXIT_OK, EXIT_PARSE};
use ghz_optics::mermin::TABLE1_TARGETS;
use ghz_optics::mzim::MzimModel;
use ghz_optics::render::{render_port, to_pgm, Grid, PgmDepth};
use ghz_optics::state::TriState;

const WORKSPACE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["ghz-optics"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compile_prints_both_listings_and_verdict() {
    let (code, out, _) = call(&["compile", &format!("{WORKSPACE}/benches/mzim.bench")]);
    assert_eq!(code, EXIT_OK);
    let expected = "# original (5 gates)\nH p\nP p 0\nCZ p,P\nCZ p,M\nH p\n\
                    # rewritten (5 gates)\nH p\nP p 0\nH p\nCNOT P,p\nCNOT M,p\n\
                    equivalent (phase 1)\n";
    assert_eq!(out, expected);
}

#[test]
fn compile_reports_parse_errors_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bad.bench");
    std::fs::write(&bench, "bs\nhwp@12 on arm7\n").unwrap();
    let (code, out, err) = call(&["compile", path_str(&bench)]);
    assert_eq!(code, EXIT_PARSE);
    assert!(out.is_empty());
    assert!(err.contains("bad.bench:2:"), "{err}");
}

#[test]
fn compile_of_empty_file_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("empty.bench");
    std::fs::write(&bench, "# nothing here\n").unwrap();
    let (code, out, _) = call(&["compile", path_str(&bench)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "# original (0 gates)\n# rewritten (0 gates)\nequivalent (phase 1)\n");
}

#[test]
fn missing_bench_is_a_config_error() {
    let (code, _, err) = call(&["compile", "/definitely/not/here.bench"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("here.bench"));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ghz-optics");
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bad.bench");
    std::fs::write(&bench, "laser\n").unwrap();
    let status = Command::new(exe).args(["compile", path_str(&bench)]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_PARSE));
    let status =
        Command::new(exe).args(["mermin", "--frames", "0", "--out", path_str(dir.path())]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_CONFIG));
    let ok = Command::new(exe).args(["prepare"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("fidelity 1.000000000000"));
}

#[test]
fn ideal_mermin_writes_summary_csv_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&["mermin", "--frames", "2", "--grid", "64", "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_OK);
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(summary, out);
    assert!(summary.lines().nth(1).unwrap().trim().ends_with("4.0000"), "{summary}");

    let csv = std::fs::read_to_string(dir.path().join("frames.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "setting,frame,phi,I0,I1,b0,b1,expectation");
    assert_eq!(lines.count(), 8);

    // golden ideal render: all light of the ZZZ run leaves port 0
    let grid = Grid::new(64, 3.0).unwrap();
    let output = MzimModel::ideal().unitary().apply(&TriState::ghz_mermin()).unwrap();
    let golden = [render_port(&output, 0, grid).unwrap(), render_port(&output, 1, grid).unwrap()];
    let scale = golden[0].max().max(golden[1].max());
    for (k, img) in golden.iter().enumerate() {
        let written = std::fs::read(dir.path().join(format!("ZZZ_port{k}.pgm"))).unwrap();
        assert_eq!(written, to_pgm(img, scale, PgmDepth::Eight), "port {k}");
    }
    for s in ["XXZ", "XZX", "ZXX"] {
        assert!(dir.path().join(format!("{s}_port1.pgm")).exists());
    }
}

#[test]
fn table1_preset_runs_within_band() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&["mermin", "--preset", "table1", "--no-images", "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_OK);
    let m: f64 = out.lines().nth(1).unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!((2.45..=2.80).contains(&m), "{m}");
    assert!(!dir.path().join("ZZZ_port0.pgm").exists());
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "visibility = 1.4\n").unwrap();
    let (code, _, err) = call(&["mermin", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("visibility"), "{err}");
    std::fs::write(&cfg, "wavelength = 532\n").unwrap();
    let (code, _, _) = call(&["prepare", "--config", path_str(&cfg)]);
    assert_eq!(code, EXIT_CONFIG);
}

fn sweep_rows(csv: &str) -> Vec<[f64; 3]> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phi,I0,I1"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn sweep_follows_cos_squared() {
    let (code, out, _) = call(&["sweep-phi", "--from", "0", "--to", "2pi", "--steps", "101"]);
    assert_eq!(code, EXIT_OK);
    let rows = sweep_rows(&out);
    assert_eq!(rows.len(), 101);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    for [phi, i0, i1] in rows {
        assert!((i0 - (phi / 2.0).cos().powi(2)).abs() < 1e-9);
        assert!((i0 + i1 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sweep_without_interference_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.cfg");
    std::fs::write(&cfg, "visibility = 0\n").unwrap();
    let csv = dir.path().join("sweep.csv");
    let (code, _, _) = call(&["sweep-phi", "--config", path_str(&cfg), "--steps", "9", "--out", path_str(&csv)]);
    assert_eq!(code, EXIT_OK);
    for [_, i0, i1] in sweep_rows(&std::fs::read_to_string(&csv).unwrap()) {
        assert!((i0 - 0.5).abs() < 1e-12 && (i1 - 0.5).abs() < 1e-12);
    }
}

#[test]
fn sweep_needs_two_steps() {
    assert_eq!(call(&["sweep-phi", "--steps", "1"]).0, EXIT_CONFIG);
}

#[test]
fn render_writes_requested_setting() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&[
        "render",
        "--setting",
        "xzx",
        "--grid",
        "40",
        "--depth",
        "16",
        "--composite",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 2);
    let port1 = std::fs::read(dir.path().join("XZX_port1.pgm")).unwrap();
    assert!(port1.starts_with(b"P5\n40 40\n65535\n"));
    assert_eq!(port1.len(), "P5\n40 40\n65535\n".len() + 2 * 40 * 40);
    let composite = std::fs::read(dir.path().join("XZX_ports.pgm")).unwrap();
    assert!(composite.starts_with(b"P5\n82 40\n65535\n"));
    assert!(!dir.path().join("ZZZ_port0.pgm").exists());
    assert_eq!(call(&["render", "--setting", "XYZ", "--out", path_str(dir.path())]).0, EXIT_CONFIG);
    assert_eq!(call(&["render", "--grid", "8", "--out", path_str(dir.path())]).0, EXIT_CONFIG);
}

#[test]
fn fit_validates_targets() {
    let (code, _, err) = call(&["fit", "--targets", "1.5,-0.5,-0.5,-0.5"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("outside"));
}

#[test]
fn fit_regenerates_committed_preset() {
    let (code, out, _) = call(&["fit", "--tolerance", "0.005"]);
    assert_eq!(code, EXIT_OK);
    let fitted = ghz_optics::imperfection::ImperfectionConfig::parse(&out).unwrap();
    let committed = std::fs::read_to_string(format!("{WORKSPACE}/presets/table1.cfg")).unwrap();
    assert_eq!(fitted, ghz_optics::imperfection::ImperfectionConfig::parse(&committed).unwrap());
    let r = ghz_optics::mermin::run_experiment(&fitted, 9).unwrap();
    for (got, want) in r.means().iter().zip(TABLE1_TARGETS) {
        assert!((got - want).abs() <= 0.005);
    }
}
