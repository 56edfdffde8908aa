use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use filmtag::designer::{objective, DesignTarget};
use filmtag::files::paper_stack;
use filmtag::tag::ppm::read_ppm;
use filmtag::tmm::{self, Channel, IncidenceSpec, WavelengthGrid};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filmtag")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_spectra_and_reports_extrema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spectra.csv");
    let stack = data("paper_stack.json");
    let out = run(&["simulate", path_str(&stack), "--grid", "350:800:1", "--out", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 452);
    assert!(text.starts_with("wavelength_nm,R,T,A\n350,"));

    let reported = stdout_json(&out);
    let maxima: Vec<f64> = serde_json::from_value(reported["T"]["maxima"].clone()).unwrap();
    let resp = tmm::simulate(&paper_stack(), &WavelengthGrid::visible(), &IncidenceSpec::normal()).unwrap();
    assert_eq!(maxima, tmm::local_maxima(&resp.wavelengths, resp.channel(Channel::T)));
    assert!(maxima.iter().any(|m| (m - 405.0).abs() <= 20.0), "{maxima:?}");
    assert!(reported["R"]["minima"].is_array());
}

#[test]
fn simulate_oblique_polarized() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let stack = data("paper_stack.json");
    let out = run(&["simulate", path_str(&stack), "--grid", "400:700:10", "--angle", "45", "--pol", "p", "--out", path_str(&csv)]);
    assert_eq!(code(&out), 0);
    let resp = tmm::SpectralResponse::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(resp.len(), 31);
}

#[test]
fn invalid_inputs_exit_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let stack = data("paper_stack.json");
    let cases: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "missing.json".into()],
        vec!["simulate".into(), path_str(&stack).into(), "--grid".into(), "800:350:1".into(), "--out".into(), path_str(&csv).into()],
        vec!["simulate".into(), path_str(&stack).into(), "--grid".into(), "350:800".into()],
        vec!["simulate".into(), path_str(&stack).into(), "--angle".into(), "95".into()],
        vec!["color".into(), path_str(&data("designs/ar_coating.json")).into()],
        vec!["optimize".into(), path_str(&stack).into()],
        vec!["tag".into(), path_str(&data("tags/tag_5cb.json")).into(), "--temp".into(), "45".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    assert!(!csv.exists());
}

#[test]
fn color_modes_of_the_nanocavity() {
    let stack = data("paper_stack.json");
    let rgb = |mode: &str| -> Vec<f64> {
        let out = run(&["color", path_str(&stack), "--mode", mode]);
        assert_eq!(code(&out), 0);
        serde_json::from_value(stdout_json(&out)["rgb"].clone()).unwrap()
    };
    let r = rgb("R");
    assert!(r[0] >= r[1] && r[1] > r[2], "{r:?}");
    let t = rgb("T");
    assert!(t[2] > t[0] && t[2] > t[1], "{t:?}");
}

#[test]
fn color_of_unit_reflector_under_equal_energy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("unit.csv");
    let mut text = String::from("wavelength_nm,R,T,A\n");
    for w in (380..=780).step_by(5) {
        text.push_str(&format!("{w},1,0,0\n"));
    }
    fs::write(&csv, text).unwrap();
    let out = run(&["color", path_str(&csv), "--mode", "R", "--illuminant", "ee"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let (x, y, z) = (v["X"].as_f64().unwrap(), v["Y"].as_f64().unwrap(), v["Z"].as_f64().unwrap());
    assert!((x / (x + y + z) - 1.0 / 3.0).abs() < 2e-3);
    assert!((y / (x + y + z) - 1.0 / 3.0).abs() < 2e-3);
}

#[test]
fn color_rejects_short_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "wavelength_nm,R,T,A\n400,0.5,0.5,0\n500,0.5,0.5,0\n").unwrap();
    assert_eq!(code(&run(&["color", path_str(&csv)])), 2);
}

#[test]
fn optimize_anti_reflection_design() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ar.json");
    let design = data("designs/ar_coating.json");
    let out = run(&["optimize", path_str(&design), "--out", path_str(&out_path)]);
    assert_eq!(code(&out), 0);
    let first = fs::read(&out_path).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    let d = v["thicknesses_nm"][0].as_f64().unwrap();
    assert!((d - 99.6).abs() <= 2.0, "{d}");

    let again = run(&["optimize", path_str(&design)]);
    assert_eq!(again.stdout, first);
}

#[test]
fn optimize_with_single_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(data("designs/ar_coating.json")).unwrap()).unwrap();
    doc["budget"] = 1.into();
    let path = dir.path().join("one.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run(&["optimize", path_str(&path)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["evaluations"], 1);
    assert_eq!(v["converged"], false);
    assert_eq!(v["thicknesses_nm"][0], 125.0);
}

#[test]
fn optimize_paper_design_beats_recipe() {
    let out = run(&["optimize", path_str(&data("designs/paper_design.json"))]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let targets = [DesignTarget::peak_at(405.0, Channel::T), DesignTarget::peak_at(748.0, Channel::T)];
    let baseline = objective(&paper_stack(), &targets).unwrap();
    assert!(v["objective"].as_f64().unwrap() <= baseline);
}

#[test]
fn tag_verdicts_follow_temperature() {
    let cases = [
        ("tags/tag_5cb.json", "25", "reflection", 1, "fail"),
        ("tags/tag_5cb.json", "45", "reflection", 0, "pass"),
        ("tags/tag_5cb.json", "45", "transmission", 0, "pass"),
        ("tags/tag_e7.json", "45", "reflection", 1, "fail"),
        ("tags/tag_e7.json", "80", "reflection", 0, "pass"),
        ("tags/tag_1825.json", "80", "reflection", 1, "fail"),
        ("tags/tag_1825.json", "150", "reflection", 0, "pass"),
    ];
    for (file, temp, mode, want_code, level1) in cases {
        let out = run(&["tag", path_str(&data(file)), "--temp", temp, "--mode", mode, "--authenticate"]);
        assert_eq!(code(&out), want_code, "{file} at {temp}");
        assert_eq!(stdout_json(&out)["level1"], level1, "{file} at {temp}");
    }
}

#[test]
fn tag_render_is_deterministic_ppm() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ppm"), dir.path().join("b.ppm"));
    let tag = data("tags/tag_5cb.json");
    for p in [&a, &b] {
        let out = run(&["tag", path_str(&tag), "--temp", "45", "--render", path_str(p), "--scale", "3"]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let (w, h, _) = read_ppm(&bytes).unwrap();
    assert_eq!((w, h), ((25 + 8) * 3, (25 + 8) * 3));
}

#[test]
fn tag_with_generated_payload_and_custom_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(data("tags/tag_5cb.json")).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("payload");
    let tag = dir.path().join("random.json");
    fs::write(&tag, doc.to_string()).unwrap();
    let out = run(&["tag", path_str(&tag), "--temp", "45", "--authenticate"]);
    assert_eq!(code(&out), 0);

    // A bare glass reference predicts near-white light modules.
    let reference = dir.path().join("glass.json");
    fs::write(
        &reference,
        r#"{"ambient": {"constant": {"n": 1, "k": 0}}, "layers": [], "exit": {"constant": {"n": 1.5, "k": 0}}}"#,
    )
    .unwrap();
    let out = run(&["tag", path_str(&tag), "--temp", "45", "--mode", "transmission", "--authenticate", "--reference", path_str(&reference)]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["level2"], "fail");
}

#[test]
fn data_dir_resolves_relative_materials() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("colorimetry")).unwrap();
    for f in ["cie1931_2deg_5nm.csv", "d65_5nm.csv"] {
        fs::copy(data(&format!("colorimetry/{f}")), dir.path().join("colorimetry").join(f)).unwrap();
    }
    fs::write(dir.path().join("film.csv"), "wavelength_nm,n,k\n300,2.0,0\n900,2.0,0\n").unwrap();
    let stack = dir.path().join("stack.json");
    fs::write(
        &stack,
        r#"{"ambient": {"constant": {"n": 1, "k": 0}}, "layers": [{"material": {"csv": "film.csv"}, "thickness_nm": 68.75}], "exit": {"constant": {"n": 1.5, "k": 0}}}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&["--data-dir", path_str(dir.path()), "simulate", path_str(&stack), "--grid", "550:550.5:1", "--out", path_str(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let resp = tmm::SpectralResponse::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    // Quarter-wave film of index 2 on 1.5 at 550 nm.
    let want = ((1.5f64 - 4.0) / (1.5 + 4.0)).powi(2);
    assert!((resp.reflectance[0] - want).abs() < 1e-8);

    let out = run(&["--data-dir", path_str(dir.path()), "color", path_str(&stack)]);
    assert_eq!(code(&out), 0);
    let out = run(&["--data-dir", "/nonexistent", "color", path_str(&stack)]);
    assert_eq!(code(&out), 2);
}
