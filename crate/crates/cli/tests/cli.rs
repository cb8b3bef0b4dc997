use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hsmdie::fixtures::{self, DraftedPocket};
use hsmdie::mesh::stl;

fn hsmdie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsmdie"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pocket_stl(dir: &Path) -> PathBuf {
    let path = dir.join("pocket.stl");
    stl::write_binary(&path, &DraftedPocket::standard().build().triangles).unwrap();
    path
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn pocket_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let out = tmp.path().join("out");
    let o = hsmdie(&[s(&input), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&out);
    let features = r["features"].as_array().unwrap();
    assert_eq!(features.len(), 3);

    let pocket = DraftedPocket::standard();
    let walls: f64 = ["wall+x", "wall-x", "wall+y", "wall-y"]
        .iter()
        .map(|p| pocket.analytic_part_area(p))
        .sum();
    let mut floor_areas = vec![pocket.analytic_part_area("top"), pocket.analytic_part_area("floor")];
    floor_areas.sort_by(f64::total_cmp);
    let mut got_floors = Vec::new();
    for f in features {
        let area = f["area"].as_f64().unwrap();
        match f["kind"].as_str().unwrap() {
            "simple_floor" => {
                assert_eq!(f["tool"], "end_mill");
                assert_eq!(f["strategy"], "surfacing");
                got_floors.push(area);
            }
            "flank" => {
                assert_eq!(f["tool"], "ball_end_mill");
                assert_eq!(f["strategy"], "z_level");
                assert!((area - walls).abs() / walls < 1e-6, "{area} vs {walls}");
            }
            k => panic!("unexpected kind {k}"),
        }
        assert!(!f["rule_trace"].as_array().unwrap().is_empty());
    }
    got_floors.sort_by(f64::total_cmp);
    for (g, e) in got_floors.iter().zip(&floor_areas) {
        assert!((g - e).abs() / e < 1e-6, "{g} vs {e}");
    }
    assert_eq!(files(&out), vec!["report.json"]);
}

#[test]
fn missing_input_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hsmdie(&[s(&tmp.path().join("absent.stl")), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unreadable file"), "{}", stderr(&o));
}

#[test]
fn overlapping_bands_exit_2_before_reading_the_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("junk.stl");
    std::fs::write(&input, b"junk").unwrap();
    let out = tmp.path().join("out");
    let o = hsmdie(&[s(&input), "--out", s(&out), "--band-qh", "0.5", "--band-qv", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overlap"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn draft_flags_are_exclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let o = hsmdie(&[s(&input), "--draft-angle", "5", "--delta-draft", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_binary_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bytes = stl::to_binary(&fixtures::unit_cube());

    let truncated = tmp.path().join("truncated.stl");
    std::fs::write(&truncated, &bytes[..bytes.len() - 10]).unwrap();
    let o = hsmdie(&[s(&truncated), "--out", s(&tmp.path().join("a"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed STL"), "{}", stderr(&o));

    let mut wrong = bytes.clone();
    wrong[80..84].copy_from_slice(&13u32.to_le_bytes());
    let mismatch = tmp.path().join("mismatch.stl");
    std::fs::write(&mismatch, &wrong).unwrap();
    let o = hsmdie(&[s(&mismatch), "--out", s(&tmp.path().join("b"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed STL"), "{}", stderr(&o));
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(hsmdie(&[s(&input), "--out", s(&a)]).status.success());
    assert!(hsmdie(&[s(&input), "--out", s(&b)]).status.success());
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn export_toggles() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());

    let out = tmp.path().join("speed");
    assert!(hsmdie(&[s(&input), "--out", s(&out), "--export", "speed"])
        .status
        .success());
    assert_eq!(files(&out), vec!["report.json", "speed_map.ply"]);

    let out = tmp.path().join("chi");
    assert!(
        hsmdie(&[s(&input), "--out", s(&out), "--export", "chi", "--sweep-step", "30"])
            .status
            .success()
    );
    assert_eq!(
        files(&out),
        vec![
            "chi_00_0deg.ply",
            "chi_01_30deg.ply",
            "chi_02_60deg.ply",
            "chi_03_90deg.ply",
            "report.json"
        ]
    );

    let out = tmp.path().join("two");
    assert!(hsmdie(&[s(&input), "--out", s(&out), "--export", "features,speed"])
        .status
        .success());
    assert_eq!(files(&out), vec!["features.ply", "report.json", "speed_map.ply"]);

    let out = tmp.path().join("all");
    assert!(hsmdie(&[s(&input), "--out", s(&out), "--export", "all"])
        .status
        .success());
    assert_eq!(files(&out).len(), 13);
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let cfg = tmp.path().join("hsmdie.toml");
    std::fs::write(
        &cfg,
        "min_region_area = 1.5\n[speed]\nband_qh = 0.2\neps_h = 0.01\n[sweep]\nstep_deg = 15.0\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = hsmdie(&[s(&input), "--out", s(&out), "--config", s(&cfg), "--band-qh", "0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["config"]["band_qh"], 0.25);
    assert_eq!(r["config"]["eps_h"], 0.01);
    assert_eq!(r["config"]["min_region_area"], 1.5);
    assert_eq!(r["config"]["sweep_directions"], 7);
}

#[test]
fn bad_config_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[speed]\nunknown_key = 1\n").unwrap();
    let o = hsmdie(&[s(&input), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let o = hsmdie(&[s(&input), "--config", s(&tmp.path().join("absent.toml"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rules_file_override() {
    let tmp = tempfile::tempdir().unwrap();
    let input = pocket_stl(tmp.path());
    let rules = include_str!("../../core/src/rules/default_rules.toml").replace(
        "tool = \"end_mill\"\nalternates",
        "tool = \"corner_end_mill\"\nalternates",
    );
    std::fs::write(tmp.path().join("rules.toml"), rules).unwrap();
    let cfg = tmp.path().join("hsmdie.toml");
    std::fs::write(&cfg, "rules_file = \"rules.toml\"\n").unwrap();
    let out = tmp.path().join("out");
    let o = hsmdie(&[s(&input), "--out", s(&out), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&out);
    for f in r["features"].as_array().unwrap() {
        if f["kind"] == "simple_floor" {
            assert_eq!(f["tool"], "corner_end_mill");
        }
    }
    assert_eq!(r["config"]["custom_rules"], true);
}

#[test]
fn version_flag() {
    let o = hsmdie(&["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
