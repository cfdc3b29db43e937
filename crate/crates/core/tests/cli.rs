//! End-to-end checks of the command-line interface: exit codes, file
//! generation, and report output.

use std::path::PathBuf;
use std::process::Command;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_rayless")
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rayless-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(exe()).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).to_string(),
        String::from_utf8_lossy(&out.stderr).to_string(),
    )
}

fn example_files(dir: &PathBuf, name: &str) -> (String, String) {
    let (code, _, err) = run(&["example", name, "--dir", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    (
        dir.join(format!("{name}.poset"))
            .to_str()
            .unwrap()
            .to_string(),
        dir.join(format!("{name}.match"))
            .to_str()
            .unwrap()
            .to_string(),
    )
}

#[test]
fn validate_reports_ray_witness() {
    let dir = workdir("validate");
    let (poset, matching) = example_files(&dir, "halfline_ray");
    let (code, stdout, _) = run(&["validate", &poset, &matching]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["matching"]["acyclic"], true);
    assert_eq!(report["matching"]["rayless"], false);
    assert!(report["matching"]["ray_witness"]["unrolled"].is_array());
}

#[test]
fn analyze_exit_codes() {
    let dir = workdir("exitcodes");
    let (poset, matching) = example_files(&dir, "torus7");
    let (code, stdout, _) = run(&["analyze", &poset, &matching]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["exit"], "ok");

    let (poset, matching) = example_files(&dir, "bypass_ladder");
    let (code, _, _) = run(&["analyze", &poset, &matching]);
    assert_eq!(code, 3);

    let bad = dir.join("bad.poset");
    std::fs::write(&bad, "finite\ncell a zero\n").unwrap();
    let (code, _, stderr) = run(&["analyze", bad.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(stderr.contains("line 2"));
}

#[test]
fn reverse_writes_usable_files() {
    let dir = workdir("reverse");
    let (poset, matching) = example_files(&dir, "line_two_ends");
    let out_poset = dir.join("reversed.poset");
    let out_match = dir.join("reversed.match");
    let (code, _, _) = run(&[
        "reverse",
        &poset,
        &matching,
        "--out-poset",
        out_poset.to_str().unwrap(),
        "--out-match",
        out_match.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    // the written pair validates as rayless
    let (code, stdout, _) = run(&[
        "validate",
        out_poset.to_str().unwrap(),
        out_match.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["matching"]["rayless"], true);
}

#[test]
fn synth_writes_function_file() {
    let dir = workdir("synth");
    let (poset, matching) = example_files(&dir, "halfline_ray");
    // refused without the flag
    let (code, _, stderr) = run(&["synth", &poset, &matching]);
    assert_eq!(code, 2);
    assert!(stderr.contains("reverse-first"));
    let out = dir.join("f.morse");
    let (code, stdout, _) = run(&[
        "synth",
        &poset,
        &matching,
        "--reverse-first",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["morse_function"]["verification"]["passed"], true);
    let text = std::fs::read_to_string(&out).unwrap();
    // `cell num/den` lines
    assert!(text.lines().count() > 10);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn morse_command_emits_complex() {
    let dir = workdir("morse");
    let (poset, matching) = example_files(&dir, "rp2");
    let (code, stdout, _) = run(&["morse", &poset, &matching]);
    assert_eq!(code, 0);
    let complex: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(complex["generators"]["0"].as_array().unwrap().len(), 1);
    assert_eq!(complex["generators"]["1"].as_array().unwrap().len(), 1);
    assert_eq!(complex["generators"]["2"].as_array().unwrap().len(), 1);
    // the degree-2 boundary carries the torsion coefficient +-2
    let b2 = complex["boundaries"]["2"].as_array().unwrap();
    assert_eq!(b2.len(), 1);
    let coef: i64 = b2[0][2].as_str().unwrap().parse().unwrap();
    assert_eq!(coef.abs(), 2);
}

#[test]
fn homology_command_truncates_periodic() {
    let dir = workdir("homology");
    let (poset, _) = example_files(&dir, "cylinder");
    let (code, stdout, _) = run(&["homology", &poset, "--truncate", "30"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let groups = &report["cellular"]["groups"]["groups"];
    assert_eq!(groups[0]["betti"], 1);
    assert_eq!(groups[1]["betti"], 1);
}

#[test]
fn unknown_example_fails() {
    let (code, _, stderr) = run(&["example", "nope"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown example"));
}
