use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ricci_core::monitor::Verdict;
use ricci_core::scenario::ScenarioConfig;

fn riccilab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccilab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_and_dumps_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = riccilab(&["list-presets"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["flat-torus", "bumpy-torus", "cylinder-soliton", "neckpinch-n3", "dilation-ladder"]);

    let o = riccilab(&["list-presets", "--dump", "dilation-ladder"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cfg = ScenarioConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.dilation.unwrap().fractions.len(), 5);
}

#[test]
fn flat_torus_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = riccilab(&["run", "--preset", "flat-torus", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = dir.path().join("a/flat-torus");
    for f in ["config.toml", "trace.json", "trace.csv", "geodesics.csv", "comass.csv", "verdict.json"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(dir.path().join("b/flat-torus").join(f)).unwrap(), "{f}");
    }
    assert!(a.join("comass_logs/comass_000.csv").exists());
    let v = Verdict::from_json(&fs::read_to_string(a.join("verdict.json")).unwrap()).unwrap();
    assert!(v.pass);
    let main = v.bounds.iter().find(|b| b.quantity == "main_lower_bound").unwrap();
    assert!((main.min_ratio - 1.0).abs() < 1e-3);

    // verify reproduces the verdict from the stored trace alone
    let o = riccilab(&["verify", "--trace", "a/flat-torus/trace.json", "--out", "v"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(dir.path().join("v/verdict.json")).unwrap(), fs::read(a.join("verdict.json")).unwrap());
}

#[test]
fn unknown_preset_suggests_nearest() {
    let dir = tempfile::tempdir().unwrap();
    let o = riccilab(&["run", "--preset", "neckpinch", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `neckpinch-n3`"), "{}", stderr(&o));
}

#[test]
fn randomized_field_without_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"name = "noseed"
family = "torus"
alpha = [1, 0]

[grid]
n = 16

[initial]
u = "0"

[initial.random]
modes = 2
amplitude = 0.1

[flow]
dt_init = 0.01
t_end = 0.1
"#;
    fs::write(dir.path().join("s.toml"), text).unwrap();
    let o = riccilab(&["run", "--config", "s.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 11: initial.random"), "{}", stderr(&o));

    // the seed override supplies the missing seed only at run time
    let o = riccilab(&["run", "--config", "s.toml", "--seed-override", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("s.toml"), text.replace("alpha", "seed = 1\nalpha")).unwrap();
    let o = riccilab(&["run", "--config", "s.toml", "--seed-override", "5", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cfg = fs::read_to_string(dir.path().join("r/noseed/config.toml")).unwrap();
    assert!(cfg.contains("seed = 5"));
}

#[test]
fn numerical_event_exits_three_with_log() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"name = "negative"
family = "warped"

[grid]
n = 16
dim = 3

[initial]
psi = "1 - 1.5 * cos(x)"

[flow]
dt_init = 1e-4
t_end = 0.01
"#;
    fs::write(dir.path().join("w.toml"), text).unwrap();
    let o = riccilab(&["run", "--config", "w.toml", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let log = fs::read_to_string(dir.path().join("r/negative/events.log")).unwrap();
    assert!(log.contains("psi"), "{log}");
}

#[test]
fn parallel_jobs_and_dilate() {
    let dir = tempfile::tempdir().unwrap();
    let o = riccilab(
        &["run", "--preset", "cylinder-soliton", "--preset", "neckpinch-n3", "--jobs", "2", "--out", "r"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = fs::read_to_string(dir.path().join("r/neckpinch-n3/verdict.json")).unwrap();
    assert!(v.contains("singularity imminent"));
    let c = Verdict::from_json(&fs::read_to_string(dir.path().join("r/cylinder-soliton/verdict.json")).unwrap()).unwrap();
    assert!(c.corollary.unwrap().pass);

    let o = riccilab(&["dilate", "--trace", "r/cylinder-soliton/trace.json", "--lambda", "4", "--t-j", "0.123", "--out", "d"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = riccilab(&["dilate", "--trace", "r/cylinder-soliton/trace.json", "--lambda", "4", "--t-j", "0.1", "--out", "d"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("d/trace.json").exists() && dir.path().join("d/trace.csv").exists());
}
