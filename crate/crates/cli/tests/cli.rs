use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn franson(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_franson"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
seed = 5

[qd]
t1_x = 100.0
t1_xx = 60.0

[emitter]
excitation_rate = 1e-7
blink_off_rate = 0.0
blink_on_rate = 0.0
background_rate = 0.0
collection_efficiency = 1.0
dephasing_phase_variance = 0.0
pair_contrast_c0 = 0.9
duration = 2e10

[analysis]
phase_steps = 8
shard_duration = 2e10
blink_bin_width = 1000
blink_half_range = 40000
blink_fit_range = [5000.0, 40000.0]

[lock]
duration = 1.0
"#;

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn dressed_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = franson(dir.path(), &["dressed", "--steps", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("dressed.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rabi_energy_mev,e0_mev,e_minus_mev,e_plus_mev,split_mev"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn simulate_then_fit_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = franson(out, &["--config", &config, "simulate"]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for name in ["manifest.csv", "phase_00.ftag", "phase_07.ftag"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let manifest = a.join("manifest.csv");
    let fit = franson(&a, &["--config", &config, "--format", "json", "franson-fit", "--manifest", manifest.to_str().unwrap()]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let detail: serde_json::Value = serde_json::from_slice(&fs::read(a.join("franson_fit.json")).unwrap()).unwrap();
    let v = detail["corrected"]["visibility"].as_f64().unwrap();
    assert!(v > 0.5 && v <= 1.0, "visibility {v}");
    assert!(a.join("franson_phases.json").exists() && a.join("franson_windows.json").exists());
}

#[test]
fn correlate_reads_a_tag_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    assert!(franson(dir.path(), &["--config", &config, "simulate"]).status.success());
    let input = dir.path().join("phase_00.ftag");
    let out = franson(dir.path(), &["--config", &config, "correlate", "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 12000 / 8);
}

#[test]
fn michelson_and_lock_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    assert!(franson(dir.path(), &["--config", &config, "michelson"]).status.success());
    assert!(dir.path().join("michelson.csv").exists() && dir.path().join("michelson_fit.json").exists());
    let out = franson(dir.path(), &["--config", &config, "lock-sim"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("lock.csv")).unwrap();
    assert!(text.starts_with("t_s,phase_true_rad,reading,control,residual_rad"));
    assert_eq!(text.lines().count(), 1 + 1000);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[analysis]\nphase_steps = 2\n").unwrap();
    let out = franson(dir.path(), &["--config", bad.to_str().unwrap(), "michelson"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("analysis.phase_steps"));

    let missing = dir.path().join("missing.ftag");
    let out = franson(dir.path(), &["correlate", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let garbage = dir.path().join("garbage.ftag");
    fs::write(&garbage, b"not a tag file at all").unwrap();
    let out = franson(dir.path(), &["correlate", "--input", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 0"));
}

#[test]
fn sweep_reports_one_row_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let table = dir.path().join("table.csv");
    fs::write(
        &table,
        "power_uw,t2_ps,pair_contrast_c0,blink_off_rate,blink_on_rate,excitation_rate\n\
         1.0,508,0.9,0,0,1e-7\n\
         4.6,400,0.6,0,0,1e-7\n",
    )
    .unwrap();
    let out = franson(dir.path(), &["--config", &config, "sweep", "--table", table.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    // Lower contrast and coherence at the higher power.
    assert!(rows[1][1] < rows[0][1] && rows[1][4] < rows[0][4]);
}
