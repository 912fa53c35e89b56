use std::path::Path;
use std::process::{Command, Output};

fn wgabor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgabor")).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = wgabor(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value(stdout: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    stdout.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in {stdout}")).to_string()
}

// Short atoms keep each command fast; the pipeline is the same.
const FAST: [&str; 4] = ["--set", "C_cut=30", "--set", "T_max=0.1"];

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(FAST).collect()
}

#[test]
fn build_prints_preset_summary_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = ok(&["build", "--cache", "a.wgf"], dir.path());
    assert_eq!(value(&first, "q_sup"), "132");
    let n_avg: f64 = value(&first, "N_avg").parse().unwrap();
    assert!((n_avg / 7300.0 - 1.0).abs() < 0.25, "{n_avg}");
    let again = ok(&["build", "--cache", "b.wgf"], dir.path());
    assert_eq!(value(&first, "hash"), value(&again, "hash"));
    assert_eq!(std::fs::read(dir.path().join("a.wgf")).unwrap(), std::fs::read(dir.path().join("b.wgf")).unwrap());
}

#[test]
fn invalid_constants_fail_with_abk_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = wgabor(&["build", "--set", "C_b=0.1"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("abK"));
    let out = wgabor(&["build", "--set", "nonsense=1"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn roundtrip_matches_analyze_then_synthesize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--signal", "white", "--duration", "1", "--out", "w.wav"], d);
    ok(&with_fast(&["build", "--cache", "f.wgf"]), d);
    let rt = ok(&["roundtrip", "--cache", "f.wgf", "--in", "w.wav", "--out", "r.wav", "--format", "f64"], d);
    let err: f64 = value(&rt, "err_dB").parse().unwrap();
    assert!(err < -20.0, "{err}");
    assert!(value(&rt, "delay_samples").parse::<usize>().unwrap() > 0);
    ok(&["analyze", "--cache", "f.wgf", "--in", "w.wav", "--out", "w.wgc"], d);
    ok(&["synthesize", "--cache", "f.wgf", "--in", "w.wgc", "--out", "s.wav", "--format", "f64"], d);
    assert_eq!(std::fs::read(d.join("r.wav")).unwrap(), std::fs::read(d.join("s.wav")).unwrap());
}

#[test]
fn silent_input_reads_the_floor() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--signal", "const", "--duration", "0.2", "--out", "c.wav"], d);
    // zero every sample of the float32 data chunk
    let mut bytes = std::fs::read(d.join("c.wav")).unwrap();
    let data = bytes.windows(4).position(|w| w == b"data").unwrap() + 8;
    bytes[data..].fill(0);
    std::fs::write(d.join("c.wav"), bytes).unwrap();
    let rt = ok(&with_fast(&["roundtrip", "--in", "c.wav", "--out", "o.wav"]), d);
    assert_eq!(value(&rt, "err_dB"), "-200.00");
}

#[test]
fn sample_rate_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--signal", "white", "--duration", "0.2", "--sr", "48000", "--out", "w.wav"], d);
    let out = wgabor(&with_fast(&["roundtrip", "--in", "w.wav", "--out", "o.wav"]), d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("48000"));
}

#[test]
fn coefficients_from_another_frame_set_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--signal", "white", "--duration", "0.2", "--out", "w.wav"], d);
    ok(&with_fast(&["analyze", "--in", "w.wav", "--out", "w.wgc"]), d);
    let out = wgabor(&["synthesize", "--in", "w.wgc", "--out", "o.wav", "--set", "C_cut=31", "--set", "T_max=0.1"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("different frame set"));
}

#[test]
fn info_lists_parameters_and_memory_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&with_fast(&["info", "--bands"]), dir.path());
    for key in ["sr", "K", "R", "a", "b", "BW", "C_b", "C_d", "C_cut", "C_Tc", "T_c", "T_max", "theta_inf", "q_sup", "N_c"] {
        value(&out, key);
    }
    for key in ["memory.truncated", "memory.uniform_longest", "memory.untruncated"] {
        assert!(out.contains(key), "{key}");
    }
    assert_eq!(out.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 132);
}

#[test]
fn atoms_writes_a_band() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(&with_fast(&["atoms", "--band", "40", "--out", "a.wav"]), d);
    let n: usize = value(&out, "samples").split(' ').next().unwrap().parse().unwrap();
    let audio = float_wav_len(&d.join("a.wav"));
    assert_eq!(audio, n);
    assert!(!wgabor(&with_fast(&["atoms", "--band", "500", "--out", "b.wav"]), d).status.success());
}

/// Sample count of a mono float64 WAV.
fn float_wav_len(path: &Path) -> usize {
    let bytes = std::fs::read(path).unwrap();
    let data = bytes.windows(4).position(|w| w == b"data").unwrap();
    u32::from_le_bytes(bytes[data + 4..data + 8].try_into().unwrap()) as usize / 8
}

#[test]
fn bench_reports_rows_and_rejects_unknown_suites() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        &["bench", "--suite", "gaussian", "--duration", "0.5", "--report", "table", "--set", "C_cut=30", "--set", "T_max=0.1"],
        d,
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("signal\terr_dB"));
    assert!(out.contains("beet\tskipped"));
    assert!(!wgabor(&["bench", "--suite", "nope"], d).status.success());
}
