use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rydberg_eit::cli::{io, parse_config, run, Command, FIT_MODEL_FILE, FIT_REPORT_FILE, SYNTH_FILE};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn example(name: &str) -> String {
    std::fs::read_to_string(configs_dir().join(name)).unwrap()
}

fn report_value(report: &str, name: &str) -> f64 {
    let prefix = format!("  {name} = ");
    let line = report.lines().find(|l| l.starts_with(&prefix)).unwrap();
    line[prefix.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn every_example_config_parses_and_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".conf"))
        .collect();
    names.sort();
    assert!(names.len() >= 4);

    // Data producers first so the fit examples find their input.
    names.sort_by_key(|n| parse_config(&example(n)).unwrap().command == Command::Fit);
    let synth_out = tmp.path().join("synth_weak_probe.conf");
    for name in &names {
        let mut cfg = parse_config(&example(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.output_dir = tmp.path().join(name);
        if cfg.command == Command::Fit {
            cfg.data_in = Some(synth_out.join(SYNTH_FILE));
        }
        let t0 = Instant::now();
        let outcome = run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(t0.elapsed() < Duration::from_secs(60), "{name} took {:?}", t0.elapsed());
        for f in &outcome.files {
            assert!(f.exists(), "{name}: missing {}", f.display());
        }
        if cfg.command == Command::Fit {
            // Round trip against the synthesis parameters.
            let report = std::fs::read_to_string(cfg.output_dir.join(FIT_REPORT_FILE)).unwrap();
            assert!((report_value(&report, "omega_c") / 1.8 - 1.0).abs() <= 0.05, "{report}");
            assert!((report_value(&report, "gamma31") / 0.1 - 1.0).abs() <= 0.25, "{report}");
            assert!((report_value(&report, "od0") - 1.0).abs() <= 0.05, "{report}");
            assert!(cfg.output_dir.join(FIT_MODEL_FILE).exists());
        }
    }
}

#[test]
fn weak_probe_summary_reports_the_linewidth() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&example("weak_probe.conf")).unwrap();
    cfg.output_dir = tmp.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    let line = outcome.summary.lines().find(|l| l.starts_with("FWHM forward:")).unwrap();
    let w: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((0.50..=0.66).contains(&w), "{line}");

    let spec = io::read_spectrum(std::fs::File::open(tmp.path().join("spectrum.csv")).unwrap()).unwrap();
    assert_eq!(spec.len(), 2 * 801 - 1);
}

fn eit_sim(args: &[&std::ffi::OsStr]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_eit-sim")).args(args).output().unwrap()
}

#[test]
fn unwritable_output_path_fails_with_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("not_a_dir");
    std::fs::write(&blocker, "file").unwrap();
    let target = blocker.join("out");
    let out = eit_sim(&[
        configs_dir().join("weak_probe.conf").as_os_str(),
        "--output-dir".as_ref(),
        target.as_os_str(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("output") && err.contains(&*target.to_string_lossy()), "{err}");
}

#[test]
fn bad_config_fails_naming_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    std::fs::write(&cfg, "command = simulate\nprobe_power_uW = 0.2\nomega_c_MHz = 1.8\ngamma3p_MHz = -1\n").unwrap();
    let out = eit_sim(&[cfg.as_os_str()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma3p_MHz") && err.contains("line 4"), "{err}");
}

#[test]
fn missing_config_file_fails() {
    let out = eit_sim(&["/nonexistent/run.conf".as_ref()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.conf"));
}

#[test]
fn synthesized_csv_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&example("synth_weak_probe.conf")).unwrap();
    cfg.output_dir = tmp.path().to_path_buf();
    run(&cfg).unwrap();
    let path = tmp.path().join(SYNTH_FILE);
    let first = std::fs::read(&path).unwrap();
    let spec = io::read_spectrum(first.as_slice()).unwrap();
    let mut again = Vec::new();
    io::write_spectrum(&mut again, &spec).unwrap();
    assert_eq!(first, again);
}
