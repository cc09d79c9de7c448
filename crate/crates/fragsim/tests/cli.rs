//! End-to-end tests of the `fragsim` binary: exit codes, output schema,
//! and determinism of the emitted CSV files.

use std::path::Path;
use std::process::{Command, Output};

fn fragsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fragsim"))
        .args(args)
        .output()
        .expect("spawn fragsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn toa_reports_reference_timings() {
    let out = fragsim(&["toa", "--sf", "12"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("time on air     : 9.019392 s"), "{text}");
    assert!(text.contains("LDRO true"), "{text}");

    let out7 = fragsim(&["toa", "--sf", "7", "--payload", "251"]);
    let text7 = stdout(&out7);
    assert!(text7.contains("time on air     : 0.394496 s"), "{text7}");
    assert!(text7.contains("nominal bit rate: 5468.75 bps"), "{text7}");
    // 1% duty cycle off time = 99 x ToA
    assert!(text7.contains("off time at 1% duty cycle: 39.055104 s"), "{text7}");
}

#[test]
fn toa_rejects_bad_radio_parameters() {
    let out = fragsim(&["toa", "--sf", "42"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn validate_accepts_good_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_cfg(dir.path(), "good.toml", "n_nodes = 5\nsf = 7\nreps = 3\n");
    let out = fragsim(&["validate", "--config", &good]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("valid scenario: 5 nodes, SF7, 1 fragment(s), 3 reps"));

    let unknown = write_cfg(dir.path(), "unknown.toml", "n_nodes = 5\nsf = 7\nbogus_key = 1\n");
    assert_eq!(fragsim(&["validate", "--config", &unknown]).status.code(), Some(1));

    let bad_sf = write_cfg(dir.path(), "badsf.toml", "n_nodes = 5\nsf = 3\n");
    assert_eq!(fragsim(&["validate", "--config", &bad_sf]).status.code(), Some(1));

    assert_eq!(
        fragsim(&["validate", "--config", "/nonexistent/x.toml"]).status.code(),
        Some(1)
    );
}

#[test]
fn validate_recognizes_sweep_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "sweep.toml",
        "n_nodes = 5\nsf = 7\nnode_counts = [5, 10]\nfragment_counts = [1, 2, 5]\nreps = 2\n",
    );
    let out = fragsim(&["validate", "--config", &cfg]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("valid sweep: 2 nodes x 1 SFs x 1 duty cycles x 3 fragment counts"));
}

#[test]
fn run_emits_metrics_csv_and_record_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.toml",
        "n_nodes = 5\nsf = 7\nn_fragments = 2\nhorizon_s = 200\nreps = 4\nseed = 11\n\
         duty_cycle_pct = \"unrestricted\"\n",
    );
    let csv_path = dir.path().join("out.csv");
    let dump_path = dir.path().join("records.csv");
    let out = fragsim(&[
        "run",
        "--config",
        &cfg,
        "--out",
        csv_path.to_str().unwrap(),
        "--dump-log",
        dump_path.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("5 nodes, SF7"), "{text}");
    assert!(text.contains("vs baseline"), "{text}");

    // result CSV: header + baseline row + scenario row, 18 columns each
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("n_nodes,sf,bw_hz,duty_cycle_pct,n_fragments,reps,"));
    for line in &lines {
        assert_eq!(line.split(',').count(), 18);
    }
    let baseline: Vec<&str> = lines[1].split(',').collect();
    let scenario: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(&baseline[..6], &["5", "7", "125000", "unrestricted", "1", "4"]);
    assert_eq!(scenario[4], "2");

    // record dump: header + one line per transmission, sorted by start time
    // within a replication
    let dump = std::fs::read_to_string(&dump_path).unwrap();
    let mut records = dump.lines();
    assert_eq!(
        records.next().unwrap(),
        "replication,node_id,packet_id,fragment_index,start_ns,end_ns,collided"
    );
    let mut count = 0;
    let mut prev: Option<(u64, u64)> = None;
    for line in records {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        let rep: u64 = f[0].parse().unwrap();
        let start: u64 = f[4].parse().unwrap();
        let end: u64 = f[5].parse().unwrap();
        assert!(start < end);
        assert!(f[6] == "true" || f[6] == "false");
        if let Some((prev_rep, prev_start)) = prev {
            assert!(rep > prev_rep || (rep == prev_rep && start >= prev_start));
        }
        prev = Some((rep, start));
        count += 1;
    }
    assert!(count > 0);
}

#[test]
fn run_rejects_sweep_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "sweep.toml",
        "n_nodes = 5\nsf = 7\nfragment_counts = [1, 2]\nreps = 1\n",
    );
    let out = fragsim(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_full_grid_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "sweep.toml",
        concat!(
            "n_nodes = 5\nsf = 7\nhorizon_s = 200\nreps = 3\nseed = 5\n",
            "node_counts = [5, 10]\nfragment_counts = [1, 2]\n",
            "duty_cycles = [\"unrestricted\", 1.0]\n",
        ),
    );
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let run = |path: &Path, jobs: &str| {
        let out = fragsim(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            path.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("best goodput"));
    };
    run(&out_a, "1");
    run(&out_b, "2");
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    assert_eq!(a, b, "sweep CSV depends on worker count");
    // 2 node counts x 2 duty cycles x 2 fragment counts + header
    assert_eq!(a.lines().count(), 9);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.toml",
        "n_nodes = 10\nsf = 7\nhorizon_s = 200\nreps = 2\nseed = 1\n",
    );
    let text_for = |extra: &[&str]| {
        let mut args = vec!["run", "--config", &cfg];
        args.extend_from_slice(extra);
        let out = fragsim(&args);
        assert!(out.status.success());
        stdout(&out)
    };
    let base = text_for(&[]);
    assert_eq!(base, text_for(&[]), "same seed must reproduce");
    assert_ne!(base, text_for(&["--seed", "2"]), "different seed must differ");
    assert!(text_for(&["--reps", "5"]).contains("5 reps"));
}
