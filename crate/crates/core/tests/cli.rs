//! End-to-end runs of the `twistlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use twistlab::cli::table::Table;

fn twistlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(args)
        .output()
        .expect("run twistlab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    twistlab(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn random_exact_prints_seven_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["random-exact", "--eps", "0.3,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("eps=0.3 R=0.0547518\n"), "{s}");
    assert!(s.contains("eps=0 R=0\n"), "{s}");
    assert!(dir.path().join("random_exact.csv").exists());
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["random-exact", "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["random-mc", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["lambda-scan", "--n-g", "7"]).status.code(), Some(2));
    assert_eq!(twistlab(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# comment\neps = 0.5\nbogus = 1\n").unwrap();
    let o = run_in(dir.path(), &["random-exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.cfg:3"), "{}", stderr(&o));

    std::fs::write(&cfg, "eps = 0.5\neps = 0.6\n").unwrap();
    let o = run_in(dir.path(), &["random-exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.cfg:2"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "eps = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert!(stdout(&run_in(dir.path(), &["random-exact", "--config", c])).contains("eps=0.5 "));
    assert!(stdout(&run_in(dir.path(), &["random-exact", "--config", c, "--eps", "0.7"]))
        .contains("eps=0.7 R=0.2310019"));
}

#[test]
fn verify_accepts_fresh_tables_and_rejects_tampered_ones() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&[&str], &[&str]); 4] = [
        (&["random-exact", "--eps", "0.1,3"], &["random_exact.csv"]),
        (&["lambda-scan", "--eps", "1", "--n-g", "4", "--n-p", "4", "--m", "256"], &["lambda_scan.csv", "lambda_summary.csv"]),
        (&["bifurcation-map", "--eps", "0.1", "--theta-cells", "12", "--beta-cells", "12"], &["bifurcation.csv"]),
        (&["double-zero-curves", "--samples", "101"], &["double_zero_curves.csv"]),
    ];
    for (args, files) in runs {
        assert_eq!(run_in(dir.path(), args).status.code(), Some(0));
        for f in files {
            let p = dir.path().join(f);
            let o = twistlab(&["verify", p.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{f}: {}", stdout(&o));
            assert!(stdout(&o).starts_with("OK "));
        }
    }

    // A changed value.
    let p = dir.path().join("random_exact.csv");
    let text = std::fs::read_to_string(&p).unwrap();
    let (_, t) = Table::parse(&text).unwrap();
    let r = t.rows[0][t.column("R_quadrature").unwrap()].to_string();
    std::fs::write(&p, text.replacen(&r, "0.0066", 1)).unwrap();
    let o = twistlab(&["verify", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("MISMATCH"));

    // A changed configuration line breaks the hash.
    std::fs::write(&p, text.replacen("# config.delta: 0.3", "# config.delta: 0.4", 1)).unwrap();
    let o = twistlab(&["verify", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("hash"), "{}", stdout(&o));
}

#[test]
fn tables_round_trip_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["fixed-points", "--eps", "0.5", "--beta", "0.3", "--theta", "2"]);
    let p = dir.path().join("fixed_points.csv");
    let text = std::fs::read_to_string(&p).unwrap();
    let (h, t) = Table::parse(&text).unwrap();
    assert_eq!(h.get("subcommand"), Some("fixed-points"));
    assert_eq!(t.to_csv(&h).unwrap(), text);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["random-mc", "--eps", "0.3", "--n", "5000", "--m", "4", "--seed", "9"];
    run_in(&dir.path().join("a"), &args);
    run_in(&dir.path().join("b"), &args);
    // Everything but the output directory line must match.
    let read = |d: &str| {
        std::fs::read_to_string(dir.path().join(d).join("random_mc.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# config.out:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(read("a"), read("b"));

    let other = ["random-mc", "--eps", "0.3", "--n", "5000", "--m", "4", "--seed", "10"];
    run_in(&dir.path().join("c"), &other);
    assert_ne!(read("a"), read("c"));
}

#[test]
fn every_subcommand_runs_at_small_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 9] = [
        &["random-exact", "--eps", "log:0.1:10:5"],
        &["random-mc", "--eps", "1", "--n", "1000", "--m", "4"],
        &["lambda-scan", "--eps", "1", "--n-g", "4", "--n-p", "2", "--m", "64"],
        &["diffused", "--eps", "1", "--n", "1000", "--m-r", "4", "--m-p", "2"],
        &["fixed-points", "--eps", "1"],
        &["bifurcation-map", "--eps", "1", "--theta-cells", "8", "--beta-cells", "8"],
        &["double-zero-curves", "--eps", "0.5", "--samples", "51"],
        &["megno-demo", "--eps", "1", "--n", "256"],
        &["linear-check", "--n-alpha", "16", "--n-z", "32"],
    ];
    for args in runs {
        let o = run_in(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).contains("wrote "), "{args:?}");
    }
}
