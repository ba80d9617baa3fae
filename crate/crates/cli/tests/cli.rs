use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tdcr_cli::ScenarioFile;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tdcr-fsw"));
    cmd.env_remove("TDCR_LOG");
    cmd
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
forces = [3.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]
sample_count = 10
seed = 4

[load]
gravity_on = true
external_force = [0.1, 0.1, -0.1]
external_torque = [-0.1, 0.1, 0.1]

[ga]
population_size = 8
max_generations = 3
rng_seed = 2
"#;

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("unloaded.toml");
    let out = dir.path().join("out");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "disk,beta,gamma,twist,x,y,z,t1,t2,t3,t4,t5,t6,t7,t8"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    // Tendons of the first segment end at disk 10.
    let disk11: Vec<&str> = rows[10].split(',').collect();
    assert_eq!(&disk11[7..11], ["", "", "", ""]);
    assert!(disk11[11..].iter().all(|t| !t.is_empty()));
    let svg = std::fs::read_to_string(out.join("shape.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("<polyline"));
}

#[test]
fn missing_or_malformed_config_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let res = run(&[
        "solve",
        "--config",
        "/nonexistent/scenario.toml",
        "--out",
        out_s,
    ]);
    assert_eq!(code(&res), 1);

    let bad = write(
        dir.path(),
        "bad.toml",
        "forces = [1.0]\n[robot]\nnum_segment = 2\n",
    );
    let res = run(&["solve", "--config", bad.to_str().unwrap(), "--out", out_s]);
    assert_eq!(code(&res), 1);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.toml:3"), "{err}");
    assert!(err.contains("num_segment"), "{err}");

    let syntax = write(dir.path(), "syntax.toml", "seed = 1\nforces = [1.0,\n");
    let res = run(&[
        "sample",
        "--config",
        syntax.to_str().unwrap(),
        "--out",
        out_s,
    ]);
    assert_eq!(code(&res), 1);

    let negative = write(
        dir.path(),
        "neg.toml",
        "sample_count = 2\n[solver]\nresidual_tol = -1.0\n",
    );
    let res = run(&[
        "sample",
        "--config",
        negative.to_str().unwrap(),
        "--out",
        out_s,
    ]);
    assert_eq!(code(&res), 1);

    // solve needs forces.
    let empty = write(dir.path(), "empty.toml", "");
    let res = run(&["solve", "--config", empty.to_str().unwrap(), "--out", out_s]);
    assert_eq!(code(&res), 1);

    assert!(!out.exists());
}

#[test]
fn bad_arguments_exit_1_and_help_exits_0() {
    assert_eq!(code(&run(&["solve"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&["sample", "--config", "x.toml", "--jobs", "many"])),
        1
    );
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["loaded.toml", "unloaded.toml"] {
        let cfg = configs_dir().join(name);
        let res = run(&[
            "optimize",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "77",
            "--dump-config",
        ]);
        assert_eq!(code(&res), 0);
        let dumped = String::from_utf8(res.stdout).unwrap();
        let again = write(dir.path(), name, &dumped);

        let mut expected = ScenarioFile::load(&cfg).unwrap();
        expected.apply_seed(77);
        assert_eq!(ScenarioFile::load(&again).unwrap(), expected);

        let res = run(&[
            "solve",
            "--config",
            again.to_str().unwrap(),
            "--dump-config",
        ]);
        assert_eq!(String::from_utf8(res.stdout).unwrap(), dumped);
    }
}

#[test]
fn zero_samples_give_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.toml", "sample_count = 0\n");
    let out = dir.path().join("out");
    let res = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let csv = std::fs::read_to_string(out.join("workspace.csv")).unwrap();
    assert_eq!(
        csv,
        "sample_index,f1,f2,f3,f4,f5,f6,f7,f8,tip_x,tip_y,tip_z,tip_norm,converged,residual\n"
    );
    assert!(out.join("workspace.svg").exists());
    assert!(!out.join("shapes.svg").exists());
}

fn outputs(cmd: &str, cfg: &Path, root: &Path, jobs: &str, files: &[&str]) -> Vec<Vec<u8>> {
    let out = root.join(format!("{cmd}-{jobs}"));
    let res = run(&[
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        jobs,
    ]);
    assert!(
        matches!(code(&res), 0 | 2),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    files
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect()
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);

    let files = ["workspace.csv", "workspace.svg", "shapes.svg"];
    let one = outputs("sample", &cfg, dir.path(), "1", &files);
    assert_eq!(one, outputs("sample", &cfg, dir.path(), "8", &files));
    assert_eq!(
        one,
        outputs("sample", &cfg, &dir.path().join("again"), "1", &files)
    );
    assert_eq!(String::from_utf8_lossy(&one[0]).lines().count(), 11);

    let files = ["ga_history.csv", "best.csv", "convergence.svg"];
    let one = outputs("optimize", &cfg, dir.path(), "1", &files);
    assert_eq!(one, outputs("optimize", &cfg, dir.path(), "8", &files));
    assert_eq!(
        one,
        outputs("optimize", &cfg, &dir.path().join("again"), "1", &files)
    );
}

#[test]
fn seed_flag_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let a = outputs("sample", &cfg, dir.path(), "2", &["workspace.csv"]);
    let out = dir.path().join("seeded");
    let res = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(matches!(code(&res), 0 | 2));
    assert_ne!(a[0], std::fs::read(out.join("workspace.csv")).unwrap());
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tight.toml",
        "forces = [6.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0, 0.0]\n[solver]\nmax_newton_iters = 1\nmax_friction_iters = 1\n",
    );
    let out = dir.path().join("out");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("solution.csv").exists());
}

#[test]
fn log_level_comes_from_the_environment() {
    let cfg = configs_dir().join("unloaded.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let quiet = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert!(
        quiet.stderr.is_empty(),
        "{}",
        String::from_utf8_lossy(&quiet.stderr)
    );
    let loud = bin()
        .args(["solve", "--config", cfg.to_str().unwrap(), "--out", &out])
        .env("TDCR_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&loud), 0);
    assert!(String::from_utf8_lossy(&loud.stderr).contains("wrote"));
}
