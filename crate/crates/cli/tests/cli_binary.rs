//! Black-box tests of the `polytail` binary: exit codes and output shape.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polytail"))
}

fn write_tmp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polytail-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn invalid_alpha_exits_2_and_names_the_invariant() {
    let cfg = write_tmp(
        "bad_alpha.toml",
        r#"
schema = 1
seed = 1
[tail]
alpha = 2.5
k = 0.0
c_plus = 1.0
c_minus = 0.0
"#,
    );
    let out = bin().args(["report", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "{err}");
}

#[test]
fn unknown_key_exits_2() {
    let cfg = write_tmp("unknown_key.toml", "schema = 1\nseed = 1\nwhat = 1\n");
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_without_bundle_exits_2() {
    let cfg = write_tmp("ok.toml", "schema = 1\nseed = 1\n");
    let out = bin()
        .args(["report", "--plot", "cf-grid", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_runs_and_respects_threads_flag() {
    let cfg = write_tmp(
        "small_sim.toml",
        r#"
schema = 1
seed = 3
[polynomial]
arity = 1
terms = [{ exponents = [1.0], coefficient = 1.0 }]
[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5
[simulation]
qcase = "arith-prog"
n_list = [500]
replicates = 8
a_n_draws = 1000
"#,
    );
    let out_a = std::env::temp_dir().join(format!("polytail-bin-a-{}", std::process::id()));
    let out_b = std::env::temp_dir().join(format!("polytail-bin-b-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
    let run = |threads: &str, dir: &PathBuf| {
        let out = bin()
            .args(["simulate", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("1", &out_a);
    run("2", &out_b);
    let a = std::fs::read(out_a.join("ensemble_n500.csv")).unwrap();
    let b = std::fs::read(out_b.join("ensemble_n500.csv")).unwrap();
    assert_eq!(a, b, "thread count changed simulation payload");
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
}

#[test]
fn out_dir_env_var_is_used() {
    let cfg = write_tmp(
        "env_sim.toml",
        r#"
schema = 1
seed = 4
[polynomial]
arity = 1
terms = [{ exponents = [1.0], coefficient = 1.0 }]
[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5
[simulation]
qcase = "l-dep"
n_list = [200]
replicates = 2
a_n_draws = 1000
"#,
    );
    let dir = std::env::temp_dir().join(format!("polytail-env-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let out = bin()
        .env("POLYTAIL_OUT", &dir)
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("manifest.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numeric_failure_exits_3() {
    // tail_fit needs ~1e6 samples for its deepest threshold; 1.2e5 draws
    // starve it even after the ladder widens.
    let cfg = write_tmp(
        "starved.toml",
        r#"
schema = 1
seed = 6
[polynomial]
arity = 1
terms = [{ exponents = [1.0], coefficient = 1.0 }]
[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5
[simulation]
qcase = "l-dep"
n_list = [200]
replicates = 2
a_n_draws = 1000
[diagnostics]
tail_fit = true
summand_draws = 120000
"#,
    );
    let dir = std::env::temp_dir().join(format!("polytail-num3-{}", std::process::id()));
    let out = bin()
        .args(["diagnose", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn io_failure_exits_4() {
    let cfg = write_tmp(
        "io_sim.toml",
        r#"
schema = 1
seed = 7
[polynomial]
arity = 1
terms = [{ exponents = [1.0], coefficient = 1.0 }]
[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5
[simulation]
qcase = "l-dep"
n_list = [200]
replicates = 2
a_n_draws = 1000
"#,
    );
    // Output path nested under an existing regular file.
    let blocker = write_tmp("blocker", "not a directory");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
