use std::path::Path;
use std::process::{Command, Output};

const TOY: &str = "model = \"linear-toy\"\nK = 1\nN = 1\nnu = [1.5, 2.0]\nR = 1e-3\n";

fn stablefam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablefam")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.toml"), TOY).unwrap();
    dir
}

#[test]
fn toy_all_verifies() {
    let dir = toy_dir();
    let o = stablefam(dir.path(), &["all", "--config", "toy.toml", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert = std::fs::read_to_string(dir.path().join("o/certificate.toml")).unwrap();
    assert!(cert.contains("status = \"VERIFIED\""));
    assert!(cert.contains("format = \"stablefam-certificate\""));
    let branch = std::fs::read_to_string(dir.path().join("o/branch.txt")).unwrap();
    assert!(branch.starts_with("stablefam-branch 1\n"));
}

#[test]
fn toy_runs_are_identical() {
    let dir = toy_dir();
    for out in ["a", "b"] {
        assert_eq!(code(&stablefam(dir.path(), &["all", "--config", "toy.toml", "--out", out])), 0);
    }
    for f in ["branch.txt", "certificate.toml", "diagnostics.toml"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn corrupted_branch_is_unverified() {
    let dir = toy_dir();
    assert_eq!(code(&stablefam(dir.path(), &["approximate", "--config", "toy.toml", "--out", "o"])), 0);
    let p = dir.path().join("o/branch.txt");
    let text = std::fs::read_to_string(&p).unwrap();
    // the constant of u3 moves far from the zero
    let bad = text.replace("0 0 7.5e-1 7.5e-1 0 0", "0 0 9e0 9e0 0 0");
    assert_ne!(bad, text);
    std::fs::write(&p, bad).unwrap();
    let o = stablefam(dir.path(), &["prove", "--config", "toy.toml", "--out", "o"]);
    assert_eq!(code(&o), 2, "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let cert = std::fs::read_to_string(dir.path().join("o/certificate.toml")).unwrap();
    assert!(!cert.contains("status = \"VERIFIED\""));
}

#[test]
fn operational_errors_exit_one() {
    let dir = toy_dir();
    assert_eq!(code(&stablefam(dir.path(), &["prove", "--config", "missing.toml"])), 1);
    assert_eq!(code(&stablefam(dir.path(), &["floquet", "--config", "toy.toml", "--out", "empty"])), 1);
    assert_eq!(code(&stablefam(dir.path(), &["prove", "--bogus"])), 1);
    assert_eq!(code(&stablefam(dir.path(), &["approximate", "--nu", "0.5"])), 1);
    std::fs::write(dir.path().join("bad.toml"), "K = \"twenty\"\n").unwrap();
    assert_eq!(code(&stablefam(dir.path(), &["approximate", "--config", "bad.toml"])), 1);
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = stablefam(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for cmd in ["approximate", "prove", "floquet", "export", "all"] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
}
