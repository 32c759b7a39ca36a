use std::path::Path;
use std::process::{Command, Output};

fn pcsm(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcsm"));
    cmd.args(args).current_dir(dir).env_remove("PCSM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn trained(dir: &Path) {
    let out = pcsm(
        dir,
        &[
            "train",
            "--synthetic",
            "tiny",
            "--epochs",
            "2",
            "--out",
            "m.ckpt",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    assert_eq!(code(&pcsm(dir.path(), &["frobnicate"], &[])), 2);
    let grid = pcsm(
        dir.path(),
        &[
            "curve",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--grid",
            "0,64",
            "--out",
            "c.csv",
        ],
        &[],
    );
    assert_eq!(code(&grid), 2);
    let unsorted = pcsm(
        dir.path(),
        &[
            "curve",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--grid",
            "10,5",
            "--out",
            "c.csv",
        ],
        &[],
    );
    assert_eq!(code(&unsorted), 2);
    let scheme = pcsm(
        dir.path(),
        &[
            "drop",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--scheme",
            "sideways",
            "--n",
            "5",
            "--out-csv",
            "d.csv",
        ],
        &[],
    );
    assert_eq!(code(&scheme), 2);
    let uneven = pcsm(
        dir.path(),
        &[
            "drop",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--n",
            "10",
            "--iterations",
            "3",
            "--out-csv",
            "d.csv",
        ],
        &[],
    );
    assert_eq!(code(&uneven), 2);
    let threads = pcsm(
        dir.path(),
        &["generate", "--spec", "tiny", "--out", "g"],
        &[("PCSM_THREADS", "lots")],
    );
    assert_eq!(code(&threads), 2);
    assert!(!dir.path().join("c.csv").exists() && !dir.path().join("d.csv").exists());
}

#[test]
fn data_errors_exit_3_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let missing = pcsm(
        dir.path(),
        &[
            "saliency",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--out-csv",
            "nope/s.csv",
        ],
        &[],
    );
    assert_eq!(code(&missing), 3);
    assert!(!dir.path().join("nope").exists());

    std::fs::write(dir.path().join("bad.ckpt"), b"NOPE").unwrap();
    let magic = pcsm(
        dir.path(),
        &[
            "saliency",
            "--checkpoint",
            "bad.ckpt",
            "--synthetic",
            "tiny",
            "--out-csv",
            "s.csv",
        ],
        &[],
    );
    assert_eq!(code(&magic), 3);
    assert!(!dir.path().join("s.csv").exists());

    std::fs::write(dir.path().join("c.xyz"), "0 0 0\n1 two 3\n").unwrap();
    let parse = pcsm(
        dir.path(),
        &[
            "saliency",
            "--checkpoint",
            "m.ckpt",
            "--cloud",
            "c.xyz",
            "--out-csv",
            "s.csv",
        ],
        &[],
    );
    assert_eq!(code(&parse), 3);
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 2"));

    std::fs::write(dir.path().join("ok.xyz"), "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let label = pcsm(
        dir.path(),
        &[
            "saliency",
            "--checkpoint",
            "m.ckpt",
            "--cloud",
            "ok.xyz",
            "--label",
            "99",
            "--out-csv",
            "s.csv",
        ],
        &[],
    );
    assert_eq!(code(&label), 3);
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn diverging_training_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcsm(
        dir.path(),
        &[
            "train",
            "--synthetic",
            "tiny",
            "--epochs",
            "3",
            "--lr",
            "1e200",
            "--out",
            "m.ckpt",
        ],
        &[],
    );
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("m.ckpt").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let args = |out: &'static str| {
        [
            "curve",
            "--checkpoint",
            "m.ckpt",
            "--synthetic",
            "tiny",
            "--grid",
            "0,5,10",
            "--out",
            out,
        ]
    };
    assert_eq!(
        code(&pcsm(
            dir.path(),
            &args("one.csv"),
            &[("PCSM_THREADS", "1")]
        )),
        0
    );
    assert_eq!(
        code(&pcsm(
            dir.path(),
            &args("four.csv"),
            &[("PCSM_THREADS", "4")]
        )),
        0
    );
    let one = std::fs::read(dir.path().join("one.csv")).unwrap();
    assert_eq!(one, std::fs::read(dir.path().join("four.csv")).unwrap());
}
