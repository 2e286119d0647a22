use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const DOUBLING_VASS: &str = "format 1\nvass 2\nstate q0\nstate q1\nstate q2\nstate q3\n\
trans q0 q1 1 0\ntrans q0 q2 0 0\ntrans q1 q2 0 1\ntrans q2 q3 1 2\ntrans q3 q2 2 4\n";
const DOUBLING_LPS: &str = "format 1\npath q0->q2 q2->q3\ncycle q3->q2 q2->q3\npath\n";

fn cvass(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvass")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn doubling_dir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("doubling.vass"), DOUBLING_VASS).unwrap();
    fs::write(dir.path().join("doubling.lps"), DOUBLING_LPS).unwrap();
    dir
}

#[test]
fn check_doubling_reachable() {
    let dir = doubling_dir();
    let args = ["check", "--vass", "doubling.vass", "--lps", "doubling.lps", "--from", "q0 0 0", "--to", "q3 3/2 3", "--mode", "q", "--out", "w.run"];
    let o = cvass(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("RESULT reachable\n"));
    let v = cvass(&["verify", "--vass", "doubling.vass", "--witness", "w.run", "--mode", "q", "--to", "q3 3/2 3"], dir.path());
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn check_doubling_unreachable() {
    let dir = doubling_dir();
    let args = ["check", "--vass", "doubling.vass", "--lps", "doubling.lps", "--from", "q0 0 0", "--to", "q3 1 0"];
    let o = cvass(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "RESULT unreachable\n");
}

#[test]
fn verify_reports_negative_step() {
    let dir = doubling_dir();
    fs::write(dir.path().join("neg.run"), "format 1\nstart q2 0 0\nstep q2->q3 1\nstep q3->q2 1\n").unwrap();
    let ok = cvass(&["verify", "--vass", "doubling.vass", "--witness", "neg.run", "--mode", "qnonneg"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    fs::write(dir.path().join("dip.run"), "format 1\nstart q0 0 0\nstep q0->q2 1\nstep q2->q3 -1/2\n").unwrap();
    let bad = cvass(&["verify", "--vass", "doubling.vass", "--witness", "dip.run", "--mode", "q"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("step 2"), "{}", stdout(&bad));
}

#[test]
fn verify_nonneg_dip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.vass"), "format 1\nvass 1\nstate p\nstate q\ntrans p q -1\ntrans q p 2\n").unwrap();
    fs::write(dir.path().join("w.run"), "format 1\nstart p 1/2\nstep p->q 1\nstep q->p 1\n").unwrap();
    let q = cvass(&["verify", "--vass", "s.vass", "--witness", "w.run", "--mode", "q"], dir.path());
    assert_eq!(q.status.code(), Some(0));
    let n = cvass(&["verify", "--vass", "s.vass", "--witness", "w.run", "--mode", "qnonneg"], dir.path());
    assert_eq!(n.status.code(), Some(1));
    assert!(stdout(&n).contains("step 1"), "{}", stdout(&n));
}

#[test]
fn exactcover_generate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let g = cvass(&["gen", "exactcover", "--universe", "2,3", "--sets", "2;3;2,3", "--out-dir", "X"], dir.path());
    assert_eq!(g.status.code(), Some(0));
    let s = cvass(&["solve", "--query", "X/exactcover.query", "--out", "X/w.run"], dir.path());
    assert_eq!(s.status.code(), Some(0), "{}", stdout(&s));
    let v = cvass(&["verify", "--vass", "X/exactcover.vass", "--witness", "X/w.run", "--mode", "ztest-cont"], dir.path());
    assert_eq!(v.status.code(), Some(0));

    let g = cvass(&["gen", "exactcover", "--universe", "2,3", "--sets", "2;2", "--out-dir", "Y"], dir.path());
    assert_eq!(g.status.code(), Some(0));
    let s = cvass(&["check", "--query", "Y/exactcover.query"], dir.path());
    assert_eq!(s.status.code(), Some(1), "{}", stdout(&s));
}

#[test]
fn solve_general_doubling() {
    let dir = doubling_dir();
    let reach = cvass(&["solve", "--vass", "doubling.vass", "--from", "q0 0 0", "--to", "q3 3/2 3", "--jobs", "2"], dir.path());
    assert_eq!(reach.status.code(), Some(0));
    let unreach = cvass(&["solve", "--vass", "doubling.vass", "--from", "q0 0 0", "--to", "q3 1 0", "--exhaustive"], dir.path());
    assert_eq!(unreach.status.code(), Some(1), "{}", stdout(&unreach));
    let tiny = cvass(
        &["solve", "--vass", "doubling.vass", "--from", "q0 0 0", "--to", "q3 1 0", "--max-path-len", "0", "--max-cycles", "1"],
        dir.path(),
    );
    assert_eq!(tiny.status.code(), Some(2), "{}", stdout(&tiny));
    assert!(stdout(&tiny).starts_with("RESULT inconclusive\n"));
}

#[test]
fn output_is_deterministic() {
    let dir = doubling_dir();
    let args = ["solve", "--vass", "doubling.vass", "--from", "q0 0 0", "--to", "q3 7 14", "--mode", "qnonneg"];
    let a = cvass(&args, dir.path());
    let b = cvass(&args, dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("cvass 0"), "banner belongs on stderr");
}

#[test]
fn errors_exit_3() {
    let dir = doubling_dir();
    assert_eq!(cvass(&["check", "--vass", "missing.vass", "--from", "q0 0 0", "--to", "q0 0 0"], dir.path()).status.code(), Some(3));
    assert_eq!(cvass(&["check", "--vass", "doubling.vass", "--lps", "doubling.lps", "--from", "q9 0 0", "--to", "q3 0 0"], dir.path()).status.code(), Some(3));
    assert_eq!(cvass(&["frobnicate"], dir.path()).status.code(), Some(3));
    assert_eq!(cvass(&["gen", "exactcover", "--universe", "4", "--sets", "4", "--out-dir", "Z"], dir.path()).status.code(), Some(3));
}

#[test]
fn describe_and_raster() {
    let dir = doubling_dir();
    let d = cvass(&["describe", "--vass", "doubling.vass", "--lps", "doubling.lps"], dir.path());
    assert_eq!(d.status.code(), Some(0));
    let text = stdout(&d);
    assert!(text.starts_with("dim 2\n"));
    assert!(text.contains("cone 0 rank 1 cycles 0"), "{text}");
    let r = cvass(&["sample-region", "--vass", "doubling.vass", "--lps", "doubling.lps", "--window", "0,4,0,8", "--resolution", "5"], dir.path());
    assert_eq!(r.status.code(), Some(0));
    let csv = stdout(&r);
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.lines().any(|l| l == "2,4,1"), "{csv}");
    assert!(csv.lines().any(|l| l == "0,0,0"), "{csv}");
}

#[test]
fn oracle_subcommands() {
    let dir = doubling_dir();
    let g = cvass(
        &["oracle", "grid", "--vass", "doubling.vass", "--lps", "doubling.lps", "--from", "q0 0 0", "--to", "q3 3/2 3", "--denom", "8", "--max-reps", "2"],
        dir.path(),
    );
    assert_eq!(g.status.code(), Some(0), "{}", stdout(&g));
    fs::write(dir.path().join("a.lp"), "vars 1\n1 > 0\n1 <= 0\n").unwrap();
    fs::write(dir.path().join("b.lp"), "vars 1\n1 > 0\n1 <= 1\n").unwrap();
    for sub in ["fm", "lp"] {
        assert_eq!(cvass(&["oracle", sub, "--system", "a.lp"], dir.path()).status.code(), Some(1));
        assert_eq!(cvass(&["oracle", sub, "--system", "b.lp"], dir.path()).status.code(), Some(0));
    }
    let c = cvass(&["oracle", "cone2d", "--gens", "1 0;0 1", "--point", "1 1"], dir.path());
    assert_eq!(stdout(&c), "member\n");
    let c = cvass(&["oracle", "cone2d", "--gens", "1 0;0 1", "--point", "1 0"], dir.path());
    assert_eq!(stdout(&c), "non-member\n");

    fs::write(dir.path().join("z.vass"), "format 1\nvass 2\nstate s z=1\ntrans s s 0 1\n").unwrap();
    fs::write(dir.path().join("z.lps"), "format 1\npath\ncycle s->s\npath\n").unwrap();
    let b = cvass(&["oracle", "bfs", "--vass", "z.vass", "--lps", "z.lps", "--from", "s 0 0", "--to", "s 0 5"], dir.path());
    assert_eq!(b.status.code(), Some(0), "{}", stdout(&b));
}
