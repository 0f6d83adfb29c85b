use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asap_phi::config::RunConfig;
use asap_phi::eval::tabular::SuiteConfig;
use asap_phi::stl::Trace;
use asap_phi::trainer::read_log;
use asap_phi_cli::bench::{suite_runs, SUITES};
use asap_phi_cli::{cmd_verify, monitor_trace, CliError};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asap-phi"))
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn tiny(dir: &Path, task: &str) -> PathBuf {
    let text = format!(
        "[env]\nname = \"dc_motor\"\ntask = \"{task}\"\n\n\
         [agent]\nalgo = \"sac\"\nhidden = [16, 16]\nwarmup = 100\nbatch_size = 32\n\n\
         [trainer]\nk_min = 10\nk_max = 30\nm = 400\nseed = 5\neval_every = 200\n\n\
         [eval]\nn_points = 20\ntolerances = [15, 25, 30]\n"
    );
    let p = dir.join(format!("{task}.toml"));
    fs::write(&p, text).unwrap();
    p
}

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn train_writes_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), "reach");
    let out = tmp.path().join("run");
    let (code, stdout, stderr) = run(bin().arg("train").arg("--config").arg(&cfg).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("trained 400 samples"));
    for f in [
        "checkpoint.json",
        "train_log.csv",
        "config.toml",
        "resolved.json",
        "meta.json",
        "eval_curve.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    for t in [15, 25, 30] {
        assert!(out.join(format!("eval/summary_tol{t}.json")).is_file());
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["complete"], true);
    assert!(meta["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    // The echoed config reproduces the run's hash.
    let echoed = RunConfig::from_path(&out.join("config.toml")).unwrap();
    assert_eq!(echoed.hash().unwrap(), meta["config_hash"].as_str().unwrap());
    let curve = fs::read_to_string(out.join("eval_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 2 * 3);
}

#[test]
fn reach_avoid_dispatches_to_recovery_training() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), "reach_avoid");
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(bin().arg("train").arg("--config").arg(&cfg).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    let summary = fs::read_to_string(out.join("eval/summary_tol30.json")).unwrap();
    assert!(summary.contains("\"task\": \"reach_avoid\""));
    let log = read_log(&out.join("train_log.csv")).unwrap();
    // Violating episodes end early instead of running to their drawn length.
    assert!(log.iter().filter(|r| r.violated).all(|r| !r.truncated));
    let reach = tiny(tmp.path(), "reach");
    let out2 = tmp.path().join("run2");
    assert_eq!(
        run(bin().arg("train").arg("--config").arg(&reach).arg("--out").arg(&out2)).0,
        0
    );
    assert!(read_log(&out2.join("train_log.csv"))
        .unwrap()
        .iter()
        .all(|r| !r.violated));
}

#[test]
fn malformed_config_exits_2_with_key_path() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.toml");
    fs::write(&p, "[env]\nname = \"dc_motor\"\n[trainer]\nm = 10\nk_maxx = 3\n").unwrap();
    let (code, _, stderr) = run(bin().arg("train").arg("--config").arg(&p));
    assert_eq!(code, 2);
    assert!(stderr.contains("trainer.k_maxx"), "{stderr}");
    fs::write(&p, "[env]\nname = \"dc_motor\"\n[trainer]\nm = \"many\"\n").unwrap();
    let (code, _, stderr) = run(bin().arg("train").arg("--config").arg(&p));
    assert_eq!(code, 2);
    assert!(stderr.contains("trainer.m"), "{stderr}");
    let (code, _, _) = run(bin().arg("train").arg("--config").arg(tmp.path().join("absent.toml")));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().arg("train"));
    assert_eq!(code, 2);
}

#[test]
fn resume_requires_matching_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), "reach");
    let out = tmp.path().join("run");
    let train = |extra: &[&str]| {
        run(bin()
            .arg("train")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("--override")
            .arg("trainer.m=100")
            .args(extra))
    };
    assert_eq!(train(&[]).0, 0);
    let first = fs::read_to_string(out.join("checkpoint.json")).unwrap();
    assert_eq!(train(&[]).0, 0);
    assert_eq!(fs::read_to_string(out.join("checkpoint.json")).unwrap(), first);
    let (code, _, stderr) = train(&["--seed", "6"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("config hash"), "{stderr}");
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), "reach");
    let root = tmp.path().join("root");
    let (code, _, stderr) = run(bin()
        .env("ASAP_PHI_OUT", &root)
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--override")
        .arg("trainer.m=50")
        .arg("--override")
        .arg("out=\"named\""));
    assert_eq!(code, 0, "{stderr}");
    assert!(root.join("named/checkpoint.json").is_file());
}

#[test]
fn eval_sweeps_tolerances_and_rejects_missing_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path(), "reach");
    let out = tmp.path().join("run");
    assert_eq!(
        run(bin().arg("train").arg("--config").arg(&cfg).arg("--out").arg(&out)).0,
        0
    );
    let ev = tmp.path().join("ev");
    let (code, stdout, stderr) = run(bin()
        .arg("eval")
        .arg(&out)
        .arg("--n-points")
        .arg("1")
        .arg("--tolerances")
        .arg("15,25,30")
        .arg("--out")
        .arg(&ev));
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("reach")).count(), 3);
    for t in [15, 25, 30] {
        let s: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(ev.join(format!("summary_tol{t}.json"))).unwrap()).unwrap();
        assert_eq!(s["n_points"], 1);
    }
    // A bare checkpoint needs its config.
    let ckpt = out.join("checkpoint.json");
    assert_eq!(run(bin().arg("eval").arg(&ckpt).arg("--out").arg(&ev)).0, 2);
    assert_eq!(
        run(bin()
            .arg("eval")
            .arg(&ckpt)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&ev))
        .0,
        0
    );
    let (code, _, stderr) = run(bin().arg("eval").arg(tmp.path().join("nowhere")));
    assert_eq!(code, 2);
    assert!(stderr.contains("no checkpoint"));
    // A checkpoint for another benchmark is rejected.
    let bike = tmp.path().join("bike.toml");
    fs::write(&bike, "[env]\nname = \"bicycle\"\n").unwrap();
    assert_eq!(
        run(bin()
            .arg("eval")
            .arg(&ckpt)
            .arg("--config")
            .arg(&bike)
            .arg("--out")
            .arg(&ev))
        .0,
        1
    );
}

#[test]
fn monitor_prints_robustness_table() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one.csv");
    fs::write(&one, "t,x0\n0,2.0\n").unwrap();
    let (code, stdout, _) = run(bin().arg("monitor").arg(&one).arg("x0 >= 1"));
    assert_eq!(code, 0);
    assert_eq!(stdout, "t,rho,sat\n0,1.0,true\nfirst_sat_time,0\n");
    let never = tmp.path().join("never.csv");
    fs::write(&never, "t,x0\n0,0.0\n1,0.5\n").unwrap();
    let (code, stdout, _) = run(bin().arg("monitor").arg(&never).arg("x0 >= 1"));
    assert_eq!(code, 0);
    assert!(stdout.ends_with("first_sat_time,inf\n"), "{stdout}");
    let (code, _, stderr) = run(bin().arg("monitor").arg(&never).arg("x0 >= 1 &&& x0 <= 2"));
    assert_eq!(code, 2);
    assert!(stderr.contains("column"), "{stderr}");
}

#[test]
fn monitor_table_matches_library() {
    let tr = Trace::new(&[vec![0.0], vec![1.5], vec![0.2]]).unwrap();
    let table = monitor_trace(&tr, "G[0,1](x0 >= 0.1)").unwrap();
    assert_eq!(table.sat, vec![false, true, true]);
    assert_eq!(table.first_sat, Some(1));
    assert!(matches!(monitor_trace(&tr, "x3 >= 0"), Err(CliError::Stl(_))));
}

#[test]
fn verify_default_suite_and_anti_asap_fixture() {
    let (code, stdout, stderr) = run(bin().arg("verify"));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("100 random MDPs"));
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(bin()
        .arg("verify")
        .arg("--config")
        .arg(repo_configs().join("verify_anti_asap.toml"))
        .arg("--out")
        .arg(tmp.path()));
    assert_eq!(code, 1);
    assert!(stderr.contains("long way round"));
    assert!(stdout.contains("\"earlier\""));
    let dump = fs::read_to_string(tmp.path().join("counterexamples.json")).unwrap();
    assert!(dump.contains("\"p_later\": 1.0"));
}

#[test]
fn verify_seed_reproduces_family() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("v.json");
    fs::write(&p, "{\"mdps\": 5, \"horizon\": 4}").unwrap();
    let a = cmd_verify(Some(&p), Some(11), None, &mut Vec::new()).unwrap();
    let b = cmd_verify(Some(&p), Some(11), None, &mut Vec::new()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!((a.seed, a.mdps, a.horizon), (11, 5, 4));
    fs::write(&p, "{\"mdp\": 5}").unwrap();
    assert_eq!(
        cmd_verify(Some(&p), None, None, &mut Vec::new())
            .unwrap_err()
            .exit_code(),
        2
    );
}

#[test]
fn unknown_bench_suite_lists_suites() {
    let (code, _, stderr) = run(bin().arg("bench").arg("table9"));
    assert_eq!(code, 2);
    for (name, _) in SUITES {
        assert!(stderr.contains(name), "{stderr}");
    }
    let (code, stdout, _) = run(bin().arg("bench").arg("--list"));
    assert_eq!(code, 0);
    assert!(stdout.contains("dc_motor_full"));
    for (name, _) in SUITES {
        for (_, cfg) in suite_runs(name, 0).unwrap() {
            cfg.resolve().unwrap();
        }
    }
}

#[test]
fn shipped_configs_parse() {
    let mut seen = 0;
    for entry in fs::read_dir(repo_configs()).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if name.starts_with("verify") {
            asap_phi::config::read_structured::<SuiteConfig>(&p).unwrap();
        } else {
            RunConfig::from_path(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        seen += 1;
    }
    assert!(seen >= 6);
}
