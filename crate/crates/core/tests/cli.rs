use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pwfnet::imaging::rain::{synth_rain, RainParams};
use pwfnet::imaging::save_image;
use pwfnet::imaging::scenes::scene;

fn pwfnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwfnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PWF_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_commands_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = pwfnet(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["analyze", "table", "synth", "train", "infer", "bench", "ablate", "selftest", "--threads"] {
        assert!(stdout(&o).contains(cmd), "missing {}", cmd);
    }
    let o = pwfnet(&["table", "--help"], dir.path());
    let text = stdout(&o);
    assert!(text.contains("--levels <LEVELS>"));
    assert!(text.contains("[default: 3]"));
    assert!(text.contains("[default: db2]"));
    let o = pwfnet(&["infer", "--help"], dir.path());
    assert!(stdout(&o).contains("--dump-activations"));
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pwfnet(&["nope"], dir.path()).status.code(), Some(2));
    assert_eq!(pwfnet(&["table"], dir.path()).status.code(), Some(2));
    let bad_family = pwfnet(&["table", "--degraded", "a.png", "--clean", "b.png", "--family", "db9"], dir.path());
    assert_eq!(bad_family.status.code(), Some(2));
    assert!(stderr(&bad_family).contains("db9"));
    let missing = pwfnet(&["table", "--degraded", "a.png", "--clean", "b.png"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("a.png"));
}

#[test]
fn thread_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: &str, args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_pwfnet"))
            .args(args)
            .current_dir(dir.path())
            .env("PWF_THREADS", env)
            .output()
            .unwrap()
    };
    let o = run("zero", &["synth", "--out", "d", "--count", "1", "--size", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PWF_THREADS"));
    let o = run("zero", &["--threads", "2", "synth", "--out", "d", "--count", "1", "--size", "16"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("threads=2"));
    let o = run("3", &["synth", "--out", "d", "--count", "1", "--size", "16"]);
    assert!(stderr(&o).contains("threads=3"));
}

#[test]
fn table_of_identical_images_is_all_capped() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene(32, 32, 1);
    save_image(&img, dir.path().join("a.png")).unwrap();
    let o = pwfnet(
        &["table", "--degraded", "a.png", "--clean", "a.png", "--levels", "2", "--csv", "t.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bands,mode,cutoff,psnr_db,ssim"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        let psnr: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(psnr, 100.0, "{}", r);
    }
    // the resolved configuration is echoed as JSON
    assert!(stderr(&o).contains("\"levels\":2"));
}

#[test]
fn analyze_writes_the_swapped_image() {
    let dir = tempfile::tempdir().unwrap();
    let clean = scene(32, 32, 2);
    let deg = synth_rain(&clean, &RainParams::default()).unwrap();
    save_image(&clean, dir.path().join("c.ppm")).unwrap();
    save_image(&deg, dir.path().join("d.ppm")).unwrap();
    let o = pwfnet(
        &["analyze", "--degraded", "d.ppm", "--clean", "c.ppm", "--bands", "all", "--levels", "2", "--out", "o.ppm"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("swapped PSNR 100.0000"));
    assert_eq!(fs::read(dir.path().join("o.ppm")).unwrap(), fs::read(dir.path().join("c.ppm")).unwrap());
}

#[test]
fn synth_train_infer_bench_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = pwfnet(&["synth", "--out", "data", "--count", "5", "--size", "16", "--seed", "3"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_dir(d.join("data/pairs")).unwrap().count(), 10);

    fs::write(
        d.join("cfg.json"),
        r#"{"model": {"base_channels": 4, "blocks_per_level": [1, 1, 1]},
            "train": {"iterations": 4, "batch_size": 2, "patch_size": 16, "eval_period": 2}}"#,
    )
    .unwrap();
    let o = pwfnet(&["train", "--config", "cfg.json", "--data", "data", "--holdout", "1", "--out", "m.pwfn", "--log", "log.csv"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = fs::read_to_string(d.join("log.csv")).unwrap();
    assert!(log.starts_with("iter,lr,loss,eval_psnr\n"));
    assert_eq!(log.lines().count(), 6);
    assert!(stderr(&o).contains("\"base_channels\":4"));
    assert!(d.join("m.pwfn.best").exists());

    let input = "data/pairs/scene0000.degraded.png";
    let infer = |dump: &str| {
        let o = pwfnet(&["infer", "--ckpt", "m.pwfn", "--input", input, "--output", "out.png", "--dump-activations", dump], d);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(d.join(dump)).unwrap()
    };
    let a = infer("a.txt");
    assert_eq!(a, infer("b.txt"));
    let first = a.lines().next().unwrap();
    let fields: Vec<&str> = first.split(' ').collect();
    assert_eq!(fields[0], "stem1");
    assert_eq!(fields.last().unwrap().len(), 64);
    assert!(a.lines().any(|l| l.starts_with("o1 ")));

    let o = pwfnet(&["infer", "--ckpt", "m.pwfn", "--input", input, "--output", "o.png", "--variant", "q"], d);
    assert_eq!(o.status.code(), Some(2));

    let o = pwfnet(&["bench", "--ckpt", "m.pwfn", "--size", "32", "--repeat", "1", "--variant", "s"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("params ") && text.contains("macs ") && text.contains("latency_median_ms "));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"model": {"base_chanels": 4}}"#).unwrap();
    let o = pwfnet(&["train", "--config", "cfg.json", "--data", "data"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("base_chanels"));
}
