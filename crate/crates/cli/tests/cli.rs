use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn owc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_owc"))
        .args(args)
        .env_remove("OWC_SEED")
        .output()
        .expect("spawn owc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A 10-sample dataset shared by the read-only tests.
fn dataset() -> &'static Path {
    static DS: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    &DS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let ds = dir.path().join("ds");
        let out = owc(&["gen", "--samples", "10", "--seed", "7", "--out", p(&ds)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (dir, ds)
    })
    .1
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn gen_splits_and_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.cfg");
    fs::write(&cfg, "# small run\nsamples = 10\nseed = 3\n").unwrap();
    let ds = dir.path().join("ds");
    let out = owc(&["gen", "--config", p(&cfg), "--seed", "7", "--out", p(&ds)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("manifest.json"));
    assert!(stderr(&out).contains("\nseed = 7\n"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ds.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["counts"]["train"], 7);
    assert_eq!(manifest["counts"]["val"], 1);
    assert_eq!(manifest["counts"]["test"], 2);
    assert_eq!(manifest["seeds"]["dataset"], 7);

    // The environment seed only applies when neither file nor flag sets one.
    let out = Command::new(env!("CARGO_BIN_EXE_owc"))
        .args(["surface", "--cells", "4", "--out", p(&dir.path().join("s"))])
        .env("OWC_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("\nseed = 99\n"));
}

#[test]
fn config_errors_exit_2() {
    let out = owc(&["gen", "--config", "/nonexistent/base.cfg"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/nonexistent/base.cfg"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "samples = 10\nwind_speed = 3\n").unwrap();
    let out = owc(&["gen", "--config", p(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.cfg:2") && stderr(&out).contains("wind_speed"));

    assert_eq!(code(&owc(&["gen", "--n-water", "0.5"])), 2);
    assert_eq!(code(&owc(&["gen", "--no-such-flag", "1"])), 2);
    assert_eq!(code(&owc(&[])), 2);
}

#[test]
fn track_oracle_scores_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = owc(&[
        "track",
        "--dataset",
        p(dataset()),
        "--tracker",
        "oracle",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("scores.csv"));
    assert_eq!(rows.len(), 10);
    assert!(rows
        .iter()
        .all(|r| r[0] == "oracle" && r[3].parse::<f64>().unwrap() < 1e-12));
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("config.cfg").exists());
}

#[test]
fn unknown_tracker_lists_valid_specs() {
    let out = owc(&["track", "--dataset", p(dataset()), "--tracker", "kalman"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    for spec in ["oracle", "meanshift", "none", "file:<path>"] {
        assert!(err.contains(spec), "{err}");
    }
}

#[test]
fn file_tracker_coverage_and_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let partial = dir.path().join("partial.csv");
    fs::write(&partial, "id,y1,y2,y3\n0,0,0,1\n3,0,0,1\n").unwrap();
    let spec = format!("file:{}", p(&partial));
    let out = owc(&[
        "track",
        "--dataset",
        p(dataset()),
        "--tracker",
        &spec,
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 4);
    assert!(
        stderr(&out).contains("[1, 2, 4, 5, 6, 7, 8, 9]"),
        "{}",
        stderr(&out)
    );

    // Predictions equal to the labels score as perfect.
    let mut preds = String::from("id,y1,y2,y3\n");
    for split in ["train", "val", "test"] {
        for row in csv_rows(&dataset().join(format!("labels_{split}.csv"))) {
            preds.push_str(&format!("{},{},{},{}\n", row[0], row[1], row[2], row[3]));
        }
    }
    let full = dir.path().join("predictions.csv");
    fs::write(&full, preds).unwrap();
    let spec = format!("file:{}", p(&full));
    let out = owc(&[
        "track",
        "--dataset",
        p(dataset()),
        "--tracker",
        &spec,
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("scores.csv"));
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() < 1e-7));
}

#[test]
fn noisy_meanshift_track_is_deterministic() {
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = owc(&[
            "track",
            "--dataset",
            p(dataset()),
            "--tracker",
            "meanshift",
            "--noise-snr",
            "20",
            "--jobs",
            jobs,
            "--out",
            p(dir.path()),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (
            fs::read(dir.path().join("scores.csv")).unwrap(),
            fs::read(dir.path().join("trace.csv")).unwrap(),
        )
    };
    let a = run("2");
    assert_eq!(a, run("2"));
    assert_eq!(a, run("1"));
}

#[test]
fn sweep_grid_and_determinism() {
    let run = |out: &Path| {
        let o = owc(&[
            "sweep",
            "--dataset",
            p(dataset()),
            "--snr",
            "30,20,10,5",
            "--trackers",
            "oracle,meanshift,none",
            "--out",
            p(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(out.join("sweep.csv")).unwrap()
    };
    let dir = tempfile::tempdir().unwrap();
    let a = run(&dir.path().join("a"));
    assert_eq!(a, run(&dir.path().join("b")));
    let rows = csv_rows(&dir.path().join("a/sweep.csv"));
    assert_eq!(rows.len(), 12);
    assert!(dir.path().join("a/sweep.gp").exists());

    // Re-running from the echoed configuration reproduces the bytes.
    let echoed = dir.path().join("a/config.cfg");
    let copy = dir.path().join("echo.cfg");
    fs::copy(&echoed, &copy).unwrap();
    let o = owc(&[
        "sweep",
        "--config",
        p(&copy),
        "--dataset",
        p(dataset()),
        "--snr",
        "30,20,10,5",
        "--trackers",
        "oracle,meanshift,none",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(a, fs::read(dir.path().join("a/sweep.csv")).unwrap());

    assert_eq!(
        code(&owc(&["sweep", "--dataset", p(dataset()), "--snr", ""])),
        2
    );
    assert_eq!(
        code(&owc(&["sweep", "--dataset", p(dataset()), "--snr", "loud"])),
        2
    );
}

#[test]
fn missing_dataset_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = owc(&[
        "track",
        "--dataset",
        p(&dir.path().join("none")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn simulate_render_and_surface_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = owc(&["simulate", "--frames", "20", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(csv_rows(&dir.path().join("scores.csv")).len(), 60);

    let out = owc(&[
        "render",
        "--scene-id",
        "1",
        "--index",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let pgm = fs::read(dir.path().join("scene1_frame2.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n65535\n"));
    assert_eq!(
        code(&owc(&["render", "--index", "16", "--out", p(dir.path())])),
        2
    );

    let out = owc(&["surface", "--cells", "8", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("surface0.bin").exists());
}
