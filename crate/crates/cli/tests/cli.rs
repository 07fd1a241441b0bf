use std::path::Path;
use std::process::{Command, Output};

use radar_annotate::io::write_json;
use radar_annotate::{Category, Scene, SceneObject};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radar-annotate"));
    cmd.env("RADAR_ANNOTATE_THREADS", "2");
    cmd
}

fn run(args: &[&str], seq: &Path) -> Output {
    bin().args(args).arg("--seq").arg(seq).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn car(id: u32, frames: usize, start: [f64; 2], velocity: [f64; 2], amplitude: f64) -> SceneObject {
    SceneObject {
        instance_id: id,
        category: Category::Car,
        trajectory: (0..frames)
            .map(|f| {
                let t = f as f64 * 0.1;
                [start[0] + velocity[0] * t, start[1] + velocity[1] * t]
            })
            .collect(),
        reflectivity_amplitude: amplitude,
    }
}

fn scene_file(dir: &Path, objects: Vec<SceneObject>) -> std::path::PathBuf {
    let path = dir.join("input_scene.json");
    write_json(&path, &Scene { objects, ..Scene::default() }).unwrap();
    path
}

#[test]
fn staged_run_then_eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let scene = scene_file(dir.path(), vec![car(1, 4, [1.0, 15.0], [0.0, -3.0], 1.0)]);

    let o = run(&["simulate", "--scene", scene.to_str().unwrap()], &seq);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("simulated 4 frames"));
    assert!(run(&["process"], &seq).status.success());
    assert!(run(&["detect"], &seq).status.success());
    let o = run(&["annotate", "--mc-samples", "512"], &seq);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("4 of 4 frames annotated"), "{}", stdout(&o));

    let o = run(&["report"], &seq);
    assert!(o.status.success());
    assert!(stdout(&o).contains("car"), "{}", stdout(&o));

    let json = dir.path().join("metrics.json");
    let o = run(
        &["eval", "--mode", "sparse", "--view", "ra", "--json", json.to_str().unwrap()],
        &seq,
    );
    assert!(o.status.success(), "{o:?}");
    assert!(json.exists());
}

#[test]
fn untracked_seed_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let scene = scene_file(
        dir.path(),
        vec![
            car(1, 3, [1.0, 15.0], [0.0, -3.0], 1.0),
            car(2, 3, [-6.0, 30.0], [0.0, 0.0], 1e-3),
        ],
    );
    let o = run(&["run", "--scene", scene.to_str().unwrap(), "--mc-samples", "512"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    assert!(stdout(&o).contains("instance 2: seed at frame"), "{}", stdout(&o));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["detect"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing input"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"noise_sigma\": -1.0}").unwrap();
    let o = bin().args(["--config", bad.to_str().unwrap(), "report"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("noise_sigma"), "{o:?}");
}

#[test]
fn invalid_overrides_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scene = scene_file(dir.path(), vec![car(1, 2, [0.0, 10.0], [0.0, 0.0], 1.0)]);
    let o = run(&["simulate", "--scene", scene.to_str().unwrap(), "--noise-sigma=-2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["annotate", "--seed-frame", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["annotate", "--bandwidth-grid", "0.5:0.1:4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_flag_changes_raw_noise() {
    let dir = tempfile::tempdir().unwrap();
    let scene = scene_file(dir.path(), vec![car(1, 1, [0.0, 10.0], [0.0, 0.0], 1.0)]);
    let raw = |seed: &str| {
        let seq = dir.path().join(format!("s{seed}"));
        let o = run(&["--seed", seed, "simulate", "--scene", scene.to_str().unwrap()], &seq);
        assert!(o.status.success(), "{o:?}");
        std::fs::read(seq.join("frames/000000.raw.bin")).unwrap()
    };
    assert_eq!(raw("3"), raw("3"));
    assert_ne!(raw("3"), raw("4"));
}

#[test]
fn empty_scene_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    write_json(&path, &Scene { num_frames: Some(2), ..Scene::default() }).unwrap();
    let o = run(&["run", "--scene", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert_eq!(std::fs::read_to_string(dir.path().join("annotations.jsonl")).unwrap(), "");
}

#[test]
fn usage_errors_are_distinct_from_untracked() {
    let o = bin().args(["annotate", "--no-such-flag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
