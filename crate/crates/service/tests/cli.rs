use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exercises_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../exercises")
}

fn tutor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tutor")).args(args).env_remove("TUTOR_EXERCISES").output().unwrap()
}

fn student(src: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(src.as_bytes()).unwrap();
    f
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn correct_solution_exits_zero() {
    let f = student("my_sort [] = []\nmy_sort (x:xs) = insert x (my_sort xs)\n");
    let o = tutor(&["check", "my_sort", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("Correct"));
}

#[test]
fn cons_fold_is_off_track() {
    let f = student("my_sort = foldr (:) []\n");
    let o = tutor(&["check", "my_sort", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("sort_nondescending"));
}

#[test]
fn fold_holes_are_on_track_with_two_specs() {
    let f = student("my_sort [] = []\nmy_sort (x:xs) = foldr ? ? xs\n");
    let o = tutor(&["check", "my_sort", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("hole ?0:") && out.contains("hole ?1:"), "{out}");

    let o = tutor(&["check", "my_sort", f.path().to_str().unwrap(), "--json"]);
    let fb: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fb["classification"], "OnTrack");
    assert_eq!(fb["hole_specs"].as_array().unwrap().len(), 2);
}

#[test]
fn exercise_by_path_and_by_directory() {
    let f = student("my_sort = foldr insert []\n");
    let doc = exercises_dir().join("my_sort.json");
    let o = tutor(&["check", doc.to_str().unwrap(), f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_tutor"))
        .args(["check", "my_sort", f.path().to_str().unwrap()])
        .env("TUTOR_EXERCISES", exercises_dir())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn input_errors_exit_four() {
    let o = tutor(&["check", "my_sort", "/nonexistent.hs"]);
    assert_eq!(o.status.code(), Some(4));
    let f = student("my_sort = foldr insert []\n");
    let o = tutor(&["check", "no_such_exercise", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn validate_accepts_bundled_and_rejects_broken() {
    let o = tutor(&["validate", "--exercises", exercises_dir().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("ok "));

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(exercises_dir().join("my_sort.json")).unwrap()).unwrap();
    doc["solutions"].as_array_mut().unwrap().push("my_sort xs = xs".into());
    let bad = student(&doc.to_string());
    let o = tutor(&["validate", bad.path().to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let errors = report[0]["authoring"].as_array().unwrap();
    let disagreement = errors.iter().find(|e| e["kind"] == "solutions_disagree").unwrap();
    assert_eq!(disagreement["input"], serde_json::json!([1, 0]));
    assert_eq!(disagreement["first"], serde_json::json!([0, 1]));
    assert_eq!(disagreement["other"], serde_json::json!([1, 0]));
}

#[test]
fn serve_refuses_invalid_exercises() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"id\": \"broken\"}").unwrap();
    let o = tutor(&["serve", "--exercises", dir.path().to_str().unwrap(), "--port", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json"));
}

#[test]
fn gen_examples_seed_is_reproducible() {
    let a = tutor(&["gen-examples", "my_sort", "--seed", "5", "--json"]);
    let b = tutor(&["gen-examples", "my_sort", "--seed", "5", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let list: Vec<serde_json::Value> = serde_json::from_slice(&a.stdout).unwrap();
    assert!(list.iter().any(|e| e["input"] == serde_json::json!([2, 2, 1]) && e["output"] == serde_json::json!([1, 2, 2])));
}
