use std::path::Path;
use std::process::{Command, Output};

fn blockmind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockmind")).args(args).env_remove("PROVIDER_URL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dump_tree_prints_one_line_per_node() {
    let o = blockmind(&["dump-tree", "wooden_pickaxe"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("wooden_pickaxe"), "{text}");
    assert!(text.contains("log"));
    let dot = stdout(&blockmind(&["dump-tree", "wooden_pickaxe", "--dot"]));
    assert!(dot.starts_with("digraph"), "{dot}");
    assert_eq!(dot.matches(" -> ").count(), text.lines().count() - 1);
}

#[test]
fn unknown_item_fails() {
    let o = blockmind(&["dump-tree", "unobtainium"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unobtainium"));
}

#[test]
fn run_writes_report_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = blockmind(&["run", "--task", "stick", "--seed", "1001", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("SUCCESS stick x1 seed 1001"), "{}", stdout(&o));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["success"], true);
    assert_eq!(r["seed"], 1001);
    assert!(dir.path().join("stick_full_1001.jsonl").exists());
}

#[test]
fn run_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = blockmind(&["run", "--task", "stone_pickaxe", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    // identical apart from where the transcript went
    let read = |d: &tempfile::TempDir| {
        let mut v = json(&d.path().join("report.json"));
        v.as_object_mut().unwrap().remove("transcript").unwrap();
        v.to_string()
    };
    assert!(read(&a) == read(&b));
}

#[test]
fn suite_reads_line_and_json_task_files() {
    let dir = tempfile::tempdir().unwrap();
    let lines = dir.path().join("tasks.txt");
    std::fs::write(&lines, "# smoke\nlog\nplanks 4\n").unwrap();
    let out = dir.path().join("a");
    let o = blockmind(&["suite", "--tasks", lines.to_str().unwrap(), "--trials", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert_eq!(r["results"].as_array().unwrap().len(), 2);
    assert_eq!(r["results"][1]["task"]["count"], 4);
    assert_eq!(r["episodes"].as_array().unwrap().len(), 6);

    let list = dir.path().join("tasks.json");
    std::fs::write(&list, r#"[{"target": "stick", "count": 2, "query_limit": 5}]"#).unwrap();
    let out = dir.path().join("b");
    let o = blockmind(&["suite", "--tasks", list.to_str().unwrap(), "--trials", "2", "--transcripts", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let r = json(&out.join("report.json"));
    assert_eq!(r["results"][0]["task"]["query_limit"], 5);
    assert_eq!(std::fs::read_dir(out.join("transcripts")).unwrap().count(), 2);
}

#[test]
fn bad_task_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("tasks.txt");
    std::fs::write(&f, "log many\n").unwrap();
    let o = blockmind(&["suite", "--tasks", f.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad count"));
}

#[test]
fn warmup_fills_a_memory_file() {
    let dir = tempfile::tempdir().unwrap();
    let goals = dir.path().join("goals.txt");
    std::fs::write(&goals, "stick\n").unwrap();
    let mem = dir.path().join("memory.json");
    let o = blockmind(&[
        "warmup",
        "--goals",
        goals.to_str().unwrap(),
        "--max-trials",
        "6",
        "--memory",
        mem.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&mem);
    for key in ["log", "planks", "stick"] {
        assert!(m[key]["summary"].is_object(), "{key}: {m}");
    }
}

#[test]
fn remote_provider_needs_a_url() {
    let dir = tempfile::tempdir().unwrap();
    let o = blockmind(&["run", "--task", "log", "--provider", "remote", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("PROVIDER_URL"));
}

#[test]
fn custom_knowledge_base_directory() {
    let dir = tempfile::tempdir().unwrap();
    let recipes = r#"[{"output": "planks", "output_count": 4, "materials": {"log": 1}, "tool": null, "station": "craft"}]"#;
    std::fs::write(dir.path().join("recipes.json"), recipes).unwrap();
    std::fs::write(dir.path().join("facts.json"), r#"[{"item": "log", "info_text": "Logs come from trees.", "hints": {}}]"#).unwrap();
    let o = blockmind(&["--kb", dir.path().to_str().unwrap(), "dump-tree", "planks", "--count", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2, "{text}");
    assert!(text.contains("log"));
    assert!(!blockmind(&["--kb", dir.path().to_str().unwrap(), "dump-tree", "stick"]).status.success());
}
