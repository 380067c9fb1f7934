//! End-to-end CLI behavior through the real binary: the mine/split/vocab/
//! train/evaluate/suggest pipeline, exit codes, piped-vs-file equivalence,
//! and byte-identical reproducibility under a fixed seed.

mod common;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use common::repos::FixtureRepo;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_commitgen"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn commitgen")
}

fn assert_code(out: &Output, code: i32, context: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{context}: stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

type RepoSpec = (&'static str, &'static [(&'static str, &'static str, &'static str)]);

/// Three small repositories whose accepted commits form a tiny corpus.
fn build_fixture_repos(root: &Path) -> Vec<PathBuf> {
    let specs: [RepoSpec; 3] = [
        (
            "alpha",
            &[
                ("add parser module", "parser.py", "def parse():\n    pass\n"),
                ("fix parser crash", "parser.py", "def parse():\n    return None\n"),
                ("add loader module", "loader.py", "def load():\n    pass\n"),
                ("update loader path", "loader.py", "def load():\n    return '.'\n"),
                ("remove dead code", "loader.py", "def load():\n    return 0\n"),
                ("use cached loader", "loader.py", "CACHE = {}\n"),
            ],
        ),
        (
            "beta",
            &[
                ("add router", "router.go", "package r\n"),
                ("fix router panic", "router.go", "package r\nvar ok = true\n"),
                ("update router docs comment", "router.go", "package r\nvar ok = false\n"),
                ("add worker", "worker.go", "package w\n"),
                ("fix worker leak", "worker.go", "package w\nvar n = 1\n"),
            ],
        ),
        (
            "gamma",
            &[
                ("add cache helper", "cache.rb", "def cache\nend\n"),
                ("fix cache expiry", "cache.rb", "def cache\n  nil\nend\n"),
                ("update cache key", "cache.rb", "KEY = 'k'\n"),
                ("remove cache fallback", "cache.rb", "KEY = 'v'\n"),
            ],
        ),
    ];
    let mut paths = Vec::new();
    for (name, commits) in specs {
        let dir = root.join(name);
        fs::create_dir_all(&dir).unwrap();
        let mut repo = FixtureRepo::init(&dir);
        for (message, file, content) in commits {
            repo.commit(message, &[(file, content)]);
        }
        paths.push(dir);
    }
    paths
}

const TINY_MODEL: &[&str] = &[
    "--encoder-layers", "1",
    "--decoder-layers", "1",
    "--hidden-dim", "32",
    "--heads", "2",
    "--ffn-dim", "64",
    "--max-source-len", "64",
    "--max-target-len", "16",
];

#[test]
fn full_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let repos = build_fixture_repos(root);
    let repo_list = root.join("repos.txt");
    fs::write(
        &repo_list,
        repos
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();

    // mine
    let out = run_in(
        root,
        &[
            "mine",
            "--repos", repo_list.to_str().unwrap(),
            "--out", "corpus.jsonl",
            "--report", "report.json",
            "--workers", "2",
        ],
    );
    assert_code(&out, 0, "mine");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["repos_mined"], 3);
    let corpus_bytes = fs::read(root.join("corpus.jsonl")).unwrap();
    assert!(!corpus_bytes.is_empty());

    // mine again: byte-identical corpus under identical state
    let out = run_in(
        root,
        &[
            "mine",
            "--repos", repo_list.to_str().unwrap(),
            "--out", "corpus2.jsonl",
        ],
    );
    assert_code(&out, 0, "mine again");
    assert_eq!(corpus_bytes, fs::read(root.join("corpus2.jsonl")).unwrap());

    // stats
    let out = run_in(root, &["stats", "--corpus", "corpus.jsonl", "--out", "stats.json"]);
    assert_code(&out, 0, "stats");
    assert!(String::from_utf8_lossy(&out.stdout).contains("Total"));

    // split (twice: byte-identical parts under the same seed)
    let out = run_in(root, &["split", "--corpus", "corpus.jsonl", "--out-dir", "splits"]);
    assert_code(&out, 0, "split");
    let out = run_in(root, &["split", "--corpus", "corpus.jsonl", "--out-dir", "splits2"]);
    assert_code(&out, 0, "split again");
    for part in ["train.jsonl", "valid.jsonl", "test.jsonl"] {
        let a = fs::read(root.join("splits").join(part)).unwrap();
        assert!(!a.is_empty() || part != "train.jsonl", "{part} missing or empty");
        assert_eq!(
            a,
            fs::read(root.join("splits2").join(part)).unwrap(),
            "{part} differs across identically-seeded runs"
        );
    }

    // train-vocab
    let out = run_in(
        root,
        &["train-vocab", "--corpus", "corpus.jsonl", "--vocab-size", "300", "--out", "vocab"],
    );
    assert_code(&out, 0, "train-vocab");
    assert!(root.join("vocab/merges.txt").exists());
    assert!(root.join("vocab/vocab.txt").exists());

    // train (tiny, few epochs)
    let mut args = vec![
        "train",
        "--train", "splits/train.jsonl",
        "--valid", "splits/valid.jsonl",
        "--vocab", "vocab",
        "--out", "model.ckpt",
        "--metrics", "metrics.jsonl",
        "--epochs", "8",
        "--learning-rate", "0.003",
        "--batch-size", "8",
    ];
    args.extend_from_slice(TINY_MODEL);
    let out = run_in(root, &args);
    assert_code(&out, 0, "train");
    let metrics = fs::read_to_string(root.join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 8);
    for line in metrics.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["epoch"].is_u64() && v["train_loss"].is_f64() && v["dev_ppl"].is_f64());
    }

    // train again with the same seed: byte-identical checkpoint
    let mut args2 = args.clone();
    let pos = args2.iter().position(|a| *a == "model.ckpt").unwrap();
    args2[pos] = "model-again.ckpt";
    let out = run_in(root, &args2);
    assert_code(&out, 0, "train again");
    assert_eq!(
        fs::read(root.join("model.ckpt")).unwrap(),
        fs::read(root.join("model-again.ckpt")).unwrap(),
        "fixed seed must give a byte-identical checkpoint"
    );

    // evaluate
    let out = run_in(
        root,
        &[
            "evaluate",
            "--corpus", "splits/test.jsonl",
            "--checkpoint", "model.ckpt",
            "--vocab", "vocab",
            "--out", "eval.json",
            "--beams", "3",
        ],
    );
    assert_code(&out, 0, "evaluate");
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("eval.json")).unwrap()).unwrap();
    assert!(eval["bleu4"].is_f64());
    assert!(eval["ppl"].is_f64());

    // generate
    let out = run_in(
        root,
        &[
            "generate",
            "--corpus", "splits/test.jsonl",
            "--checkpoint", "model.ckpt",
            "--vocab", "vocab",
            "--out", "gen.jsonl",
        ],
    );
    assert_code(&out, 0, "generate");
    assert!(fs::read_to_string(root.join("gen.jsonl")).unwrap().lines().count() >= 1);

    // suggest from a held-out diff file
    let diff = "\
diff --git a/held/out.py b/held/out.py
index 1111111..2222222 100644
--- a/held/out.py
+++ b/held/out.py
@@ -1,2 +1,2 @@
 def parse():
-    pass
+    return None
";
    fs::write(root.join("held.diff"), diff).unwrap();
    let out = run_in(
        root,
        &[
            "suggest",
            "--diff-file", "held.diff",
            "--checkpoint", "model.ckpt",
            "--vocab", "vocab",
        ],
    );
    assert_code(&out, 0, "suggest");
    let message = String::from_utf8_lossy(&out.stdout);
    let message = message.trim_end_matches('\n');
    assert!(!message.is_empty(), "suggest produced an empty message");
    assert!(!message.contains('\n'), "suggest must print a single line");

    // piped and file-based inputs give identical results
    let mut child = bin()
        .current_dir(root)
        .args(["suggest", "--checkpoint", "model.ckpt", "--vocab", "vocab"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.as_mut().unwrap().write_all(diff.as_bytes()).unwrap();
    let piped = child.wait_with_output().unwrap();
    assert_code(&piped, 0, "suggest (stdin)");
    assert_eq!(piped.stdout, out.stdout, "piped vs file-based suggest differ");

    // ranked candidates: --beams alone sets the printed count
    let out = run_in(
        root,
        &[
            "suggest",
            "--diff-file", "held.diff",
            "--checkpoint", "model.ckpt",
            "--vocab", "vocab",
            "--beams", "3",
        ],
    );
    assert_code(&out, 0, "suggest --beams 3");
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).lines().count(),
        3,
        "--beams 3 must print exactly 3 ranked candidates"
    );

    // suggest from the staged index of a repository
    let staged_dir = root.join("staged-repo");
    fs::create_dir_all(&staged_dir).unwrap();
    let mut staged = FixtureRepo::init(&staged_dir);
    staged.commit("add base", &[("thing.py", "def thing():\n    pass\n")]);
    fs::write(staged_dir.join("thing.py"), "def thing():\n    return 1\n").unwrap();
    {
        let mut index = staged.repo.index().unwrap();
        index.add_path(Path::new("thing.py")).unwrap();
        index.write().unwrap();
    }
    let out = run_in(
        root,
        &[
            "suggest",
            "--repo", staged_dir.to_str().unwrap(),
            "--checkpoint", "model.ckpt",
            "--vocab", "vocab",
        ],
    );
    assert_code(&out, 0, "suggest --repo");
    assert!(!out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[]);
    assert_code(&out, 1, "no args");
    assert!(
        String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"),
        "usage text expected"
    );

    let out = run_in(dir.path(), &["stats", "--corpus", "x.jsonl", "--bogus-flag"]);
    assert_code(&out, 1, "unknown flag");

    let out = run_in(dir.path(), &["not-a-command"]);
    assert_code(&out, 1, "unknown subcommand");
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--help"]);
    assert_code(&out, 0, "--help");
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["mine", "split", "train-vocab", "train", "generate", "suggest", "evaluate"] {
        assert!(text.contains(sub), "help must list {sub}");
    }
    let out = run_in(dir.path(), &["suggest", "--help"]);
    assert_code(&out, 0, "suggest --help");
}

#[test]
fn config_file_overrides_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let repos = build_fixture_repos(root);
    let repo_list = root.join("repos.txt");
    fs::write(&repo_list, repos[0].display().to_string()).unwrap();

    // Miner settings supplied via the config file: a 2-commit cap must
    // shrink the corpus accordingly.
    fs::write(
        root.join("miner.json"),
        r#"{"miner": {"max_commits_per_repo": 2}}"#,
    )
    .unwrap();
    let out = run_in(
        root,
        &[
            "mine",
            "--config", "miner.json",
            "--repos", "repos.txt",
            "--out", "capped.jsonl",
            "--report", "capped-report.json",
        ],
    );
    assert_code(&out, 0, "mine with config file");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("capped-report.json")).unwrap())
            .unwrap();
    assert_eq!(report["rejected"]["R1_repo_cap"], 4, "repo alpha has 6 commits, cap 2");

    // Explicit flags win over the file.
    let out = run_in(
        root,
        &[
            "mine",
            "--config", "miner.json",
            "--max-commits-per-repo", "50",
            "--repos", "repos.txt",
            "--out", "uncapped.jsonl",
            "--report", "uncapped-report.json",
        ],
    );
    assert_code(&out, 0, "mine with flag override");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("uncapped-report.json")).unwrap())
            .unwrap();
    assert!(report["rejected"].get("R1_repo_cap").is_none());

    // Unknown keys are rejected, never ignored.
    fs::write(root.join("typo.json"), r#"{"miner": {"max_commits": 2}}"#).unwrap();
    let out = run_in(
        root,
        &["mine", "--config", "typo.json", "--repos", "repos.txt", "--out", "x.jsonl"],
    );
    assert_code(&out, 2, "config with unknown key");
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Missing corpus file.
    let out = run_in(root, &["stats", "--corpus", "missing.jsonl"]);
    assert_code(&out, 2, "missing corpus");

    // Empty stdin for suggest.
    let mut child = bin()
        .current_dir(root)
        .args(["suggest", "--checkpoint", "m.ckpt", "--vocab", "v"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    assert_code(&out, 2, "empty stdin");

    // Binary-only diff.
    let diff_path = root.join("binary.diff");
    fs::write(
        &diff_path,
        "diff --git a/x.png b/x.png\nindex 1111111..2222222 100644\nBinary files a/x.png and b/x.png differ\n",
    )
    .unwrap();
    let out = run_in(
        root,
        &["suggest", "--diff-file", "binary.diff", "--checkpoint", "m.ckpt", "--vocab", "v"],
    );
    assert_code(&out, 2, "binary-only diff");

    // Unparseable corpus content.
    fs::write(root.join("broken.jsonl"), "this is not json\n").unwrap();
    let out = run_in(root, &["stats", "--corpus", "broken.jsonl"]);
    assert_code(&out, 2, "broken corpus");
}
