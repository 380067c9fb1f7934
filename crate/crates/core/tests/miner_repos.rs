//! Miner behavior on synthetic repositories: enumeration order and caps,
//! merge exclusion, modification extraction, rule tallies, clone handling,
//! and per-repo failure isolation.

mod common;

use common::repos::FixtureRepo;
use commitgen::diff::Language;
use commitgen::miner::{get_commits, get_modifications, mine, open_or_clone, MinerConfig, RejectRule};
use commitgen::tokenizer::LexicalTokenizer;

fn config_for(repos: Vec<String>, workdir: &std::path::Path) -> MinerConfig {
    MinerConfig {
        repo_list: repos,
        workdir: workdir.to_path_buf(),
        ..MinerConfig::default()
    }
}

const PY_MAIN: &str = "def main():\n    run()\n";

#[test]
fn linear_history_yields_all_qualifying_commits() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    repo.commit("add main module", &[("main.py", PY_MAIN)]);
    repo.commit("fix runner call", &[("main.py", "def main():\n    runner()\n")]);
    repo.commit("add cli entry", &[("cli.py", "import main\n")]);

    let config = config_for(vec![], dir.path());
    let enumeration = get_commits(&repo.repo, &config).unwrap();
    assert_eq!(enumeration.commits.len(), 3);
    assert_eq!(enumeration.merge_commits, 0);
    assert_eq!(enumeration.no_qualifying_files, 0);
    assert_eq!(enumeration.over_cap, 0);
    // Newest first.
    assert_eq!(enumeration.commits[0].hash, repo.head_hash());
}

#[test]
fn repo_cap_keeps_newest_fifty() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    let mut hashes = Vec::new();
    for i in 0..80 {
        let content = format!("VALUE = {i}\n");
        hashes.push(repo.commit(&format!("update value to {i}"), &[("value.py", &content)]));
    }
    let config = config_for(vec![], dir.path());
    let enumeration = get_commits(&repo.repo, &config).unwrap();
    assert_eq!(enumeration.commits.len(), 50);
    assert_eq!(enumeration.over_cap, 30);
    // The newest 50 of the 80, newest first.
    let got: Vec<&str> = enumeration.commits.iter().map(|c| c.hash.as_str()).collect();
    let expected: Vec<&str> = hashes.iter().rev().take(50).map(String::as_str).collect();
    assert_eq!(got, expected);
}

#[test]
fn merge_commits_are_excluded_and_tallied() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    let a = repo.commit("add base", &[("base.py", "x = 1\n")]);
    let b = repo.commit("fix base", &[("base.py", "x = 2\n")]);
    repo.merge_commit("Merge branch side", &a);
    repo.merge_commit("Merge branch side again", &a);

    let config = config_for(vec![], dir.path());
    let enumeration = get_commits(&repo.repo, &config).unwrap();
    let got: Vec<&str> = enumeration.commits.iter().map(|c| c.hash.as_str()).collect();
    assert_eq!(got, vec![b.as_str(), a.as_str()]);
    assert_eq!(enumeration.merge_commits, 2);
}

#[test]
fn modification_extraction_filters_extensions() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    repo.commit("add app", &[("App.java", "class App {}\n")]);
    let java_fix = repo.commit(
        "fix app loop",
        &[("App.java", "class App { void run() {} }\n")],
    );
    let mixed = repo.commit(
        "update tool and docs",
        &[("tool.py", "def tool():\n    pass\n"), ("notes.md", "# notes\n")],
    );

    let config = config_for(vec![], dir.path());
    let (mods, files) = get_modifications(&repo.repo, &java_fix, &config).unwrap();
    assert_eq!(files, 1);
    assert_eq!(mods.len(), 1);
    assert_eq!(mods[0].language, Language::Java);

    let (mods, files) = get_modifications(&repo.repo, &mixed, &config).unwrap();
    assert_eq!(files, 2, "markdown file still counts as changed");
    assert_eq!(mods.len(), 1, "only the python file becomes a modification");
    assert_eq!(mods[0].language, Language::Python);
}

#[test]
fn two_hunk_commit_has_expected_line_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    let base: String = (1..=20).map(|i| format!("line{i:02}\n")).collect();
    repo.commit("add long file", &[("long.py", &base)]);
    // Replace line 2 with three lines (hunk 1: -1 +3) and line 15 with one
    // line (hunk 2: -1 +1): 4 added, 2 deleted, two separate hunks.
    let mut lines: Vec<String> = (1..=20).map(|i| format!("line{i:02}")).collect();
    lines.splice(1..2, ["newA".to_string(), "newB".to_string(), "newC".to_string()]);
    let pos = lines.iter().position(|l| l == "line15").unwrap();
    lines[pos] = "newD".to_string();
    let content = lines.join("\n") + "\n";
    let edit = repo.commit("fix long file", &[("long.py", &content)]);

    let config = config_for(vec![], dir.path());
    let (mods, _) = get_modifications(&repo.repo, &edit, &config).unwrap();
    assert_eq!(mods.len(), 1);
    assert_eq!(mods[0].added.len(), 4, "added: {:?}", mods[0].added);
    assert_eq!(mods[0].deleted.len(), 2, "deleted: {:?}", mods[0].deleted);
}

#[test]
fn binary_files_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    repo.commit("add code", &[("code.py", "x = 1\n")]);
    let binary = repo.commit("fix image data", &[("blob.py", "\u{0}\u{1}\u{2}binary\u{0}stuff")]);
    let config = config_for(vec![], dir.path());
    let (mods, files) = get_modifications(&repo.repo, &binary, &config).unwrap();
    assert_eq!(files, 1);
    assert!(mods.is_empty(), "binary .py content must be skipped");
}

#[test]
fn mining_two_repos_matches_hand_applied_rules() {
    let root = tempfile::tempdir().unwrap();
    let dir1 = root.path().join("repo1");
    let dir2 = root.path().join("repo2");
    std::fs::create_dir_all(&dir1).unwrap();
    std::fs::create_dir_all(&dir2).unwrap();

    let mut repo1 = FixtureRepo::init(&dir1);
    let accept1 = repo1.commit("Fix parser bug", &[("a.py", "x = 1\n")]);
    repo1.commit("Update docs (#12)", &[("a.py", "x = 2\n")]);
    repo1.commit("the build was green", &[("a.py", "x = 3\n")]);

    let mut repo2 = FixtureRepo::init(&dir2);
    repo2.commit(
        "add feature x",
        &[("a.py", "y = 1\n"), ("b.py", "z = 1\n"), ("c.md", "hello\n")],
    );
    let accept2 = repo2.commit("fix crash", &[("a.py", "y = 2\n")]);

    let config = config_for(
        vec![dir1.display().to_string(), dir2.display().to_string()],
        root.path(),
    );
    let outcome = mine(&config, &LexicalTokenizer).unwrap();

    assert_eq!(outcome.report.commits_examined, 5);
    assert_eq!(outcome.report.accepted, 2);
    let hashes: Vec<&str> = outcome.records.iter().map(|r| r.hash.as_str()).collect();
    assert_eq!(hashes, vec![accept1.as_str(), accept2.as_str()]);
    assert_eq!(outcome.report.rejected[&RejectRule::R3IssueNumber.to_string()], 1);
    assert_eq!(outcome.report.rejected[&RejectRule::R7NotVerbStart.to_string()], 1);
    assert_eq!(outcome.report.rejected[&RejectRule::R2FileCount.to_string()], 1);
    assert_eq!(outcome.report.rejected_total() + outcome.report.accepted, 5);
    assert_eq!(outcome.report.accepted_per_language[&Language::Python], 2);
    assert_eq!(outcome.report.repos_mined, 2);
    assert!(outcome.report.repos_failed.is_empty());

    // Determinism: same fixture state, same config -> identical outcome.
    let again = mine(&config, &LexicalTokenizer).unwrap();
    let hashes_again: Vec<&str> = again.records.iter().map(|r| r.hash.as_str()).collect();
    assert_eq!(hashes, hashes_again);
}

#[test]
fn all_multi_file_commits_reject_r2() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    for i in 0..3 {
        let a = format!("a = {i}\n");
        let b = format!("b = {i}\n");
        let c = format!("c = {i}\n");
        repo.commit(
            &format!("add round {i}"),
            &[("a.py", a.as_str()), ("b.py", b.as_str()), ("c.py", c.as_str())],
        );
    }
    let config = config_for(vec![dir.path().display().to_string()], dir.path());
    let outcome = mine(&config, &LexicalTokenizer).unwrap();
    assert_eq!(outcome.report.accepted, 0);
    assert_eq!(outcome.report.rejected[&RejectRule::R2FileCount.to_string()], 3);
}

#[test]
fn clone_from_file_url_matches_in_place_mining() {
    let root = tempfile::tempdir().unwrap();
    let src_dir = root.path().join("origin");
    std::fs::create_dir_all(&src_dir).unwrap();
    let mut src = FixtureRepo::init(&src_dir);
    src.commit("add widget", &[("widget.py", "w = 1\n")]);
    src.commit("fix widget size", &[("widget.py", "w = 2\n")]);

    let workdir = root.path().join("clones");
    let url = format!("file://{}", src_dir.display());
    let (cloned, _) = open_or_clone(&url, &workdir).unwrap();
    let config = config_for(vec![], &workdir);
    let from_clone = get_commits(&cloned, &config).unwrap();
    let from_source = get_commits(&src.repo, &config).unwrap();
    let h1: Vec<&str> = from_clone.commits.iter().map(|c| c.hash.as_str()).collect();
    let h2: Vec<&str> = from_source.commits.iter().map(|c| c.hash.as_str()).collect();
    assert_eq!(h1, h2);

    // Second open hits the cached clone.
    let (again, _) = open_or_clone(&url, &workdir).unwrap();
    assert_eq!(
        get_commits(&again, &config).unwrap().commits.len(),
        from_clone.commits.len()
    );
}

#[test]
fn failed_repo_is_isolated() {
    let root = tempfile::tempdir().unwrap();
    let good_dir = root.path().join("good");
    std::fs::create_dir_all(&good_dir).unwrap();
    let mut good = FixtureRepo::init(&good_dir);
    good.commit("fix thing", &[("t.py", "t = 1\n")]);

    let config = config_for(
        vec![
            root.path().join("missing").display().to_string(),
            good_dir.display().to_string(),
        ],
        root.path(),
    );
    let outcome = mine(&config, &LexicalTokenizer).unwrap();
    assert_eq!(outcome.report.repos_failed.len(), 1);
    assert_eq!(outcome.report.repos_mined, 1);
    assert_eq!(outcome.report.accepted, 1);
}

#[test]
fn token_length_rule_uses_injected_tokenizer() {
    let dir = tempfile::tempdir().unwrap();
    let mut repo = FixtureRepo::init(dir.path());
    let long_line = "a b c d e f g h i j k l m n o p q r s t u v w x y z aa bb cc dd ee ff gg\n";
    repo.commit("add alphabet soup", &[("soup.py", long_line)]);
    let config = config_for(vec![dir.path().display().to_string()], dir.path());
    let outcome = mine(&config, &LexicalTokenizer).unwrap();
    assert_eq!(outcome.report.accepted, 0);
    assert_eq!(outcome.report.rejected[&RejectRule::R6TokenLength.to_string()], 1);
}
