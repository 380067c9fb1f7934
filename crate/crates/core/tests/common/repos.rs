//! Synthetic git repository builder for miner tests. Commits use fixed
//! signatures and a monotonically advancing clock, so histories (and hashes)
//! are reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use git2::{IndexAddOption, Oid, Repository, Signature, Time};

pub struct FixtureRepo {
    pub repo: Repository,
    pub path: PathBuf,
    clock: i64,
}

impl FixtureRepo {
    pub fn init(dir: &Path) -> FixtureRepo {
        let repo = Repository::init(dir).expect("init fixture repo");
        {
            let mut cfg = repo.config().unwrap();
            cfg.set_str("user.name", "Fixture Author").unwrap();
            cfg.set_str("user.email", "fixture@example.com").unwrap();
        }
        FixtureRepo {
            repo,
            path: dir.to_path_buf(),
            clock: 1_700_000_000,
        }
    }

    fn signature(&self) -> Signature<'static> {
        Signature::new(
            "Fixture Author",
            "fixture@example.com",
            &Time::new(self.clock, 0),
        )
        .unwrap()
    }

    fn stage_all(&self) -> git2::Index {
        let mut index = self.repo.index().unwrap();
        index
            .add_all(["*"].iter(), IndexAddOption::DEFAULT, None)
            .unwrap();
        index.update_all(["*"].iter(), None).unwrap();
        index.write().unwrap();
        index
    }

    /// Writes/overwrites files, stages everything, commits on HEAD.
    pub fn commit(&mut self, message: &str, files: &[(&str, &str)]) -> String {
        self.clock += 60;
        for (rel, content) in files {
            let path = self.path.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).unwrap();
            }
            fs::write(path, content).unwrap();
        }
        let mut index = self.stage_all();
        let tree_id = index.write_tree().unwrap();
        let tree = self.repo.find_tree(tree_id).unwrap();
        let sig = self.signature();
        let parent = self
            .repo
            .head()
            .ok()
            .and_then(|h| h.peel_to_commit().ok());
        let parents: Vec<&git2::Commit> = parent.iter().collect();
        let oid = self
            .repo
            .commit(Some("HEAD"), &sig, &sig, message, &tree, &parents)
            .unwrap();
        oid.to_string()
    }

    /// Removes files and commits the deletion.
    pub fn commit_removal(&mut self, message: &str, remove: &[&str]) -> String {
        self.clock += 60;
        for rel in remove {
            fs::remove_file(self.path.join(rel)).unwrap();
        }
        let mut index = self.stage_all();
        let tree_id = index.write_tree().unwrap();
        let tree = self.repo.find_tree(tree_id).unwrap();
        let sig = self.signature();
        let parent = self.repo.head().unwrap().peel_to_commit().unwrap();
        let oid = self
            .repo
            .commit(Some("HEAD"), &sig, &sig, message, &tree, &[&parent])
            .unwrap();
        oid.to_string()
    }

    /// Creates a merge commit of HEAD and `other`, keeping HEAD's tree.
    pub fn merge_commit(&mut self, message: &str, other: &str) -> String {
        self.clock += 60;
        let sig = self.signature();
        let head = self.repo.head().unwrap().peel_to_commit().unwrap();
        let other = self
            .repo
            .find_commit(Oid::from_str(other).unwrap())
            .unwrap();
        let tree = head.tree().unwrap();
        let oid = self
            .repo
            .commit(Some("HEAD"), &sig, &sig, message, &tree, &[&head, &other])
            .unwrap();
        oid.to_string()
    }

    pub fn head_hash(&self) -> String {
        self.repo
            .head()
            .unwrap()
            .peel_to_commit()
            .unwrap()
            .id()
            .to_string()
    }
}
