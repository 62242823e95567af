//! Exit codes, failures and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use gravfact::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAM: i32 = 1;
pub const EXIT_NO_CANONICAL: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    /// Named checks beyond tolerance.
    Verify(Vec<String>),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Lib(e) => match e {
                Error::NoCanonical(_) | Error::NonCanonicalScalar(_) | Error::NonVanishing(_) => EXIT_NO_CANONICAL,
                Error::Numerical(_) | Error::Inconsistency(_) => EXIT_NUMERICAL,
                _ => EXIT_PARAM,
            },
            Failure::Verify(_) => EXIT_VERIFY,
            Failure::Io(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Verify(checks) => format!("checks failed: {}", checks.join(", ")),
            Failure::Io(m) => m.clone(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Files written together after all computation succeeded.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Outputs {
        Outputs { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    /// Temp file in the target directory, then rename.
    pub fn commit(self) -> CliResult<()> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", self.dir.display())))?;
        for (name, data) in self.files {
            let target = self.dir.join(&name);
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
                .map_err(|e| Failure::Io(format!("cannot create temp file in {}: {e}", self.dir.display())))?;
            tmp.write_all(&data).map_err(|e| Failure::Io(format!("write {}: {e}", target.display())))?;
            tmp.persist(&target).map_err(|e| Failure::Io(format!("rename to {}: {e}", target.display())))?;
        }
        Ok(())
    }
}

pub fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}
