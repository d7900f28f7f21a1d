//! On-disk corpus layout: for every case `NAME`, the faulty program in
//! `NAME.mimp`, its test suite in `NAME.json` and, when known, the correct
//! program in `NAME.golden.mimp`.

use std::fs;
use std::path::{Path, PathBuf};

use formloc::corpus::FaultCase;
use formloc::lang::{parse_unasserted, pretty, LangError, Program};
use formloc::suite::{SuiteError, TestSuite};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Program { path: PathBuf, source: LangError },
    #[error("{path}: {source}")]
    Suite { path: PathBuf, source: SuiteError },
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io { .. })
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub program: Program,
    pub suite: TestSuite,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

pub fn write_case(dir: &Path, case: &FaultCase) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let header = format!("// {}\n", case.mutation);
    let files = [
        (format!("{}.mimp", case.name), header + &pretty(&case.faulty)),
        (format!("{}.golden.mimp", case.name), pretty(&case.golden)),
        (format!("{}.json", case.name), case.suite.to_json() + "\n"),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}

/// Reads every `NAME.json` with a matching `NAME.mimp`, sorted by name.
pub fn read_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(str::to_string))
        .filter(|n| dir.join(format!("{n}.mimp")).is_file())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let ppath = dir.join(format!("{name}.mimp"));
            let spath = dir.join(format!("{name}.json"));
            let src = fs::read_to_string(&ppath).map_err(io(&ppath))?;
            let program = parse_unasserted(&src).map_err(|source| CorpusError::Program { path: ppath.clone(), source })?;
            let text = fs::read_to_string(&spath).map_err(io(&spath))?;
            let suite = TestSuite::from_json(&text).map_err(|source| CorpusError::Suite { path: spath.clone(), source })?;
            Ok(CorpusEntry { name, program, suite })
        })
        .collect()
}
