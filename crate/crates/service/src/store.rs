use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use tutor_core::tutor::{validate, Exercise, ExerciseDoc, LoadError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Load { path: PathBuf, source: LoadError },
    #[error("exercise id `{0}` is defined twice")]
    Duplicate(String),
    #[error("no exercise `{0}`")]
    Unknown(String),
}

/// Validated exercises by id.
#[derive(Debug, Clone, Default)]
pub struct ExerciseStore {
    exercises: BTreeMap<String, Arc<Exercise>>,
}

impl ExerciseStore {
    pub fn bundled() -> ExerciseStore {
        ExerciseStore::from_exercises(vec![Exercise::bundled()]).expect("one exercise")
    }

    pub fn from_exercises(list: Vec<Exercise>) -> Result<ExerciseStore, StoreError> {
        let mut exercises = BTreeMap::new();
        for ex in list {
            let id = ex.id.clone();
            if exercises.insert(id.clone(), Arc::new(ex)).is_some() {
                return Err(StoreError::Duplicate(id));
            }
        }
        Ok(ExerciseStore { exercises })
    }

    /// Loads every `*.json` document in `dir`, stopping at the first
    /// invalid one.
    pub fn load_dir(dir: &Path, seed: Option<u64>) -> Result<ExerciseStore, StoreError> {
        let io = |source| StoreError::Io { path: dir.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        let list = paths.iter().map(|p| load_file(p, seed)).collect::<Result<Vec<_>, _>>()?;
        ExerciseStore::from_exercises(list)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Exercise>> {
        self.exercises.get(id).cloned()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Exercise>> {
        self.exercises.values()
    }

    pub fn len(&self) -> usize {
        self.exercises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exercises.is_empty()
    }
}

/// Reads and validates one exercise document, optionally with a different
/// generator seed.
pub fn load_file(path: &Path, seed: Option<u64>) -> Result<Exercise, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
    load_str(&text, seed).map_err(|source| StoreError::Load { path: path.to_path_buf(), source })
}

pub fn load_str(text: &str, seed: Option<u64>) -> Result<Exercise, LoadError> {
    let mut doc: ExerciseDoc = serde_json::from_str(text)?;
    if let Some(seed) = seed {
        doc.generator.seed = seed;
    }
    let id = doc.id.clone();
    validate(doc).map_err(|errors| LoadError::Invalid { id, errors })
}

/// An exercise named by file path, or by id in `dir` (the bundled
/// exercises when no directory is given).
pub fn resolve(name: &str, dir: Option<&Path>, seed: Option<u64>) -> Result<Exercise, StoreError> {
    let path = Path::new(name);
    if path.is_file() {
        return load_file(path, seed);
    }
    match dir {
        Some(dir) => {
            let candidate = dir.join(format!("{name}.json"));
            if candidate.is_file() {
                return load_file(&candidate, seed);
            }
            let store = ExerciseStore::load_dir(dir, seed)?;
            store.get(name).map(|e| (*e).clone()).ok_or_else(|| StoreError::Unknown(name.into()))
        }
        None => {
            let ex = load_str(tutor_core::tutor::MY_SORT, seed)
                .map_err(|source| StoreError::Load { path: PathBuf::from("<bundled>"), source })?;
            if ex.id == name {
                Ok(ex)
            } else {
                Err(StoreError::Unknown(name.into()))
            }
        }
    }
}
