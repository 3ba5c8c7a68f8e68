//! Persistent scan jobs.
//!
//! Each job is a JSON file `<dir>/<id>.json`, rewritten on every change.
//! Jobs found unfinished when the store is opened were interrupted by a
//! restart and are marked failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use pvscan_core::inventory::InventorySummary;
use pvscan_core::BoundingBox;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{BuildingFailure, Pipeline, ScanArea, ScanEvent, Stage};

pub const INTERRUPTED: &str = "interrupted by a service restart";

#[derive(Debug, Error)]
pub enum JobError {
    #[error("job store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("job file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("job {0:?} not found")]
    UnknownJob(String),
    #[error("job {id}: illegal transition {from} -> {to}")]
    Transition { id: String, from: Stage, to: Stage },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFailure {
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanJob {
    pub id: String,
    pub area: ScanArea,
    /// The area as resolved to a box.
    pub bbox: BoundingBox,
    /// Inventory scan the results are written to.
    pub scan: String,
    pub state: Stage,
    pub progress: Progress,
    /// Buildings that failed; the scan continues past them.
    pub failures: Vec<BuildingFailure>,
    pub summary: Option<InventorySummary>,
    /// Set when the job as a whole failed.
    pub error: Option<JobFailure>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl ScanJob {
    /// Moves forward through the stage order. `failed` is reachable from any
    /// unfinished state; finished jobs never change state.
    pub fn transition(&mut self, to: Stage) -> Result<(), JobError> {
        let ok = !self.state.is_terminal() && (to == Stage::Failed || to >= self.state);
        if !ok {
            return Err(JobError::Transition {
                id: self.id.clone(),
                from: self.state,
                to,
            });
        }
        self.state = to;
        Ok(())
    }
}

pub struct JobStore {
    dir: PathBuf,
    jobs: Mutex<BTreeMap<String, ScanJob>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> JobError + '_ {
    move |source| JobError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl JobStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, JobError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut jobs = BTreeMap::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let job: ScanJob = serde_json::from_str(&text).map_err(|e| JobError::Corrupt {
                path: path.clone(),
                message: e.to_string(),
            })?;
            jobs.insert(job.id.clone(), job);
        }
        let store = Self {
            dir,
            jobs: Mutex::new(jobs),
        };
        let unfinished: Vec<String> = store.list().into_iter().filter(|j| !j.state.is_terminal()).map(|j| j.id).collect();
        for id in unfinished {
            log::warn!("job {id} was interrupted; marking it failed");
            store.update(&id, |j| {
                j.error = Some(JobFailure {
                    stage: j.state,
                    error: INTERRUPTED.into(),
                });
                j.transition(Stage::Failed)
            })?;
        }
        Ok(store)
    }

    fn persist(&self, job: &ScanJob) -> Result<(), JobError> {
        let path = self.dir.join(format!("{}.json", job.id));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(job).expect("job serializes");
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn create(&self, area: ScanArea, bbox: BoundingBox, scan: Option<String>, now: DateTime<Utc>) -> Result<ScanJob, JobError> {
        let mut jobs = self.jobs.lock().expect("job table");
        let seq = jobs.keys().filter_map(|k| k.parse::<u64>().ok()).max().unwrap_or(0) + 1;
        let id = format!("{seq:06}");
        let job = ScanJob {
            scan: scan.unwrap_or_else(|| format!("scan-{id}")),
            id: id.clone(),
            area,
            bbox,
            state: Stage::Queued,
            progress: Progress::default(),
            failures: Vec::new(),
            summary: None,
            error: None,
            created_at: now,
            updated_at: now,
        };
        self.persist(&job)?;
        jobs.insert(id, job.clone());
        Ok(job)
    }

    pub fn get(&self, id: &str) -> Option<ScanJob> {
        self.jobs.lock().expect("job table").get(id).cloned()
    }

    pub fn list(&self) -> Vec<ScanJob> {
        self.jobs.lock().expect("job table").values().cloned().collect()
    }

    /// Applies `f` to a copy of the job and commits it if `f` succeeds and
    /// the progress invariant holds.
    pub fn update(&self, id: &str, f: impl FnOnce(&mut ScanJob) -> Result<(), JobError>) -> Result<ScanJob, JobError> {
        let mut jobs = self.jobs.lock().expect("job table");
        let current = jobs.get(id).ok_or_else(|| JobError::UnknownJob(id.to_string()))?;
        let mut next = current.clone();
        f(&mut next)?;
        assert!(next.progress.done <= next.progress.total, "job {id}: progress {:?}", next.progress);
        next.updated_at = Utc::now().max(current.updated_at);
        self.persist(&next)?;
        jobs.insert(id.to_string(), next.clone());
        Ok(next)
    }
}

/// Executes a queued job to completion on the calling thread.
pub fn run_job(pipeline: &Pipeline, store: &JobStore, id: &str) -> Result<ScanJob, JobError> {
    let job = store.update(id, |j| j.transition(Stage::Fetching))?;
    let on_event = |ev: ScanEvent| {
        let r = store.update(id, |j| {
            match ev {
                ScanEvent::Buildings(n) => {
                    j.progress.total = n;
                    j.transition(Stage::Detecting)?;
                }
                ScanEvent::BuildingDone(failure) => {
                    j.progress.done += 1;
                    j.failures.extend(failure);
                }
                ScanEvent::Storing => j.transition(Stage::Georeferencing)?,
            }
            Ok(())
        });
        if let Err(e) = r {
            log::error!("job {id}: {e}");
        }
    };
    match pipeline.run_scan(&job.scan, &job.bbox, &on_event) {
        Ok(report) => store.update(id, |j| {
            j.progress = Progress {
                done: report.buildings,
                total: report.buildings,
            };
            j.failures = report.failures;
            j.summary = Some(report.summary);
            j.transition(Stage::Done)
        }),
        Err(e) => store.update(id, |j| {
            j.error = Some(JobFailure {
                stage: e.stage,
                error: e.kind.to_string(),
            });
            j.transition(Stage::Failed)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbox() -> BoundingBox {
        BoundingBox::new(47.0, 8.0, 47.01, 8.01).unwrap()
    }

    fn area() -> ScanArea {
        ScanArea::Bbox { bbox: bbox() }
    }

    #[test]
    fn transitions_are_monotone() {
        let dir = tempfile::tempdir().unwrap();
        let store = JobStore::open(dir.path()).unwrap();
        let job = store.create(area(), bbox(), None, Utc::now()).unwrap();
        assert_eq!(job.scan, "scan-000001");
        store.update(&job.id, |j| j.transition(Stage::Detecting)).unwrap();
        let err = store.update(&job.id, |j| j.transition(Stage::Fetching)).unwrap_err();
        assert!(matches!(err, JobError::Transition { .. }));
        assert_eq!(store.get(&job.id).unwrap().state, Stage::Detecting);
        store.update(&job.id, |j| j.transition(Stage::Failed)).unwrap();
        assert!(store.update(&job.id, |j| j.transition(Stage::Done)).is_err());
    }

    #[test]
    fn ids_are_sequential_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = JobStore::open(dir.path()).unwrap();
            assert_eq!(store.create(area(), bbox(), None, Utc::now()).unwrap().id, "000001");
            assert_eq!(store.create(area(), bbox(), Some("x".into()), Utc::now()).unwrap().id, "000002");
        }
        let store = JobStore::open(dir.path()).unwrap();
        assert_eq!(store.create(area(), bbox(), None, Utc::now()).unwrap().id, "000003");
    }

    #[test]
    fn reopen_fails_unfinished_jobs() {
        let dir = tempfile::tempdir().unwrap();
        let (running, finished) = {
            let store = JobStore::open(dir.path()).unwrap();
            let a = store.create(area(), bbox(), None, Utc::now()).unwrap();
            store.update(&a.id, |j| {
                j.progress.total = 3;
                j.progress.done = 1;
                j.transition(Stage::Detecting)
            })
            .unwrap();
            let b = store.create(area(), bbox(), None, Utc::now()).unwrap();
            store.update(&b.id, |j| j.transition(Stage::Done)).unwrap();
            (a.id, b.id)
        };
        let store = JobStore::open(dir.path()).unwrap();
        let a = store.get(&running).unwrap();
        assert_eq!(a.state, Stage::Failed);
        assert_eq!(a.progress, Progress { done: 1, total: 3 });
        assert_eq!(
            a.error,
            Some(JobFailure {
                stage: Stage::Detecting,
                error: INTERRUPTED.into()
            })
        );
        assert_eq!(store.get(&finished).unwrap().state, Stage::Done);
    }

    #[test]
    fn unknown_job() {
        let dir = tempfile::tempdir().unwrap();
        let store = JobStore::open(dir.path()).unwrap();
        assert!(store.get("000042").is_none());
        assert!(matches!(store.update("000042", |_| Ok(())), Err(JobError::UnknownJob(_))));
    }
}
