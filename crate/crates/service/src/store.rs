//! In-memory session index backed by the event log, plus the background
//! jobs that compute iterations.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use polyloop_core::mesh::{load_obj, write_obj, TriangleMesh};
use polyloop_core::render::QualityReference;
use polyloop_core::sequence::SessionState;
use polyloop_core::session::{compute_variant, LoopSession, SessionError};
use tokio::sync::{Mutex, RwLock, Semaphore};

use crate::config::ServiceConfig;
use crate::events::{Event, EventLog, LogError};

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// The uploaded mesh and its cached reference renders.
pub struct Original {
    pub mesh: TriangleMesh,
    pub reference: QualityReference,
}

pub struct SessionEntry {
    pub session: LoopSession,
    pub original: Option<Arc<Original>>,
    /// Set when computing the pending iteration failed.
    pub job_error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("replaying event for session {session}: {message}")]
    Replay { session: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Default)]
struct Index {
    sessions: HashMap<String, Arc<Mutex<SessionEntry>>>,
    order: Vec<String>,
}

pub struct Store {
    pub config: ServiceConfig,
    index: RwLock<Index>,
    log: std::sync::Mutex<EventLog>,
    workers: Arc<Semaphore>,
}

fn replay_err(session: &str, e: impl ToString) -> StoreError {
    StoreError::Replay {
        session: session.to_string(),
        message: e.to_string(),
    }
}

impl Store {
    /// Opens the data directory and rebuilds all sessions from the log.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, StoreError> {
        let (log, events) = EventLog::open(&config.data_dir)?;
        let mut index = Index::default();
        let mut sessions: HashMap<String, LoopSession> = HashMap::new();
        for event in events {
            let id = event.session_id().to_string();
            if let Event::Created { mesh, config, .. } = &event {
                if sessions.contains_key(&id) {
                    return Err(replay_err(&id, "created twice"));
                }
                sessions.insert(id.clone(), LoopSession::new(id.clone(), mesh.clone(), *config));
                index.order.push(id);
                continue;
            }
            let s = sessions
                .get_mut(&id)
                .ok_or_else(|| replay_err(&id, "event before creation"))?;
            apply(s, &event).map_err(|e| replay_err(&id, e))?;
        }
        for (id, session) in sessions {
            let entry = SessionEntry {
                session,
                original: None,
                job_error: None,
            };
            index.sessions.insert(id, Arc::new(Mutex::new(entry)));
        }
        Ok(Arc::new(Self {
            workers: Arc::new(Semaphore::new(config.workers.max(1))),
            config,
            index: RwLock::new(index),
            log: std::sync::Mutex::new(log),
        }))
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.config.data_dir.join("sessions").join(id)
    }

    pub fn original_path(&self, id: &str) -> PathBuf {
        self.session_dir(id).join("original.obj")
    }

    pub fn variant_path(&self, id: &str, iteration: usize, slot: usize) -> PathBuf {
        self.session_dir(id).join(format!("iter-{iteration:02}-{slot}.obj"))
    }

    pub fn append(&self, event: &Event) -> Result<(), LogError> {
        self.log.lock().expect("log mutex poisoned").append(event)
    }

    pub async fn get(&self, id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        self.index.read().await.sessions.get(id).cloned()
    }

    /// Sessions in creation order.
    pub async fn all(&self) -> Vec<Arc<Mutex<SessionEntry>>> {
        let index = self.index.read().await;
        index.order.iter().map(|id| index.sessions[id].clone()).collect()
    }

    /// Persists a new session and starts computing its first iteration.
    pub async fn create(
        self: &Arc<Self>,
        session: LoopSession,
        original: Original,
    ) -> Result<Arc<Mutex<SessionEntry>>, StoreError> {
        let id = session.id().to_string();
        let dir = self.session_dir(&id);
        let path = self.original_path(&id);
        let io_err = |source| StoreError::Io {
            path: dir.clone(),
            source,
        };
        tokio::fs::create_dir_all(&dir).await.map_err(io_err)?;
        tokio::fs::write(&path, write_obj(&original.mesh))
            .await
            .map_err(io_err)?;
        self.append(&Event::Created {
            session_id: id.clone(),
            mesh: session.mesh().to_string(),
            config: *session.config(),
            timestamp_ms: now_ms(),
        })?;
        let entry = Arc::new(Mutex::new(SessionEntry {
            session,
            original: Some(Arc::new(original)),
            job_error: None,
        }));
        let mut index = self.index.write().await;
        index.sessions.insert(id.clone(), entry.clone());
        index.order.push(id.clone());
        drop(index);
        self.spawn_iteration(id);
        Ok(entry)
    }

    /// Restarts computation for every session left waiting on an iteration.
    pub async fn resume_pending(self: &Arc<Self>) {
        for entry in self.all().await {
            let e = entry.lock().await;
            if e.session.state() == SessionState::Computing {
                self.spawn_iteration(e.session.id().to_string());
            }
        }
    }

    pub fn spawn_iteration(self: &Arc<Self>, id: String) {
        let store = self.clone();
        tokio::spawn(async move {
            if let Err(message) = store.compute_iteration(&id).await {
                tracing::error!(session = %id, %message, "iteration failed");
                if let Some(entry) = store.get(&id).await {
                    entry.lock().await.job_error = Some(message);
                }
            }
        });
    }

    async fn load_original(&self, id: &str) -> Result<Arc<Original>, String> {
        let path = self.original_path(id);
        let text = tokio::fs::read(&path)
            .await
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let size = self.config.quality_resolution;
        let _permit = self.workers.acquire().await.map_err(|e| e.to_string())?;
        tokio::task::spawn_blocking(move || {
            let mesh = load_obj(&text[..]).map_err(|e| e.to_string())?;
            let reference = QualityReference::with_size(&mesh, size).map_err(|e| e.to_string())?;
            Ok(Arc::new(Original { mesh, reference }))
        })
        .await
        .map_err(|e| e.to_string())?
    }

    async fn compute_iteration(&self, id: &str) -> Result<(), String> {
        let entry = self.get(id).await.ok_or("unknown session")?;
        let (proposals, index, original) = {
            let e = entry.lock().await;
            if e.session.state() != SessionState::Computing {
                return Ok(());
            }
            let proposals = e.session.plan().map_err(|e| e.to_string())?;
            (proposals, e.session.current_index(), e.original.clone())
        };
        let original = match original {
            Some(o) => o,
            None => {
                let o = self.load_original(id).await?;
                entry.lock().await.original = Some(o.clone());
                o
            }
        };

        let mut jobs = Vec::with_capacity(proposals.len());
        for proposal in proposals {
            let permit = self.workers.clone().acquire_owned().await.map_err(|e| e.to_string())?;
            let original = original.clone();
            jobs.push(tokio::task::spawn_blocking(move || {
                let _permit = permit;
                compute_variant(&original.mesh, &original.reference, &proposal)
            }));
        }
        let mut computed = Vec::with_capacity(jobs.len());
        for job in jobs {
            computed.push(
                job.await
                    .map_err(|e| e.to_string())?
                    .map_err(|e: SessionError| e.to_string())?,
            );
        }
        for (slot, c) in computed.iter().enumerate() {
            let path = self.variant_path(id, index, slot);
            tokio::fs::write(&path, write_obj(&c.mesh))
                .await
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }

        let mut e = entry.lock().await;
        if e.session.state() != SessionState::Computing || e.session.current_index() != index {
            // Terminated while the batch was being computed.
            return Ok(());
        }
        let variants: Vec<_> = computed.into_iter().map(|c| c.record).collect();
        let event = Event::IterationComputed {
            session_id: id.to_string(),
            index,
            variants,
            timestamp_ms: now_ms(),
        };
        let mut next = e.session.clone();
        apply(&mut next, &event)?;
        self.append(&event).map_err(|e| e.to_string())?;
        e.session = next;
        e.job_error = None;
        tracing::info!(session = %id, index, "iteration ready");
        Ok(())
    }
}

/// Applies a non-creation event to a session, checking that it refers to
/// the session's current iteration.
pub fn apply(session: &mut LoopSession, event: &Event) -> Result<(), String> {
    let expect_index = |index: usize, current: usize| {
        if index == current {
            Ok(())
        } else {
            Err(format!("event for iteration {index}, session is at {current}"))
        }
    };
    match event {
        Event::Created { .. } => Err("session already exists".into()),
        Event::IterationComputed {
            index,
            variants,
            timestamp_ms,
            ..
        } => {
            expect_index(*index, session.current_index())?;
            session
                .complete_iteration(variants.clone(), Some(*timestamp_ms))
                .map_err(|e| e.to_string())?;
            Ok(())
        }
        Event::Rated { index, ratings, .. } => {
            expect_index(*index, session.current_index())?;
            session.submit_ratings(ratings).map(|_| ()).map_err(|e| e.to_string())
        }
        Event::Terminated { reason, .. } => session.terminate(*reason).map(|_| ()).map_err(|e| e.to_string()),
    }
}
