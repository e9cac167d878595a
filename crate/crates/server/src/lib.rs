//! HTTP front end and command-line tasks for the rulefit workbench.

pub mod api;
pub mod error;

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;
use tokio::net::TcpListener;

use rulefit_core::corpus::{import_highlights, load_corpus, EntityCount, RejectedRecord};
use rulefit_core::session::{FullReport, Loaded};
use rulefit_core::{ProjectSession, Workbench};

pub use api::{router, AppState, DEFAULT_TIMEOUT};
pub use error::{ApiError, FieldError};

/// Opens the session at `session_path`, creating it when the file does not
/// exist. The corpus and highlight paths given here win over stored ones.
pub fn open_session(
    corpus: &Path,
    highlights: &Path,
    session_path: &Path,
) -> anyhow::Result<Loaded> {
    let session = if session_path.exists() {
        let mut s = ProjectSession::load(session_path)?;
        if s.corpus_path != corpus || s.highlights_path != highlights {
            tracing::warn!(
                stored_corpus = %s.corpus_path.display(),
                stored_highlights = %s.highlights_path.display(),
                "session points at other inputs; using the ones given"
            );
        }
        s.corpus_path = corpus.to_path_buf();
        s.highlights_path = highlights.to_path_buf();
        s
    } else {
        ProjectSession::new(corpus, highlights)
    };
    let loaded = Workbench::load(session)?;
    loaded.workbench.session().save(session_path)?;
    Ok(loaded)
}

/// Binds the listener; an occupied port is an error, never a fallback.
pub async fn bind(host: &str, port: u16) -> anyhow::Result<TcpListener> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .or_else(|_| format!("[{host}]:{port}").parse())
        .with_context(|| format!("invalid listen address {host}:{port}"))?;
    TcpListener::bind(addr)
        .await
        .map_err(|err| match err.kind() {
            io::ErrorKind::AddrInUse => anyhow::anyhow!("port {port} on {host} is already in use"),
            _ => anyhow::Error::new(err).context(format!("cannot listen on {addr}")),
        })
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Loads a session headlessly and produces the full report.
pub fn report(session_path: &Path) -> anyhow::Result<FullReport> {
    let session = ProjectSession::load(session_path)?;
    let Loaded {
        workbench,
        rejected,
    } = Workbench::load(session)?;
    if !rejected.is_empty() {
        tracing::warn!(count = rejected.len(), "highlight records rejected on load");
    }
    Ok(workbench.full_report()?)
}

#[derive(Debug, Serialize)]
pub struct Validation {
    pub corpus: PathBuf,
    pub documents: usize,
    pub highlights: usize,
    pub entities: Vec<EntityCount>,
    pub rejected: Vec<RejectedRecord>,
}

impl Validation {
    pub fn is_clean(&self) -> bool {
        self.rejected.is_empty()
    }
}

/// Checks a corpus and highlight file without touching any session.
pub fn validate(corpus: &Path, highlights: &Path) -> anyhow::Result<Validation> {
    let docs = load_corpus(corpus)?;
    let import = import_highlights(highlights, &docs)?;
    Ok(Validation {
        corpus: corpus.to_path_buf(),
        documents: docs.len(),
        highlights: import.store.len(),
        entities: import.store.catalog().entities,
        rejected: import.rejected,
    })
}
