use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use rulefit_core::decision::render_table;
use rulefit_server::{bind, open_session, report, serve, validate, AppState};

#[derive(Parser)]
#[command(
    name = "rulefit",
    version,
    about = "Rule authoring workbench for clinical entity extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API for one project session.
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        highlights: PathBuf,
        /// Created when missing.
        #[arg(long)]
        session: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Per-request computation limit, in milliseconds.
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Write metrics and checklists of a saved session as JSON.
    Report {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a corpus and highlight file; exits non-zero on rejected records.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        highlights: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Serve {
            corpus,
            highlights,
            session,
            port,
            host,
            timeout_ms,
        } => {
            let loaded = open_session(&corpus, &highlights, &session)?;
            for r in &loaded.rejected {
                tracing::warn!(line = r.line, problem = %r.problem, "highlight record rejected");
            }
            let state = AppState::new(
                loaded.workbench,
                &session,
                Duration::from_millis(timeout_ms),
            );
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = bind(&host, port).await?;
                tracing::info!(addr = %listener.local_addr()?, session = %session.display(), "listening");
                serve(listener, state).await.context("server stopped")
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { session, out } => {
            let r = report(&session)?;
            let mut text = serde_json::to_string_pretty(&r)?;
            text.push('\n');
            std::fs::write(&out, text)
                .with_context(|| format!("cannot write {}", out.display()))?;
            print!("{}", render_table(&r.checklists));
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { corpus, highlights } => {
            let v = validate(&corpus, &highlights)?;
            println!("{} documents, {} highlights", v.documents, v.highlights);
            for e in &v.entities {
                println!("  {:<32} {}", e.entity, e.highlights);
            }
            for r in &v.rejected {
                println!("line {}: {}", r.line, r.problem);
            }
            if v.is_clean() {
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{} record(s) rejected", v.rejected.len());
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
