use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use rulefit_core::{
    CategoryDef, ChecklistThresholds, Classification, ConcordanceOptions, EntityCategories,
    TermExpression, Workbench,
};

use crate::error::{ApiError, FieldError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

type ApiResult<T> = Result<T, ApiError>;

/// Shared server state. Readers take a cheap snapshot of the current
/// workbench; writers are serialized, persist the session and only then
/// publish the new workbench.
pub struct AppState {
    current: RwLock<Arc<Workbench>>,
    writer: Mutex<()>,
    session_path: PathBuf,
    timeout: Duration,
}

impl AppState {
    pub fn new(
        workbench: Workbench,
        session_path: impl Into<PathBuf>,
        timeout: Duration,
    ) -> Arc<Self> {
        Arc::new(Self {
            current: RwLock::new(Arc::new(workbench)),
            writer: Mutex::new(()),
            session_path: session_path.into(),
            timeout,
        })
    }

    pub async fn snapshot(&self) -> Arc<Workbench> {
        self.current.read().await.clone()
    }

    pub fn session_path(&self) -> &std::path::Path {
        &self.session_path
    }

    /// Runs `f` on a snapshot off the async threads, bounded by the timeout.
    async fn read<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&Workbench) -> rulefit_core::Result<T> + Send + 'static,
    {
        let wb = self.snapshot().await;
        self.bounded(move || f(&wb).map_err(ApiError::from)).await
    }

    /// Applies `f` to a copy of the workbench, saves the session, then
    /// swaps the copy in. On any error the published state is untouched.
    async fn write<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut Workbench) -> rulefit_core::Result<T> + Send + 'static,
    {
        let _guard = self.writer.lock().await;
        let mut wb = (*self.snapshot().await).clone();
        let path = self.session_path.clone();
        let (wb, out) = self
            .bounded(move || {
                let out = f(&mut wb)?;
                wb.session().save(&path)?;
                Ok((wb, out))
            })
            .await?;
        *self.current.write().await = Arc::new(wb);
        Ok(out)
    }

    async fn bounded<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce() -> ApiResult<T> + Send + 'static,
    {
        match tokio::time::timeout(self.timeout, tokio::task::spawn_blocking(f)).await {
            Ok(Ok(out)) => out,
            Ok(Err(join)) => Err(ApiError::internal(format!("worker failed: {join}"))),
            Err(_) => Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "timeout",
                format!("request exceeded {} ms", self.timeout.as_millis()),
            )),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/entities", get(entities))
        .route("/api/entities/{entity}/terms", get(terms))
        .route("/api/entities/{entity}/discards", put(set_discards))
        .route("/api/concordance", get(concordance))
        .route(
            "/api/entities/{entity}/categories",
            get(categories).put(replace_categories).post(add_category),
        )
        .route("/api/entities/{entity}/uncategorized", get(uncategorized))
        .route("/api/entities/{entity}/spacing", get(spacing))
        .route("/api/entities/{entity}/metrics", get(metrics))
        .route("/api/entities/{entity}/matches", get(matches))
        .route(
            "/api/entities/{entity}/recall-distribution",
            get(recall_distribution),
        )
        .route("/api/entities/{entity}/checklist", get(checklist))
        .route(
            "/api/matches/{match_id}/correct",
            post(correct).delete(undo_correction),
        )
        .route("/api/thresholds", get(thresholds).put(set_thresholds))
        .route("/api/report", get(report))
        .route("/api/session/save", post(save_session))
        .fallback(not_found)
        .with_state(state)
}

type Params = Query<HashMap<String, String>>;

fn param<T: std::str::FromStr>(
    params: &HashMap<String, String>,
    name: &str,
    default: T,
) -> ApiResult<T> {
    match params.get(name) {
        None => Ok(default),
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| ApiError::bad_request(name, format!("cannot parse {name}={raw:?}"))),
    }
}

fn required<'a>(params: &'a HashMap<String, String>, name: &str) -> ApiResult<&'a str> {
    params
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request(name, format!("missing query parameter {name}")))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|rej| ApiError::bad_request("body", rej.body_text()))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn entities(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let rows = s.read(|wb| Ok(wb.entities())).await?;
    Ok(Json(rows).into_response())
}

async fn terms(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    Query(q): Params,
) -> ApiResult<Response> {
    let extra: Vec<String> = q
        .get("discard")
        .map(|d| {
            d.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect()
        })
        .unwrap_or_default();
    let rows = s.read(move |wb| wb.terms(&entity, &extra)).await?;
    Ok(Json(rows).into_response())
}

#[derive(Deserialize)]
struct DiscardsBody {
    terms: BTreeSet<String>,
}

async fn set_discards(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    payload: Result<Json<DiscardsBody>, JsonRejection>,
) -> ApiResult<Response> {
    let DiscardsBody { terms } = body(payload)?;
    let rows = s
        .write(move |wb| {
            wb.set_discards(&entity, terms)?;
            wb.terms(&entity, &[])
        })
        .await?;
    Ok(Json(rows).into_response())
}

async fn concordance(State(s): State<Arc<AppState>>, Query(q): Params) -> ApiResult<Response> {
    let query = required(&q, "q")?.to_owned();
    let defaults = ConcordanceOptions::default();
    let options = ConcordanceOptions {
        window_tokens: param(&q, "window", defaults.window_tokens)?,
        whole_word: param(&q, "whole_word", defaults.whole_word)?,
    };
    let rows = s.read(move |wb| wb.concordance(&query, options)).await?;
    Ok(Json(rows).into_response())
}

async fn categories(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
) -> ApiResult<Response> {
    let set = s
        .read(move |wb| {
            let categories = wb.categories(&entity)?.to_vec();
            Ok(EntityCategories { entity, categories })
        })
        .await?;
    Ok(Json(set).into_response())
}

/// Category set as sent by clients; `entity` may be left out.
#[derive(Deserialize)]
struct CategoriesBody {
    entity: Option<String>,
    categories: Vec<CategoryDef>,
}

#[derive(Serialize)]
struct CategoriesUpdated {
    categories: EntityCategories,
    metrics: rulefit_core::session::EntityReport,
}

/// Every problem in `defs`, addressed by JSON path.
pub fn category_field_errors(defs: &[CategoryDef]) -> Vec<FieldError> {
    let mut out = Vec::new();
    let mut push = |field: String, err: rulefit_core::Error| {
        out.push(FieldError {
            field,
            message: err.to_string(),
        })
    };
    let mut seen = HashSet::new();
    for (i, def) in defs.iter().enumerate() {
        let at = format!("categories[{i}]");
        if def.id.trim().is_empty() {
            push(format!("{at}.id"), rulefit_core::Error::MissingCategoryId);
        } else if !seen.insert(def.id.as_str()) {
            push(
                format!("{at}.id"),
                rulefit_core::Error::DuplicateCategory {
                    entity: String::new(),
                    category_id: def.id.clone(),
                },
            );
        }
        for (j, t) in def.terms.iter().enumerate() {
            if let Err(e) = TermExpression::literal(t) {
                push(format!("{at}.terms[{j}]"), e);
            }
        }
        for (j, g) in def.gap_expressions.iter().enumerate() {
            if let Err(e) = TermExpression::gapped(&g.segments, &g.gaps) {
                push(format!("{at}.gap_expressions[{j}]"), e);
            }
        }
        for (j, r) in def.regexes.iter().enumerate() {
            if let Err(e) = TermExpression::regex(r) {
                push(format!("{at}.regexes[{j}]"), e);
            }
        }
        for (j, b) in def.banwords.iter().enumerate() {
            if let Err(e) = TermExpression::literal(b) {
                push(format!("{at}.banwords[{j}]"), e);
            }
        }
        if def.terms.is_empty() && def.gap_expressions.is_empty() && def.regexes.is_empty() {
            push(at, rulefit_core::Error::EmptyCategory(def.id.clone()));
        }
    }
    out
}

fn reject(problems: Vec<FieldError>) -> ApiResult<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ApiError::invalid(problems))
    }
}

fn updated(wb: &Workbench, entity: &str) -> rulefit_core::Result<CategoriesUpdated> {
    Ok(CategoriesUpdated {
        categories: EntityCategories {
            entity: entity.to_owned(),
            categories: wb.categories(entity)?.to_vec(),
        },
        metrics: wb.report(entity)?,
    })
}

async fn replace_categories(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    payload: Result<Json<CategoriesBody>, JsonRejection>,
) -> ApiResult<Response> {
    let CategoriesBody {
        entity: named,
        categories,
    } = body(payload)?;
    if let Some(found) = named.filter(|n| *n != entity) {
        return Err(ApiError::invalid(vec![FieldError {
            field: "entity".into(),
            message: format!("body names entity {found}, path names {entity}"),
        }]));
    }
    s.snapshot().await.categories(&entity)?;
    reject(category_field_errors(&categories))?;
    let out = s
        .write(move |wb| {
            wb.set_categories(&entity, categories)?;
            updated(wb, &entity)
        })
        .await?;
    Ok(Json(out).into_response())
}

async fn add_category(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    payload: Result<Json<CategoryDef>, JsonRejection>,
) -> ApiResult<Response> {
    let def = body(payload)?;
    s.snapshot().await.categories(&entity)?;
    // a lone category is reported without the list prefix
    reject(
        category_field_errors(std::slice::from_ref(&def))
            .into_iter()
            .map(|f| FieldError {
                field: f
                    .field
                    .trim_start_matches("categories[0]")
                    .trim_start_matches('.')
                    .to_owned(),
                message: f.message,
            })
            .map(|f| match f.field.is_empty() {
                true => FieldError {
                    field: "category".into(),
                    ..f
                },
                false => f,
            })
            .collect(),
    )?;
    let out = s
        .write(move |wb| {
            wb.add_category(&entity, def)?;
            updated(wb, &entity)
        })
        .await?;
    Ok(Json(out).into_response())
}

async fn uncategorized(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
) -> ApiResult<Response> {
    let rows = s.read(move |wb| wb.uncategorized(&entity)).await?;
    Ok(Json(rows).into_response())
}

async fn spacing(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    Query(q): Params,
) -> ApiResult<Response> {
    let first = required(&q, "first")?.to_owned();
    let second = required(&q, "second")?.to_owned();
    let cap: usize = param(&q, "cap", 100)?;
    let profile = s
        .read(move |wb| wb.spacing(&entity, &first, &second, cap))
        .await?;
    Ok(Json(profile).into_response())
}

async fn metrics(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
) -> ApiResult<Response> {
    let report = s.read(move |wb| wb.report(&entity)).await?;
    Ok(Json(report).into_response())
}

fn classification(raw: &str) -> ApiResult<Classification> {
    match raw.trim().to_ascii_uppercase().as_str() {
        "TP" => Ok(Classification::Tp),
        "FP" => Ok(Classification::Fp),
        "TP_CORR" => Ok(Classification::TpCorr),
        _ => Err(ApiError::bad_request(
            "class",
            format!("class must be TP, FP or TP_CORR, got {raw:?}"),
        )),
    }
}

async fn matches(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
    Query(q): Params,
) -> ApiResult<Response> {
    let class = q.get("class").map(|c| classification(c)).transpose()?;
    let window: usize = param(&q, "window", ConcordanceOptions::default().window_tokens)?;
    let rows = s.read(move |wb| wb.review(&entity, class, window)).await?;
    Ok(Json(rows).into_response())
}

async fn recall_distribution(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
) -> ApiResult<Response> {
    let dist = s.read(move |wb| wb.recall_distribution(&entity)).await?;
    Ok(Json(dist).into_response())
}

async fn checklist(
    State(s): State<Arc<AppState>>,
    Path(entity): Path<String>,
) -> ApiResult<Response> {
    let result = s.read(move |wb| wb.checklist(&entity)).await?;
    Ok(Json(result).into_response())
}

async fn correct(
    State(s): State<Arc<AppState>>,
    Path(match_id): Path<String>,
) -> ApiResult<Response> {
    let report = s
        .write(move |wb| {
            let m = wb.apply_correction(&match_id)?;
            wb.report(&m.entity)
        })
        .await?;
    Ok(Json(report).into_response())
}

async fn undo_correction(
    State(s): State<Arc<AppState>>,
    Path(match_id): Path<String>,
) -> ApiResult<Response> {
    let report = s
        .write(move |wb| {
            let m = wb.undo_correction(&match_id)?;
            wb.report(&m.entity)
        })
        .await?;
    Ok(Json(report).into_response())
}

async fn thresholds(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    Ok(Json(s.snapshot().await.session().thresholds).into_response())
}

async fn set_thresholds(
    State(s): State<Arc<AppState>>,
    payload: Result<Json<ChecklistThresholds>, JsonRejection>,
) -> ApiResult<Response> {
    let t = body(payload)?;
    let saved = s
        .write(move |wb| {
            wb.set_thresholds(t)?;
            Ok(wb.session().thresholds)
        })
        .await?;
    Ok(Json(saved).into_response())
}

async fn report(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let r = s.read(|wb| wb.full_report()).await?;
    Ok(Json(r).into_response())
}

#[derive(Serialize)]
struct Saved {
    path: PathBuf,
    session_id: String,
}

async fn save_session(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let path = s.session_path.clone();
    let saved = s
        .write(move |wb| {
            Ok(Saved {
                path,
                session_id: wb.session().session_id.to_string(),
            })
        })
        .await?;
    Ok(Json(saved).into_response())
}
