//! Live repair sessions over loaded plans.
//!
//! Each session owns a [`Walker`]; the store hands out one lock per
//! session, so events for a session are applied one at a time while
//! different sessions proceed independently.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use fixplan_core::oracle::{Event, EventError, ExecPlan, Prompt, Walker};
use fixplan_core::{ComponentId, Mode};
use serde::{Deserialize, Serialize};

/// A plan that sessions can be started on.
#[derive(Debug)]
pub struct PlanEntry {
    pub id: String,
    pub exec: ExecPlan<f64>,
    /// Expected cost given that the system is broken.
    pub ecf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSummary {
    pub plan_id: String,
    pub root: ComponentId,
    pub leaves: usize,
    pub expected_cost: f64,
}

/// Wire form of an event: `{"kind": "status_result", "outcome": "ok"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventBody {
    pub kind: EventKind,
    pub outcome: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StatusResult,
    InspectResult,
}

impl From<EventBody> for Event {
    fn from(b: EventBody) -> Self {
        match b.kind {
            EventKind::StatusResult => Event::Status(b.outcome),
            EventKind::InspectResult => Event::Inspect(b.outcome),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptView {
    /// `observe`, `replace`, `repair` or `inspect`.
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<ComponentId>,
    /// Unit whose status is reported next (absent for inspections).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<ComponentId>,
    pub expects: String,
    pub label: String,
}

impl PromptView {
    fn of(prompt: &Prompt) -> Option<Self> {
        let (action, component, unit, label) = match prompt {
            Prompt::Done => return None,
            Prompt::ObserveStatus { unit } => ("observe", None, Some(unit), format!("observe {unit}")),
            Prompt::Replace { component, unit, .. } => {
                ("replace", Some(component), Some(unit), format!("replace {component}"))
            }
            Prompt::Repair { component, unit } => ("repair", Some(component), Some(unit), format!("repair {component}")),
            Prompt::Inspect { component } => ("inspect", Some(component), None, format!("inspect {component}")),
        };
        Some(Self {
            action: action.into(),
            component: component.cloned(),
            unit: unit.cloned(),
            expects: prompt.expects().unwrap_or_default().into(),
            label,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoneView {
    pub total_cost: f64,
    pub actions_taken: usize,
}

/// Everything a client needs to render the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub plan_id: String,
    /// `in_progress` or `complete`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub done: Option<DoneView>,
    pub accumulated_cost: f64,
    pub expected_remaining_cost: f64,
    pub actions_taken: usize,
    /// Units whose plans are in progress, outermost first.
    pub breadcrumb: Vec<ComponentId>,
}

/// One entry of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: usize,
    /// `session_start`, `status_result` or `inspect_result`.
    pub kind: String,
    /// Outcome of the event; `session_start` records the initial system
    /// status.
    pub outcome: Mode,
    /// Prompt the event answered.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answered: Option<String>,
    pub accumulated_cost: f64,
}

impl LogRecord {
    /// The event to replay, or `None` for the start record.
    pub fn event(&self) -> Option<EventBody> {
        let kind = match self.kind.as_str() {
            "status_result" => EventKind::StatusResult,
            "inspect_result" => EventKind::InspectResult,
            _ => return None,
        };
        Some(EventBody {
            kind,
            outcome: self.outcome,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub plan_id: String,
    pub events: Vec<LogRecord>,
    pub state: SessionView,
}

#[derive(Debug)]
pub struct Session {
    id: String,
    plan: Arc<PlanEntry>,
    walker: Walker<f64>,
    log: Vec<LogRecord>,
}

impl Session {
    /// Starts on a system already observed to be broken.
    pub fn start(id: String, plan: Arc<PlanEntry>) -> Result<Self, SessionError> {
        let mut walker = Walker::new(&plan.exec);
        walker
            .apply(&plan.exec, Event::Status(Mode::Broken))
            .map_err(|e| SessionError::Unplayable(e.to_string()))?;
        let log = vec![LogRecord {
            seq: 0,
            kind: "session_start".into(),
            outcome: Mode::Broken,
            answered: None,
            accumulated_cost: *walker.accumulated_cost(),
        }];
        Ok(Self { id, plan, walker, log })
    }

    pub fn apply(&mut self, body: EventBody) -> Result<SessionView, SessionError> {
        let answered = PromptView::of(&self.walker.prompt(&self.plan.exec)).map(|p| p.label);
        self.walker.apply(&self.plan.exec, body.into())?;
        self.log.push(LogRecord {
            seq: self.log.len(),
            kind: Event::from(body).kind().into(),
            outcome: body.outcome,
            answered,
            accumulated_cost: *self.walker.accumulated_cost(),
        });
        Ok(self.view())
    }

    pub fn view(&self) -> SessionView {
        let exec = &self.plan.exec;
        let done = self.walker.is_done();
        SessionView {
            session_id: self.id.clone(),
            plan_id: self.plan.id.clone(),
            status: if done { "complete" } else { "in_progress" }.into(),
            prompt: PromptView::of(&self.walker.prompt(exec)),
            done: done.then(|| DoneView {
                total_cost: *self.walker.accumulated_cost(),
                actions_taken: self.walker.actions_taken(),
            }),
            accumulated_cost: *self.walker.accumulated_cost(),
            expected_remaining_cost: self.walker.expected_remaining_cost(exec),
            actions_taken: self.walker.actions_taken(),
            breadcrumb: self.walker.breadcrumb(exec),
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            session_id: self.id.clone(),
            plan_id: self.plan.id.clone(),
            events: self.log.clone(),
            state: self.view(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionError {
    UnknownPlan(String),
    UnknownSession(String),
    Rejected(EventError),
    Unplayable(String),
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::UnknownPlan(id) => write!(f, "unknown plan `{id}`"),
            SessionError::UnknownSession(id) => write!(f, "unknown session `{id}`"),
            SessionError::Rejected(e) => write!(f, "event rejected: {e}"),
            SessionError::Unplayable(m) => write!(f, "plan cannot be run: {m}"),
        }
    }
}

impl std::error::Error for SessionError {}

impl From<EventError> for SessionError {
    fn from(e: EventError) -> Self {
        SessionError::Rejected(e)
    }
}

/// Loaded plans and the sessions running on them.
#[derive(Debug, Default)]
pub struct SessionStore {
    plans: BTreeMap<String, Arc<PlanEntry>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
}

impl SessionStore {
    pub fn new(plans: impl IntoIterator<Item = PlanEntry>) -> Self {
        Self {
            plans: plans.into_iter().map(|p| (p.id.clone(), Arc::new(p))).collect(),
            ..Default::default()
        }
    }

    pub fn plans(&self) -> Vec<PlanSummary> {
        self.plans
            .values()
            .map(|p| PlanSummary {
                plan_id: p.id.clone(),
                root: p.exec.root().id.clone(),
                leaves: p.exec.leaf_count(),
                expected_cost: p.ecf,
            })
            .collect()
    }

    pub fn plan(&self, plan_id: &str) -> Option<Arc<PlanEntry>> {
        self.plans.get(plan_id).cloned()
    }

    pub fn create(&self, plan_id: &str) -> Result<SessionView, SessionError> {
        let plan = self
            .plans
            .get(plan_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownPlan(plan_id.into()))?;
        let id = format!("s{}", self.next.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Session::start(id.clone(), plan)?;
        let view = session.view();
        self.lock_map().insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.lock_map()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.into()))
    }

    fn lock_map(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<Mutex<Session>>>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs `f` with the session locked.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, SessionError> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap_or_else(|e| e.into_inner());
        Ok(f(&mut guard))
    }

    pub fn apply(&self, id: &str, body: EventBody) -> Result<SessionView, SessionError> {
        self.with_session(id, |s| s.apply(body))?
    }

    pub fn view(&self, id: &str) -> Result<SessionView, SessionError> {
        self.with_session(id, |s| s.view())
    }

    pub fn transcript(&self, id: &str) -> Result<Transcript, SessionError> {
        self.with_session(id, |s| s.transcript())
    }
}

/// Feeds a transcript's events into a fresh session on `plan`, returning
/// the view after the start and after every event.
pub fn replay(plan: Arc<PlanEntry>, events: &[LogRecord]) -> Result<Vec<SessionView>, SessionError> {
    let mut session = Session::start("replay".into(), plan)?;
    let mut views = vec![session.view()];
    for body in events.iter().filter_map(LogRecord::event) {
        views.push(session.apply(body)?);
    }
    Ok(views)
}
