//! Live sessions driven by a human through wire frames instead of a simulated wearer.
//!
//! [`LiveSession`] owns all trial state and is advanced by [`LiveSession::tick`]
//! and [`LiveSession::handle_text`]; the WebSocket server in [`crate::serve`]
//! only shuttles frames in and out of it.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vibroguide_core::feedback::{DeviceCommand, FeedbackEngine, ModalityKind};
use vibroguide_core::metrics::{seq_score, sus_score, TickRecord, TrialFooter, TrialHeader, TrialLog, LOG_SCHEMA_VERSION};
use vibroguide_core::{
    Error, GuidedJoint, HumanModel64, Posture64, Result, TickRecord64, TrialLog64, N_GUIDED, N_JOINTS,
};

use crate::config::ExperimentConfig;
use crate::protocol::ProtocolKind;
use crate::report::EVENTS_SUFFIX;
use crate::trial::{log_file_name, plan_ergonomic, sequence_label, LoadSensing};

pub const LIVE_AGENT: &str = "live";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialControl {
    Start,
    Complete,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    Sus,
    Seq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireFrame {
    pub instrument: Instrument,
    /// Ten 1..=5 answers for SUS, one 1..=7 answer for SEQ.
    pub responses: Vec<u8>,
}

/// Frames sent by the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    /// Degrees added to each named guided joint.
    JointDeltas(BTreeMap<GuidedJoint, f64>),
    Questionnaire(QuestionnaireFrame),
    TrialControl(TrialControl),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub tick: u64,
    pub t: f64,
    pub trial: String,
    pub segment: u32,
    pub q_c: [f64; N_JOINTS],
    pub q_d: [f64; N_JOINTS],
    pub eps: [f64; N_GUIDED],
    pub commands: Vec<DeviceCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_overload: Option<[f64; N_JOINTS]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialEventKind {
    Started,
    SegmentComplete,
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub event: TrialEventKind,
    pub trial: String,
    pub segment: u32,
    pub segments: u32,
    pub modality: ModalityKind,
    /// Where the closed trial log was written, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireResult {
    pub instrument: Instrument,
    pub responses: Vec<u8>,
    pub score: f64,
    /// Most recently closed trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<String>,
}

/// Frames sent by the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    State(StateFrame),
    Trial(TrialEvent),
    Questionnaire(QuestionnaireResult),
    Error { message: String },
}

impl Outbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound frames serialize")
    }

    fn error(message: impl Into<String>) -> Self {
        Outbound::Error {
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone)]
enum Pending {
    Modality(crate::protocol::TargetSequence),
    Ergonomic(crate::protocol::ErgonomicCondition),
}

struct Active {
    label: String,
    targets: Vec<Posture64>,
    segment: usize,
    q_c: Posture64,
    engine: FeedbackEngine<f64>,
    sensing: Option<LoadSensing>,
    header: TrialHeader<f64>,
    ticks: Vec<TickRecord64>,
    completions: Vec<Option<f64>>,
}

pub struct LiveSession {
    config: ExperimentConfig,
    model: HumanModel64,
    queue: VecDeque<Pending>,
    active: Option<Active>,
    last_trial: Option<String>,
    closed: Vec<TrialLog64>,
    out_dir: Option<PathBuf>,
}

impl LiveSession {
    /// A session that keeps closed logs in memory only.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let model = config.validate()?;
        let queue = match config.protocol.kind {
            ProtocolKind::ModalityTest => config
                .protocol
                .targets
                .sequences()
                .into_iter()
                .map(Pending::Modality)
                .collect(),
            ProtocolKind::ErgonomicTest => config
                .protocol
                .ergonomic
                .conditions()
                .into_iter()
                .map(Pending::Ergonomic)
                .collect(),
        };
        Ok(Self {
            config,
            model,
            queue,
            active: None,
            last_trial: None,
            closed: Vec::new(),
            out_dir: None,
        })
    }

    /// Also writes closed logs and session events under `dir`.
    pub fn writing_to(mut self, dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?;
        self.out_dir = Some(dir);
        Ok(self)
    }

    pub fn is_active(&self) -> bool {
        self.active.is_some()
    }

    pub fn trials_left(&self) -> usize {
        self.queue.len()
    }

    pub fn closed_logs(&self) -> &[TrialLog64] {
        &self.closed
    }

    pub fn events_path(&self) -> Option<PathBuf> {
        self.out_dir
            .as_ref()
            .map(|d| d.join(format!("session_s{}{EVENTS_SUFFIX}", self.config.session.seed)))
    }

    /// One control tick. Nothing is emitted outside an active trial.
    pub fn tick(&mut self) -> Result<Option<StateFrame>> {
        let hz = f64::from(self.config.session.tick_hz);
        let Some(a) = self.active.as_mut() else {
            return Ok(None);
        };
        let k = a.ticks.len() as u64;
        let t = k as f64 / hz;
        let q_d = a.targets[a.segment];
        let out = a.engine.step(&a.q_c, &q_d, t)?;
        let tau = match &mut a.sensing {
            Some(s) => Some(s.sense(&self.model, &a.q_c)?),
            None => None,
        };
        a.ticks.push(TickRecord {
            tick: k,
            t,
            segment: a.segment as u32,
            q_c: a.q_c,
            q_d,
            eps: out.eps.eps,
            commands: out.commands.clone(),
            tau_overload: tau,
        });
        Ok(Some(StateFrame {
            tick: k,
            t,
            trial: a.label.clone(),
            segment: a.segment as u32,
            q_c: a.q_c.angles,
            q_d: q_d.angles,
            eps: out.eps.eps,
            commands: out.commands,
            tau_overload: tau.map(|t| t.0),
        }))
    }

    /// Parses and applies one inbound text frame. Malformed or out-of-place
    /// frames produce an error frame and leave the session unchanged.
    pub fn handle_text(&mut self, text: &str) -> Vec<Outbound> {
        match serde_json::from_str::<Inbound>(text) {
            Ok(frame) => self.handle(frame),
            Err(e) => vec![Outbound::error(format!("malformed frame: {e}"))],
        }
    }

    pub fn handle(&mut self, frame: Inbound) -> Vec<Outbound> {
        let r = match frame {
            Inbound::JointDeltas(d) => self.apply_deltas(&d).map(|()| Vec::new()),
            Inbound::Questionnaire(q) => self.questionnaire(q).map(|r| vec![r]),
            Inbound::TrialControl(TrialControl::Start) => self.start().map(|e| vec![e]),
            Inbound::TrialControl(TrialControl::Complete) => self.complete().map(|e| vec![e]),
            Inbound::TrialControl(TrialControl::Abort) => self.abort().map(|e| vec![e]),
        };
        r.unwrap_or_else(|e| vec![Outbound::error(e.to_string())])
    }

    fn apply_deltas(&mut self, deltas: &BTreeMap<GuidedJoint, f64>) -> Result<()> {
        let Some(a) = self.active.as_mut() else {
            return Err(Error::Input("joint deltas outside an active trial".into()));
        };
        if deltas.values().any(|d| !d.is_finite()) {
            return Err(Error::Input("joint deltas must be finite".into()));
        }
        for (g, d) in deltas {
            let j = g.chain_joint();
            let lim = self.model.limit(j);
            a.q_c.set(j, (a.q_c.get(j) + d).clamp(lim.min_deg, lim.max_deg));
        }
        Ok(())
    }

    fn start(&mut self) -> Result<Outbound> {
        if self.active.is_some() {
            return Err(Error::Input("a trial is already active".into()));
        }
        let Some(next) = self.queue.front().cloned() else {
            return Err(Error::Input("no trials left in this session".into()));
        };
        let session = &self.config.session;
        let (label, modality, q0, targets, sensing) = match next {
            Pending::Modality(seq) => {
                let q0 = Posture64::zero();
                let targets = seq.targets.iter().map(|&a| q0.with(seq.joint.chain_joint(), a)).collect();
                (sequence_label(&seq), session.modality, q0, targets, None)
            }
            Pending::Ergonomic(cond) => {
                let plan = plan_ergonomic(&self.model, &cond, &self.config.protocol.ergonomic, session.seed)?;
                let sensing = LoadSensing::new(&self.model, cond.load()?, session, session.seed);
                (
                    cond.label(),
                    self.config.protocol.ergonomic.modality,
                    plan.q_init,
                    vec![plan.q_d],
                    Some(sensing),
                )
            }
        };
        let feedback = session.feedback(modality);
        let engine = FeedbackEngine::new(feedback.clone())?;
        self.queue.pop_front();
        let header = TrialHeader {
            schema_version: LOG_SCHEMA_VERSION,
            protocol: self.config.protocol.kind,
            condition: label.clone(),
            seed: session.seed,
            agent: LIVE_AGENT.into(),
            feedback,
        };
        let a = Active {
            label,
            targets,
            segment: 0,
            q_c: q0,
            engine,
            sensing,
            header,
            ticks: Vec::new(),
            completions: Vec::new(),
        };
        let ev = event(&a, TrialEventKind::Started, None);
        self.active = Some(a);
        self.record_event(&ev)?;
        Ok(ev)
    }

    fn complete(&mut self) -> Result<Outbound> {
        let Some(a) = self.active.as_mut() else {
            return Err(Error::Input("no active trial to complete".into()));
        };
        a.completions.push(a.ticks.last().map(|r| r.t));
        if a.segment + 1 < a.targets.len() {
            a.segment += 1;
            let ev = event(a, TrialEventKind::SegmentComplete, None);
            self.record_event(&ev)?;
            return Ok(ev);
        }
        self.close(false)
    }

    fn abort(&mut self) -> Result<Outbound> {
        let Some(a) = self.active.as_mut() else {
            return Err(Error::Input("no active trial to abort".into()));
        };
        while a.completions.len() < a.targets.len() {
            a.completions.push(None);
        }
        self.close(true)
    }

    fn close(&mut self, aborted: bool) -> Result<Outbound> {
        let a = self.active.take().expect("caller checked for an active trial");
        let kind = if aborted {
            TrialEventKind::Aborted
        } else {
            TrialEventKind::Completed
        };
        let log = TrialLog {
            header: a.header.clone(),
            footer: TrialFooter {
                completions: a.completions.clone(),
                timed_out: false,
                aborted,
                ticks: a.ticks.len() as u64,
            },
            ticks: a.ticks.clone(),
        };
        let path = match &self.out_dir {
            Some(dir) => {
                let p = dir.join(log_file_name(&log));
                std::fs::write(&p, log.to_jsonl()?).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
                Some(p.display().to_string())
            }
            None => None,
        };
        let ev = event(&a, kind, path);
        self.last_trial = Some(a.label);
        self.closed.push(log);
        self.record_event(&ev)?;
        Ok(ev)
    }

    fn questionnaire(&mut self, q: QuestionnaireFrame) -> Result<Outbound> {
        let score = match q.instrument {
            Instrument::Sus => sus_score(&q.responses)?,
            Instrument::Seq => match q.responses.as_slice() {
                [r] => f64::from(seq_score(*r)?),
                _ => return Err(Error::Validation("SEQ takes exactly one answer".into())),
            },
        };
        let out = Outbound::Questionnaire(QuestionnaireResult {
            instrument: q.instrument,
            responses: q.responses,
            score,
            trial: self.last_trial.clone(),
        });
        self.record_event(&out)?;
        Ok(out)
    }

    /// Appends a trial or questionnaire event to the session event log.
    fn record_event(&self, ev: &Outbound) -> Result<()> {
        let Some(path) = self.events_path() else {
            return Ok(());
        };
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        writeln!(f, "{}", ev.to_json()).map_err(|e| Error::Input(e.to_string()))
    }
}

fn event(a: &Active, kind: TrialEventKind, log: Option<String>) -> Outbound {
    Outbound::Trial(TrialEvent {
        event: kind,
        trial: a.label.clone(),
        segment: a.segment as u32,
        segments: a.targets.len() as u32,
        modality: a.header.modality(),
        log,
    })
}
