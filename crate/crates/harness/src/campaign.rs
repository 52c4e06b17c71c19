//! Many virtual subjects through a whole protocol, in per-subject randomized order.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vibroguide_core::feedback::ModalityKind;
use vibroguide_core::{Error, Result, TrialLog64};

use crate::config::ExperimentConfig;
use crate::protocol::{ProtocolKind, TargetSequence};
use crate::report::Report;
use crate::trial::{
    log_file_name, plan_ergonomic, run_modality_trial_with, run_planned_ergonomic, sequence_label, ErgonomicPlan,
    Subject,
};

/// Relative spread of reaction delay, speed limit and speed gain across subjects.
pub const DEFAULT_JITTER: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub subjects: usize,
    /// Modalities each subject tries in the modality protocol.
    pub modalities: Vec<ModalityKind>,
    pub jitter: f64,
}

impl CampaignSpec {
    pub fn new(subjects: usize) -> Self {
        Self {
            subjects,
            modalities: ModalityKind::ALL.to_vec(),
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 {
            return Err(Error::Validation("a campaign needs at least one subject".into()));
        }
        if self.modalities.is_empty() {
            return Err(Error::Validation("a campaign needs at least one modality".into()));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::Validation("jitter must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One scheduled trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialItem {
    Modality { modality: ModalityKind, sequence: TargetSequence },
    Ergonomic { condition: usize },
}

impl TrialItem {
    pub fn label(&self) -> String {
        match self {
            TrialItem::Modality { modality, sequence } => format!("{modality} {}", sequence_label(sequence)),
            TrialItem::Ergonomic { condition } => format!("condition_{}", condition + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledTrial {
    pub subject: String,
    pub position: usize,
    pub item: TrialItem,
    pub seed: u64,
}

/// Subjects with jittered parameters, derived from the protocol seed alone.
pub fn campaign_subjects(config: &ExperimentConfig, spec: &CampaignSpec) -> Result<Vec<Subject>> {
    spec.validate()?;
    let base = Subject::from_session(&config.session)?.params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.protocol.seed);
    let width = spec.subjects.to_string().len().max(2);
    let subjects: Vec<Subject> = (0..spec.subjects)
        .map(|i| {
            let mut p = base;
            let mut scale = |v: f64| v * (1.0 + spec.jitter * rng.random_range(-1.0..=1.0));
            p.reaction_delay = scale(p.reaction_delay);
            p.max_joint_speed = scale(p.max_joint_speed);
            p.speed_gain = scale(p.speed_gain);
            Subject {
                label: format!("s{:0width$}", i + 1),
                params: p,
                seed: rng.random(),
            }
        })
        .collect();
    for s in &subjects {
        s.params.validate()?;
    }
    Ok(subjects)
}

/// Every subject's trial order; a pure function of the protocol seed.
pub fn schedule(config: &ExperimentConfig, spec: &CampaignSpec, subjects: &[Subject]) -> Vec<ScheduledTrial> {
    let items: Vec<TrialItem> = match config.protocol.kind {
        ProtocolKind::ModalityTest => spec
            .modalities
            .iter()
            .flat_map(|&modality| {
                config
                    .protocol
                    .targets
                    .sequences()
                    .map(|sequence| TrialItem::Modality { modality, sequence })
            })
            .collect(),
        ProtocolKind::ErgonomicTest => (0..config.protocol.ergonomic.distances.len())
            .map(|condition| TrialItem::Ergonomic { condition })
            .collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.protocol.seed ^ 0x0DE5_0DE5);
    let mut out = Vec::new();
    for s in subjects {
        let mut order = items.clone();
        order.shuffle(&mut rng);
        for (position, item) in order.into_iter().enumerate() {
            out.push(ScheduledTrial {
                subject: s.label.clone(),
                position,
                item,
                seed: s.seed.wrapping_add(position as u64),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub subjects: Vec<Subject>,
    pub schedule: Vec<ScheduledTrial>,
    pub plans: Vec<ErgonomicPlan>,
    pub logs: Vec<TrialLog64>,
    pub report: Report,
}

pub fn run_campaign(config: &ExperimentConfig, spec: &CampaignSpec) -> Result<CampaignOutput> {
    let model = config.validate()?;
    let subjects = campaign_subjects(config, spec)?;
    let schedule = schedule(config, spec, &subjects);
    let plans: Vec<ErgonomicPlan> = match config.protocol.kind {
        ProtocolKind::ModalityTest => Vec::new(),
        ProtocolKind::ErgonomicTest => config
            .protocol
            .ergonomic
            .conditions()
            .iter()
            .map(|c| plan_ergonomic(&model, c, &config.protocol.ergonomic, config.session.seed))
            .collect::<Result<_>>()?,
    };
    let mut logs = Vec::with_capacity(schedule.len());
    for trial in &schedule {
        let base = subjects.iter().find(|s| s.label == trial.subject).expect("scheduled subject exists");
        let subject = Subject {
            seed: trial.seed,
            ..base.clone()
        };
        let log = match &trial.item {
            TrialItem::Modality { modality, sequence } => {
                run_modality_trial_with(config, &model, sequence, *modality, &subject)?
            }
            TrialItem::Ergonomic { condition } => run_planned_ergonomic(config, &model, &plans[*condition], &subject)?,
        };
        logs.push(log);
    }
    let report = Report::from_logs(&logs, &config.session.metrics)?;
    Ok(CampaignOutput {
        subjects,
        schedule,
        plans,
        logs,
        report,
    })
}

fn io<E: std::fmt::Display>(e: E) -> Error {
    Error::Input(e.to_string())
}

impl CampaignOutput {
    /// Writes logs under `dir/logs`, the subject list, the schedule and the report tables.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let logs_dir = dir.join("logs");
        std::fs::create_dir_all(&logs_dir).map_err(io)?;
        let mut written = Vec::new();
        for log in &self.logs {
            let path = logs_dir.join(log_file_name(log));
            std::fs::write(&path, log.to_jsonl()?).map_err(io)?;
            written.push(path);
        }
        let path = dir.join("subjects.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self.subjects).map_err(io)?).map_err(io)?;
        written.push(path);
        if !self.plans.is_empty() {
            let path = dir.join("plans.json");
            std::fs::write(&path, serde_json::to_string_pretty(&self.plans).map_err(io)?).map_err(io)?;
            written.push(path);
        }
        let path = dir.join("schedule.csv");
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(["subject", "position", "trial", "seed"]).map_err(io)?;
        for s in &self.schedule {
            w.write_record([s.subject.clone(), s.position.to_string(), s.item.label(), s.seed.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(io)?;
        written.push(path);
        written.extend(self.report.write_csv(dir)?);
        Ok(written)
    }
}
