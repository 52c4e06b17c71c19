//! Per-trial summaries and the aggregate tables written as CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vibroguide_core::feedback::ModalityKind;
use vibroguide_core::metrics::{
    confusion_index, decrement_ratio, final_error, reach_kinematics, rm_anova_f, success, summarize, MetricsConfig,
    ProtocolKind, Summary, TickRecord,
};
use vibroguide_core::{Error, GuidedJoint, Joint, Result, TrialLog64, N_JOINTS};

/// One target of a modality trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub subject: String,
    pub seed: u64,
    pub modality: ModalityKind,
    pub joint: Option<GuidedJoint>,
    pub segment: u32,
    pub target: Option<f64>,
    pub completed: bool,
    /// 100 when the closing window reaches the dead-band, else 0.
    pub success: f64,
    pub reaching_time: Option<f64>,
    pub distance: Option<f64>,
    pub velocity: Option<f64>,
    pub speed: Option<f64>,
    pub confusion: Option<f64>,
    /// Final error of the trial's joint, percent.
    pub final_error: Option<f64>,
}

/// One ergonomic trial: overloading torques at the first and last tick and their decrement ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicRow {
    pub subject: String,
    pub seed: u64,
    pub condition: String,
    pub modality: ModalityKind,
    pub completed: bool,
    pub success: f64,
    pub reaching_time: Option<f64>,
    pub tau_init: [f64; N_JOINTS],
    pub tau_final: [f64; N_JOINTS],
    pub decrement: [Option<f64>; N_JOINTS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrialSummary {
    Modality(Vec<SegmentRow>),
    Ergonomic(ErgonomicRow),
}

/// Metric names of the modality table, in column order.
pub const MODALITY_METRICS: [&str; 7] = [
    "success",
    "reaching_time",
    "distance",
    "velocity",
    "speed",
    "confusion",
    "final_error",
];

impl SegmentRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "success" => Some(self.success),
            "reaching_time" => self.reaching_time,
            "distance" => self.distance,
            "velocity" => self.velocity,
            "speed" => self.speed,
            "confusion" => self.confusion,
            "final_error" => self.final_error,
            _ => None,
        }
    }
}

/// Success and reaching time, treating a segment shorter than the window as a failure.
fn outcome(seg: &[TickRecord<f64>], cfg: &MetricsConfig) -> Result<(bool, Option<f64>, Option<[f64; 3]>)> {
    match success(seg, cfg) {
        Ok(s) => {
            let k = reach_kinematics(seg, cfg)?;
            Ok((s, k.map(|k| k.duration), Some(final_error(seg, cfg)?)))
        }
        Err(Error::Evaluation(_)) => Ok((false, None, None)),
        Err(e) => Err(e),
    }
}

fn trial_joint(condition: &str) -> Option<GuidedJoint> {
    let name = condition.split(':').next()?;
    serde_json::from_value(serde_json::Value::String(name.to_string())).ok()
}

pub fn summarize_log(log: &TrialLog64, cfg: &MetricsConfig) -> Result<TrialSummary> {
    let h = &log.header;
    match h.protocol {
        ProtocolKind::ModalityTest => {
            let joint = trial_joint(&h.condition);
            let mut rows = Vec::new();
            for (i, seg) in log.segments().into_iter().enumerate() {
                let (ok, _, fe) = outcome(seg, cfg)?;
                let kin = if ok { reach_kinematics(seg, cfg)? } else { None };
                let segment = seg[0].segment;
                rows.push(SegmentRow {
                    subject: h.agent.clone(),
                    seed: h.seed,
                    modality: h.modality(),
                    joint,
                    segment,
                    target: joint.map(|j| seg[0].q_d.get(j.chain_joint())),
                    completed: log.footer.completions.get(i).is_some_and(Option::is_some),
                    success: if ok { 100.0 } else { 0.0 },
                    reaching_time: kin.map(|k| k.duration),
                    distance: kin.map(|k| k.distance),
                    velocity: kin.map(|k| k.velocity),
                    speed: kin.map(|k| k.speed),
                    confusion: confusion_index(seg, cfg)?,
                    final_error: joint.zip(fe).map(|(j, fe)| fe[j.index()]),
                });
            }
            Ok(TrialSummary::Modality(rows))
        }
        ProtocolKind::ErgonomicTest => {
            let (Some(first), Some(last)) = (log.ticks.first(), log.ticks.last()) else {
                return Err(Error::Evaluation("empty log".into()));
            };
            let (Some(ti), Some(tf)) = (first.tau_overload, last.tau_overload) else {
                return Err(Error::Evaluation("ergonomic log without overloading torques".into()));
            };
            let (ok, rt, _) = outcome(&log.ticks, cfg)?;
            Ok(TrialSummary::Ergonomic(ErgonomicRow {
                subject: h.agent.clone(),
                seed: h.seed,
                condition: h.condition.clone(),
                modality: h.modality(),
                completed: log.footer.completions.first().is_some_and(Option::is_some),
                success: if ok { 100.0 } else { 0.0 },
                reaching_time: rt,
                tau_init: ti.0,
                tau_final: tf.0,
                decrement: decrement_ratio(&ti, &tf, cfg.torque_threshold),
            }))
        }
    }
}

/// Mean and standard deviation of one metric for a (joint, modality) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub metric: String,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityCell {
    pub joint: Option<GuidedJoint>,
    pub modality: ModalityKind,
    pub segments: usize,
    pub stats: Vec<CellStat>,
}

impl ModalityCell {
    pub fn stat(&self, metric: &str) -> Option<&Summary> {
        self.stats.iter().find(|s| s.metric == metric)?.summary.as_ref()
    }
}

/// Repeated-measures F across modalities for one joint and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub joint: Option<GuidedJoint>,
    pub metric: String,
    pub subjects: usize,
    pub f: f64,
    pub p: f64,
    pub df_conditions: f64,
    pub df_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicCell {
    pub condition: String,
    pub trials: usize,
    pub success: Option<Summary>,
    pub decrement: [Option<Summary>; N_JOINTS],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub segments: Vec<SegmentRow>,
    pub ergonomic: Vec<ErgonomicRow>,
    pub modality_table: Vec<ModalityCell>,
    pub anova: Vec<AnovaRow>,
    pub ergonomic_table: Vec<ErgonomicCell>,
}

impl Report {
    pub fn from_logs(logs: &[TrialLog64], cfg: &MetricsConfig) -> Result<Self> {
        let mut segments = Vec::new();
        let mut ergonomic = Vec::new();
        for log in logs {
            match summarize_log(log, cfg)? {
                TrialSummary::Modality(rows) => segments.extend(rows),
                TrialSummary::Ergonomic(row) => ergonomic.push(row),
            }
        }
        let modality_table = modality_table(&segments);
        let anova = anova_rows(&segments);
        let ergonomic_table = ergonomic_table(&ergonomic);
        Ok(Self {
            segments,
            ergonomic,
            modality_table,
            anova,
            ergonomic_table,
        })
    }

    /// Writes every non-empty table into `dir` and returns the written paths.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut written = Vec::new();
        if !self.segments.is_empty() {
            let path = dir.join("modality_segments.csv");
            write_segments(&path, &self.segments)?;
            written.push(path);
            let path = dir.join("table_modality.csv");
            write_modality_table(&path, &self.modality_table)?;
            written.push(path);
        }
        if !self.anova.is_empty() {
            let path = dir.join("anova_modality.csv");
            write_anova(&path, &self.anova)?;
            written.push(path);
        }
        if !self.ergonomic.is_empty() {
            let path = dir.join("ergonomic_trials.csv");
            write_ergonomic(&path, &self.ergonomic)?;
            written.push(path);
            let path = dir.join("table_ergonomic.csv");
            write_ergonomic_table(&path, &self.ergonomic_table)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn modality_table(rows: &[SegmentRow]) -> Vec<ModalityCell> {
    let mut groups: BTreeMap<(Option<GuidedJoint>, ModalityKind), Vec<&SegmentRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.joint, r.modality)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((joint, modality), rs)| ModalityCell {
            joint,
            modality,
            segments: rs.len(),
            stats: MODALITY_METRICS
                .iter()
                .map(|m| {
                    let vals: Vec<f64> = rs.iter().filter_map(|r| r.metric(m)).collect();
                    CellStat {
                        metric: m.to_string(),
                        summary: summarize(&vals),
                    }
                })
                .collect(),
        })
        .collect()
}

fn anova_rows(rows: &[SegmentRow]) -> Vec<AnovaRow> {
    let joints: Vec<Option<GuidedJoint>> = {
        let mut j: Vec<_> = rows.iter().map(|r| r.joint).collect();
        j.sort();
        j.dedup();
        j
    };
    let mut out = Vec::new();
    for joint in joints {
        let modalities: Vec<ModalityKind> = ModalityKind::ALL
            .into_iter()
            .filter(|m| rows.iter().any(|r| r.joint == joint && r.modality == *m))
            .collect();
        if modalities.len() < 2 {
            continue;
        }
        for metric in MODALITY_METRICS {
            // subject -> modality -> values
            let mut cells: BTreeMap<&str, BTreeMap<ModalityKind, Vec<f64>>> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.joint == joint) {
                if let Some(v) = r.metric(metric) {
                    cells.entry(&r.subject).or_default().entry(r.modality).or_default().push(v);
                }
            }
            let data: Vec<Vec<f64>> = cells
                .values()
                .filter(|by_mod| modalities.iter().all(|m| by_mod.contains_key(m)))
                .map(|by_mod| {
                    modalities
                        .iter()
                        .map(|m| {
                            let v = &by_mod[m];
                            v.iter().sum::<f64>() / v.len() as f64
                        })
                        .collect()
                })
                .collect();
            if let Ok(a) = rm_anova_f(&data) {
                out.push(AnovaRow {
                    joint,
                    metric: metric.to_string(),
                    subjects: data.len(),
                    f: a.f,
                    p: a.p,
                    df_conditions: a.df_conditions,
                    df_error: a.df_error,
                });
            }
        }
    }
    out
}

fn ergonomic_table(rows: &[ErgonomicRow]) -> Vec<ErgonomicCell> {
    let mut groups: BTreeMap<&str, Vec<&ErgonomicRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(&r.condition).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(condition, rs)| ErgonomicCell {
            condition: condition.to_string(),
            trials: rs.len(),
            success: summarize(&rs.iter().map(|r| r.success).collect::<Vec<_>>()),
            decrement: std::array::from_fn(|k| {
                summarize(&rs.iter().filter_map(|r| r.decrement[k]).collect::<Vec<_>>())
            }),
        })
        .collect()
}

fn io<E: std::fmt::Display>(e: E) -> Error {
    Error::Input(e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn joint_name(j: Option<GuidedJoint>) -> String {
    j.map(|j| j.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(io)
}

fn write_segments(path: &Path, rows: &[SegmentRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "subject",
        "seed",
        "modality",
        "joint",
        "segment",
        "target_deg",
        "completed",
        "success_pct",
        "reaching_time_s",
        "distance_deg",
        "velocity_deg_s",
        "speed_deg_s",
        "confusion_pct",
        "final_error_pct",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.subject.clone(),
            r.seed.to_string(),
            r.modality.to_string(),
            joint_name(r.joint),
            r.segment.to_string(),
            opt(r.target),
            r.completed.to_string(),
            format!("{}", r.success),
            opt(r.reaching_time),
            opt(r.distance),
            opt(r.velocity),
            opt(r.speed),
            opt(r.confusion),
            opt(r.final_error),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn summary_fields(s: Option<&Summary>) -> [String; 2] {
    [opt(s.map(|s| s.mean)), opt(s.and_then(|s| s.std))]
}

fn write_modality_table(path: &Path, cells: &[ModalityCell]) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = vec!["joint".to_string(), "modality".into(), "segments".into()];
    for m in MODALITY_METRICS {
        head.push(format!("{m}_mean"));
        head.push(format!("{m}_std"));
    }
    w.write_record(&head).map_err(io)?;
    for c in cells {
        let mut rec = vec![joint_name(c.joint), c.modality.to_string(), c.segments.to_string()];
        for m in MODALITY_METRICS {
            rec.extend(summary_fields(c.stat(m)));
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_anova(path: &Path, rows: &[AnovaRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["joint", "metric", "subjects", "f", "p", "df_conditions", "df_error"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            joint_name(r.joint),
            r.metric.clone(),
            r.subjects.to_string(),
            format!("{}", r.f),
            format!("{}", r.p),
            format!("{}", r.df_conditions),
            format!("{}", r.df_error),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_ergonomic(path: &Path, rows: &[ErgonomicRow]) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = vec![
        "subject".to_string(),
        "seed".into(),
        "condition".into(),
        "modality".into(),
        "completed".into(),
        "success_pct".into(),
        "reaching_time_s".into(),
    ];
    for prefix in ["tau_init", "tau_final", "decrement_pct"] {
        for j in Joint::ALL {
            head.push(format!("{prefix}_{j}"));
        }
    }
    w.write_record(&head).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.subject.clone(),
            r.seed.to_string(),
            r.condition.clone(),
            r.modality.to_string(),
            r.completed.to_string(),
            format!("{}", r.success),
            opt(r.reaching_time),
        ];
        rec.extend(r.tau_init.iter().map(|v| format!("{v}")));
        rec.extend(r.tau_final.iter().map(|v| format!("{v}")));
        rec.extend(r.decrement.iter().map(|v| opt(*v)));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_ergonomic_table(path: &Path, cells: &[ErgonomicCell]) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = vec!["condition".to_string(), "trials".into(), "success_mean".into(), "success_std".into()];
    for j in Joint::ALL {
        head.push(format!("decrement_{j}_mean"));
        head.push(format!("decrement_{j}_std"));
    }
    w.write_record(&head).map_err(io)?;
    for c in cells {
        let mut rec = vec![c.condition.clone(), c.trials.to_string()];
        rec.extend(summary_fields(c.success.as_ref()));
        for d in &c.decrement {
            rec.extend(summary_fields(d.as_ref()));
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Suffix of live-session event logs, which sit next to trial logs but are not trial logs.
pub const EVENTS_SUFFIX: &str = ".events.jsonl";

/// Reads every `*.jsonl` trial log in `dir`, in file-name order.
pub fn load_logs(dir: &Path) -> Result<Vec<TrialLog64>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .filter(|p| !p.to_string_lossy().ends_with(EVENTS_SUFFIX))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let f = std::fs::File::open(p).map_err(io)?;
            TrialLog64::read_jsonl(std::io::BufReader::new(f))
                .map_err(|e| Error::Input(format!("{}: {e}", p.display())))
        })
        .collect()
}
