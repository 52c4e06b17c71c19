use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::body::Posture;
use crate::error::{Error, Result};
use crate::feedback::{
    error_magnitude, feedback_step, guided_angles, DeviceCommand, FeedbackConfig, FeedbackState, ModalityKind,
};
use crate::loading::TorqueVector;
use crate::joint::N_GUIDED;
use crate::Scalar;

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    ModalityTest,
    ErgonomicTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrialHeader<T> {
    pub schema_version: u32,
    pub protocol: ProtocolKind,
    pub condition: String,
    pub seed: u64,
    pub agent: String,
    /// Everything needed to replay the command stream.
    pub feedback: FeedbackConfig<T>,
}

impl<T: Scalar> TrialHeader<T> {
    pub fn modality(&self) -> ModalityKind {
        self.feedback.modality
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TickRecord<T> {
    pub tick: u64,
    pub t: T,
    /// Index of the target within the trial's target sequence.
    #[serde(default)]
    pub segment: u32,
    pub q_c: Posture<T>,
    pub q_d: Posture<T>,
    pub eps: [T; N_GUIDED],
    pub commands: Vec<DeviceCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_overload: Option<TorqueVector<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrialFooter<T> {
    /// Time at which the wearer reported being done with each segment.
    pub completions: Vec<Option<T>>,
    pub timed_out: bool,
    /// Closed early by the operator.
    #[serde(default)]
    pub aborted: bool,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum LogRecord<T> {
    Header(TrialHeader<T>),
    Tick(TickRecord<T>),
    Footer(TrialFooter<T>),
}

/// A complete trial: header, one record per tick, footer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog<T> {
    pub header: TrialHeader<T>,
    pub ticks: Vec<TickRecord<T>>,
    pub footer: TrialFooter<T>,
}

impl<T: Scalar> TrialLog<T> {
    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut line = |rec: &LogRecord<T>| -> Result<()> {
            serde_json::to_writer(&mut *out, rec).map_err(|e| Error::Input(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| Error::Input(e.to_string()))
        };
        line(&LogRecord::Header(self.header.clone()))?;
        for t in &self.ticks {
            line(&LogRecord::Tick(t.clone()))?;
        }
        line(&LogRecord::Footer(self.footer.clone()))
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Input(e.to_string()))
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut header = None;
        let mut footer = None;
        let mut ticks = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Input(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord<T> =
                serde_json::from_str(&line).map_err(|e| Error::Input(format!("line {}: {e}", n + 1)))?;
            match rec {
                LogRecord::Header(h) if header.is_none() && ticks.is_empty() => header = Some(h),
                LogRecord::Tick(t) if header.is_some() && footer.is_none() => ticks.push(t),
                LogRecord::Footer(f) if header.is_some() && footer.is_none() => footer = Some(f),
                _ => return Err(Error::Input(format!("line {}: record out of order", n + 1))),
            }
        }
        let header = header.ok_or_else(|| Error::Input("log has no header".into()))?;
        if header.schema_version != LOG_SCHEMA_VERSION {
            return Err(Error::Input(format!(
                "unsupported log schema version {}",
                header.schema_version
            )));
        }
        let footer = footer.ok_or_else(|| Error::Input("log has no footer".into()))?;
        Ok(Self { header, ticks, footer })
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }

    /// Tick slices sharing a segment index, in order.
    pub fn segments(&self) -> Vec<&[TickRecord<T>]> {
        self.ticks
            .chunk_by(|a, b| a.segment == b.segment)
            .collect()
    }

    /// Checks time ordering and that every logged error matches its postures.
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.ticks.windows(2).find(|w| !(w[1].t > w[0].t) || w[1].tick != w[0].tick + 1) {
            return Err(Error::Validation(format!("tick {} is out of order", w[1].tick)));
        }
        let tol = T::lit(1e-9);
        for r in &self.ticks {
            let e = error_magnitude(&guided_angles(&r.q_c), &guided_angles(&r.q_d), &self.header.feedback.xi)?;
            if e.eps.iter().zip(&r.eps).any(|(a, b)| (*a - *b).abs() > tol) {
                return Err(Error::Validation(format!("tick {}: logged error does not match postures", r.tick)));
            }
        }
        Ok(())
    }

    /// Re-runs the feedback engine over the logged postures and compares commands.
    pub fn replay(&self) -> Result<()> {
        let cfg = &self.header.feedback;
        cfg.validate()?;
        let mut state = FeedbackState::new(cfg.modality);
        for r in &self.ticks {
            let (out, next) = feedback_step(cfg, &state, &r.q_c, &r.q_d, r.t)?;
            if out.commands != r.commands {
                return Err(Error::Validation(format!("tick {}: replayed commands differ", r.tick)));
            }
            state = next;
        }
        Ok(())
    }
}
