//! Closed-loop trial runners for both protocols.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vibroguide_core::body::SescParams;
use vibroguide_core::feedback::{FeedbackConfig, FeedbackEngine, ModalityKind};
use vibroguide_core::loading::{
    estimate_overloading, overloading_torques_oracle, simulate_plate, simulate_plate_noisy, EstimatorConfig,
    PlateNoise, PlateReading,
};
use vibroguide_core::metrics::{TickRecord, TrialFooter, TrialHeader, TrialLog, LOG_SCHEMA_VERSION};
use vibroguide_core::posture_opt::{objective, optimize_posture, OptimizationSpec, SolveReport};
use vibroguide_core::wearer::{AgentParams, SimulatedWearer};
use vibroguide_core::{
    Error, HumanModel64, LoadSpec64, Posture64, Result, SescParams64, TorqueVector64, TrialLog64,
};

use crate::config::{AgentChoice, ExperimentConfig, SessionConfig};
use crate::protocol::{initial_posture, ErgonomicCondition, ErgonomicSpec, ProtocolKind, TargetSequence};

/// A simulated wearer with its own parameters and random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub label: String,
    pub params: AgentParams,
    pub seed: u64,
}

impl Subject {
    /// The agent named in the session config. Live sessions have none.
    pub fn from_session(session: &SessionConfig) -> Result<Self> {
        let params = session
            .agent_params()
            .ok_or_else(|| Error::Config("a live agent cannot run offline trials; use `serve`".into()))?;
        let label = match session.agent {
            AgentChoice::Preset(_) if session.agent_params.is_some() => "custom".to_string(),
            a => a.to_string(),
        };
        Ok(Self {
            label,
            params,
            seed: session.seed,
        })
    }
}

/// Label of a modality trial, e.g. `torso:-10/30/60`.
pub fn sequence_label(seq: &TargetSequence) -> String {
    let t: Vec<String> = seq.targets.iter().map(|v| format!("{v}")).collect();
    format!("{}:{}", seq.joint, t.join("/"))
}

/// Overloading torques from the simulated plate, block-averaged down to one value per tick.
pub struct LoadSensing {
    load: LoadSpec64,
    sesc: SescParams64,
    noise: PlateNoise,
    decimation: u32,
    estimator: EstimatorConfig<f64>,
    rng: ChaCha8Rng,
}

impl LoadSensing {
    pub fn new(model: &HumanModel64, load: LoadSpec64, session: &SessionConfig, seed: u64) -> Self {
        Self {
            load,
            sesc: SescParams::from_model(model),
            noise: session.plate_noise,
            decimation: session.decimation(),
            estimator: EstimatorConfig::default(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EC5_0000),
        }
    }

    pub fn sense(&mut self, model: &HumanModel64, q: &Posture64) -> Result<TorqueVector64> {
        let reading = if self.noise.cop_sigma == 0.0 && self.noise.grf_sigma == 0.0 {
            simulate_plate(model, q, &self.load)
        } else {
            let n = f64::from(self.decimation);
            let (mut grf, mut cop) = (0.0, 0.0);
            for _ in 0..self.decimation {
                let r = simulate_plate_noisy(model, q, &self.load, &self.noise, &mut self.rng);
                grf += r.grf_z;
                cop += r.cop_x;
            }
            PlateReading {
                grf_z: grf / n,
                cop_x: cop / n,
            }
        };
        Ok(estimate_overloading(&reading, &self.sesc, model, q, &self.estimator)?.torques)
    }
}

struct Loop<'a> {
    model: &'a HumanModel64,
    session: &'a SessionConfig,
    timeout_s: f64,
    engine: FeedbackEngine<f64>,
    wearer: SimulatedWearer,
    sensing: Option<LoadSensing>,
}

impl Loop<'_> {
    /// Runs every segment in turn; the wearer forgets its cues between segments.
    fn run(mut self, header: TrialHeader<f64>, q0: Posture64, targets: &[Posture64]) -> Result<TrialLog64> {
        let dt = self.session.dt();
        let hz = f64::from(self.session.tick_hz);
        let window = self.session.metrics.window;
        let xi = self.engine.config().xi;
        let mut q = q0;
        let mut ticks = Vec::new();
        let mut completions = Vec::with_capacity(targets.len());
        let mut timed_out = false;
        let mut k = 0u64;
        for (segment, q_d) in targets.iter().enumerate() {
            self.wearer.reset();
            let start = k as f64 / hz;
            loop {
                let t = k as f64 / hz;
                let out = self.engine.step(&q, q_d, t)?;
                let tau_overload = match &mut self.sensing {
                    Some(s) => Some(s.sense(self.model, &q)?),
                    None => None,
                };
                let reached = out.target.is_none();
                ticks.push(TickRecord {
                    tick: k,
                    t,
                    segment: segment as u32,
                    q_c: q,
                    q_d: *q_d,
                    eps: out.eps.eps,
                    commands: out.commands.clone(),
                    tau_overload,
                });
                k += 1;
                if reached && self.wearer.is_done(t) && t - start >= window - 1e-9 {
                    completions.push(Some(t));
                    break;
                }
                if t - start >= self.timeout_s - 1e-9 {
                    completions.push(None);
                    timed_out = true;
                    break;
                }
                self.wearer.observe(t, &out.commands);
                q = self.wearer.act(t, &q, q_d, self.model, &xi, dt)?;
            }
        }
        let footer = TrialFooter {
            completions,
            timed_out,
            aborted: false,
            ticks: ticks.len() as u64,
        };
        Ok(TrialLog {
            header,
            ticks,
            footer,
        })
    }
}

fn header(
    protocol: ProtocolKind,
    condition: String,
    subject: &Subject,
    feedback: FeedbackConfig<f64>,
) -> TrialHeader<f64> {
    TrialHeader {
        schema_version: LOG_SCHEMA_VERSION,
        protocol,
        condition,
        seed: subject.seed,
        agent: subject.label.clone(),
        feedback,
    }
}

/// Modality trial with the agent named in the config.
pub fn run_modality_trial(config: &ExperimentConfig, seq: &TargetSequence) -> Result<TrialLog64> {
    let model = config.validate()?;
    let subject = Subject::from_session(&config.session)?;
    run_modality_trial_with(config, &model, seq, config.session.modality, &subject)
}

/// Three consecutive targets for one joint from the upright posture.
///
/// A segment ends once every guided error is inside the dead-band, the wearer
/// reports being done and the segment spans at least the metrics window, or
/// after `timeout_s` without that.
pub fn run_modality_trial_with(
    config: &ExperimentConfig,
    model: &HumanModel64,
    seq: &TargetSequence,
    modality: ModalityKind,
    subject: &Subject,
) -> Result<TrialLog64> {
    let session = &config.session;
    let feedback = session.feedback(modality);
    let engine = FeedbackEngine::new(feedback.clone())?;
    let wearer = SimulatedWearer::new(subject.params, modality, feedback.placements.clone(), subject.seed)?;
    let q0 = Posture64::zero();
    let targets: Vec<Posture64> = seq
        .targets
        .iter()
        .map(|&a| q0.with(seq.joint.chain_joint(), a))
        .collect();
    let h = header(ProtocolKind::ModalityTest, sequence_label(seq), subject, feedback);
    Loop {
        model,
        session,
        timeout_s: config.protocol.timeout_s,
        engine,
        wearer,
        sensing: None,
    }
    .run(h, q0, &targets)
}

/// Start and optimized postures of an ergonomic condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicPlan {
    pub condition: ErgonomicCondition,
    pub q_init: Posture64,
    pub q_d: Posture64,
    pub tau_init: TorqueVector64,
    pub tau_opt: TorqueVector64,
    pub objective_init: f64,
    /// `None` when there is no load to optimize against.
    pub solve: Option<SolveReport<f64>>,
}

pub fn plan_ergonomic(
    model: &HumanModel64,
    cond: &ErgonomicCondition,
    spec: &ErgonomicSpec,
    seed: u64,
) -> Result<ErgonomicPlan> {
    let load = cond.load()?;
    let q_init = initial_posture(model, cond)?;
    let mut opt = OptimizationSpec::for_initial(model, &q_init, spec.z_th);
    opt.solver.seed = seed;
    let (q_d, solve) = if load.mass > 0.0 {
        let (q_d, report) = optimize_posture(model, &q_init, &load, &opt)?;
        (q_d, Some(report))
    } else {
        (q_init, None)
    };
    Ok(ErgonomicPlan {
        condition: *cond,
        q_init,
        q_d,
        tau_init: overloading_torques_oracle(model, &q_init, &load),
        tau_opt: overloading_torques_oracle(model, &q_d, &load),
        objective_init: objective(model, &q_init, &load, &opt.weights),
        solve,
    })
}

/// Ergonomic trial with the agent named in the config.
pub fn run_ergonomic_trial(config: &ExperimentConfig, cond: &ErgonomicCondition) -> Result<(ErgonomicPlan, TrialLog64)> {
    let model = config.validate()?;
    let subject = Subject::from_session(&config.session)?;
    run_ergonomic_trial_with(config, &model, cond, &subject)
}

pub fn run_ergonomic_trial_with(
    config: &ExperimentConfig,
    model: &HumanModel64,
    cond: &ErgonomicCondition,
    subject: &Subject,
) -> Result<(ErgonomicPlan, TrialLog64)> {
    let plan = plan_ergonomic(model, cond, &config.protocol.ergonomic, config.session.seed)?;
    let log = run_planned_ergonomic(config, model, &plan, subject)?;
    Ok((plan, log))
}

/// Guides the wearer from the reaching posture to the optimized one. Ankle and
/// knee follow on their own; the plate-based overloading torques are logged every tick.
pub fn run_planned_ergonomic(
    config: &ExperimentConfig,
    model: &HumanModel64,
    plan: &ErgonomicPlan,
    subject: &Subject,
) -> Result<TrialLog64> {
    let session = &config.session;
    let modality = config.protocol.ergonomic.modality;
    let feedback = session.feedback(modality);
    let engine = FeedbackEngine::new(feedback.clone())?;
    let wearer = SimulatedWearer::new(subject.params, modality, feedback.placements.clone(), subject.seed)?
        .tracking_unguided(true);
    let sensing = LoadSensing::new(model, plan.condition.load()?, session, subject.seed);
    let h = header(ProtocolKind::ErgonomicTest, plan.condition.label(), subject, feedback);
    Loop {
        model,
        session,
        timeout_s: config.protocol.timeout_s,
        engine,
        wearer,
        sensing: Some(sensing),
    }
    .run(h, plan.q_init, &[plan.q_d])
}

/// Every trial of the configured protocol for the configured agent.
pub fn run_protocol(config: &ExperimentConfig) -> Result<Vec<TrialLog64>> {
    let model = config.validate()?;
    let subject = Subject::from_session(&config.session)?;
    match config.protocol.kind {
        ProtocolKind::ModalityTest => config
            .protocol
            .targets
            .sequences()
            .iter()
            .map(|seq| run_modality_trial_with(config, &model, seq, config.session.modality, &subject))
            .collect(),
        ProtocolKind::ErgonomicTest => config
            .protocol
            .ergonomic
            .conditions()
            .iter()
            .map(|c| run_ergonomic_trial_with(config, &model, c, &subject).map(|(_, log)| log))
            .collect(),
    }
}

/// File name for a trial log.
pub fn log_file_name(log: &TrialLog64) -> String {
    let protocol = match log.header.protocol {
        ProtocolKind::ModalityTest => "modality",
        ProtocolKind::ErgonomicTest => "ergonomic",
    };
    let condition: String = log
        .header
        .condition
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!(
        "{protocol}_{}_{condition}_{}_s{}.jsonl",
        log.header.modality().to_string().to_lowercase(),
        log.header.agent,
        log.header.seed
    )
}
