//! Simulated wearers that perceive device commands and move their joints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{HumanModel, Posture};
use crate::error::{Error, Result};
use crate::feedback::{error_magnitude, guided_angles, DeviceCommand, ErrorVector, ModalityKind, PlacementRegistry};
use crate::joint::{GuidedJoint, Joint, N_GUIDED};
use crate::Scalar;

/// Probability of decoding each modality's cue correctly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comprehension {
    pub spot: f64,
    pub ramp: f64,
    pub pattern: f64,
}

impl Comprehension {
    pub fn uniform(p: f64) -> Self {
        Self {
            spot: p,
            ramp: p,
            pattern: p,
        }
    }

    pub fn of(&self, modality: ModalityKind) -> f64 {
        match modality {
            ModalityKind::Spot => self.spot,
            ModalityKind::Ramp => self.ramp,
            ModalityKind::Pattern => self.pattern,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub comprehension: Comprehension,
    /// Seconds between a pulse starting and the agent perceiving it.
    pub reaction_delay: f64,
    /// Degrees per second.
    pub max_joint_speed: f64,
    /// Joint speed per degree of remaining error, 1/s.
    pub speed_gain: f64,
    /// Smallest amplitude λ the agent feels.
    pub perception_threshold: f64,
    /// Seconds a decoded direction is kept without a fresh cue.
    pub dwell: f64,
    /// Seconds of silence, standing still, before the agent reports completion.
    #[serde(default = "default_completion_hold")]
    pub completion_hold: f64,
}

fn default_completion_hold() -> f64 {
    1.0
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentPreset {
    Ideal,
    Noisy,
    Sluggish,
}

impl std::str::FromStr for AgentPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(AgentPreset::Ideal),
            "noisy" => Ok(AgentPreset::Noisy),
            "sluggish" => Ok(AgentPreset::Sluggish),
            _ => Err(Error::Config(format!("unknown agent preset {s:?}"))),
        }
    }
}

impl AgentPreset {
    pub fn params(self) -> AgentParams {
        match self {
            AgentPreset::Ideal => AgentParams::ideal(),
            AgentPreset::Noisy => AgentParams::noisy(),
            AgentPreset::Sluggish => AgentParams::sluggish(),
        }
    }
}

impl AgentParams {
    pub fn ideal() -> Self {
        Self {
            comprehension: Comprehension::uniform(1.0),
            reaction_delay: 0.3,
            max_joint_speed: 20.0,
            speed_gain: 1.5,
            perception_threshold: 0.1,
            dwell: 2.0,
            completion_hold: default_completion_hold(),
        }
    }

    /// Misreads some cues, RAMP most often.
    pub fn noisy() -> Self {
        Self {
            comprehension: Comprehension {
                spot: 0.9,
                ramp: 0.75,
                pattern: 0.85,
            },
            reaction_delay: 0.5,
            ..Self::ideal()
        }
    }

    pub fn sluggish() -> Self {
        Self {
            reaction_delay: 0.8,
            max_joint_speed: 8.0,
            speed_gain: 0.8,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.comprehension;
        if [c.spot, c.ramp, c.pattern].iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("comprehension probabilities must lie in [0, 1]".into()));
        }
        if !(self.max_joint_speed > 0.0 && self.speed_gain > 0.0) {
            return Err(Error::Config("joint speed and gain must be positive".into()));
        }
        if !(self.reaction_delay >= 0.0 && self.dwell >= 0.0 && self.completion_hold >= 0.0) {
            return Err(Error::Config("delays must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.perception_threshold) {
            return Err(Error::Config("perception threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Reads the intended motion sign per guided joint from the perceived pulses.
///
/// SPOT needs one pulse, RAMP and PATTERN need two (an amplitude trend or a
/// unit order). Each decoded joint costs one random draw; with probability
/// `1 - comprehension` its sign is inverted.
pub fn agent_decide<R: Rng + ?Sized>(
    agent: &AgentParams,
    perceived: &[DeviceCommand],
    modality: ModalityKind,
    placements: &PlacementRegistry,
    rng: &mut R,
) -> [i8; N_GUIDED] {
    let mut out = [0i8; N_GUIDED];
    for joint in GuidedJoint::ALL {
        let mut felt: Vec<(&DeviceCommand, u8, i8)> = perceived
            .iter()
            .filter(|c| !c.is_off() && c.amplitude >= agent.perception_threshold)
            .filter_map(|c| {
                let p = placements.get(c.device_id)?;
                (p.joint == joint && p.modality == modality).then_some((c, p.index, p.repulsion_sign))
            })
            .collect();
        felt.sort_by_key(|(c, _, _)| (c.onset_ms, c.device_id));
        let decoded = match (modality, felt.as_slice()) {
            (ModalityKind::Spot, [(_, _, sign), ..]) => *sign,
            (ModalityKind::Ramp, [(a, _, _), (b, _, _), ..]) => {
                if b.amplitude > a.amplitude {
                    -1
                } else if b.amplitude < a.amplitude {
                    1
                } else {
                    0
                }
            }
            (ModalityKind::Pattern, [(_, ia, _), (_, ib, _), ..]) => {
                if ib > ia {
                    -1
                } else if ib < ia {
                    1
                } else {
                    0
                }
            }
            _ => 0,
        };
        if decoded != 0 {
            let correct = rng.random::<f64>() < agent.comprehension.of(modality);
            out[joint.index()] = if correct { decoded } else { -decoded };
        }
    }
    out
}

/// Moves the guided joints for one period.
///
/// Joint `j` moves by `decision_j * min(max_joint_speed, speed_gain * ε_j ξ_j) * dt`
/// and is clamped to its limits.
pub fn agent_step<T: Scalar>(
    agent: &AgentParams,
    decision: &[i8; N_GUIDED],
    posture: &Posture<T>,
    eps: &ErrorVector<T>,
    model: &HumanModel<T>,
    dt: T,
) -> Posture<T> {
    let mut next = *posture;
    for g in GuidedJoint::ALL {
        let d = decision[g.index()];
        if d == 0 {
            continue;
        }
        let speed = (T::lit(agent.speed_gain) * eps.degrees(g)).min(T::lit(agent.max_joint_speed));
        let j = g.chain_joint();
        next.set(j, next.get(j) + T::lit(f64::from(d)) * speed * dt);
    }
    next.clamped(model)
}

#[derive(Debug, Clone, PartialEq)]
struct PendingPulse {
    burst: u64,
    onset_s: f64,
    command: DeviceCommand,
}

/// An agent closing the loop tick by tick.
///
/// Feed it every tick's commands with [`SimulatedWearer::observe`], then move it
/// with [`SimulatedWearer::act`].
#[derive(Debug, Clone)]
pub struct SimulatedWearer {
    params: AgentParams,
    modality: ModalityKind,
    placements: PlacementRegistry,
    rng: ChaCha8Rng,
    track_unguided: bool,
    next_burst: u64,
    pending: Vec<PendingPulse>,
    off_pending: Option<f64>,
    current: Option<(u64, Vec<DeviceCommand>)>,
    decided: [Option<u64>; N_GUIDED],
    decisions: [Option<(i8, f64)>; N_GUIDED],
    silent_since: Option<f64>,
}

impl SimulatedWearer {
    pub fn new(params: AgentParams, modality: ModalityKind, placements: PlacementRegistry, seed: u64) -> Result<Self> {
        params.validate()?;
        placements.validate_for(modality)?;
        Ok(Self {
            params,
            modality,
            placements,
            rng: ChaCha8Rng::seed_from_u64(seed),
            track_unguided: false,
            next_burst: 0,
            pending: Vec::new(),
            off_pending: None,
            current: None,
            decided: [None; N_GUIDED],
            decisions: [None; N_GUIDED],
            silent_since: None,
        })
    }

    /// Lets ankle and knee follow the target on their own, as in whole-body tasks.
    pub fn tracking_unguided(mut self, on: bool) -> Self {
        self.track_unguided = on;
        self
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    /// Forgets all cues and decisions, keeping the random stream.
    pub fn reset(&mut self) {
        self.pending.clear();
        self.off_pending = None;
        self.current = None;
        self.decided = [None; N_GUIDED];
        self.decisions = [None; N_GUIDED];
        self.silent_since = None;
    }

    /// Current motion sign per guided joint.
    pub fn decisions(&self) -> [i8; N_GUIDED] {
        self.decisions.map(|d| d.map_or(0, |(s, _)| s))
    }

    /// Registers the commands emitted at time `t`.
    pub fn observe(&mut self, t: f64, commands: &[DeviceCommand]) {
        if commands.is_empty() {
            return;
        }
        // A new batch cuts off pulses that have not started yet.
        self.pending.retain(|p| p.onset_s < t);
        if commands.iter().all(DeviceCommand::is_off) {
            self.off_pending.get_or_insert(t + self.params.reaction_delay);
            return;
        }
        self.off_pending = None;
        let burst = self.next_burst;
        self.next_burst += 1;
        self.pending.extend(commands.iter().map(|c| PendingPulse {
            burst,
            onset_s: t + f64::from(c.onset_ms) / 1000.0,
            command: *c,
        }));
    }

    /// True once the agent has felt silence and stood still for `completion_hold`.
    pub fn is_done(&self, t: f64) -> bool {
        self.decisions.iter().all(Option::is_none)
            && self.silent_since.is_some_and(|s| t - s >= self.params.completion_hold - 1e-9)
    }

    fn perceive(&mut self, t: f64) {
        let delay = self.params.reaction_delay;
        let (felt, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|p| p.onset_s + delay <= t + 1e-9);
        self.pending = rest;
        if let Some(off) = self.off_pending {
            if off <= t + 1e-9 {
                self.off_pending = None;
                self.current = None;
                self.decisions = [None; N_GUIDED];
                self.silent_since.get_or_insert(off);
            }
        }
        for p in felt {
            if p.command.amplitude < self.params.perception_threshold {
                continue;
            }
            self.silent_since = None;
            match &mut self.current {
                Some((b, cmds)) if *b == p.burst => cmds.push(p.command),
                _ => self.current = Some((p.burst, vec![p.command])),
            }
        }
        let Some((burst, cmds)) = &self.current else {
            return;
        };
        let burst = *burst;
        let undecided = GuidedJoint::ALL.iter().any(|g| self.decided[g.index()] != Some(burst));
        if !undecided {
            return;
        }
        let cmds = cmds.clone();
        let dec = agent_decide(&self.params, &cmds, self.modality, &self.placements, &mut self.rng);
        for g in GuidedJoint::ALL {
            let i = g.index();
            if dec[i] != 0 && self.decided[i] != Some(burst) {
                self.decided[i] = Some(burst);
                self.decisions[i] = Some((dec[i], t + self.params.dwell));
            }
        }
    }

    /// Perceives what has arrived by `t` and moves for `dt` seconds toward
    /// whatever the cues say. `q_d` sets the speed through the remaining error.
    pub fn act<T: Scalar>(
        &mut self,
        t: f64,
        posture: &Posture<T>,
        q_d: &Posture<T>,
        model: &HumanModel<T>,
        xi: &[T; N_GUIDED],
        dt: T,
    ) -> Result<Posture<T>> {
        self.perceive(t);
        for d in &mut self.decisions {
            if d.is_some_and(|(_, until)| until < t - 1e-9) {
                *d = None;
            }
        }
        let eps = error_magnitude(&guided_angles(posture), &guided_angles(q_d), xi)?;
        let mut next = agent_step(&self.params, &self.decisions(), posture, &eps, model, dt);
        if self.track_unguided {
            for j in [Joint::Ankle, Joint::Knee] {
                let err = q_d.get(j) - next.get(j);
                let step = (T::lit(self.params.speed_gain) * err.abs())
                    .min(T::lit(self.params.max_joint_speed))
                    * dt;
                next.set(j, next.get(j) + step.min(err.abs()) * err.signum());
            }
            next = next.clamped(model);
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::{encode, Direction, Level, PulseShape};

    fn reg() -> PlacementRegistry {
        PlacementRegistry::standard()
    }

    fn burst(m: ModalityKind, j: GuidedJoint, d: Direction) -> Vec<DeviceCommand> {
        encode(m, &reg(), j, d, Level::L2, &PulseShape::default()).unwrap()
    }

    #[test]
    fn ideal_reads_spot_chest_as_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = burst(ModalityKind::Spot, GuidedJoint::Torso, Direction::Forward);
        assert_eq!(c[0].device_id, 1);
        let d = agent_decide(&AgentParams::ideal(), &c, ModalityKind::Spot, &reg(), &mut rng);
        assert_eq!(d, [-1, 0, 0]);
    }

    #[test]
    fn zero_comprehension_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = AgentParams::ideal();
        a.comprehension = Comprehension::uniform(0.0);
        for m in ModalityKind::ALL {
            for dir in [Direction::Forward, Direction::Backward] {
                let c = burst(m, GuidedJoint::Elbow, dir);
                let d = agent_decide(&a, &c, m, &reg(), &mut rng);
                assert_eq!(d[2], -dir.motion_sign(), "{m} {dir:?}");
            }
        }
    }

    #[test]
    fn ideal_decodes_every_modality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in ModalityKind::ALL {
            for j in GuidedJoint::ALL {
                for dir in [Direction::Forward, Direction::Backward] {
                    let d = agent_decide(&AgentParams::ideal(), &burst(m, j, dir), m, &reg(), &mut rng);
                    let mut want = [0; 3];
                    want[j.index()] = dir.motion_sign();
                    assert_eq!(d, want);
                }
            }
        }
    }

    #[test]
    fn sub_threshold_is_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = burst(ModalityKind::Spot, GuidedJoint::Torso, Direction::Forward);
        c[0].amplitude = 0.05;
        let d = agent_decide(&AgentParams::ideal(), &c, ModalityKind::Spot, &reg(), &mut rng);
        assert_eq!(d, [0; 3]);
    }

    #[test]
    fn single_ramp_step_is_not_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = burst(ModalityKind::Ramp, GuidedJoint::Torso, Direction::Forward);
        let d = agent_decide(&AgentParams::ideal(), &c[..1], ModalityKind::Ramp, &reg(), &mut rng);
        assert_eq!(d, [0; 3]);
    }

    #[test]
    fn euler_step() {
        let model = HumanModel::<f64>::default();
        let mut a = AgentParams::ideal();
        a.max_joint_speed = 10.0;
        let q = Posture::zero().with(Joint::Hip, 20.0);
        let eps = ErrorVector {
            eps: [0.5, 0.0, 0.0],
            xi: [90.0, 180.0, 145.0],
        };
        let n = agent_step(&a, &[1, 0, 0], &q, &eps, &model, 0.1);
        approx::assert_abs_diff_eq!(n.get(Joint::Hip), 21.0, epsilon = 1e-12);
        assert_eq!(agent_step(&a, &[0, 0, 0], &q, &eps, &model, 0.1), q);
    }

    #[test]
    fn clamped_at_limit() {
        let model = HumanModel::<f64>::default();
        let q = Posture::zero().with(Joint::Hip, 90.0);
        let eps = ErrorVector {
            eps: [1.0, 0.0, 0.0],
            xi: [90.0, 180.0, 145.0],
        };
        let n = agent_step(&AgentParams::ideal(), &[1, 0, 0], &q, &eps, &model, 0.1);
        assert_eq!(n.get(Joint::Hip), 90.0);
    }

    #[test]
    fn presets_valid() {
        for p in [AgentPreset::Ideal, AgentPreset::Noisy, AgentPreset::Sluggish] {
            p.params().validate().unwrap();
        }
        let mut bad = AgentParams::ideal();
        bad.comprehension.ramp = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wearer_waits_for_reaction_delay() {
        let model = HumanModel::<f64>::default();
        let mut w = SimulatedWearer::new(AgentParams::ideal(), ModalityKind::Spot, reg(), 0).unwrap();
        let q = Posture::zero().with(Joint::Hip, 30.0);
        let qd = Posture::zero();
        let xi = crate::feedback::default_xi();
        let cmd = burst(ModalityKind::Spot, GuidedJoint::Torso, Direction::Forward);
        w.observe(0.0, &cmd);
        assert_eq!(w.act(0.0, &q, &qd, &model, &xi, 0.1).unwrap(), q);
        w.observe(0.1, &cmd);
        w.observe(0.2, &cmd);
        let moved = w.act(0.3, &q, &qd, &model, &xi, 0.1).unwrap();
        assert!(moved.get(Joint::Hip) < 30.0);
    }
}
