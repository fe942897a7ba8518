//! Synthetic robot-following datasets with a known labeling rule.
//!
//! Windows are drawn from six motion archetypes, rendered as relative goal
//! and follower series, and labeled by a threshold oracle on the resulting
//! features. A second generator draws windows from fixed cluster prototypes
//! so that the number of clusters behind the data is known exactly, and a
//! third samples discrete records straight from a fitted network.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_6, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cbn::CbnModel;
use crate::discretization::DiscreteSample;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::{rotation_path_length, wrap_finite, FeatureSample, HumanPose, RawSample, STEPS};
use crate::rng::rng_for;

/// Radius within which the goal is observed.
pub const OBSERVATION_RADIUS: f64 = 7.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    DirectApproach,
    CurvedApproach,
    SpinInPlace,
    Retreat,
    Stall,
    Overshoot,
}

impl Archetype {
    pub const ALL: [Archetype; 6] = [
        Archetype::DirectApproach,
        Archetype::CurvedApproach,
        Archetype::SpinInPlace,
        Archetype::Retreat,
        Archetype::Stall,
        Archetype::Overshoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::DirectApproach => "direct_approach",
            Archetype::CurvedApproach => "curved_approach",
            Archetype::SpinInPlace => "spin_in_place",
            Archetype::Retreat => "retreat",
            Archetype::Stall => "stall",
            Archetype::Overshoot => "overshoot",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown archetype `{s}`"))
    }
}

/// Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Meters, applied to goal and follower distances.
    pub position: f64,
    /// Radians, applied to the goal bearing.
    pub rotation: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        position: 0.0,
        rotation: 0.0,
    };
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            position: 0.05,
            rotation: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Required net approach toward the goal, meters.
    pub delta_pos: f64,
    /// Budget on the path length of the goal bearing, radians.
    pub delta_rot: f64,
    /// Tolerance on the final goal bearing, radians.
    pub delta_align: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            delta_pos: 1.0,
            delta_rot: PI,
            delta_align: FRAC_PI_6,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.delta_pos, self.delta_rot, self.delta_align].iter().any(|d| d.is_nan() || *d <= 0.0) {
            return Err(Error::domain("oracle thresholds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub participants: usize,
    pub samples_per_participant: usize,
    /// Relative weights over archetypes.
    pub archetype_mix: BTreeMap<Archetype, f64>,
    pub noise: NoiseConfig,
    /// Probability of flipping each label independently.
    pub label_noise: f64,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            participants: 12,
            samples_per_participant: 30,
            archetype_mix: Archetype::ALL.iter().map(|a| (*a, 1.0)).collect(),
            noise: NoiseConfig::default(),
            label_noise: 0.05,
            oracle: OracleConfig::default(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.participants == 0 || self.samples_per_participant == 0 {
            return Err(Error::domain("participants and samples per participant must be positive"));
        }
        if self.archetype_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("archetype weights must be finite and non-negative"));
        }
        if self.archetype_mix.values().sum::<f64>() <= 0.0 {
            return Err(Error::domain("archetype weights must not all be zero"));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::domain(format!("label noise must lie in [0, 0.5), got {}", self.label_noise)));
        }
        if self.noise.position < 0.0 || self.noise.rotation < 0.0 {
            return Err(Error::domain("noise levels must be non-negative"));
        }
        self.oracle.validate()
    }
}

/// Shape parameters of one rendered window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Initial robot-goal distance, meters.
    pub start_distance: f64,
    /// Approach or retreat distance (meters), or spin rate (rad/s) for spins.
    pub amount: f64,
    /// Initial goal bearing in the robot frame, radians.
    pub initial_bearing: f64,
    /// Bearing swing amplitude for curved approaches, lateral goal offset
    /// for overshoots.
    pub swing: f64,
    /// Follower distance behind the robot, meters.
    pub follow_distance: f64,
}

impl ScenarioParams {
    pub fn sample(archetype: Archetype, rng: &mut ChaCha8Rng) -> Self {
        let start_distance = rng.random_range(3.0..OBSERVATION_RADIUS);
        let follow_distance = rng.random_range(0.8..1.8);
        let any_bearing = |rng: &mut ChaCha8Rng| rng.random_range(-PI..PI);
        let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let (amount, initial_bearing, swing) = match archetype {
            Archetype::DirectApproach => (
                rng.random_range(1.5..(start_distance - 0.5).min(4.5)),
                rng.random_range(-0.25..0.25),
                0.0,
            ),
            Archetype::CurvedApproach => (
                rng.random_range(1.5..(start_distance - 0.5).min(4.0)),
                rng.random_range(-0.5..0.5),
                sign(rng) * rng.random_range(0.4..0.8),
            ),
            Archetype::SpinInPlace => (sign(rng) * rng.random_range(TAU / 8.0..1.4 * TAU / 8.0), any_bearing(rng), 0.0),
            Archetype::Retreat => (rng.random_range(1.0..2.5), any_bearing(rng), 0.0),
            Archetype::Stall => (0.0, any_bearing(rng), 0.0),
            Archetype::Overshoot => (
                start_distance * rng.random_range(0.9..1.2),
                0.0,
                rng.random_range(-0.3..0.3),
            ),
        };
        Self {
            start_distance,
            amount,
            initial_bearing,
            swing,
            follow_distance,
        }
    }
}

/// Noise-free goal (distance, bearing) at step `t`.
fn goal_polar(archetype: Archetype, p: &ScenarioParams, t: usize) -> (f64, f64) {
    let s = t as f64 / (STEPS - 1) as f64;
    let d0 = p.start_distance;
    match archetype {
        Archetype::DirectApproach => (d0 - p.amount * s, p.initial_bearing),
        Archetype::CurvedApproach => (
            d0 - p.amount * s,
            p.initial_bearing * (1.0 - s) + p.swing * (PI * s).sin(),
        ),
        Archetype::SpinInPlace => (d0, p.initial_bearing + p.amount * t as f64),
        Archetype::Retreat => (d0 + p.amount * s, p.initial_bearing),
        Archetype::Stall => (d0, p.initial_bearing),
        Archetype::Overshoot => {
            // Straight drive through the goal, ending `amount` past the start distance.
            let x = d0 - (d0 + p.amount) * s;
            (x.hypot(p.swing), p.swing.atan2(x))
        }
    }
}

/// Renders one window. The ratings are placeholders (3); labels come from
/// [`oracle_label`] after featurization.
pub fn render_scenario(
    archetype: Archetype,
    params: &ScenarioParams,
    noise: NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> RawSample {
    let pos_noise = Normal::new(0.0, noise.position).expect("non-negative sigma");
    let rot_noise = Normal::new(0.0, noise.rotation).expect("non-negative sigma");
    let mut goal_rel = Vec::with_capacity(STEPS);
    let mut distances = Vec::with_capacity(STEPS);
    for t in 0..STEPS {
        let (d, b) = goal_polar(archetype, params, t);
        let d = (d + pos_noise.sample(rng)).max(0.0);
        let b = b + rot_noise.sample(rng);
        distances.push(d);
        goal_rel.push([d * b.cos(), d * b.sin()]);
    }
    // The follower trails with a one-step lag: its gap grows with the robot's speed.
    let human_rel = (0..STEPS)
        .map(|t| {
            let (a, b) = if t == 0 { (0, 1) } else { (t - 1, t) };
            let speed = (distances[b] - distances[a]).abs();
            let gap = (params.follow_distance + 0.5 * speed + pos_noise.sample(rng)).max(0.1);
            let side = 0.1 * rot_noise.sample(rng);
            HumanPose::new(-gap * side.cos(), -gap * side.sin(), side)
        })
        .collect();
    RawSample {
        participant_id: String::new(),
        scenario_id: String::new(),
        goal_rel,
        human_rel,
        competence_likert: 3,
        intention_likert: 3,
    }
}

/// Draws parameters for `archetype` and renders a window, deterministically in `seed`.
pub fn generate_scenario(archetype: Archetype, noise: NoiseConfig, seed: u64) -> RawSample {
    let mut rng = rng_for(seed, 0);
    let params = ScenarioParams::sample(archetype, &mut rng);
    render_scenario(archetype, &params, noise, &mut rng)
}

/// Labels before flipping: (competence, intention).
pub fn clean_labels(f: &FeatureSample, o: &OracleConfig) -> (u8, u8) {
    let terminal = f.robot_pos_change[STEPS - 1];
    let path = rotation_path_length(&f.robot_rotation_change);
    let competence = terminal < -o.delta_pos && path < o.delta_rot;
    let final_bearing = wrap_finite(f.initial_robot_rotation + f.robot_rotation_change[STEPS - 1]);
    let intention = final_bearing.abs() < o.delta_align && terminal < 0.0;
    (u8::from(competence), u8::from(intention))
}

/// Oracle labels with each one flipped independently with probability `label_noise`.
pub fn oracle_label(f: &FeatureSample, o: &OracleConfig, label_noise: f64, rng: &mut impl Rng) -> (u8, u8) {
    let (c, i) = clean_labels(f, o);
    let flip_c = rng.random_bool(label_noise);
    let flip_i = rng.random_bool(label_noise);
    (c ^ u8::from(flip_c), i ^ u8::from(flip_i))
}

pub fn likert_for(label: u8) -> i64 {
    if label == 1 {
        5
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub raw: RawSample,
    pub archetype: Archetype,
    pub clean_labels: (u8, u8),
}

fn pick_archetype(mix: &[(Archetype, f64)], rng: &mut ChaCha8Rng) -> Archetype {
    let total: f64 = mix.iter().map(|(_, w)| w).sum();
    let mut target = rng.random::<f64>() * total;
    for (a, w) in mix {
        if target < *w {
            return *a;
        }
        target -= w;
    }
    mix.iter().rev().find(|(_, w)| *w > 0.0).unwrap().0
}

pub fn generate(config: &GeneratorConfig, exec: Execution) -> Result<Vec<SyntheticSample>> {
    config.validate()?;
    let mix: Vec<(Archetype, f64)> = config.archetype_mix.iter().map(|(a, w)| (*a, *w)).collect();
    let shards = exec::map_range(exec, config.participants, |p| {
        let mut rng = rng_for(config.seed, p as u64);
        let pid = format!("P{p:02}");
        (0..config.samples_per_participant)
            .map(|i| {
                let archetype = pick_archetype(&mix, &mut rng);
                let params = ScenarioParams::sample(archetype, &mut rng);
                let mut raw = render_scenario(archetype, &params, config.noise, &mut rng);
                raw.participant_id = pid.clone();
                raw.scenario_id = format!("{pid}-S{i:03}");
                let features = crate::features::compute_features(&raw, Default::default())
                    .expect("rendered windows are schema-valid");
                let clean = clean_labels(&features, &config.oracle);
                let (c, int) = oracle_label(&features, &config.oracle, config.label_noise, &mut rng);
                raw.competence_likert = likert_for(c);
                raw.intention_likert = likert_for(int);
                SyntheticSample {
                    raw,
                    archetype,
                    clean_labels: clean,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(shards.into_iter().flatten().collect())
}

pub fn generate_raw(config: &GeneratorConfig, exec: Execution) -> Result<Vec<RawSample>> {
    Ok(generate(config, exec)?.into_iter().map(|s| s.raw).collect())
}

/// Dataset whose position and rotation series come from a known number of
/// well-separated prototypes. Labels depend only on the prototype pair:
/// competence = (pos + rot) mod 2, intention = (pos / 2 + rot / 2) mod 2,
/// so merging any two prototypes of either variable loses information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeConfig {
    pub participants: usize,
    pub samples_per_participant: usize,
    pub position_prototypes: usize,
    pub rotation_prototypes: usize,
    pub noise: NoiseConfig,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for PrototypeConfig {
    fn default() -> Self {
        Self {
            participants: 10,
            samples_per_participant: 30,
            position_prototypes: 4,
            rotation_prototypes: 3,
            noise: NoiseConfig {
                position: 0.05,
                rotation: 0.02,
            },
            label_noise: 0.05,
            seed: 0,
        }
    }
}

pub fn prototype_labels(pos: usize, rot: usize) -> (u8, u8) {
    (((pos + rot) % 2) as u8, ((pos / 2 + rot / 2) % 2) as u8)
}

fn spread(k: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| if k == 1 { lo } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
}

pub fn generate_prototyped(config: &PrototypeConfig, exec: Execution) -> Result<Vec<RawSample>> {
    if config.position_prototypes == 0 || config.rotation_prototypes == 0 || config.participants == 0 {
        return Err(Error::domain("prototype counts and participants must be positive"));
    }
    if !(0.0..0.5).contains(&config.label_noise) {
        return Err(Error::domain("label noise must lie in [0, 0.5)"));
    }
    let approach: Vec<f64> = spread(config.position_prototypes, -4.0, 1.5).collect();
    let turn: Vec<f64> = spread(config.rotation_prototypes, -1.2, 1.2).collect();
    let shards = exec::map_range(exec, config.participants, |p| {
        let mut rng = rng_for(config.seed, p as u64);
        let pos_noise = Normal::new(0.0, config.noise.position).expect("sigma");
        let rot_noise = Normal::new(0.0, config.noise.rotation).expect("sigma");
        let pid = format!("P{p:02}");
        (0..config.samples_per_participant)
            .map(|i| {
                let k_pos = rng.random_range(0..approach.len());
                let k_rot = rng.random_range(0..turn.len());
                let d0 = rng.random_range(5.0..OBSERVATION_RADIUS);
                let b0 = rng.random_range(-0.3..0.3);
                let goal_rel = (0..STEPS)
                    .map(|t| {
                        let s = t as f64 / (STEPS - 1) as f64;
                        let d = d0 + approach[k_pos] * s + pos_noise.sample(&mut rng);
                        let b = b0 + turn[k_rot] * s + rot_noise.sample(&mut rng);
                        [d * b.cos(), d * b.sin()]
                    })
                    .collect();
                let human_rel = (0..STEPS)
                    .map(|_| HumanPose::new(-1.2 - pos_noise.sample(&mut rng), 0.0, 0.0))
                    .collect();
                let (c, int) = prototype_labels(k_pos, k_rot);
                let c = c ^ u8::from(rng.random_bool(config.label_noise));
                let int = int ^ u8::from(rng.random_bool(config.label_noise));
                RawSample {
                    participant_id: pid.clone(),
                    scenario_id: format!("{pid}-S{i:03}"),
                    goal_rel,
                    human_rel,
                    competence_likert: likert_for(c),
                    intention_likert: likert_for(int),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(shards.into_iter().flatten().collect())
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Ancestral sampling: each node drawn from its CPT row given already
/// drawn parents, in topological order.
pub fn generate_from_cbn(model: &CbnModel, n: usize, seed: u64) -> Result<Vec<DiscreteSample>> {
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    let mut rng = rng_for(seed, 0);
    let order = model.topological_order().to_vec();
    let mut values = vec![0usize; model.dag.len()];
    let mut u = Vec::new();
    Ok((0..n)
        .map(|i| {
            for &node in &order {
                u.clear();
                u.extend(model.parent_indices(node).iter().map(|&p| values[p]));
                let row = model.tables[node].distribution(&u);
                values[node] = draw(&row, rng.random::<f64>());
            }
            DiscreteSample {
                participant_id: "cbn".into(),
                scenario_id: format!("s{i}"),
                values: model
                    .dag
                    .nodes
                    .iter()
                    .zip(&values)
                    .map(|(nd, v)| (nd.name.clone(), *v))
                    .collect(),
            }
        })
        .collect())
}
