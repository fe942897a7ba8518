//! Trajectory features over one observation window.
//!
//! A window is nine samples (t = 0..8) taken at 1 Hz. Raw samples carry the
//! goal position and the follower pose in the robot frame; the derived
//! feature set describes how the robot turned and moved relative to the goal
//! and how the follower's distance to the robot changed.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per observation window.
pub const STEPS: usize = 9;

/// Length of the observation window in seconds.
pub const WINDOW_SECONDS: f64 = 8.0;

pub type Series = [f64; STEPS];

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap_finite(a))
}

pub(crate) fn wrap_finite(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Maps a 5-point rating onto the low (0) / high (1) scale: 1..=3 are low.
pub fn binarize_likert(rating: i64) -> Result<u8> {
    match rating {
        1..=3 => Ok(0),
        4 | 5 => Ok(1),
        r => Err(Error::LikertOutOfRange(r)),
    }
}

/// Follower pose in the robot frame. Serialized as `[x, y]` or `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HumanPose {
    pub x: f64,
    pub y: f64,
    pub heading: Option<f64>,
}

impl HumanPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: Some(heading),
        }
    }
}

impl TryFrom<Vec<f64>> for HumanPose {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        match v.as_slice() {
            [x, y] => Ok(Self {
                x: *x,
                y: *y,
                heading: None,
            }),
            [x, y, h] => Ok(Self {
                x: *x,
                y: *y,
                heading: Some(*h),
            }),
            other => Err(format!(
                "human pose must have 2 or 3 components, got {}",
                other.len()
            )),
        }
    }
}

impl From<HumanPose> for Vec<f64> {
    fn from(p: HumanPose) -> Self {
        match p.heading {
            Some(h) => vec![p.x, p.y, h],
            None => vec![p.x, p.y],
        }
    }
}

/// One observation window as recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub participant_id: String,
    pub scenario_id: String,
    pub goal_rel: Vec<[f64; 2]>,
    pub human_rel: Vec<HumanPose>,
    pub competence_likert: i64,
    pub intention_likert: i64,
}

impl RawSample {
    pub fn validate(&self) -> Result<()> {
        if self.goal_rel.len() != STEPS {
            return Err(Error::SeriesLength {
                field: "goal_rel",
                expected: STEPS,
                found: self.goal_rel.len(),
            });
        }
        if self.human_rel.len() != STEPS {
            return Err(Error::SeriesLength {
                field: "human_rel",
                expected: STEPS,
                found: self.human_rel.len(),
            });
        }
        if self.goal_rel.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("goal_rel"));
        }
        if self
            .human_rel
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite() || p.heading.is_some_and(|h| !h.is_finite()))
        {
            return Err(Error::NonFinite("human_rel"));
        }
        binarize_likert(self.competence_likert)?;
        binarize_likert(self.intention_likert)?;
        Ok(())
    }

    /// Linearly resamples both series onto the nine-step grid. The input
    /// series are assumed to span the full window at a uniform rate.
    pub fn resampled(&self) -> Result<RawSample> {
        let goal = resample_points(&self.goal_rel, "goal_rel")?;
        let human = resample_poses(&self.human_rel)?;
        Ok(RawSample {
            goal_rel: goal,
            human_rel: human,
            ..self.clone()
        })
    }
}

fn interp_position(n: usize, t: usize) -> (usize, usize, f64) {
    let pos = t as f64 * (n - 1) as f64 / (STEPS - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    (lo, hi, pos - lo as f64)
}

fn resample_points(src: &[[f64; 2]], field: &'static str) -> Result<Vec<[f64; 2]>> {
    if src.len() < 2 {
        return Err(Error::SeriesLength {
            field,
            expected: STEPS,
            found: src.len(),
        });
    }
    Ok((0..STEPS)
        .map(|t| {
            let (lo, hi, w) = interp_position(src.len(), t);
            [
                src[lo][0] + w * (src[hi][0] - src[lo][0]),
                src[lo][1] + w * (src[hi][1] - src[lo][1]),
            ]
        })
        .collect())
}

fn resample_poses(src: &[HumanPose]) -> Result<Vec<HumanPose>> {
    if src.len() < 2 {
        return Err(Error::SeriesLength {
            field: "human_rel",
            expected: STEPS,
            found: src.len(),
        });
    }
    Ok((0..STEPS)
        .map(|t| {
            let (lo, hi, w) = interp_position(src.len(), t);
            let (a, b) = (src[lo], src[hi]);
            let heading = match (a.heading, b.heading) {
                (Some(ha), Some(hb)) => Some(wrap_finite(ha + w * wrap_finite(hb - ha))),
                _ => None,
            };
            HumanPose {
                x: a.x + w * (b.x - a.x),
                y: a.y + w * (b.y - a.y),
                heading,
            }
        })
        .collect())
}

/// How `total_robot_rotation` is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalRotationMode {
    /// Sum of absolute robot-goal angles, `sum_t |theta_t|`.
    #[default]
    AsWritten,
    /// Sum of absolute wrapped step-to-step angle changes.
    PathLength,
}

impl fmt::Display for TotalRotationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TotalRotationMode::AsWritten => "as_written",
            TotalRotationMode::PathLength => "path_length",
        })
    }
}

impl std::str::FromStr for TotalRotationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as_written" => Ok(Self::AsWritten),
            "path_length" => Ok(Self::PathLength),
            other => Err(format!("unknown total rotation mode `{other}`")),
        }
    }
}

/// Features of one window plus the binarized ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample {
    pub participant_id: String,
    pub scenario_id: String,
    pub initial_robot_rotation: f64,
    pub total_robot_rotation: f64,
    pub robot_rotation_change: Series,
    pub robot_pos_change: Series,
    pub human_pos_change: Series,
    pub competence: u8,
    pub intention: u8,
}

/// Robot-goal bearing at every step, wrapped into `(-pi, pi]`.
pub fn goal_bearings(goal_rel: &[[f64; 2]]) -> Series {
    let mut out = [0.0; STEPS];
    for (o, g) in out.iter_mut().zip(goal_rel) {
        *o = wrap_finite(g[1].atan2(g[0]));
    }
    out
}

/// Sum of absolute wrapped step-to-step changes of a bearing series.
pub fn rotation_path_length(bearings: &Series) -> f64 {
    bearings
        .windows(2)
        .map(|w| wrap_finite(w[1] - w[0]).abs())
        .sum()
}

pub fn compute_features(sample: &RawSample, mode: TotalRotationMode) -> Result<FeatureSample> {
    sample.validate()?;
    let theta = goal_bearings(&sample.goal_rel);
    let theta0 = theta[0];

    let mut rotation_change = [0.0; STEPS];
    let mut pos_change = [0.0; STEPS];
    let mut human_change = [0.0; STEPS];
    let goal_dist0 = sample.goal_rel[0][0].hypot(sample.goal_rel[0][1]);
    let human0 = sample.human_rel[0].x.hypot(sample.human_rel[0].y);
    for t in 1..STEPS {
        rotation_change[t] = wrap_finite(theta[t] - theta0);
        let g = sample.goal_rel[t];
        pos_change[t] = g[0].hypot(g[1]) - goal_dist0;
        let h = sample.human_rel[t];
        human_change[t] = h.x.hypot(h.y) - human0;
    }

    let total = match mode {
        TotalRotationMode::AsWritten => theta.iter().map(|a| a.abs()).sum(),
        TotalRotationMode::PathLength => rotation_path_length(&theta),
    };

    Ok(FeatureSample {
        participant_id: sample.participant_id.clone(),
        scenario_id: sample.scenario_id.clone(),
        initial_robot_rotation: theta0,
        total_robot_rotation: total,
        robot_rotation_change: rotation_change,
        robot_pos_change: pos_change,
        human_pos_change: human_change,
        competence: binarize_likert(sample.competence_likert)?,
        intention: binarize_likert(sample.intention_likert)?,
    })
}

pub fn compute_all(samples: &[RawSample], mode: TotalRotationMode) -> Result<Vec<FeatureSample>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            compute_features(s, mode).map_err(|e| Error::schema(format!("sample {i}: {e}")))
        })
        .collect()
}

/// Reads a JSON Lines dataset. With `resample` set, series of any length
/// (>= 2) are interpolated onto the nine-step grid; otherwise they must have
/// exactly nine steps.
pub fn read_jsonl(reader: impl BufRead, resample: bool) -> Result<Vec<RawSample>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut sample: RawSample = serde_json::from_str(&line)
            .map_err(|e| Error::schema(format!("line {}: {e}", lineno + 1)))?;
        if resample && (sample.goal_rel.len() != STEPS || sample.human_rel.len() != STEPS) {
            sample = sample.resampled()?;
        }
        sample
            .validate()
            .map_err(|e| Error::schema(format!("line {}: {e}", lineno + 1)))?;
        out.push(sample);
    }
    Ok(out)
}

pub fn load_jsonl(path: impl AsRef<Path>, resample: bool) -> Result<Vec<RawSample>> {
    let file = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(file), resample)
}

pub fn write_jsonl(mut writer: impl Write, samples: &[RawSample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

fn series_columns(name: &str) -> impl Iterator<Item = String> + '_ {
    (0..STEPS).map(move |t| format!("{name}_t{t}"))
}

/// Header of the flattened feature CSV.
pub fn csv_header() -> Vec<String> {
    let mut cols = vec![
        "participant_id".to_string(),
        "scenario_id".to_string(),
        "initial_robot_rotation".to_string(),
        "total_robot_rotation".to_string(),
    ];
    cols.extend(series_columns("robot_rotation_change"));
    cols.extend(series_columns("robot_pos_change"));
    cols.extend(series_columns("human_pos_change"));
    cols.push("competence".to_string());
    cols.push("intention".to_string());
    cols
}

pub fn write_csv(writer: impl Write, features: &[FeatureSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header())?;
    for f in features {
        let mut row = vec![
            f.participant_id.clone(),
            f.scenario_id.clone(),
            f.initial_robot_rotation.to_string(),
            f.total_robot_rotation.to_string(),
        ];
        for series in [&f.robot_rotation_change, &f.robot_pos_change, &f.human_pos_change] {
            row.extend(series.iter().map(|v| v.to_string()));
        }
        row.push(f.competence.to_string());
        row.push(f.intention.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
