//! Turns a counterfactual parameterization into an executable motion.
//!
//! The position centroid is replayed along the straight line from the start
//! toward the goal, stopping at the goal. The rotation centroid is replayed
//! on the heading, scaled down when the robot needs less rotation to face
//! the goal than the centroid's peak, and never scaled up.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::search::CounterfactualSolution;
use crate::discretization::DiscretizationModel;
use crate::error::{Error, Result};
use crate::features::{wrap_finite, HumanPose, RawSample, Series, STEPS};
use crate::variables as vars;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedTrajectory {
    pub positions: Vec<[f64; 2]>,
    pub headings: Vec<f64>,
    /// Factor applied to the rotation centroid, in `[0, 1]`.
    pub rotation_scale: f64,
    pub position_cluster: usize,
    pub rotation_cluster: usize,
    pub goal: [f64; 2],
}

pub fn realize_trajectory(
    solution: &CounterfactualSolution,
    disc: &DiscretizationModel,
    start: WorldPose,
    goal: [f64; 2],
) -> Result<RealizedTrajectory> {
    let pos_cluster = solution
        .index_of(vars::ROBOT_POS_CHANGE)
        .ok_or_else(|| Error::domain("solution has no robot_pos_change index"))?;
    let rot_cluster = solution
        .index_of(vars::ROBOT_ROTATION_CHANGE)
        .ok_or_else(|| Error::domain("solution has no robot_rotation_change index"))?;
    let centroid = |name: &str, i: usize| -> Result<Series> {
        disc.centroids(name)
            .and_then(|c| c.get(i).copied())
            .ok_or_else(|| Error::domain(format!("no centroid {i} for `{name}`")))
    };
    let c_pos = centroid(vars::ROBOT_POS_CHANGE, pos_cluster)?;
    let c_rot = centroid(vars::ROBOT_ROTATION_CHANGE, rot_cluster)?;
    realize_centroids(&c_pos, &c_rot, start, goal).map(|(positions, headings, rotation_scale)| RealizedTrajectory {
        positions,
        headings,
        rotation_scale,
        position_cluster: pos_cluster,
        rotation_cluster: rot_cluster,
        goal,
    })
}

/// Core construction on raw centroids: positions, headings and the
/// rotation scale.
pub fn realize_centroids(
    c_pos: &Series,
    c_rot: &Series,
    start: WorldPose,
    goal: [f64; 2],
) -> Result<(Vec<[f64; 2]>, Vec<f64>, f64)> {
    if [start.x, start.y, start.heading, goal[0], goal[1]].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("realization input"));
    }
    let (dx, dy) = (goal[0] - start.x, goal[1] - start.y);
    let dist = dx.hypot(dy);
    if dist < 1e-6 {
        return Err(Error::domain("goal coincides with the start position"));
    }
    let (ux, uy) = (dx / dist, dy / dist);

    let positions = c_pos
        .iter()
        .map(|c| {
            let along = (-c).min(dist);
            [start.x + along * ux, start.y + along * uy]
        })
        .collect();

    let needed = wrap_finite(dy.atan2(dx) - start.heading);
    let peak = c_rot.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { (needed.abs() / peak).min(1.0) } else { 1.0 };
    // The goal bearing in the robot frame moves opposite to the heading, so
    // replaying a bearing change of `scale * c` turns the robot by `-scale * c`.
    let headings = c_rot.iter().map(|c| wrap_finite(start.heading - scale * c)).collect();
    Ok((positions, headings, scale))
}

impl RealizedTrajectory {
    /// Goal position in the robot frame at every step.
    pub fn goal_relative(&self) -> Vec<[f64; 2]> {
        self.positions
            .iter()
            .zip(&self.headings)
            .map(|(p, h)| {
                let (dx, dy) = (self.goal[0] - p[0], self.goal[1] - p[1]);
                let (s, c) = h.sin_cos();
                [c * dx + s * dy, -s * dx + c * dy]
            })
            .collect()
    }

    /// Raw window for re-featurization, with the follower poses supplied by
    /// the caller (robot frame).
    pub fn to_raw_sample(&self, participant_id: &str, scenario_id: &str, human_rel: Vec<HumanPose>) -> RawSample {
        RawSample {
            participant_id: participant_id.to_string(),
            scenario_id: scenario_id.to_string(),
            goal_rel: self.goal_relative(),
            human_rel,
            competence_likert: 5,
            intention_likert: 5,
        }
    }

    /// CSV rows `t,x,y,heading`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "y", "heading"])?;
        for t in 0..STEPS {
            w.write_record([
                t.to_string(),
                self.positions[t][0].to_string(),
                self.positions[t][1].to_string(),
                self.headings[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
