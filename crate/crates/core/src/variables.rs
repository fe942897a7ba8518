//! Names of the network variables and the per-variable interval counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const INITIAL_ROBOT_ROTATION: &str = "initial_robot_rotation";
pub const TOTAL_ROBOT_ROTATION: &str = "total_robot_rotation";
pub const ROBOT_ROTATION_CHANGE: &str = "robot_rotation_change";
pub const ROBOT_POS_CHANGE: &str = "robot_pos_change";
pub const HUMAN_POS_CHANGE: &str = "human_pos_change";
pub const COMPETENCE: &str = "competence";
pub const INTENTION: &str = "intention";

pub const ALL: [&str; 7] = [
    INITIAL_ROBOT_ROTATION,
    TOTAL_ROBOT_ROTATION,
    ROBOT_ROTATION_CHANGE,
    ROBOT_POS_CHANGE,
    COMPETENCE,
    INTENTION,
    HUMAN_POS_CHANGE,
];

/// Robot-behavior variables that both perception targets depend on.
pub const BEHAVIOR_PARENTS: [&str; 4] = [
    INITIAL_ROBOT_ROTATION,
    TOTAL_ROBOT_ROTATION,
    ROBOT_ROTATION_CHANGE,
    ROBOT_POS_CHANGE,
];

/// Perception target of a prediction or counterfactual search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Competence,
    Intention,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Competence => COMPETENCE,
            Target::Intention => INTENTION,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            COMPETENCE => Ok(Target::Competence),
            INTENTION => Ok(Target::Intention),
            other => Err(format!("unknown target `{other}`")),
        }
    }
}

/// Number of discretization intervals per non-categorical variable.
///
/// Text form lists `initial,total,pos,rot[,human]`, e.g. `4,4,10,11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cardinalities {
    pub initial_robot_rotation: usize,
    pub total_robot_rotation: usize,
    pub robot_pos_change: usize,
    pub robot_rotation_change: usize,
    pub human_pos_change: usize,
}

impl Default for Cardinalities {
    fn default() -> Self {
        Self {
            initial_robot_rotation: 4,
            total_robot_rotation: 4,
            robot_pos_change: 10,
            robot_rotation_change: 11,
            human_pos_change: 4,
        }
    }
}

impl Cardinalities {
    pub fn new(initial: usize, total: usize, pos: usize, rot: usize, human: usize) -> Self {
        Self {
            initial_robot_rotation: initial,
            total_robot_rotation: total,
            robot_pos_change: pos,
            robot_rotation_change: rot,
            human_pos_change: human,
        }
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        match name {
            INITIAL_ROBOT_ROTATION => Some(self.initial_robot_rotation),
            TOTAL_ROBOT_ROTATION => Some(self.total_robot_rotation),
            ROBOT_POS_CHANGE => Some(self.robot_pos_change),
            ROBOT_ROTATION_CHANGE => Some(self.robot_rotation_change),
            HUMAN_POS_CHANGE => Some(self.human_pos_change),
            _ => None,
        }
    }

    /// Sum of interval counts; used to prefer simpler settings on ties.
    pub fn total(&self) -> usize {
        self.initial_robot_rotation
            + self.total_robot_rotation
            + self.robot_pos_change
            + self.robot_rotation_change
            + self.human_pos_change
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, k) in [
            (INITIAL_ROBOT_ROTATION, self.initial_robot_rotation),
            (TOTAL_ROBOT_ROTATION, self.total_robot_rotation),
            (ROBOT_POS_CHANGE, self.robot_pos_change),
            (ROBOT_ROTATION_CHANGE, self.robot_rotation_change),
            (HUMAN_POS_CHANGE, self.human_pos_change),
        ] {
            if k < 2 {
                return Err(format!("{name} needs at least 2 intervals, got {k}"));
            }
        }
        Ok(())
    }

    /// Default tuning grid. Contains the default setting.
    pub fn default_grid() -> Vec<Cardinalities> {
        let mut grid = Vec::new();
        for scalar in [3, 4] {
            for pos in [6, 10] {
                for rot in [6, 11] {
                    grid.push(Cardinalities::new(scalar, scalar, pos, rot, 4));
                }
            }
        }
        grid
    }

    /// Parses a `;`-separated list of settings.
    pub fn parse_grid(s: &str) -> Result<Vec<Cardinalities>, String> {
        let grid: Vec<_> = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        if grid.is_empty() {
            return Err("empty grid".into());
        }
        Ok(grid)
    }
}

impl fmt::Display for Cardinalities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.initial_robot_rotation,
            self.total_robot_rotation,
            self.robot_pos_change,
            self.robot_rotation_change,
            self.human_pos_change
        )
    }
}

impl FromStr for Cardinalities {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let c = match parts.as_slice() {
            [i, t, p, r] => Cardinalities::new(*i, *t, *p, *r, Cardinalities::default().human_pos_change),
            [i, t, p, r, h] => Cardinalities::new(*i, *t, *p, *r, *h),
            _ => return Err(format!("expected 4 or 5 comma-separated counts, got `{s}`")),
        };
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        let d = Cardinalities::default();
        assert_eq!(
            (d.initial_robot_rotation, d.total_robot_rotation, d.robot_pos_change, d.robot_rotation_change),
            (4, 4, 10, 11)
        );
        assert_eq!("4,4,10,11".parse::<Cardinalities>().unwrap(), d);
        assert_eq!(d.to_string().parse::<Cardinalities>().unwrap(), d);
        assert!("4,1,10,11".parse::<Cardinalities>().is_err());
        assert!("4,4".parse::<Cardinalities>().is_err());
        assert!(Cardinalities::default_grid().contains(&d));
        let g = Cardinalities::parse_grid("3,3,6,6;4,4,10,11,5").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].human_pos_change, 5);
    }
}
