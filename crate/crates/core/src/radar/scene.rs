use serde::{Deserialize, Serialize};

use super::{PointTarget, RadarConfig, RadarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Pedestrian,
    Cyclist,
    Car,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Pedestrian, Category::Cyclist, Category::Car];

    /// Class index in label maps (0 is background).
    pub fn label(self) -> u8 {
        match self {
            Category::Pedestrian => 1,
            Category::Cyclist => 2,
            Category::Car => 3,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            1 => Some(Category::Pedestrian),
            2 => Some(Category::Cyclist),
            3 => Some(Category::Car),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Pedestrian => "pedestrian",
            Category::Cyclist => "cyclist",
            Category::Car => "car",
        }
    }
}

fn unit_amplitude() -> f64 {
    1.0
}

/// A ground-truth point reflector moving over the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub instance_id: u32,
    pub category: Category,
    /// Ground position `(x, y)` in meters per frame; radar at the origin looking along +y.
    pub trajectory: Vec<[f64; 2]>,
    #[serde(default = "unit_amplitude")]
    pub reflectivity_amplitude: f64,
}

/// Ground truth of one object at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub position: [f64; 2],
    pub range_m: f64,
    pub azimuth_rad: f64,
    /// Positive when approaching.
    pub radial_velocity_m_s: f64,
}

fn default_interval() -> f64 {
    0.1
}

/// Scenario file contents: objects, their trajectories and optional radar overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    /// Radar overrides; missing fields fall back to the default profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radar: Option<RadarConfig>,
    /// Time between consecutive frames.
    #[serde(default = "default_interval")]
    pub frame_interval_s: f64,
    /// Sequence length; required when `objects` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_frames: Option<usize>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            radar: None,
            frame_interval_s: default_interval(),
            num_frames: None,
            objects: Vec::new(),
        }
    }
}

impl Scene {
    pub fn num_frames(&self) -> usize {
        self.num_frames
            .or_else(|| self.objects.first().map(|o| o.trajectory.len()))
            .unwrap_or(0)
    }

    pub fn object(&self, instance_id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.instance_id == instance_id)
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 * self.frame_interval_s
    }

    pub fn validate(&self, config: &RadarConfig) -> Result<(), RadarError> {
        if !(self.frame_interval_s.is_finite() && self.frame_interval_s > 0.0) {
            return Err(RadarError::InvalidScene("frame_interval_s must be > 0".into()));
        }
        let n = self.num_frames();
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.instance_id) {
                return Err(RadarError::InvalidScene(format!("duplicate instance_id {}", o.instance_id)));
            }
            if o.trajectory.len() != n {
                return Err(RadarError::InvalidScene(format!(
                    "instance {} trajectory has {} points, sequence has {n} frames",
                    o.instance_id,
                    o.trajectory.len()
                )));
            }
            if !(o.reflectivity_amplitude > 0.0) {
                return Err(RadarError::InvalidScene(format!(
                    "instance {} reflectivity must be > 0",
                    o.instance_id
                )));
            }
            for p in &o.trajectory {
                let r = p[0].hypot(p[1]);
                if !r.is_finite() || r > config.max_range_m {
                    return Err(RadarError::InvalidScene(format!(
                        "instance {} position ({}, {}) beyond max range {} m",
                        o.instance_id, p[0], p[1], config.max_range_m
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ground truth of `object` at `frame`. Radial velocity comes from the
    /// central difference of the trajectory (one-sided at the ends).
    pub fn ground_truth(&self, object: &SceneObject, frame: usize) -> GroundTruth {
        let traj = &object.trajectory;
        let p = traj[frame];
        let dt = self.frame_interval_s;
        let velocity = match traj.len() {
            0 | 1 => [0.0, 0.0],
            n => {
                let (a, b, steps) = if frame == 0 {
                    (0, 1, 1.0)
                } else if frame == n - 1 {
                    (n - 2, n - 1, 1.0)
                } else {
                    (frame - 1, frame + 1, 2.0)
                };
                [
                    (traj[b][0] - traj[a][0]) / (steps * dt),
                    (traj[b][1] - traj[a][1]) / (steps * dt),
                ]
            }
        };
        let range = p[0].hypot(p[1]);
        let radial = if range > 0.0 {
            -(velocity[0] * p[0] + velocity[1] * p[1]) / range
        } else {
            0.0
        };
        GroundTruth {
            position: p,
            range_m: range,
            azimuth_rad: p[0].atan2(p[1]),
            radial_velocity_m_s: radial,
        }
    }

    /// Point reflectors present at `frame`.
    pub fn targets_at(&self, frame: usize) -> Vec<PointTarget> {
        self.objects
            .iter()
            .map(|o| {
                let gt = self.ground_truth(o, frame);
                PointTarget {
                    range_m: gt.range_m,
                    azimuth_rad: gt.azimuth_rad,
                    radial_velocity_m_s: gt.radial_velocity_m_s,
                    amplitude: o.reflectivity_amplitude,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approach(n: usize) -> Scene {
        Scene {
            objects: vec![SceneObject {
                instance_id: 1,
                category: Category::Car,
                trajectory: (0..n).map(|i| [0.0, 20.0 - 0.4 * i as f64]).collect(),
                reflectivity_amplitude: 1.0,
            }],
            ..Scene::default()
        }
    }

    #[test]
    fn approaching_object_has_positive_radial_velocity() {
        let s = approach(5);
        for f in 0..5 {
            let gt = s.ground_truth(&s.objects[0], f);
            assert!((gt.radial_velocity_m_s - 4.0).abs() < 1e-9);
            assert_eq!(gt.azimuth_rad, 0.0);
        }
    }

    #[test]
    fn validation_catches_bad_trajectories() {
        let c = RadarConfig::default();
        let mut s = approach(5);
        s.validate(&c).unwrap();
        s.objects[0].trajectory.pop();
        s.num_frames = Some(5);
        assert!(s.validate(&c).is_err());
        let mut s = approach(3);
        s.objects[0].trajectory[1] = [0.0, 70.0];
        assert!(s.validate(&c).is_err());
    }

    #[test]
    fn scenario_json_fills_defaults() {
        let s: Scene = serde_json::from_str(
            r#"{"radar": {"max_range_m": 40.0}, "objects": [{"instance_id": 3, "category": "cyclist", "trajectory": [[1.0, 2.0]]}]}"#,
        )
        .unwrap();
        let r = s.radar.as_ref().unwrap();
        assert_eq!(r.max_range_m, 40.0);
        assert_eq!(r.chirps_per_frame, 64);
        assert_eq!(s.objects[0].reflectivity_amplitude, 1.0);
        assert_eq!(s.num_frames(), 1);
    }
}
