//! Camera-side feature points: pinhole inversion of the ground-contact pixel
//! of each externally detected instance, then radial velocity from the
//! displacement between frames.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::{BinaryMask, MaskError, Rle};
use crate::radar::Category;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid detection (frame {frame}, id {id}): {reason}")]
    InvalidDetection { frame: usize, id: u32, reason: String },
    #[error("segmentation mask is empty")]
    EmptyMask,
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("back-projected ray is parallel to the ground plane")]
    RayParallelToGround,
    #[error("ground intersection lies behind the camera (s = {0})")]
    BehindCamera(f64),
    #[error("position is at the radar origin")]
    AtOrigin,
    #[error("time interval must be > 0, got {0}")]
    InvalidInterval(f64),
}

/// Pinhole camera `s p = A B c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Intrinsics `[[f_x, 0, a_x], [0, f_y, a_y], [0, 0, 1]]`.
    #[serde(rename = "A")]
    pub intrinsics: [[f64; 3]; 3],
    /// Extrinsics `[R | m]`, world to camera.
    #[serde(rename = "B")]
    pub extrinsics: [[f64; 4]; 3],
    #[serde(rename = "width")]
    pub image_width_px: usize,
    #[serde(rename = "height")]
    pub image_height_px: usize,
}

impl CameraModel {
    /// Camera at `position` with world-to-camera rotation `rotation`.
    pub fn from_pose(
        focal: [f64; 2],
        principal: [f64; 2],
        rotation: Matrix3<f64>,
        position: Vector3<f64>,
        width: usize,
        height: usize,
    ) -> Self {
        let t = -(rotation * position);
        let mut extrinsics = [[0.0; 4]; 3];
        for (i, row) in extrinsics.iter_mut().enumerate() {
            for j in 0..3 {
                row[j] = rotation[(i, j)];
            }
            row[3] = t[i];
        }
        Self {
            intrinsics: [[focal[0], 0.0, principal[0]], [0.0, focal[1], principal[1]], [0.0, 0.0, 1.0]],
            extrinsics,
            image_width_px: width,
            image_height_px: height,
        }
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        let a = &self.intrinsics;
        if !(a[0][0] > 0.0 && a[1][1] > 0.0) {
            return Err(VisionError::InvalidCamera("focal lengths must be > 0".into()));
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(VisionError::InvalidCamera("image dimensions must be > 0".into()));
        }
        let r = self.rotation();
        let err = (r * r.transpose() - Matrix3::identity()).amax();
        if err > 1e-6 {
            return Err(VisionError::InvalidCamera(format!(
                "rotation is not orthonormal (max deviation {err:.2e})"
            )));
        }
        Ok(())
    }

    fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.extrinsics[i][j])
    }

    /// `A B` as a 3x4 matrix.
    pub fn projection(&self) -> Matrix3x4<f64> {
        let a = Matrix3::from_fn(|i, j| self.intrinsics[i][j]);
        let b = Matrix3x4::from_fn(|i, j| self.extrinsics[i][j]);
        a * b
    }

    /// Pixel of a world point, or `None` when it is not in front of the camera.
    pub fn project(&self, world: [f64; 3]) -> Option<[f64; 2]> {
        let h = self.projection() * Vector4::new(world[0], world[1], world[2], 1.0);
        (h[2] > 0.0).then(|| [h[0] / h[2], h[1] / h[2]])
    }
}

/// Instance detection produced by an external segmentation + tracking stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDetection {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    #[serde(rename = "id")]
    pub instance_id: u32,
    pub category: Category,
    /// `[x0, y0, x1, y1]` in pixels.
    #[serde(rename = "box")]
    pub bounding_box_px: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_rle: Option<Rle>,
    #[serde(rename = "score")]
    pub confidence: f64,
}

impl InstanceDetection {
    pub fn validate(&self, camera: &CameraModel) -> Result<(), VisionError> {
        let err = |reason: String| VisionError::InvalidDetection {
            frame: self.frame_index,
            id: self.instance_id,
            reason,
        };
        let [x0, y0, x1, y1] = self.bounding_box_px;
        let (w, h) = (camera.image_width_px as f64, camera.image_height_px as f64);
        if !(0.0 <= x0 && x0 <= x1 && x1 <= w && 0.0 <= y0 && y0 <= y1 && y1 <= h) {
            return Err(err(format!("box {:?} outside a {w}x{h} image", self.bounding_box_px)));
        }
        if let Some(rle) = &self.mask_rle {
            if rle.size != [camera.image_height_px, camera.image_width_px] {
                return Err(err(format!("mask size {:?} differs from the image", rle.size)));
            }
        }
        Ok(())
    }

    /// Ground-contact pixel: from the mask when present, else the bottom
    /// center of the box.
    pub fn ground_pixel(&self) -> Result<[f64; 2], VisionError> {
        match &self.mask_rle {
            Some(rle) => {
                let [px, py] = reference_pixel(&rle.decode()?)?;
                Ok([px as f64, py as f64])
            }
            None => {
                let [x0, _, x1, y1] = self.bounding_box_px;
                Ok([(x0 + x1) / 2.0, y1])
            }
        }
    }
}

/// Bottom-most mask pixel in the column of the mask's center of mass, as
/// `(p_x, p_y)` with rows growing downward. If that column is empty the
/// nearest occupied column is used (ties toward the left).
pub fn reference_pixel(mask: &BinaryMask) -> Result<[usize; 2], VisionError> {
    let mut bottom: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut col_sum, mut n) = (0.0, 0usize);
    for (r, c) in mask.cells() {
        col_sum += c as f64;
        n += 1;
        let e = bottom.entry(c).or_insert(r);
        *e = (*e).max(r);
    }
    if n == 0 {
        return Err(VisionError::EmptyMask);
    }
    let center = col_sum / n as f64;
    let (&col, &row) = bottom
        .iter()
        .min_by(|a, b| (*a.0 as f64 - center).abs().total_cmp(&(*b.0 as f64 - center).abs()))
        .expect("mask is non-empty");
    Ok([col, row])
}

/// Intersects the pixel's viewing ray with the plane `c_z = ground_height`.
pub fn pixel_to_ground(pixel: [f64; 2], camera: &CameraModel, ground_height: f64) -> Result<[f64; 2], VisionError> {
    let p = camera.projection();
    let lhs = Matrix3::new(
        p[(0, 0)],
        p[(0, 1)],
        -pixel[0],
        p[(1, 0)],
        p[(1, 1)],
        -pixel[1],
        p[(2, 0)],
        p[(2, 1)],
        -1.0,
    );
    let rhs = -(p.column(2) * ground_height + p.column(3));
    if lhs.determinant().abs() < 1e-10 {
        return Err(VisionError::RayParallelToGround);
    }
    let sol = lhs.lu().solve(&rhs).ok_or(VisionError::RayParallelToGround)?;
    if sol[2] <= 0.0 {
        return Err(VisionError::BehindCamera(sol[2]));
    }
    Ok([sol[0], sol[1]])
}

/// `(c_now - c_prev) / Δt`.
pub fn estimate_velocity(c_now: [f64; 2], c_prev: [f64; 2], delta_t: f64) -> Result<[f64; 2], VisionError> {
    if !(delta_t > 0.0) {
        return Err(VisionError::InvalidInterval(delta_t));
    }
    Ok([(c_now[0] - c_prev[0]) / delta_t, (c_now[1] - c_prev[1]) / delta_t])
}

/// Velocity component along the line of sight, positive when approaching.
pub fn radial_velocity(v: [f64; 2], position: [f64; 2]) -> Result<f64, VisionError> {
    let norm = position[0].hypot(position[1]);
    if norm == 0.0 {
        return Err(VisionError::AtOrigin);
    }
    Ok(-(v[0] * position[0] + v[1] * position[1]) / norm)
}

/// Physical description `[c, v_R]` of one instance at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub frame_index: usize,
    pub instance_id: u32,
    pub category: Category,
    pub position: [f64; 2],
    /// Positive when approaching.
    pub radial_velocity: f64,
    /// No other frame of the instance was available; `radial_velocity` is 0.
    pub missing_history: bool,
}

impl FeaturePoint {
    /// `(x, y, v_R)` in physical units.
    pub fn as_cloud_point(&self) -> [f64; 3] {
        [self.position[0], self.position[1], self.radial_velocity]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionParams {
    /// Velocity differencing interval.
    pub delta_t_s: f64,
    pub ground_height_m: f64,
    /// Feature points with larger |v_R| are discarded.
    pub max_speed_m_s: f64,
}

impl Default for VisionParams {
    fn default() -> Self {
        Self {
            delta_t_s: 1.0,
            ground_height_m: 0.0,
            max_speed_m_s: 50.0,
        }
    }
}

/// Feature points for every detected instance and frame.
///
/// Velocity uses the earlier frame whose timestamp is nearest `t - Δt`; an
/// instance's first frame uses the later frame nearest `t + Δt` instead.
/// Points beyond `max_range_m` or over the speed cap are dropped.
pub fn build_feature_points(
    detections: &[InstanceDetection],
    camera: &CameraModel,
    params: &VisionParams,
    frame_interval_s: f64,
    max_range_m: f64,
) -> Result<Vec<FeaturePoint>, VisionError> {
    camera.validate()?;
    if !(frame_interval_s > 0.0) {
        return Err(VisionError::InvalidInterval(frame_interval_s));
    }
    if !(params.delta_t_s > 0.0) {
        return Err(VisionError::InvalidInterval(params.delta_t_s));
    }

    let mut by_instance: BTreeMap<u32, BTreeMap<usize, (Category, [f64; 2])>> = BTreeMap::new();
    for d in detections {
        d.validate(camera)?;
        let pixel = d.ground_pixel()?;
        let c = pixel_to_ground(pixel, camera, params.ground_height_m)?;
        by_instance
            .entry(d.instance_id)
            .or_default()
            .insert(d.frame_index, (d.category, c));
    }

    let time = |f: usize| f as f64 * frame_interval_s;
    let mut out = Vec::new();
    for (&id, track) in &by_instance {
        for (&frame, &(category, c_now)) in track {
            let t = time(frame);
            let nearest = |frames: &mut dyn Iterator<Item = (&usize, &(Category, [f64; 2]))>, target: f64| {
                frames
                    .min_by(|a, b| (time(*a.0) - target).abs().total_cmp(&(time(*b.0) - target).abs()))
                    .map(|(&f, &(_, c))| (f, c))
            };
            let earlier = nearest(&mut track.range(..frame).rev(), t - params.delta_t_s);
            let (v_r, missing) = if let Some((f, c_prev)) = earlier {
                let v = estimate_velocity(c_now, c_prev, t - time(f))?;
                (radial_velocity(v, c_now)?, false)
            } else if let Some((f, c_next)) = nearest(&mut track.range(frame + 1..), t + params.delta_t_s) {
                let v = estimate_velocity(c_next, c_now, time(f) - t)?;
                (radial_velocity(v, c_now)?, false)
            } else {
                warn!("instance {id} appears only in frame {frame}; radial velocity set to 0");
                (0.0, true)
            };
            let range = c_now[0].hypot(c_now[1]);
            if range > max_range_m || v_r.abs() >= params.max_speed_m_s {
                warn!("instance {id} frame {frame}: implausible feature point (r = {range:.1} m, v = {v_r:.1} m/s)");
                continue;
            }
            out.push(FeaturePoint {
                frame_index: frame,
                instance_id: id,
                category,
                position: c_now,
                radial_velocity: v_r,
                missing_history: missing,
            });
        }
    }
    out.sort_by_key(|p| (p.frame_index, p.instance_id));
    Ok(out)
}
