#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use radar_annotate::io::PipelineConfig;
use radar_annotate::{CameraModel, Category, InstanceDetection, Scene, SceneObject};

/// Car driving straight at the sensor at 4 m/s, slightly off boresight.
pub fn approach_scene(frames: usize) -> Scene {
    Scene {
        objects: vec![object(1, Category::Car, frames, [1.0, 20.0], [0.0, -4.0])],
        ..Scene::default()
    }
}

/// Object moving with constant velocity, sampled at the default 0.1 s interval.
pub fn object(id: u32, category: Category, frames: usize, start: [f64; 2], velocity: [f64; 2]) -> SceneObject {
    SceneObject {
        instance_id: id,
        category,
        trajectory: (0..frames)
            .map(|f| {
                let t = f as f64 * 0.1;
                [start[0] + velocity[0] * t, start[1] + velocity[1] * t]
            })
            .collect(),
        reflectivity_amplitude: 1.0,
    }
}

/// Pipeline configuration with a lighter Monte-Carlo budget.
pub fn fast_config() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.clustering.mc_samples = 1024;
    c
}

/// Forward-looking camera 1.5 m above the ground at the radar origin.
pub fn level_camera() -> CameraModel {
    let rotation = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
    CameraModel::from_pose(
        [800.0, 800.0],
        [619.0, 514.0],
        rotation,
        Vector3::new(0.0, 0.0, 1.5),
        1238,
        1028,
    )
}

/// Box detection whose bottom-centre is the projection of ground point `p`.
pub fn box_detection(camera: &CameraModel, frame: usize, id: u32, category: Category, p: [f64; 2]) -> InstanceDetection {
    let [u, v] = camera.project([p[0], p[1], 0.0]).expect("point in front of the camera");
    InstanceDetection {
        frame_index: frame,
        instance_id: id,
        category,
        bounding_box_px: [u - 20.0, v - 60.0, u + 20.0, v],
        mask_rle: None,
        confidence: 0.9,
    }
}
