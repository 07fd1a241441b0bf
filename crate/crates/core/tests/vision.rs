mod common;

use common::{box_detection, level_camera};
use radar_annotate::vision::{build_feature_points, pixel_to_ground, VisionParams};
use radar_annotate::{BinaryMask, Category, InstanceDetection};

const FRAME_INTERVAL: f64 = 0.1;

fn points_for(track: &[(usize, [f64; 2])]) -> Vec<radar_annotate::FeaturePoint> {
    let camera = level_camera();
    let dets: Vec<_> = track
        .iter()
        .map(|&(f, p)| box_detection(&camera, f, 3, Category::Pedestrian, p))
        .collect();
    build_feature_points(&dets, &camera, &VisionParams::default(), FRAME_INTERVAL, 50.0).unwrap()
}

#[test]
fn static_object_has_zero_radial_velocity() {
    let pts = points_for(&[(0, [2.0, 8.0]), (5, [2.0, 8.0]), (10, [2.0, 8.0])]);
    assert_eq!(pts.len(), 3);
    for p in &pts {
        assert!((p.position[0] - 2.0).abs() < 1e-9 && (p.position[1] - 8.0).abs() < 1e-9);
        assert!(p.radial_velocity.abs() < 1e-9);
        assert!(!p.missing_history);
    }
}

#[test]
fn approach_at_two_metres_per_second() {
    // boresight, y shrinking by 0.2 m per 0.1 s frame
    let track: Vec<_> = (0..15).map(|f| (f, [0.0, 12.0 - 0.2 * f as f64])).collect();
    let pts = points_for(&track);
    assert_eq!(pts.len(), 15);
    for p in &pts {
        assert!((p.radial_velocity - 2.0).abs() < 1e-6, "frame {}: {}", p.frame_index, p.radial_velocity);
        assert_eq!(p.category, Category::Pedestrian);
    }
    // first frame has no earlier observation and looks ahead instead
    assert!(!pts[0].missing_history);
}

#[test]
fn receding_object_is_negative() {
    let track: Vec<_> = (0..12).map(|f| (f, [3.0, 6.0 + 0.3 * f as f64])).collect();
    let pts = points_for(&track);
    let last = pts.last().unwrap();
    let expected = -3.0 * last.position[1] / last.position[0].hypot(last.position[1]);
    assert!((last.radial_velocity - expected).abs() < 1e-6);
}

#[test]
fn single_frame_instance_flags_missing_history() {
    let pts = points_for(&[(4, [-1.0, 9.0])]);
    assert_eq!(pts.len(), 1);
    assert!(pts[0].missing_history);
    assert_eq!(pts[0].radial_velocity, 0.0);
}

#[test]
fn far_detections_are_dropped() {
    let camera = level_camera();
    let det = box_detection(&camera, 0, 1, Category::Car, [0.0, 45.0]);
    let pts = build_feature_points(&[det], &camera, &VisionParams::default(), FRAME_INTERVAL, 30.0).unwrap();
    assert!(pts.is_empty());
}

#[test]
fn mask_reference_pixel_matches_box_bottom() {
    let camera = level_camera();
    let p = [1.5, 10.0];
    let boxed = box_detection(&camera, 0, 1, Category::Car, p);
    let [x0, y0, x1, y1] = boxed.bounding_box_px;
    let (r0, r1) = (y0.round() as usize, y1.round() as usize);
    let (c0, c1) = (x0.round() as usize, x1.round() as usize);
    let mask = BinaryMask::from_cells(
        camera.image_height_px,
        camera.image_width_px,
        (r0..=r1).flat_map(|r| (c0..=c1).map(move |c| (r, c))),
    );
    let masked = InstanceDetection {
        mask_rle: Some(mask.to_rle()),
        ..boxed
    };
    let ground = pixel_to_ground(masked.ground_pixel().unwrap(), &camera, 0.0).unwrap();
    // one pixel of quantization at 10 m is a few centimetres
    assert!((ground[0] - p[0]).abs() < 0.1 && (ground[1] - p[1]).abs() < 0.3, "{ground:?}");
}

#[test]
fn invalid_inputs_are_rejected() {
    let camera = level_camera();
    let mut det = box_detection(&camera, 0, 1, Category::Car, [0.0, 10.0]);
    det.bounding_box_px = [-5.0, 0.0, 10.0, 10.0];
    assert!(build_feature_points(&[det], &camera, &VisionParams::default(), FRAME_INTERVAL, 50.0).is_err());
    let det = box_detection(&camera, 0, 1, Category::Car, [0.0, 10.0]);
    assert!(build_feature_points(&[det], &camera, &VisionParams::default(), 0.0, 50.0).is_err());
    // pixel above the horizon never meets the ground
    assert!(pixel_to_ground([619.0, 100.0], &camera, 0.0).is_err());
}
