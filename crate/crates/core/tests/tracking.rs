mod common;

use common::{approach_scene, object};
use radar_annotate::annotate::{track_sequence, AnnotatorParams};
use radar_annotate::clustering::ClusteringConfig;
use radar_annotate::io::PipelineConfig;
use radar_annotate::pipeline::detect_frame;
use radar_annotate::radar::{process_cube, synthesize_frame};
use radar_annotate::{Category, DoaCloud, Scene, TrackStatus};

fn clouds(scene: &Scene, config: &PipelineConfig) -> Vec<DoaCloud> {
    (0..scene.num_frames())
        .map(|f| {
            let raw = synthesize_frame(scene, f, &config.radar, config.noise_sigma, 100 + f as u64).unwrap();
            let maps = process_cube(&raw, &config.radar).unwrap();
            detect_frame(maps.rd_map.as_ref().unwrap(), maps.ra_map.as_ref().unwrap(), f, &config.radar, config)
                .unwrap()
                .cloud
        })
        .collect()
}

fn clustering() -> ClusteringConfig {
    ClusteringConfig {
        mc_samples: 512,
        seed: 11,
        ..ClusteringConfig::default()
    }
}

#[test]
fn reversed_sequence_gives_mirrored_track() {
    let config = PipelineConfig::default();
    let scene = approach_scene(8);
    let forward_clouds = clouds(&scene, &config);
    let gt = scene.ground_truth(&scene.objects[0], 3);
    let seed = [gt.position[0], gt.position[1], gt.radial_velocity_m_s];
    let params = AnnotatorParams::default();

    let forward = track_sequence(&forward_clouds, 3, seed, 1, Category::Car, &clustering(), &params).unwrap();
    let mut reversed_clouds = forward_clouds.clone();
    reversed_clouds.reverse();
    let backward = track_sequence(&reversed_clouds, 8 - 1 - 3, seed, 1, Category::Car, &clustering(), &params).unwrap();

    assert_eq!(forward.frames.len(), 8);
    assert_eq!(backward.frames.len(), 8);
    let dd = config.radar.range_resolution();
    for (f, b) in forward.frames.iter().zip(backward.frames.iter().rev()) {
        assert_eq!(f.frame_index, b.frame_index);
        assert_eq!(f.status, b.status);
        let (fa, ba) = (f.association.as_ref().unwrap(), b.association.as_ref().unwrap());
        let d = (fa.centroid[0] - ba.centroid[0]).hypot(fa.centroid[1] - ba.centroid[1]);
        assert!(d <= dd, "frame {}: {d}", f.frame_index);
        assert_eq!(fa.cluster.members, ba.cluster.members);
    }
}

#[test]
fn object_leaving_the_field_is_lost_then_dropped() {
    let config = PipelineConfig::default();
    // clouds past frame 4 are emptied to model the exit
    let scene = Scene {
        objects: vec![object(2, Category::Cyclist, 12, [-2.0, 15.0], [0.0, -2.0])],
        ..Scene::default()
    };
    let mut cs = clouds(&scene, &config);
    for c in cs.iter_mut().skip(5) {
        c.points.clear();
        c.source_bins.clear();
    }
    let gt = scene.ground_truth(&scene.objects[0], 2);
    let params = AnnotatorParams {
        max_lost: 3,
        ..AnnotatorParams::default()
    };
    let track = track_sequence(
        &cs,
        2,
        [gt.position[0], gt.position[1], gt.radial_velocity_m_s],
        2,
        Category::Cyclist,
        &clustering(),
        &params,
    )
    .unwrap();
    let statuses: Vec<_> = track.frames.iter().map(|f| (f.frame_index, f.status)).collect();
    assert_eq!(track.annotated().count(), 5);
    assert_eq!(statuses.iter().filter(|s| s.1 == TrackStatus::Lost).count(), 3);
    assert_eq!(statuses.last().unwrap().0, 7);
}

#[test]
fn track_follows_the_seeded_object_among_two() {
    let config = PipelineConfig::default();
    let scene = Scene {
        objects: vec![
            object(1, Category::Car, 6, [-3.0, 10.0], [0.0, -3.0]),
            object(2, Category::Pedestrian, 6, [4.0, 18.0], [-0.5, 1.0]),
        ],
        ..Scene::default()
    };
    let cs = clouds(&scene, &config);
    let target = &scene.objects[1];
    let gt = scene.ground_truth(target, 0);
    let track = track_sequence(
        &cs,
        0,
        [gt.position[0], gt.position[1], gt.radial_velocity_m_s],
        2,
        Category::Pedestrian,
        &clustering(),
        &AnnotatorParams::default(),
    )
    .unwrap();
    for (tf, a) in track.annotated() {
        let truth = scene.ground_truth(target, tf.frame_index).position;
        assert!((a.centroid[0] - truth[0]).hypot(a.centroid[1] - truth[1]) < 1.0);
        assert!(a.points.iter().all(|p| p.y > 14.0), "frame {} grabbed the car", tf.frame_index);
    }
}
