//! Sequence-level stages over a [`SequenceStore`].
//!
//! Each stage reads the previous stage's files and writes its own, so a run
//! can stop after any stage and resume later with identical results.
//! Randomness is derived from the configured root seed per stage, frame and
//! instance, never from scheduling order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_points, rasterize_labels, track_sequence, Annotation, Track, TrackStatus, View};
use crate::detect::{cfar_detect, to_doa_cloud, DoaCloud};
use crate::error::{Error, Result};
use crate::io::{
    read_cube, read_json, read_jsonl, read_map, write_cube, write_json, write_jsonl, write_map, CloudRecord, MapHeader,
    MapKind, PipelineConfig, SequenceStore,
};
use crate::metrics::{confusion, sparse_confusion, Confusion, LabelMap, MetricReport, SparsePoint};
use crate::radar::{process_cube, synthesize_frame, Category, RadarConfig, RadarFrame, Scene};
use crate::seed::derive_seed;
use crate::vision::{build_feature_points, CameraModel, FeaturePoint, InstanceDetection};

/// Radar parameters in effect: the scene's own block wins over the config.
pub fn effective_radar(config: &PipelineConfig, scene: Option<&Scene>) -> RadarConfig {
    scene
        .and_then(|s| s.radar.clone())
        .unwrap_or_else(|| config.radar.clone())
}

fn load_scene(store: &SequenceStore) -> Result<Option<Scene>> {
    let path = store.scene_path();
    if path.exists() {
        Ok(Some(store.read_scene()?))
    } else {
        Ok(None)
    }
}

fn require_scene(store: &SequenceStore, config: &PipelineConfig) -> Result<Scene> {
    if let Some(scene) = load_scene(store)? {
        return Ok(scene);
    }
    match &config.paths.scene {
        Some(p) => {
            let scene: Scene = read_json(p)?;
            store.write_scene(&scene)?;
            Ok(scene)
        }
        None => Err(Error::MissingInput {
            path: store.scene_path(),
            what: "scene description (or paths.scene in the configuration)".into(),
        }),
    }
}

fn radar_for(store: &SequenceStore, config: &PipelineConfig) -> Result<RadarConfig> {
    let radar = effective_radar(config, load_scene(store)?.as_ref());
    radar.validate()?;
    Ok(radar)
}

/// Synthesizes the raw cube of every scene frame. Returns the frame count.
pub fn simulate(store: &SequenceStore, config: &PipelineConfig) -> Result<usize> {
    let scene = require_scene(store, config)?;
    let radar = effective_radar(config, Some(&scene));
    radar.validate()?;
    scene.validate(&radar)?;
    store.clear_frames(MapKind::Raw)?;
    let n = scene.num_frames();
    (0..n).into_par_iter().try_for_each(|f| -> Result<()> {
        let seed = derive_seed(config.root_seed, "synthesize", f as u64, 0);
        let frame = synthesize_frame(&scene, f, &radar, config.noise_sigma, seed).map_err(|e| Error::from(e).at_frame(f))?;
        let cube = frame.raw_cube.as_ref().expect("synthesized frame has a cube");
        write_cube(
            &store.frame_path(f, MapKind::Raw),
            cube,
            &MapHeader::raw(&radar, f, frame.timestamp_s),
        )?;
        Ok(())
    })?;
    info!("simulated {n} frames");
    Ok(n)
}

/// Range-Doppler and range-angle maps for every raw cube on disk.
pub fn process(store: &SequenceStore, config: &PipelineConfig) -> Result<usize> {
    let radar = radar_for(store, config)?;
    let frames = store.frames(MapKind::Raw)?;
    if frames.is_empty() {
        return Err(Error::MissingInput {
            path: store.root().join("frames"),
            what: "raw cubes (run simulate first)".into(),
        });
    }
    frames.par_iter().try_for_each(|&f| -> Result<()> {
        let (cube, header) = read_cube(&store.frame_path(f, MapKind::Raw))?;
        let raw = RadarFrame {
            frame_index: f,
            timestamp_s: header.timestamp_s,
            raw_cube: Some(cube),
            rd_map: None,
            ra_map: None,
        };
        let out = process_cube(&raw, &radar).map_err(|e| Error::from(e).at_frame(f))?;
        let (rd, ra) = (out.rd_map.expect("rd map"), out.ra_map.expect("ra map"));
        write_map(
            &store.frame_path(f, MapKind::RangeDoppler),
            &rd,
            &MapHeader::rd(&radar, f, header.timestamp_s),
        )?;
        write_map(
            &store.frame_path(f, MapKind::RangeAngle),
            &ra,
            &MapHeader::ra(&radar, f, header.timestamp_s),
        )?;
        Ok(())
    })?;
    info!("processed {} frames", frames.len());
    Ok(frames.len())
}

/// CFAR on the range-angle map, then DoA-Doppler points for each detection.
pub fn detect_frame(
    rd: &crate::map::RealMap,
    ra: &crate::map::RealMap,
    frame_index: usize,
    radar: &RadarConfig,
    config: &PipelineConfig,
) -> Result<CloudRecord> {
    let power;
    let input = if config.cfar_on_power {
        power = ra.map(|v| v * v);
        &power
    } else {
        ra
    };
    let detections = cfar_detect(input, &config.cfar)?;
    let cloud = to_doa_cloud(&detections, rd, radar, frame_index)?;
    Ok(CloudRecord {
        frame: frame_index,
        detections,
        cloud,
    })
}

/// Runs detection over every processed frame and writes `clouds.jsonl`.
pub fn detect(store: &SequenceStore, config: &PipelineConfig) -> Result<usize> {
    let radar = radar_for(store, config)?;
    let frames = store.frames(MapKind::RangeAngle)?;
    if frames.is_empty() {
        return Err(Error::MissingInput {
            path: store.root().join("frames"),
            what: "range-angle maps (run process first)".into(),
        });
    }
    let records = frames
        .par_iter()
        .map(|&f| -> Result<CloudRecord> {
            let (ra, _) = read_map(&store.frame_path(f, MapKind::RangeAngle))?;
            let (rd, _) = read_map(&store.frame_path(f, MapKind::RangeDoppler))?;
            detect_frame(&rd, &ra, f, &radar, config).map_err(|e| e.at_frame(f))
        })
        .collect::<Result<Vec<_>>>()?;
    for r in records.iter().filter(|r| r.cloud.is_empty()) {
        warn!("frame {}: no detections", r.frame);
    }
    write_jsonl(&store.clouds_path(), &records)?;
    Ok(records.len())
}

/// One frame / instance pair to seed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRequest {
    pub frame: usize,
    pub instance_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedSource {
    /// Scene ground truth (simulated sequences).
    #[default]
    Scene,
    /// Camera detections in `detections.jsonl` plus the calibration file.
    CameraDetections,
}

/// Which instances to annotate and where their seeds come from. With no
/// explicit requests every known instance is seeded once: at the middle frame
/// for scene seeds, at the median frame with velocity history for camera seeds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedPlan {
    pub source: SeedSource,
    pub requests: Vec<SeedRequest>,
}

/// A resolved seed: feature point `(x, y, v_R)` in the radar frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub frame: usize,
    pub instance_id: u32,
    pub category: Category,
    pub point: [f64; 3],
}

fn scene_seeds(scene: &Scene, requests: &[SeedRequest]) -> Result<Vec<Seed>> {
    let n = scene.num_frames();
    let requests: Vec<SeedRequest> = if requests.is_empty() {
        scene
            .objects
            .iter()
            .map(|o| SeedRequest {
                frame: n / 2,
                instance_id: o.instance_id,
            })
            .collect()
    } else {
        requests.to_vec()
    };
    requests
        .iter()
        .map(|r| {
            let obj = scene.object(r.instance_id).ok_or_else(|| Error::MissingInput {
                path: PathBuf::from("scene.json"),
                what: format!("instance {} is not in the scene", r.instance_id),
            })?;
            if r.frame >= n {
                return Err(crate::annotate::AnnotateError::SeedOutOfSequence { seed: r.frame, len: n }.into());
            }
            let gt = scene.ground_truth(obj, r.frame);
            Ok(Seed {
                frame: r.frame,
                instance_id: r.instance_id,
                category: obj.category,
                point: [gt.position[0], gt.position[1], gt.radial_velocity_m_s],
            })
        })
        .collect()
}

/// Feature points from the store's camera detections.
pub fn camera_feature_points(store: &SequenceStore, config: &PipelineConfig) -> Result<Vec<FeaturePoint>> {
    let calibration = config.paths.calibration.as_ref().ok_or_else(|| Error::MissingInput {
        path: PathBuf::from("paths.calibration"),
        what: "camera calibration is required to seed from camera detections".into(),
    })?;
    if !calibration.exists() {
        return Err(Error::MissingInput {
            path: calibration.clone(),
            what: "camera calibration".into(),
        });
    }
    let camera: CameraModel = read_json(calibration)?;
    let det_path = store.detections_path();
    if !det_path.exists() {
        return Err(Error::MissingInput {
            path: det_path,
            what: "camera instance detections".into(),
        });
    }
    let detections: Vec<InstanceDetection> = read_jsonl(&det_path)?;
    let scene = load_scene(store)?;
    let frame_interval = scene.as_ref().map_or(0.1, |s| s.frame_interval_s);
    let radar = effective_radar(config, scene.as_ref());
    Ok(build_feature_points(
        &detections,
        &camera,
        &config.vision,
        frame_interval,
        radar.max_range_m,
    )?)
}

fn camera_seeds(points: &[FeaturePoint], requests: &[SeedRequest]) -> Result<Vec<Seed>> {
    let to_seed = |p: &FeaturePoint| Seed {
        frame: p.frame_index,
        instance_id: p.instance_id,
        category: p.category,
        point: p.as_cloud_point(),
    };
    if !requests.is_empty() {
        return requests
            .iter()
            .map(|r| {
                points
                    .iter()
                    .find(|p| p.frame_index == r.frame && p.instance_id == r.instance_id)
                    .map(to_seed)
                    .ok_or_else(|| Error::MissingInput {
                        path: PathBuf::from("detections.jsonl"),
                        what: format!("no usable detection of instance {} in frame {}", r.instance_id, r.frame),
                    })
            })
            .collect();
    }
    let mut by_instance: BTreeMap<u32, Vec<&FeaturePoint>> = BTreeMap::new();
    for p in points {
        by_instance.entry(p.instance_id).or_default().push(p);
    }
    Ok(by_instance
        .values()
        .map(|pts| {
            let with_history: Vec<&&FeaturePoint> = pts.iter().filter(|p| !p.missing_history).collect();
            let pick = if with_history.is_empty() {
                pts[pts.len() / 2]
            } else {
                with_history[with_history.len() / 2]
            };
            to_seed(pick)
        })
        .collect())
}

pub fn resolve_seeds(store: &SequenceStore, config: &PipelineConfig, plan: &SeedPlan) -> Result<Vec<Seed>> {
    match plan.source {
        SeedSource::Scene => {
            let scene = load_scene(store)?.ok_or_else(|| Error::MissingInput {
                path: store.scene_path(),
                what: "scene ground truth for seeding".into(),
            })?;
            scene_seeds(&scene, &plan.requests)
        }
        SeedSource::CameraDetections => camera_seeds(&camera_feature_points(store, config)?, &plan.requests),
    }
}

/// A seed whose first association failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub instance_id: u32,
    pub frame: usize,
    pub reason: String,
}

/// Contents of `tracks.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub seeds: Vec<Seed>,
    pub tracks: Vec<Track>,
    pub failures: Vec<SeedFailure>,
}

impl TrackSet {
    pub fn all_tracked(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Tracks one seed through the stored clouds.
pub fn track_seed(clouds: &[DoaCloud], seed: &Seed, config: &PipelineConfig) -> Result<Track> {
    let pos = clouds
        .iter()
        .position(|c| c.frame_index == seed.frame)
        .ok_or(crate::annotate::AnnotateError::SeedOutOfSequence {
            seed: seed.frame,
            len: clouds.len(),
        })?;
    let mut clustering = config.clustering.clone();
    clustering.seed = derive_seed(config.root_seed, "cluster", u64::from(seed.instance_id), config.clustering.seed);
    Ok(track_sequence(
        clouds,
        pos,
        seed.point,
        seed.instance_id,
        seed.category,
        &clustering,
        &config.annotator,
    )?)
}

/// Annotations of every associated frame of `track`.
pub fn track_annotations(track: &Track, radar: &RadarConfig, config: &PipelineConfig) -> Result<Vec<Annotation>> {
    track
        .annotated()
        .map(|(tf, assoc)| {
            annotate_points(
                tf.frame_index,
                track.instance_id,
                track.category,
                &assoc.points,
                radar,
                &config.annotator,
            )
            .map_err(|e| Error::from(e).at_frame(tf.frame_index).at_instance(track.instance_id))
        })
        .collect()
}

/// Seeds, tracks and annotates; writes `tracks.json` and `annotations.jsonl`.
///
/// A seed that cannot be associated is recorded as a failure rather than
/// aborting the other instances.
pub fn annotate(store: &SequenceStore, config: &PipelineConfig, plan: &SeedPlan) -> Result<TrackSet> {
    let radar = radar_for(store, config)?;
    let clouds_path = store.clouds_path();
    if !clouds_path.exists() {
        return Err(Error::MissingInput {
            path: clouds_path,
            what: "DoA clouds (run detect first)".into(),
        });
    }
    let clouds: Vec<DoaCloud> = read_jsonl::<CloudRecord>(&clouds_path)?
        .into_iter()
        .map(|r| r.cloud)
        .collect();
    let seeds = resolve_seeds(store, config, plan)?;

    let results: Vec<(Seed, Result<Track>)> = seeds
        .par_iter()
        .map(|s| (*s, track_seed(&clouds, s, config)))
        .collect();

    let mut set = TrackSet {
        seeds: seeds.clone(),
        ..Default::default()
    };
    let mut annotations = Vec::new();
    for (seed, result) in results {
        match result {
            Ok(track) => {
                annotations.extend(track_annotations(&track, &radar, config)?);
                set.tracks.push(track);
            }
            Err(Error::Annotate(e)) => {
                warn!("instance {}: {e}", seed.instance_id);
                set.failures.push(SeedFailure {
                    instance_id: seed.instance_id,
                    frame: seed.frame,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e.at_instance(seed.instance_id)),
        }
    }
    annotations.sort_by_key(|a| (a.frame_index, a.instance_id));
    write_json(&store.tracks_path(), &set)?;
    write_jsonl(&store.annotations_path(), &annotations)?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub instance_id: u32,
    pub category: Category,
    pub seed_frame: usize,
    pub annotated_frames: usize,
    pub lost_frames: usize,
    pub first_frame: Option<usize>,
    pub last_frame: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: Category,
    pub instances: usize,
    pub annotations: usize,
}

/// Dataset statistics of one annotated sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub frames: usize,
    /// Instances with at least one annotation.
    pub instances: usize,
    /// Frames carrying at least one annotation.
    pub annotated_frames: usize,
    pub annotations: usize,
    pub categories: Vec<CategoryCount>,
    pub per_instance: Vec<InstanceSummary>,
    pub failures: Vec<SeedFailure>,
}

impl SequenceReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "frames {}\ninstances {}\nannotated frames {}\nannotations {}\n",
            self.frames, self.instances, self.annotated_frames, self.annotations
        );
        for c in &self.categories {
            s += &format!("  {:<10} instances {:>4}  annotations {:>6}\n", c.category.name(), c.instances, c.annotations);
        }
        for f in &self.failures {
            s += &format!("  seed failed: instance {} frame {}: {}\n", f.instance_id, f.frame, f.reason);
        }
        s
    }
}

/// Builds `report.json` from stored clouds, tracks and annotations.
pub fn report(store: &SequenceStore) -> Result<SequenceReport> {
    let clouds_path = store.clouds_path();
    let ann_path = store.annotations_path();
    let tracks_path = store.tracks_path();
    for (p, what) in [
        (&clouds_path, "DoA clouds"),
        (&ann_path, "annotations"),
        (&tracks_path, "tracks"),
    ] {
        if !p.exists() {
            return Err(Error::MissingInput {
                path: p.clone(),
                what: what.into(),
            });
        }
    }
    let frames = read_jsonl::<CloudRecord>(&clouds_path)?.len();
    let annotations: Vec<Annotation> = read_jsonl(&ann_path)?;
    let set: TrackSet = read_json(&tracks_path)?;

    let annotated: BTreeSet<usize> = annotations.iter().map(|a| a.frame_index).collect();
    let per_instance: Vec<InstanceSummary> = set
        .tracks
        .iter()
        .map(|t| {
            let frames: Vec<usize> = t.annotated().map(|(f, _)| f.frame_index).collect();
            InstanceSummary {
                instance_id: t.instance_id,
                category: t.category,
                seed_frame: t
                    .frames
                    .iter()
                    .find(|f| f.status == TrackStatus::Seeded)
                    .map_or(0, |f| f.frame_index),
                annotated_frames: frames.len(),
                lost_frames: t.frames.iter().filter(|f| f.status == TrackStatus::Lost).count(),
                first_frame: frames.first().copied(),
                last_frame: frames.last().copied(),
            }
        })
        .collect();
    let categories = Category::ALL
        .iter()
        .map(|&c| CategoryCount {
            category: c,
            instances: per_instance
                .iter()
                .filter(|i| i.category == c && i.annotated_frames > 0)
                .count(),
            annotations: annotations.iter().filter(|a| a.category == c).count(),
        })
        .collect();
    let report = SequenceReport {
        frames,
        instances: per_instance.iter().filter(|i| i.annotated_frames > 0).count(),
        annotated_frames: annotated.len(),
        annotations: annotations.len(),
        categories,
        per_instance,
        failures: set.failures,
    };
    write_json(&store.report_path(), &report)?;
    Ok(report)
}

/// Simulate, process, detect, annotate and report in one go.
pub fn run_pipeline(store: &SequenceStore, config: &PipelineConfig, plan: &SeedPlan) -> Result<(TrackSet, SequenceReport)> {
    simulate(store, config)?;
    process(store, config)?;
    detect(store, config)?;
    let set = annotate(store, config, plan)?;
    let report = report(store)?;
    Ok((set, report))
}

/// Annotations placed at each object's true `(x, y, v_R)`, one point per
/// frame, for evaluating against a simulated scene.
pub fn ground_truth_annotations(scene: &Scene, radar: &RadarConfig, config: &PipelineConfig) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for f in 0..scene.num_frames() {
        for o in &scene.objects {
            let gt = scene.ground_truth(o, f);
            let p = crate::detect::DoaPoint::new(gt.position[0], gt.position[1], gt.radial_velocity_m_s);
            out.push(annotate_points(f, o.instance_id, o.category, &[p], radar, &config.annotator)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Per-cell comparison of dense masks, background included.
    #[default]
    Dense,
    /// Predicted labels at the reference's sparse points.
    Sparse,
}

fn by_frame(annotations: &[Annotation]) -> BTreeMap<usize, Vec<&Annotation>> {
    let mut m: BTreeMap<usize, Vec<&Annotation>> = BTreeMap::new();
    for a in annotations {
        m.entry(a.frame_index).or_default().push(a);
    }
    m
}

/// Compares predicted annotations with reference annotations over all frames
/// present in either set, summing one confusion matrix.
pub fn evaluate(
    pred: &[Annotation],
    truth: &[Annotation],
    view: View,
    mode: EvalMode,
    radar: &RadarConfig,
) -> Result<MetricReport> {
    let pred_frames = by_frame(pred);
    let truth_frames = by_frame(truth);
    let (rows, cols) = view.dims(radar);
    let empty = LabelMap::background(rows, cols);
    let mut total = Confusion::default();
    let frames: BTreeSet<usize> = pred_frames.keys().chain(truth_frames.keys()).copied().collect();
    for f in frames {
        let p = pred_frames
            .get(&f)
            .map_or_else(|| empty.clone(), |a| rasterize_labels(a, view, radar));
        let c = match mode {
            EvalMode::Dense => {
                let t = truth_frames
                    .get(&f)
                    .map_or_else(|| empty.clone(), |a| rasterize_labels(a, view, radar));
                confusion(&p, &t)?
            }
            EvalMode::Sparse => {
                let points: Vec<SparsePoint> = truth_frames
                    .get(&f)
                    .into_iter()
                    .flatten()
                    .flat_map(|a| {
                        a.view(view).sparse.iter().map(|&(row, col)| SparsePoint {
                            row,
                            col,
                            label: a.category.label(),
                        })
                    })
                    .collect();
                sparse_confusion(&p, &points)?
            }
        };
        total.add(&c);
    }
    Ok(match mode {
        EvalMode::Dense => MetricReport::dense(&total),
        EvalMode::Sparse => MetricReport::sparse(&total),
    })
}

/// Reads a JSON-lines annotation file.
pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    Ok(read_jsonl(path)?)
}
