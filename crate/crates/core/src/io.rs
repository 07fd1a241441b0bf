//! Configuration and on-disk formats.
//!
//! * configuration: one JSON document, every field optional;
//! * maps and raw cubes: little-endian `f32`, row-major, with a JSON sidecar
//!   describing dimensions, axes and resolutions;
//! * detections, clouds and annotations: JSON lines, one record per line.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::AnnotatorParams;
use crate::clustering::ClusteringConfig;
use crate::detect::{CfarParams, Detection, DoaCloud};
use crate::map::RealMap;
use crate::radar::{RadarConfig, RadarCube, Scene};
use crate::vision::{CameraModel, VisionParams};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, e: serde_json::Error) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Camera calibration JSON, required for seeding from camera detections.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    /// Scenario used when a sequence directory has no `scene.json` yet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<PathBuf>,
}

/// Every tunable of the pipeline. Missing fields take the default sensor profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub radar: RadarConfig,
    pub cfar: CfarParams,
    /// Square the range-angle magnitudes before CFAR (the threshold assumes power).
    pub cfar_on_power: bool,
    pub clustering: ClusteringConfig,
    pub annotator: AnnotatorParams,
    pub vision: VisionParams,
    /// Complex noise standard deviation per raw sample during simulation.
    pub noise_sigma: f64,
    pub root_seed: u64,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            radar: RadarConfig::default(),
            cfar: CfarParams::default(),
            cfar_on_power: true,
            clustering: ClusteringConfig::default(),
            annotator: AnnotatorParams::default(),
            vision: VisionParams::default(),
            noise_sigma: 4.0,
            root_seed: 0,
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        let v = |e: String| IoError::Validation(e);
        self.radar.validate().map_err(|e| v(format!("radar: {e}")))?;
        self.cfar.validate().map_err(|e| v(format!("cfar: {e}")))?;
        self.clustering.validate().map_err(|e| v(format!("clustering: {e}")))?;
        self.annotator.validate().map_err(|e| v(format!("annotator: {e}")))?;
        if !(self.vision.delta_t_s > 0.0) {
            return Err(v("vision: delta_t_s must be > 0".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(v("noise_sigma must be finite and >= 0".into()));
        }
        for (name, p) in [("paths.calibration", &self.paths.calibration), ("paths.scene", &self.paths.scene)] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(v(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration; an empty file yields the defaults.
pub fn load_config(path: &Path) -> Result<PipelineConfig, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let config = if text.trim().is_empty() {
        PipelineConfig::default()
    } else {
        serde_json::from_str(&text).map_err(|e| parse_err(path, e))?
    };
    config.validate()?;
    Ok(config)
}

pub fn save_config(path: &Path, config: &PipelineConfig) -> Result<(), IoError> {
    write_json(path, config)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("serializable record");
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleType {
    F32,
    /// Interleaved real / imaginary `f32` pairs.
    ComplexF32,
}

/// JSON sidecar of a binary map or cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapHeader {
    pub dims: Vec<usize>,
    pub axes: Vec<String>,
    /// Physical size of one bin along each axis (0 where not meaningful).
    pub resolutions: Vec<f64>,
    pub frame_index: usize,
    pub timestamp_s: f64,
    pub dtype: SampleType,
}

impl MapHeader {
    pub fn rd(config: &RadarConfig, frame_index: usize, timestamp_s: f64) -> Self {
        Self {
            dims: vec![config.samples_per_chirp, config.chirps_per_frame],
            axes: vec!["range".into(), "doppler".into()],
            resolutions: vec![config.range_resolution(), config.velocity_resolution()],
            frame_index,
            timestamp_s,
            dtype: SampleType::F32,
        }
    }

    pub fn ra(config: &RadarConfig, frame_index: usize, timestamp_s: f64) -> Self {
        Self {
            dims: vec![config.samples_per_chirp, config.num_angle_bins],
            axes: vec!["range".into(), "angle".into()],
            resolutions: vec![config.range_resolution(), 1.0 / config.angle_bins_per_sine()],
            frame_index,
            timestamp_s,
            dtype: SampleType::F32,
        }
    }

    pub fn raw(config: &RadarConfig, frame_index: usize, timestamp_s: f64) -> Self {
        Self {
            dims: vec![config.num_rx_virtual, config.chirps_per_frame, config.samples_per_chirp],
            axes: vec!["antenna".into(), "chirp".into(), "sample".into()],
            resolutions: vec![0.0, config.chirp_interval_s(), config.sample_interval_s()],
            frame_index,
            timestamp_s,
            dtype: SampleType::ComplexF32,
        }
    }

    fn values(&self) -> usize {
        let n: usize = self.dims.iter().product();
        match self.dtype {
            SampleType::F32 => n,
            SampleType::ComplexF32 => 2 * n,
        }
    }
}

fn sidecar(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

fn write_f32(path: &Path, values: impl Iterator<Item = f64>) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for v in values {
        w.write_all(&(v as f32).to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f64>, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != 4 * expected {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            reason: format!("{} bytes, expected {}", bytes.len(), 4 * expected),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect())
}

/// Writes `<path>` (binary) and its `.json` sidecar.
pub fn write_map(path: &Path, map: &RealMap, header: &MapHeader) -> Result<(), IoError> {
    if header.dims != [map.rows(), map.cols()] || header.dtype != SampleType::F32 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            reason: format!("header {:?} does not describe a {:?} map", header.dims, map.dims()),
        });
    }
    write_f32(path, map.data().iter().copied())?;
    write_json(&sidecar(path), header)
}

pub fn read_map(path: &Path) -> Result<(RealMap, MapHeader), IoError> {
    let header: MapHeader = read_json(&sidecar(path))?;
    if header.dims.len() != 2 || header.dtype != SampleType::F32 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            reason: "sidecar does not describe a 2D f32 map".into(),
        });
    }
    let data = read_f32(path, header.values())?;
    Ok((RealMap::from_vec(header.dims[0], header.dims[1], data), header))
}

pub fn write_cube(path: &Path, cube: &RadarCube, header: &MapHeader) -> Result<(), IoError> {
    let (a, m, n) = cube.dims();
    if header.dims != [a, m, n] || header.dtype != SampleType::ComplexF32 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            reason: "header does not describe this cube".into(),
        });
    }
    write_f32(path, cube.data().iter().flat_map(|z| [z.re, z.im]))?;
    write_json(&sidecar(path), header)
}

pub fn read_cube(path: &Path) -> Result<(RadarCube, MapHeader), IoError> {
    let header: MapHeader = read_json(&sidecar(path))?;
    if header.dims.len() != 3 || header.dtype != SampleType::ComplexF32 {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            reason: "sidecar does not describe a complex cube".into(),
        });
    }
    let flat = read_f32(path, header.values())?;
    let data = flat.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    Ok((RadarCube::from_vec(header.dims[0], header.dims[1], header.dims[2], data), header))
}

/// One line of `clouds.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudRecord {
    pub frame: usize,
    pub detections: Vec<Detection>,
    pub cloud: DoaCloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Raw,
    RangeDoppler,
    RangeAngle,
}

impl MapKind {
    fn suffix(self) -> &'static str {
        match self {
            MapKind::Raw => "raw",
            MapKind::RangeDoppler => "rd",
            MapKind::RangeAngle => "ra",
        }
    }
}

/// Directory layout of one sequence:
///
/// ```text
/// scene.json
/// frames/<frame:06>.{raw,rd,ra}.bin + .json sidecars
/// detections.jsonl   camera instance detections (input)
/// clouds.jsonl       CFAR detections and DoA clouds per frame
/// tracks.json        per-instance tracks with their clusters
/// annotations.jsonl  one annotation per frame and instance
/// report.json
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceStore {
    root: PathBuf,
}

impl SequenceStore {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, IoError> {
        let root = root.into();
        let frames = root.join("frames");
        fs::create_dir_all(&frames).map_err(io_err(&frames))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scene_path(&self) -> PathBuf {
        self.root.join("scene.json")
    }

    pub fn detections_path(&self) -> PathBuf {
        self.root.join("detections.jsonl")
    }

    pub fn clouds_path(&self) -> PathBuf {
        self.root.join("clouds.jsonl")
    }

    pub fn tracks_path(&self) -> PathBuf {
        self.root.join("tracks.json")
    }

    pub fn annotations_path(&self) -> PathBuf {
        self.root.join("annotations.jsonl")
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn frame_path(&self, frame: usize, kind: MapKind) -> PathBuf {
        self.root.join("frames").join(format!("{frame:06}.{}.bin", kind.suffix()))
    }

    pub fn read_scene(&self) -> Result<Scene, IoError> {
        read_json(&self.scene_path())
    }

    pub fn write_scene(&self, scene: &Scene) -> Result<(), IoError> {
        write_json(&self.scene_path(), scene)
    }

    /// Frame indices for which a file of `kind` exists, ascending.
    pub fn frames(&self, kind: MapKind) -> Result<Vec<usize>, IoError> {
        let dir = self.root.join("frames");
        let suffix = format!(".{}.bin", kind.suffix());
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let name = entry.map_err(io_err(&dir))?.file_name();
            let name = name.to_string_lossy();
            if let Some(stem) = name.strip_suffix(&suffix) {
                if let Ok(i) = stem.parse() {
                    out.push(i);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Removes frame files of `kind` (stale outputs of a previous run).
    pub fn clear_frames(&self, kind: MapKind) -> Result<(), IoError> {
        for f in self.frames(kind)? {
            let bin = self.frame_path(f, kind);
            fs::remove_file(&bin).map_err(io_err(&bin))?;
            let side = sidecar(&bin);
            if side.exists() {
                fs::remove_file(&side).map_err(io_err(&side))?;
            }
        }
        Ok(())
    }
}

pub fn read_camera(path: &Path) -> Result<CameraModel, IoError> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_profile() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, "  \n").unwrap();
        let c = load_config(&p).unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert!((c.radar.range_resolution() - 0.20).abs() < 0.001);
        assert_eq!((c.radar.samples_per_chirp, c.radar.chirps_per_frame), (256, 64));
        assert_eq!(c.radar.num_angle_bins, 256);
    }

    #[test]
    fn negative_bandwidth_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"radar": {"bandwidth_hz": -4e9}}"#).unwrap();
        match load_config(&p) {
            Err(IoError::Validation(m)) => assert!(m.contains("bandwidth_hz"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, "{\n  \"cfar\": {\"train_cells\": \"eight\"}\n}").unwrap();
        match load_config(&p) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        fs::write(&p, r#"{"radr": {}}"#).unwrap();
        assert!(matches!(load_config(&p), Err(IoError::Parse { .. })));
    }

    #[test]
    fn missing_referenced_path_fails() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"paths": {"calibration": "/nonexistent/cam.json"}}"#).unwrap();
        match load_config(&p) {
            Err(IoError::Validation(m)) => assert!(m.contains("/nonexistent/cam.json")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let mut c = PipelineConfig::default();
        c.cfar.train_cells = 5;
        c.clustering.mc_samples = 100;
        c.root_seed = 99;
        save_config(&p, &c).unwrap();
        assert_eq!(load_config(&p).unwrap(), c);
    }

    #[test]
    fn map_files_are_le_f32_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let c = RadarConfig {
            samples_per_chirp: 4,
            chirps_per_frame: 2,
            max_range_m: 0.5,
            ..RadarConfig::default()
        };
        let map = RealMap::from_fn(4, 2, |r, col| (r * 2 + col) as f64 + 0.5);
        write_map(&p, &map, &MapHeader::rd(&c, 3, 0.3)).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[4..8], &1.5f32.to_le_bytes());
        let (back, header) = read_map(&p).unwrap();
        assert_eq!(back, map);
        assert_eq!(header.axes, vec!["range", "doppler"]);
        assert_eq!(header.frame_index, 3);
        let side: serde_json::Value = read_json(&dir.path().join("m.json")).unwrap();
        for key in ["dims", "axes", "resolutions", "frame_index", "timestamp_s"] {
            assert!(side.get(key).is_some());
        }
    }

    #[test]
    fn truncated_map_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let c = RadarConfig::default();
        write_map(&p, &RealMap::zeros(256, 64), &MapHeader::rd(&c, 0, 0.0)).unwrap();
        fs::write(&p, [0u8; 12]).unwrap();
        assert!(matches!(read_map(&p), Err(IoError::Format { .. })));
    }

    #[test]
    fn jsonl_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "{\"frame\":0,\"detections\":[],\"cloud\":{\"frame_index\":0,\"points\":[],\"source_bins\":[]}}\nnot json\n").unwrap();
        match read_jsonl::<CloudRecord>(&p) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
