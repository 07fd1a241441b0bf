use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AnnotateError, AnnotatorParams};
use crate::detect::DoaPoint;
use crate::mask::BinaryMask;
use crate::metrics::LabelMap;
use crate::radar::{Category, RadarConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    RangeDoppler,
    RangeAngle,
}

impl View {
    pub fn dims(self, config: &RadarConfig) -> (usize, usize) {
        match self {
            View::RangeDoppler => (config.samples_per_chirp, config.chirps_per_frame),
            View::RangeAngle => (config.samples_per_chirp, config.num_angle_bins),
        }
    }
}

/// Quantized `(range_bin, other_bin)` cells, deduplicated and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub bins: Vec<(usize, usize)>,
    /// Points that fell outside the map and were clamped to its border.
    pub clamped: usize,
}

fn quantize(cells: impl Iterator<Item = (i64, i64)>, dims: (usize, usize)) -> Result<Projection, AnnotateError> {
    let mut set = BTreeSet::new();
    let mut clamped = 0;
    let mut any = false;
    for (r, c) in cells {
        any = true;
        let rc = r.clamp(0, dims.0 as i64 - 1);
        let cc = c.clamp(0, dims.1 as i64 - 1);
        if rc != r || cc != c {
            clamped += 1;
        }
        set.insert((rc as usize, cc as usize));
    }
    if !any {
        return Err(AnnotateError::EmptySet);
    }
    Ok(Projection {
        bins: set.into_iter().collect(),
        clamped,
    })
}

/// `(floor(r / δd), center + round(v / δv))` per point.
pub fn project_rd(points: &[DoaPoint], config: &RadarConfig) -> Result<Projection, AnnotateError> {
    quantize(
        points
            .iter()
            .map(|p| (config.range_to_bin(p.range()), config.velocity_to_doppler_bin(p.doppler))),
        View::RangeDoppler.dims(config),
    )
}

/// `(floor(r / δd), angle bin of atan2(x, y))` per point.
pub fn project_ra(points: &[DoaPoint], config: &RadarConfig) -> Result<Projection, AnnotateError> {
    quantize(
        points
            .iter()
            .map(|p| (config.range_to_bin(p.range()), config.azimuth_to_angle_bin(p.azimuth()))),
        View::RangeAngle.dims(config),
    )
}

/// Inclusive axis-aligned box `{(x_min, y_min), (x_max, y_max)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[[usize; 2]; 2]", into = "[[usize; 2]; 2]")]
pub struct BBox {
    pub min: (usize, usize),
    pub max: (usize, usize),
}

impl BBox {
    pub fn contains(&self, p: (usize, usize)) -> bool {
        (self.min.0..=self.max.0).contains(&p.0) && (self.min.1..=self.max.1).contains(&p.1)
    }
}

impl From<[[usize; 2]; 2]> for BBox {
    fn from(v: [[usize; 2]; 2]) -> Self {
        Self {
            min: (v[0][0], v[0][1]),
            max: (v[1][0], v[1][1]),
        }
    }
}

impl From<BBox> for [[usize; 2]; 2] {
    fn from(b: BBox) -> Self {
        [[b.min.0, b.min.1], [b.max.0, b.max.1]]
    }
}

pub fn bounding_box(points: &[(usize, usize)]) -> Result<BBox, AnnotateError> {
    let first = *points.first().ok_or(AnnotateError::EmptySet)?;
    Ok(points.iter().fold(BBox { min: first, max: first }, |b, &(x, y)| BBox {
        min: (b.min.0.min(x), b.min.1.min(y)),
        max: (b.max.0.max(x), b.max.1.max(y)),
    }))
}

/// Union of discrete disks of radius `radius` around each point, clipped to `dims`.
pub fn dense_mask(points: &[(usize, usize)], radius: f64, dims: (usize, usize)) -> Result<BinaryMask, AnnotateError> {
    if points.is_empty() {
        return Err(AnnotateError::EmptySet);
    }
    let reach = radius.max(0.0).floor() as i64;
    let r2 = radius * radius;
    let mut mask = BinaryMask::new(dims.0, dims.1);
    for &(x, y) in points {
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let (cx, cy) = (x as i64 + dx, y as i64 + dy);
                if cx >= 0 && cy >= 0 && (cx as usize) < dims.0 && (cy as usize) < dims.1 {
                    mask.set(cx as usize, cy as usize, true);
                }
            }
        }
    }
    Ok(mask)
}

mod mask_rle {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::mask::{BinaryMask, Rle};

    pub fn serialize<S: Serializer>(mask: &BinaryMask, s: S) -> Result<S::Ok, S::Error> {
        mask.to_rle().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BinaryMask, D::Error> {
        Rle::deserialize(d)?.decode().map_err(serde::de::Error::custom)
    }
}

/// One view's annotation of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewAnnotation {
    pub sparse: Vec<(usize, usize)>,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(rename = "mask_rle", with = "mask_rle")]
    pub mask: BinaryMask,
}

impl ViewAnnotation {
    fn build(projection: Projection, radius: f64, dims: (usize, usize)) -> Result<Self, AnnotateError> {
        let bbox = bounding_box(&projection.bins)?;
        let mask = dense_mask(&projection.bins, radius, dims)?;
        Ok(Self {
            sparse: projection.bins,
            bbox,
            mask,
        })
    }

    /// Sparse points lie inside both the box and the mask.
    pub fn is_consistent(&self) -> bool {
        !self.sparse.is_empty()
            && self.sparse.iter().all(|&p| self.bbox.contains(p) && self.mask.get(p.0, p.1))
            && !self.mask.is_empty()
    }
}

/// Per-frame, per-instance annotation in both radar views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    #[serde(rename = "id")]
    pub instance_id: u32,
    pub category: Category,
    pub rd: ViewAnnotation,
    pub ra: ViewAnnotation,
}

impl Annotation {
    pub fn is_consistent(&self) -> bool {
        self.rd.is_consistent() && self.ra.is_consistent()
    }

    pub fn view(&self, view: View) -> &ViewAnnotation {
        match view {
            View::RangeDoppler => &self.rd,
            View::RangeAngle => &self.ra,
        }
    }
}

/// Projects a cluster's physical points into both views and builds every annotation type.
pub fn annotate_points(
    frame_index: usize,
    instance_id: u32,
    category: Category,
    points: &[DoaPoint],
    config: &RadarConfig,
    params: &AnnotatorParams,
) -> Result<Annotation, AnnotateError> {
    let rd = ViewAnnotation::build(
        project_rd(points, config)?,
        params.dilation_radius_rd,
        View::RangeDoppler.dims(config),
    )?;
    let ra = ViewAnnotation::build(
        project_ra(points, config)?,
        params.dilation_radius_ra,
        View::RangeAngle.dims(config),
    )?;
    let ann = Annotation {
        frame_index,
        instance_id,
        category,
        rd,
        ra,
    };
    debug_assert!(ann.is_consistent());
    Ok(ann)
}

/// Dense label map of one view: each annotation's mask painted with its class.
/// Later annotations overwrite earlier ones where masks overlap.
pub fn rasterize_labels(annotations: &[&Annotation], view: View, config: &RadarConfig) -> LabelMap {
    let (rows, cols) = view.dims(config);
    let mut map = LabelMap::background(rows, cols);
    for a in annotations {
        for (r, c) in a.view(view).mask.cells() {
            if r < rows && c < cols {
                map.set(r, c, a.category.label()).expect("category labels are valid");
            }
        }
    }
    map
}
