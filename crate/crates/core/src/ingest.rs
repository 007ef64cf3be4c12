//! COCO annotations in, per-scale assignment statistics out.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assigner::{AssignerKind, AssignmentMatrix, LocationGrid};
use crate::error::{Error, Result};
use crate::geometry::{BBox, FpnLevelSpec};

/// AI-TOD scale buckets over `sqrt(w·h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScaleBucket {
    /// `(0, 8)`
    #[serde(rename = "vt")]
    VeryTiny,
    /// `[8, 16)`
    #[serde(rename = "t")]
    Tiny,
    /// `[16, 32)`
    #[serde(rename = "s")]
    Small,
    /// `[32, 64)`
    #[serde(rename = "m")]
    Medium,
    /// `[64, ∞)`
    #[serde(rename = "l")]
    Large,
}

impl ScaleBucket {
    pub const ALL: [ScaleBucket; 5] = [
        ScaleBucket::VeryTiny,
        ScaleBucket::Tiny,
        ScaleBucket::Small,
        ScaleBucket::Medium,
        ScaleBucket::Large,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScaleBucket::VeryTiny => "vt",
            ScaleBucket::Tiny => "t",
            ScaleBucket::Small => "s",
            ScaleBucket::Medium => "m",
            ScaleBucket::Large => "l",
        }
    }

    /// Half-open `[lower, upper)` size range.
    pub fn range(self) -> (f64, f64) {
        match self {
            ScaleBucket::VeryTiny => (0.0, 8.0),
            ScaleBucket::Tiny => (8.0, 16.0),
            ScaleBucket::Small => (16.0, 32.0),
            ScaleBucket::Medium => (32.0, 64.0),
            ScaleBucket::Large => (64.0, f64::INFINITY),
        }
    }
}

impl fmt::Display for ScaleBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Object size as the geometric mean of width and height.
pub fn object_size(bbox: &BBox) -> f64 {
    (bbox.width() * bbox.height()).sqrt()
}

pub fn bucket_of(bbox: &BBox) -> ScaleBucket {
    bucket_of_size(object_size(bbox))
}

pub fn bucket_of_size(size: f64) -> ScaleBucket {
    if size < 8.0 {
        ScaleBucket::VeryTiny
    } else if size < 16.0 {
        ScaleBucket::Tiny
    } else if size < 32.0 {
        ScaleBucket::Small
    } else if size < 64.0 {
        ScaleBucket::Medium
    } else {
        ScaleBucket::Large
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GTObject {
    pub bbox: BBox,
    pub category_id: i64,
    pub image_id: i64,
    pub scale_bucket: ScaleBucket,
}

impl GTObject {
    pub fn new(bbox: BBox, category_id: i64, image_id: i64) -> Self {
        Self {
            bbox,
            category_id,
            image_id,
            scale_bucket: bucket_of(&bbox),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: i64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: i64,
    pub name: String,
}

/// Images sorted by id, GTs grouped by image in annotation order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSlice {
    images: Vec<ImageInfo>,
    gts: BTreeMap<i64, Vec<GTObject>>,
    categories: Vec<Category>,
    /// Annotations discarded for zero area (before or after clipping).
    pub dropped: usize,
    /// Annotations that had to be clipped to their image.
    pub clipped: usize,
}

impl DatasetSlice {
    /// Builds a slice, clipping boxes to their image. GTs referencing an
    /// unknown image are rejected.
    pub fn new(images: Vec<ImageInfo>, gts: Vec<GTObject>, categories: Vec<Category>) -> Result<Self> {
        let mut slice = DatasetSlice {
            categories,
            ..Default::default()
        };
        let mut seen = HashSet::new();
        for img in &images {
            if !seen.insert(img.id) {
                return Err(Error::invalid(format!("duplicate image id {}", img.id)));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::invalid(format!("image {} has zero size", img.id)));
            }
        }
        slice.images = images;
        slice.images.sort_by_key(|i| i.id);
        for img in &slice.images {
            slice.gts.insert(img.id, Vec::new());
        }
        for gt in gts {
            slice.push_gt(gt)?;
        }
        Ok(slice)
    }

    fn push_gt(&mut self, gt: GTObject) -> Result<()> {
        let img = self
            .image(gt.image_id)
            .copied()
            .ok_or_else(|| Error::invalid(format!("GT references unknown image {}", gt.image_id)))?;
        let Some(clipped) = gt.bbox.clip(f64::from(img.width), f64::from(img.height)) else {
            log::warn!("image {}: box outside the image dropped", img.id);
            self.dropped += 1;
            return Ok(());
        };
        if clipped != gt.bbox {
            log::warn!(
                "image {}: box ({}, {}, {}, {}) clipped to image bounds",
                img.id,
                gt.bbox.x_min(),
                gt.bbox.y_min(),
                gt.bbox.x_max(),
                gt.bbox.y_max()
            );
            self.clipped += 1;
        }
        self.gts
            .get_mut(&img.id)
            .expect("every image has a GT list")
            .push(GTObject::new(clipped, gt.category_id, gt.image_id));
        Ok(())
    }

    pub fn images(&self) -> &[ImageInfo] {
        &self.images
    }

    pub fn image(&self, id: i64) -> Option<&ImageInfo> {
        self.images
            .binary_search_by_key(&id, |i| i.id)
            .ok()
            .map(|i| &self.images[i])
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn gts_for(&self, image_id: i64) -> &[GTObject] {
        self.gts.get(&image_id).map_or(&[], Vec::as_slice)
    }

    /// All GTs in image-id order.
    pub fn gts(&self) -> impl Iterator<Item = &GTObject> {
        self.gts.values().flatten()
    }

    pub fn gt_count(&self) -> usize {
        self.gts.values().map(Vec::len).sum()
    }
}

#[derive(Deserialize)]
struct RawCoco {
    images: Vec<Value>,
    annotations: Vec<Value>,
    categories: Vec<Value>,
}

#[derive(Deserialize)]
struct RawImage {
    id: i64,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct RawAnnotation {
    image_id: i64,
    category_id: i64,
    bbox: [f64; 4],
}

fn parse_record<T: serde::de::DeserializeOwned>(path: &Path, record: String, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        record,
        reason: e.to_string(),
    })
}

/// Parses a COCO annotation file. Boxes convert from `[x, y, w, h]` to
/// corner form. Zero-area annotations are dropped and counted. Boxes that
/// cross the image border are clipped with a warning.
pub fn load_coco(path: impl AsRef<Path>) -> Result<DatasetSlice> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coco(path, &text)
}

/// Parses COCO JSON text. `path` only labels errors.
pub fn parse_coco(path: &Path, text: &str) -> Result<DatasetSlice> {
    let load_err = |record: &str, reason: String| Error::Load {
        path: path.to_path_buf(),
        record: record.to_string(),
        reason,
    };
    let raw: RawCoco = serde_json::from_str(text).map_err(|e| load_err("<root>", e.to_string()))?;

    let mut images = Vec::with_capacity(raw.images.len());
    for (i, v) in raw.images.into_iter().enumerate() {
        let img: RawImage = parse_record(path, format!("images[{i}]"), v)?;
        if img.width == 0 || img.height == 0 {
            return Err(load_err(&format!("images[{i}]"), "width and height must be positive".into()));
        }
        images.push(ImageInfo {
            id: img.id,
            width: img.width,
            height: img.height,
        });
    }
    let mut categories = Vec::with_capacity(raw.categories.len());
    for (i, v) in raw.categories.into_iter().enumerate() {
        categories.push(parse_record::<Category>(path, format!("categories[{i}]"), v)?);
    }
    let ids: HashSet<i64> = images.iter().map(|i| i.id).collect();
    if ids.len() != images.len() {
        return Err(load_err("images", "duplicate image id".into()));
    }

    let mut gts = Vec::with_capacity(raw.annotations.len());
    let mut dropped = 0;
    for (i, v) in raw.annotations.into_iter().enumerate() {
        let record = format!("annotations[{i}]");
        let ann: RawAnnotation = parse_record(path, record.clone(), v)?;
        if !ids.contains(&ann.image_id) {
            return Err(load_err(&record, format!("unknown image_id {}", ann.image_id)));
        }
        let [x, y, w, h] = ann.bbox;
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(load_err(&record, "bbox has non-finite values".into()));
        }
        match BBox::from_xywh(x, y, w, h) {
            Ok(bbox) => gts.push(GTObject::new(bbox, ann.category_id, ann.image_id)),
            Err(_) => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} zero-area annotations", path.display());
    }
    let mut slice = DatasetSlice::new(images, gts, categories)?;
    slice.dropped += dropped;
    Ok(slice)
}

/// Serializes a slice back to COCO form, one annotation per GT.
pub fn to_coco_json(slice: &DatasetSlice) -> Value {
    let annotations: Vec<Value> = slice
        .gts()
        .enumerate()
        .map(|(i, gt)| {
            let b = gt.bbox;
            serde_json::json!({
                "id": i + 1,
                "image_id": gt.image_id,
                "category_id": gt.category_id,
                "bbox": [b.x_min(), b.y_min(), b.width(), b.height()],
                "area": b.area(),
                "iscrowd": 0,
            })
        })
        .collect();
    serde_json::json!({
        "images": slice.images(),
        "annotations": annotations,
        "categories": slice.categories(),
    })
}

pub fn write_coco(slice: &DatasetSlice, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_coco_json(slice))
        .map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn build_grid(width: u32, height: u32, fpn_specs: &[FpnLevelSpec]) -> Result<LocationGrid> {
    LocationGrid::new(width, height, fpn_specs)
}

/// One CSV row: statistics for one assigner on one scale bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub assigner: AssignerKind,
    pub bucket: ScaleBucket,
    pub gt_count: usize,
    pub mean_pos: f64,
    pub median_pos: f64,
    pub zero_pos_gts: usize,
    pub suppl_rate: f64,
    #[serde(skip)]
    pub total_pos: usize,
    #[serde(skip)]
    pub total_suppl: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AssignReport {
    pub rows: Vec<ReportRow>,
}

/// Per-image assignments of one assigner, in `slice.images()` order.
#[derive(Debug, Clone)]
pub struct AssignerRun {
    pub kind: AssignerKind,
    pub matrices: Vec<AssignmentMatrix>,
}

fn median(sorted: &[usize]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

/// Per-GT positive and supplement counts, tagged with the GT's bucket.
pub fn per_gt_counts(slice: &DatasetSlice, matrices: &[AssignmentMatrix]) -> Result<Vec<(ScaleBucket, usize, usize)>> {
    if matrices.len() != slice.images().len() {
        return Err(Error::invalid(format!(
            "{} assignments for {} images",
            matrices.len(),
            slice.images().len()
        )));
    }
    let mut out = Vec::with_capacity(slice.gt_count());
    for (img, m) in slice.images().iter().zip(matrices) {
        let gts = slice.gts_for(img.id);
        if m.n_gts() != gts.len() {
            return Err(Error::invalid(format!(
                "image {}: assignment has {} GT columns, slice has {} GTs",
                img.id,
                m.n_gts(),
                gts.len()
            )));
        }
        let pos = m.positives_per_gt();
        let sup = m.supplements_per_gt();
        for (g, gt) in gts.iter().enumerate() {
            out.push((gt.scale_bucket, pos[g], sup[g]));
        }
    }
    Ok(out)
}

/// Aggregates runs into bucket rows, ordered by run then bucket.
pub fn report(slice: &DatasetSlice, runs: &[AssignerRun]) -> Result<AssignReport> {
    let mut rows = Vec::with_capacity(runs.len() * ScaleBucket::ALL.len());
    for run in runs {
        let counts = per_gt_counts(slice, &run.matrices)?;
        for bucket in ScaleBucket::ALL {
            let mut pos: Vec<usize> = counts
                .iter()
                .filter(|c| c.0 == bucket)
                .map(|c| c.1)
                .collect();
            let total_suppl: usize = counts.iter().filter(|c| c.0 == bucket).map(|c| c.2).sum();
            pos.sort_unstable();
            let total_pos: usize = pos.iter().sum();
            let gt_count = pos.len();
            rows.push(ReportRow {
                assigner: run.kind,
                bucket,
                gt_count,
                mean_pos: if gt_count == 0 { 0.0 } else { total_pos as f64 / gt_count as f64 },
                median_pos: median(&pos),
                zero_pos_gts: pos.iter().filter(|&&p| p == 0).count(),
                suppl_rate: if total_pos == 0 { 0.0 } else { total_suppl as f64 / total_pos as f64 },
                total_pos,
                total_suppl,
            });
        }
    }
    Ok(AssignReport { rows })
}

impl AssignReport {
    pub fn row(&self, assigner: AssignerKind, bucket: ScaleBucket) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.assigner == assigner && r.bucket == bucket)
    }

    pub fn to_csv(&self) -> Result<String> {
        write_csv(&self.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Internal(e.to_string()))
    }
}

pub(crate) fn write_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assigner::AssignerConfig;

    fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn parse(text: &str) -> Result<DatasetSlice> {
        parse_coco(Path::new("test.json"), text)
    }

    const MINIMAL: &str = r#"{
        "images": [{"id": 7, "width": 64, "height": 48, "file_name": "a.png"}],
        "annotations": [
            {"id": 1, "image_id": 7, "category_id": 1, "bbox": [8, 8, 8, 8]},
            {"id": 2, "image_id": 7, "category_id": 2, "bbox": [20.5, 10, 30, 12]},
            {"id": 3, "image_id": 7, "category_id": 2, "bbox": [1, 1, 0, 5]}
        ],
        "categories": [{"id": 1, "name": "car"}, {"id": 2, "name": "person"}]
    }"#;

    #[test]
    fn bucket_examples() {
        assert_eq!(bucket_of(&bbox(0.0, 0.0, 4.0, 4.0)), ScaleBucket::VeryTiny);
        assert_eq!(bucket_of(&bbox(0.0, 0.0, 8.0, 8.0)), ScaleBucket::Tiny);
        assert_eq!(bucket_of(&bbox(0.0, 0.0, 2.0, 8.0)), ScaleBucket::VeryTiny);
        assert_eq!(bucket_of_size(16.0), ScaleBucket::Small);
        assert_eq!(bucket_of_size(31.999), ScaleBucket::Small);
        assert_eq!(bucket_of_size(32.0), ScaleBucket::Medium);
        assert_eq!(bucket_of_size(64.0), ScaleBucket::Large);
        assert_eq!(bucket_of_size(1e9), ScaleBucket::Large);
    }

    #[test]
    fn load_minimal_file() {
        let slice = parse(MINIMAL).unwrap();
        assert_eq!(slice.images().len(), 1);
        assert_eq!(slice.gt_count(), 2);
        assert_eq!(slice.dropped, 1);
        let gts = slice.gts_for(7);
        assert_eq!(gts[0].bbox, bbox(8.0, 8.0, 16.0, 16.0));
        assert_eq!(gts[0].scale_bucket, ScaleBucket::Tiny);
        assert_eq!(gts[1].bbox, bbox(20.5, 10.0, 50.5, 22.0));
        assert_eq!(gts[1].category_id, 2);
    }

    #[test]
    fn load_errors_name_the_record() {
        let err = parse(r#"{"images": [], "annotations": []}"#).unwrap_err();
        assert!(err.to_string().contains("categories"), "{err}");

        let bad = MINIMAL.replace(r#""bbox": [20.5, 10, 30, 12]"#, r#""box": [1, 2, 3, 4]"#);
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("annotations[1]") && err.contains("bbox"), "{err}");

        let bad = MINIMAL.replace(r#""image_id": 7, "category_id": 1"#, r#""image_id": 9, "category_id": 1"#);
        let err = parse(&bad).unwrap_err().to_string();
        assert!(err.contains("annotations[0]") && err.contains("image_id"), "{err}");

        assert!(parse("not json").is_err());
        assert!(load_coco("/definitely/not/here.json").is_err());
    }

    #[test]
    fn out_of_image_boxes_are_clipped() {
        let text = MINIMAL.replace("[20.5, 10, 30, 12]", "[50, 40, 30, 30]");
        let slice = parse(&text).unwrap();
        assert_eq!(slice.clipped, 1);
        assert_eq!(slice.gts_for(7)[1].bbox, bbox(50.0, 40.0, 64.0, 48.0));
    }

    #[test]
    fn grid_counts() {
        let p3 = FpnLevelSpec::new("P3", 8, 107.0).unwrap();
        let p4 = FpnLevelSpec::new("P4", 16, 299.0).unwrap();
        assert_eq!(build_grid(32, 32, std::slice::from_ref(&p3)).unwrap().len(), 16);
        assert_eq!(build_grid(33, 33, std::slice::from_ref(&p3)).unwrap().len(), 25);
        let g = build_grid(32, 32, &[p3, p4]).unwrap();
        assert_eq!(g.levels()[0].len() + g.levels()[1].len(), 20);
    }

    #[test]
    fn report_single_gt() {
        let slice = DatasetSlice::new(
            vec![ImageInfo { id: 1, width: 32, height: 32 }],
            vec![GTObject::new(bbox(4.0, 4.0, 14.0, 14.0), 1, 1)],
            vec![],
        )
        .unwrap();
        let specs = [FpnLevelSpec::new("P", 4, 8.0).unwrap()];
        let grid = build_grid(32, 32, &specs).unwrap();
        let gts: Vec<BBox> = slice.gts_for(1).iter().map(|g| g.bbox).collect();
        let m = AssignerKind::Fcos.run(&grid, &gts, &AssignerConfig::default()).unwrap();
        // centers 6, 10, 14 per axis lie in the closed box [4, 14]
        assert_eq!(m.positives_per_gt()[0], 9);
        let rep = report(&slice, &[AssignerRun { kind: AssignerKind::Fcos, matrices: vec![m] }]).unwrap();
        assert_eq!(rep.rows.len(), 5);
        let t = rep.row(AssignerKind::Fcos, ScaleBucket::Tiny).unwrap();
        assert_eq!(t.gt_count, 1);
        assert_eq!(t.mean_pos, 9.0);
        assert_eq!(t.median_pos, 9.0);
        assert_eq!(t.suppl_rate, 0.0);
        assert!(rep.rows.iter().all(|r| r.suppl_rate == 0.0));
    }

    #[test]
    fn report_csv_header_order() {
        let rep = AssignReport {
            rows: vec![ReportRow {
                assigner: AssignerKind::Rfla,
                bucket: ScaleBucket::Medium,
                gt_count: 2,
                mean_pos: 1.5,
                median_pos: 1.5,
                zero_pos_gts: 0,
                suppl_rate: 1.0,
                total_pos: 3,
                total_suppl: 3,
            }],
        };
        let csv = rep.to_csv().unwrap();
        assert_eq!(
            csv,
            "assigner,bucket,gt_count,mean_pos,median_pos,zero_pos_gts,suppl_rate\nrfla,m,2,1.5,1.5,0,1.0\n"
        );
        let json: Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(json["rows"][0]["bucket"], "m");
        assert!(json["rows"][0].get("total_pos").is_none());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[]), 0.0);
        assert_eq!(median(&[1, 3, 8]), 3.0);
        assert_eq!(median(&[1, 2, 4, 8]), 3.0);
    }
}
