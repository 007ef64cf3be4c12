//! Seeded synthetic datasets for reproducible assignment statistics.
//!
//! Every image gets GTs drawn from each scale bucket, plus one very tiny box
//! placed strictly between the location centers of all stride-8/16/32 grids,
//! so a pure point prior gives it nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{default_fpn_levels, BBox, FpnLevelSpec};
use crate::ingest::{Category, DatasetSlice, GTObject, ImageInfo, ScaleBucket};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_images: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_images: 100,
            width: 256,
            height: 256,
            seed: 0,
        }
    }
}

/// P3-P5 (strides 8, 16, 32) with the default ResNet-50 TRFs.
pub fn fixture_fpn() -> Vec<FpnLevelSpec> {
    default_fpn_levels()
        .into_iter()
        .filter(|l| matches!(l.stride(), 8 | 16 | 32))
        .collect()
}

/// Snaps to a 1/16 px lattice so COCO round trips are exact.
fn quantize(v: f64) -> f64 {
    (v * 16.0).round() / 16.0
}

fn sample_box(rng: &mut ChaCha8Rng, bucket: ScaleBucket, width: f64, height: f64) -> BBox {
    let (lo, hi) = bucket.range();
    let hi = hi.min(128.0);
    let lo = lo.max(2.0);
    loop {
        let size = rng.gen_range(lo..hi);
        let aspect: f64 = rng.gen_range(0.5f64..2.0).sqrt();
        let w = quantize(size * aspect);
        let h = quantize(size / aspect);
        if w <= 0.0 || h <= 0.0 || w > width || h > height {
            continue;
        }
        let x = quantize(rng.gen_range(0.0..=width - w));
        let y = quantize(rng.gen_range(0.0..=height - h));
        let bbox = BBox::new(x, y, x + w, y + h).expect("positive extent");
        if crate::ingest::bucket_of(&bbox) == bucket && x + w <= width && y + h <= height {
            return bbox;
        }
    }
}

/// A box inside `(8i + 4, 8i + 8)` on both axes: stride-8 centers sit at
/// `8i + 4`, stride-16 and stride-32 centers at multiples of 8.
fn starved_box(rng: &mut ChaCha8Rng, width: f64, height: f64) -> BBox {
    let cells_x = (width / 8.0) as u32;
    let cells_y = (height / 8.0) as u32;
    let i = f64::from(rng.gen_range(0..cells_x));
    let j = f64::from(rng.gen_range(0..cells_y));
    let w = quantize(rng.gen_range(1.0..2.5));
    let h = quantize(rng.gen_range(1.0..2.5));
    let x = 8.0 * i + 5.0;
    let y = 8.0 * j + 5.0;
    BBox::new(x, y, x + w, y + h).expect("positive extent")
}

pub fn generate(spec: &SyntheticSpec) -> Result<DatasetSlice> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let mut images = Vec::with_capacity(spec.n_images);
    let mut gts = Vec::new();
    for n in 0..spec.n_images {
        let id = n as i64 + 1;
        images.push(ImageInfo {
            id,
            width: spec.width,
            height: spec.height,
        });
        let mut buckets = vec![
            ScaleBucket::VeryTiny,
            ScaleBucket::VeryTiny,
            ScaleBucket::Tiny,
            ScaleBucket::Tiny,
            ScaleBucket::Small,
            ScaleBucket::Medium,
        ];
        if n % 4 == 0 {
            buckets.push(ScaleBucket::Large);
        }
        for bucket in buckets {
            let category = 1 + rng.gen_range(0..3);
            gts.push(GTObject::new(sample_box(&mut rng, bucket, w, h), category, id));
        }
        gts.push(GTObject::new(starved_box(&mut rng, w, h), 1, id));
    }
    let categories = ["vehicle", "person", "ship"]
        .iter()
        .enumerate()
        .map(|(i, name)| Category {
            id: i as i64 + 1,
            name: name.to_string(),
        })
        .collect();
    DatasetSlice::new(images, gts, categories)
}
