//! Dataset-level orchestration: per-image assignment fanned out over a
//! thread pool, and the band-threshold sweep.
//!
//! Results are collected in image-id order regardless of thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::assigner::{AssignerConfig, AssignerKind, AssignmentMatrix, LocationGrid};
use crate::error::{Error, Result};
use crate::geometry::{BBox, FpnLevelSpec};
use crate::ingest::{per_gt_counts, AssignerRun, DatasetSlice, ScaleBucket};

/// Band-limit cells of the threshold sweep: the lower limit varies at
/// upper 0.95, then the upper limit varies at lower 0.60. The shared
/// (0.60, 0.95) cell appears once.
pub const SWEEP_CELLS: [(f64, f64); 7] = [
    (0.55, 0.95),
    (0.60, 0.95),
    (0.65, 0.95),
    (0.70, 0.95),
    (0.60, 0.85),
    (0.60, 0.90),
    (0.60, 1.00),
];

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::invalid("--jobs must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Internal(e.to_string()))
}

fn grids_for(slice: &DatasetSlice, fpn: &[FpnLevelSpec]) -> Result<HashMap<(u32, u32), LocationGrid>> {
    let mut grids = HashMap::new();
    for img in slice.images() {
        if let std::collections::hash_map::Entry::Vacant(e) = grids.entry((img.width, img.height)) {
            e.insert(LocationGrid::new(img.width, img.height, fpn)?);
        }
    }
    Ok(grids)
}

/// Runs several assigners over every image. `jobs = None` uses all cores.
pub fn run_assigners(
    slice: &DatasetSlice,
    fpn: &[FpnLevelSpec],
    configs: &[(AssignerKind, AssignerConfig)],
    jobs: Option<usize>,
) -> Result<Vec<AssignerRun>> {
    for (_, cfg) in configs {
        cfg.validate()?;
    }
    let grids = grids_for(slice, fpn)?;
    let boxes: Vec<Vec<BBox>> = slice
        .images()
        .iter()
        .map(|img| slice.gts_for(img.id).iter().map(|g| g.bbox).collect())
        .collect();
    let pool = thread_pool(jobs)?;
    configs
        .iter()
        .map(|(kind, cfg)| {
            let matrices = pool.install(|| {
                slice
                    .images()
                    .par_iter()
                    .zip(boxes.par_iter())
                    .map(|(img, gts)| kind.run(&grids[&(img.width, img.height)], gts, cfg))
                    .collect::<Result<Vec<AssignmentMatrix>>>()
            })?;
            Ok(AssignerRun {
                kind: *kind,
                matrices,
            })
        })
        .collect()
}

pub fn run_assigner(
    slice: &DatasetSlice,
    fpn: &[FpnLevelSpec],
    kind: AssignerKind,
    cfg: &AssignerConfig,
    jobs: Option<usize>,
) -> Result<AssignerRun> {
    let mut runs = run_assigners(slice, fpn, &[(kind, cfg.clone())], jobs)?;
    Ok(runs.pop().expect("one config in, one run out"))
}

/// Assignment statistics for one (band_lower, band_upper) cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub band_lower: f64,
    pub band_upper: f64,
    pub run: AssignerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub band_lower: f64,
    pub band_upper: f64,
    pub bucket: ScaleBucket,
    pub gt_count: usize,
    pub positives: usize,
    pub supplements: usize,
    pub zero_pos_gts: usize,
    pub suppl_rate: f64,
}

/// Runs RFAssigner once per band cell, all other settings from `base`.
pub fn threshold_sweep(
    slice: &DatasetSlice,
    fpn: &[FpnLevelSpec],
    base: &AssignerConfig,
    cells: &[(f64, f64)],
    jobs: Option<usize>,
) -> Result<Vec<SweepCell>> {
    let configs: Vec<_> = cells
        .iter()
        .map(|&(lo, hi)| {
            (
                AssignerKind::Rfassigner,
                AssignerConfig {
                    band_lower: lo,
                    band_upper: hi,
                    ..base.clone()
                },
            )
        })
        .collect();
    let runs = run_assigners(slice, fpn, &configs, jobs)?;
    Ok(cells
        .iter()
        .zip(runs)
        .map(|(&(band_lower, band_upper), run)| SweepCell {
            band_lower,
            band_upper,
            run,
        })
        .collect())
}

/// One row per (cell, bucket), cells in input order.
pub fn sweep_rows(slice: &DatasetSlice, cells: &[SweepCell]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(cells.len() * ScaleBucket::ALL.len());
    for cell in cells {
        let counts = per_gt_counts(slice, &cell.run.matrices)?;
        for bucket in ScaleBucket::ALL {
            let in_bucket: Vec<_> = counts.iter().filter(|c| c.0 == bucket).collect();
            let positives: usize = in_bucket.iter().map(|c| c.1).sum();
            let supplements: usize = in_bucket.iter().map(|c| c.2).sum();
            rows.push(SweepRow {
                band_lower: cell.band_lower,
                band_upper: cell.band_upper,
                bucket,
                gt_count: in_bucket.len(),
                positives,
                supplements,
                zero_pos_gts: in_bucket.iter().filter(|c| c.1 == 0).count(),
                suppl_rate: if positives == 0 {
                    0.0
                } else {
                    supplements as f64 / positives as f64
                },
            });
        }
    }
    Ok(rows)
}
