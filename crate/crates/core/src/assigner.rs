//! Positive-sample assignment over FPN location grids.
//!
//! RFAssigner runs in four steps:
//!
//! 1. **Point prior** ([`point_prior_mask`]): a location is positive for a
//!    GT when its center lies inside the box (closed on every edge).
//! 2. **RFD matrix** ([`rfd_matrix`]): every (location, GT) pair is scored by
//!    comparing the GT Gaussian with the location's receptive-field Gaussian
//!    at each GRF scale, keeping the best scale.
//! 3. **Supplement** ([`supplement_mask`]): per GT, unassigned locations whose
//!    score falls in the ambiguous band are ranked. The top `k` are kept, and
//!    those strictly above `μ + σ` of the kept scores become supplementary
//!    positives.
//! 4. **Combine** ([`combine_masks`]): `M_result = M_p + M_f·(1 − M_p)`.
//!
//! Two baselines share the same matrix type: a pure point prior
//! ([`assign_fcos_baseline`]) and a hard top-k assignment with a background
//! threshold ([`assign_rfla_baseline`]).
//!
//! Every step is a pure function. Ranking ties break toward the lower
//! global location index, so results are bitwise reproducible.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::distance::{similarity, MetricKind};
use crate::error::{Error, Result};
use crate::geometry::{gt_to_gaussian, rf_to_gaussian, BBox, FpnLevelSpec, Gaussian2D};

/// Binary mask over (location, GT) pairs with entries in `{0, 1}`.
pub type Mask = Array2<u8>;

/// One FPN level laid over an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLevel {
    spec: FpnLevelSpec,
    cols: usize,
    rows: usize,
    offset: usize,
}

impl GridLevel {
    pub fn spec(&self) -> &FpnLevelSpec {
        &self.spec
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Global index of this level's first location.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    /// Global flat index in (level, row, column) order.
    pub index: usize,
    pub level: usize,
    pub cx: f64,
    pub cy: f64,
}

/// Feature-point centers of every FPN level for one image size.
///
/// Level `k` with stride `s` has `ceil(W/s) × ceil(H/s)` centers at
/// `((i + 0.5)·s, (j + 0.5)·s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationGrid {
    width: u32,
    height: u32,
    levels: Vec<GridLevel>,
    len: usize,
}

impl LocationGrid {
    pub fn new(width: u32, height: u32, specs: &[FpnLevelSpec]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        let mut levels = Vec::with_capacity(specs.len());
        let mut offset = 0;
        for spec in specs {
            let stride = spec.stride();
            let cols = width.div_ceil(stride) as usize;
            let rows = height.div_ceil(stride) as usize;
            levels.push(GridLevel {
                spec: spec.clone(),
                cols,
                rows,
                offset,
            });
            offset += cols * rows;
        }
        Ok(Self {
            width,
            height,
            levels,
            len: offset,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn levels(&self) -> &[GridLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn location(&self, index: usize) -> Option<Location> {
        if index >= self.len {
            return None;
        }
        let level = self
            .levels
            .iter()
            .rposition(|l| l.offset <= index)
            .expect("offsets start at zero");
        let lv = &self.levels[level];
        let local = index - lv.offset;
        let row = local / lv.cols;
        let col = local % lv.cols;
        let stride = f64::from(lv.spec.stride());
        Some(Location {
            index,
            level,
            cx: (col as f64 + 0.5) * stride,
            cy: (row as f64 + 0.5) * stride,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Location> + '_ {
        self.levels.iter().enumerate().flat_map(|(level, lv)| {
            let stride = f64::from(lv.spec.stride());
            (0..lv.rows).flat_map(move |row| {
                (0..lv.cols).map(move |col| Location {
                    index: lv.offset + row * lv.cols + col,
                    level,
                    cx: (col as f64 + 0.5) * stride,
                    cy: (row as f64 + 0.5) * stride,
                })
            })
        })
    }

    pub fn trf_diameter(&self, level: usize) -> f64 {
        self.levels[level].spec.trf_diameter()
    }
}

fn default_grf_scales() -> Vec<f64> {
    vec![1.0, 0.75, 0.50, 0.25]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignerConfig {
    /// Fractions of the level TRF used as receptive-field diameters.
    pub grf_scales: Vec<f64>,
    pub top_k: usize,
    pub band_lower: f64,
    pub band_upper: f64,
    pub metric: MetricKind,
    /// Normalizing constant for WD/NWD similarities.
    pub nwd_c: f64,
    pub rfla_background_threshold: f64,
}

impl Default for AssignerConfig {
    fn default() -> Self {
        Self {
            grf_scales: default_grf_scales(),
            top_k: 9,
            band_lower: 0.60,
            band_upper: 0.95,
            metric: MetricKind::Gcd,
            nwd_c: 1.0,
            rfla_background_threshold: 0.8,
        }
    }
}

impl AssignerConfig {
    /// Checks every field. Errors name the offending field.
    ///
    /// `band_lower == band_upper` is accepted and disables ambiguous matching.
    pub fn validate(&self) -> Result<()> {
        if self.grf_scales.is_empty() {
            return Err(Error::config("grf_scales", "must not be empty"));
        }
        if let Some(s) = self.grf_scales.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::config("grf_scales", format!("{s} is outside (0, 1]")));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k", "must be at least 1"));
        }
        let (lo, hi) = (self.band_lower, self.band_upper);
        if !(0.0..=1.0).contains(&lo) {
            return Err(Error::config("band_lower", format!("{lo} is outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&hi) {
            return Err(Error::config("band_upper", format!("{hi} is outside [0, 1]")));
        }
        if lo > hi {
            return Err(Error::config(
                "band_lower",
                format!("{lo} exceeds band_upper {hi}"),
            ));
        }
        if !(self.nwd_c > 0.0 && self.nwd_c.is_finite()) {
            return Err(Error::config("nwd_c", format!("{} must be positive", self.nwd_c)));
        }
        let t = self.rfla_background_threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::config(
                "rfla_background_threshold",
                format!("{t} is outside [0, 1]"),
            ));
        }
        Ok(())
    }

    /// Ambiguous matching is off when the band collapses to a point.
    pub fn band_enabled(&self) -> bool {
        self.band_lower < self.band_upper
    }
}

/// Full assignment for one image: scores plus the three masks, all shaped
/// `n_locations × n_gts`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    rfd: Array2<f64>,
    m_p: Mask,
    m_f: Mask,
    m_result: Mask,
}

impl AssignmentMatrix {
    fn from_parts(rfd: Array2<f64>, m_p: Mask, m_f: Mask) -> Self {
        let m_result = combine_masks(&m_p, &m_f).expect("masks share the rfd shape");
        Self {
            rfd,
            m_p,
            m_f,
            m_result,
        }
    }

    pub fn n_locations(&self) -> usize {
        self.rfd.nrows()
    }

    pub fn n_gts(&self) -> usize {
        self.rfd.ncols()
    }

    pub fn rfd(&self) -> &Array2<f64> {
        &self.rfd
    }

    pub fn m_p(&self) -> &Mask {
        &self.m_p
    }

    pub fn m_f(&self) -> &Mask {
        &self.m_f
    }

    pub fn m_result(&self) -> &Mask {
        &self.m_result
    }

    /// Number of positive locations per GT under `m_result`.
    pub fn positives_per_gt(&self) -> Vec<usize> {
        column_counts(&self.m_result)
    }

    /// Number of `m_f` supplements per GT.
    pub fn supplements_per_gt(&self) -> Vec<usize> {
        column_counts(&self.m_f)
    }

    /// Locations positive for no GT; the negative set of the loss.
    pub fn negative_locations(&self) -> Vec<usize> {
        self.m_result
            .rows()
            .into_iter()
            .enumerate()
            .filter(|(_, row)| row.iter().all(|&v| v == 0))
            .map(|(l, _)| l)
            .collect()
    }

    /// Positive (location, GT) pairs in row-major order.
    pub fn positive_pairs(&self) -> Vec<(usize, usize)> {
        self.m_result
            .indexed_iter()
            .filter(|(_, &v)| v == 1)
            .map(|(idx, _)| idx)
            .collect()
    }
}

fn column_counts(mask: &Mask) -> Vec<usize> {
    mask.columns()
        .into_iter()
        .map(|col| col.iter().filter(|&&v| v == 1).count())
        .collect()
}

/// `m_p[l, g] = 1` iff location `l`'s center lies inside box `g` (closed).
pub fn point_prior_mask(grid: &LocationGrid, gts: &[BBox]) -> Mask {
    let mut mask = Mask::zeros((grid.len(), gts.len()));
    for loc in grid.iter() {
        for (g, bbox) in gts.iter().enumerate() {
            if bbox.contains(loc.cx, loc.cy) {
                mask[(loc.index, g)] = 1;
            }
        }
    }
    mask
}

/// Best similarity over GRF scales for every (location, GT) pair.
pub fn rfd_matrix(grid: &LocationGrid, gts: &[BBox], cfg: &AssignerConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let gt_gaussians: Vec<Gaussian2D> = gts.iter().map(gt_to_gaussian).collect();
    let mut out = Array2::zeros((grid.len(), gts.len()));
    if gts.is_empty() {
        return Ok(out);
    }
    let mut rfs = Vec::with_capacity(cfg.grf_scales.len());
    for loc in grid.iter() {
        let trf = grid.trf_diameter(loc.level);
        rfs.clear();
        for &s in &cfg.grf_scales {
            rfs.push(rf_to_gaussian(loc.cx, loc.cy, trf, s)?);
        }
        for (g, gt) in gt_gaussians.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for rf in &rfs {
                best = best.max(similarity(cfg.metric, gt, rf, cfg.nwd_c)?);
            }
            out[(loc.index, g)] = best;
        }
    }
    Ok(out)
}

/// Orders `(index, score)` pairs by score descending, then index ascending.
fn rank(candidates: &mut [(usize, f64)]) {
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Statistical supplementation over the ambiguous band, per GT column.
///
/// Candidates are unassigned locations with `band_lower ≤ rfd ≤ band_upper`.
/// The `top_k` best are taken. Mean and population standard deviation are
/// accumulated over them in rank order, and those scoring strictly above
/// `μ + σ` are selected. A lone candidate is always selected.
pub fn supplement_mask(rfd: &Array2<f64>, m_p: &Mask, cfg: &AssignerConfig) -> Result<Mask> {
    if rfd.dim() != m_p.dim() {
        return Err(Error::invalid(format!(
            "rfd shape {:?} does not match point-prior shape {:?}",
            rfd.dim(),
            m_p.dim()
        )));
    }
    cfg.validate()?;
    let mut m_f = Mask::zeros(rfd.dim());
    if !cfg.band_enabled() {
        return Ok(m_f);
    }
    let mut candidates = Vec::new();
    for g in 0..rfd.ncols() {
        candidates.clear();
        for (l, (&score, &prior)) in rfd.column(g).iter().zip(m_p.column(g)).enumerate() {
            if prior == 0 && cfg.band_lower <= score && score <= cfg.band_upper {
                candidates.push((l, score));
            }
        }
        match candidates.len() {
            0 => continue,
            1 => {
                m_f[(candidates[0].0, g)] = 1;
                continue;
            }
            _ => {}
        }
        rank(&mut candidates);
        let taken = &candidates[..candidates.len().min(cfg.top_k)];
        let n = taken.len() as f64;
        let mean = taken.iter().map(|c| c.1).sum::<f64>() / n;
        let var = taken.iter().map(|c| (c.1 - mean) * (c.1 - mean)).sum::<f64>() / n;
        let gate = mean + var.sqrt();
        for &(l, score) in taken {
            if score > gate {
                m_f[(l, g)] = 1;
            }
        }
    }
    Ok(m_f)
}

/// `m_p + m_f·(1 − m_p)` elementwise; logical OR on binary masks.
pub fn combine_masks(m_p: &Mask, m_f: &Mask) -> Result<Mask> {
    if m_p.dim() != m_f.dim() {
        return Err(Error::invalid(format!(
            "mask shapes differ: {:?} vs {:?}",
            m_p.dim(),
            m_f.dim()
        )));
    }
    if m_p.iter().chain(m_f.iter()).any(|&v| v > 1) {
        return Err(Error::invalid("masks must be binary"));
    }
    Ok(Zip::from(m_p)
        .and(m_f)
        .map_collect(|&p, &f| p + f * (1 - p)))
}

/// RFAssigner: point prior, RFD scoring, supplementation, union.
pub fn assign(grid: &LocationGrid, gts: &[BBox], cfg: &AssignerConfig) -> Result<AssignmentMatrix> {
    let m_p = point_prior_mask(grid, gts);
    let rfd = rfd_matrix(grid, gts, cfg)?;
    let m_f = supplement_mask(&rfd, &m_p, cfg)?;
    Ok(AssignmentMatrix::from_parts(rfd, m_p, m_f))
}

/// Pure point prior. `cfg` only feeds the diagnostic RFD matrix.
pub fn assign_fcos_baseline(
    grid: &LocationGrid,
    gts: &[BBox],
    cfg: &AssignerConfig,
) -> Result<AssignmentMatrix> {
    let m_p = point_prior_mask(grid, gts);
    let rfd = rfd_matrix(grid, gts, cfg)?;
    let m_f = Mask::zeros(m_p.dim());
    Ok(AssignmentMatrix::from_parts(rfd, m_p, m_f))
}

/// Hard assignment: per GT the `top_k` locations by RFD are positive, then
/// any location whose best RFD over all GTs is below
/// `rfla_background_threshold` is forced to background. The result lives in
/// `m_f`; `m_p` is empty.
pub fn assign_rfla_baseline(
    grid: &LocationGrid,
    gts: &[BBox],
    cfg: &AssignerConfig,
) -> Result<AssignmentMatrix> {
    let rfd = rfd_matrix(grid, gts, cfg)?;
    let mut m_f = Mask::zeros(rfd.dim());
    let mut ranked = Vec::with_capacity(rfd.nrows());
    for g in 0..rfd.ncols() {
        ranked.clear();
        ranked.extend(rfd.column(g).iter().copied().enumerate());
        rank(&mut ranked);
        for &(l, _) in ranked.iter().take(cfg.top_k) {
            m_f[(l, g)] = 1;
        }
    }
    for (l, row) in rfd.rows().into_iter().enumerate() {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best < cfg.rfla_background_threshold {
            m_f.row_mut(l).fill(0);
        }
    }
    let m_p = Mask::zeros(rfd.dim());
    Ok(AssignmentMatrix::from_parts(rfd, m_p, m_f))
}

/// Assigner variants exposed through the CLI and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignerKind {
    Rfassigner,
    Fcos,
    Rfla,
}

impl AssignerKind {
    pub const ALL: [AssignerKind; 3] = [AssignerKind::Rfassigner, AssignerKind::Fcos, AssignerKind::Rfla];

    pub fn name(self) -> &'static str {
        match self {
            AssignerKind::Rfassigner => "rfassigner",
            AssignerKind::Fcos => "fcos",
            AssignerKind::Rfla => "rfla",
        }
    }

    pub fn run(
        self,
        grid: &LocationGrid,
        gts: &[BBox],
        cfg: &AssignerConfig,
    ) -> Result<AssignmentMatrix> {
        match self {
            AssignerKind::Rfassigner => assign(grid, gts, cfg),
            AssignerKind::Fcos => assign_fcos_baseline(grid, gts, cfg),
            AssignerKind::Rfla => assign_rfla_baseline(grid, gts, cfg),
        }
    }
}

impl std::fmt::Display for AssignerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
