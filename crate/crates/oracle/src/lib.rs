//! Reference implementations used only by tests.
//!
//! Nothing here depends on the `rfassign` crate. Metrics come in two routes:
//!
//! - [`naive_metric`] works on full 2x2 covariance matrices with explicit
//!   inverses, determinants and matrix square roots. It shares no code path
//!   with the diagonal shortcuts in the library and agrees to ~1e-10.
//! - [`scalar_similarity`] evaluates the diagonal formulas with the same
//!   operation order as the library so [`naive_assign`] can be compared
//!   bitwise.
//!
//! [`naive_assign`] is a nested-loop, selection-sort transcription of the
//! assignment rules.

// index loops are the point here
#![allow(clippy::needless_range_loop, clippy::manual_div_ceil)]

/// Metric selector, mirrored from the library by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Wd,
    Kld,
    Nwd,
    Gcd,
}

/// Symmetric 2x2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Sym2 {
    pub fn diag(x: f64, y: f64) -> Self {
        Self { a: x, b: 0.0, d: y }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self {
            a: self.d / det,
            b: -self.b / det,
            d: self.a / det,
        }
    }

    /// Principal square root of an SPD matrix:
    /// `(M + √det·I) / √(tr M + 2√det)`.
    pub fn sqrt(&self) -> Self {
        let s = self.det().sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Self {
            a: (self.a + s) / t,
            b: self.b / t,
            d: (self.d + s) / t,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            a: self.a - o.a,
            b: self.b - o.b,
            d: self.d - o.d,
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + 2.0 * self.b * self.b + self.d * self.d
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        let mv = [self.a * v[0] + self.b * v[1], self.b * v[0] + self.d * v[1]];
        v[0] * mv[0] + v[1] * mv[1]
    }

    /// General 2x2 product; the result need not be symmetric.
    fn mul(&self, o: &Self) -> [[f64; 2]; 2] {
        [
            [self.a * o.a + self.b * o.b, self.a * o.b + self.b * o.d],
            [self.b * o.a + self.d * o.b, self.b * o.b + self.d * o.d],
        ]
    }
}

/// Gaussian with a full covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauss {
    pub mu: [f64; 2],
    pub cov: Sym2,
}

impl Gauss {
    pub fn diag(mx: f64, my: f64, vx: f64, vy: f64) -> Self {
        Self {
            mu: [mx, my],
            cov: Sym2::diag(vx, vy),
        }
    }
}

fn delta(a: &Gauss, b: &Gauss) -> [f64; 2] {
    [a.mu[0] - b.mu[0], a.mu[1] - b.mu[1]]
}

/// Squared GCD, matrix route.
pub fn matrix_gcd_sq(a: &Gauss, b: &Gauss) -> f64 {
    let d = delta(a, b);
    let ia = a.cov.inverse();
    let ib = b.cov.inverse();
    let frob = a.cov.sqrt().sub(&b.cov.sqrt()).frobenius_sq();
    2.0 * ia.quad(d) + 2.0 * ib.quad(d) + 2.0 * ia.trace() * frob + 2.0 * ib.trace() * frob
}

/// `D_KL(a ‖ b)`, matrix route.
pub fn matrix_kld(a: &Gauss, b: &Gauss) -> f64 {
    let ib = b.cov.inverse();
    let p = ib.mul(&a.cov);
    let tr = p[0][0] + p[1][1];
    0.5 * (tr + ib.quad(delta(a, b)) - 2.0 + (b.cov.det() / a.cov.det()).ln())
}

/// Squared 2-Wasserstein, Bures form
/// `‖Δμ‖² + tr(Σa + Σb − 2(Σb^½ Σa Σb^½)^½)`.
pub fn matrix_wd_sq(a: &Gauss, b: &Gauss) -> f64 {
    let d = delta(a, b);
    let rb = b.cov.sqrt();
    let left = rb.mul(&a.cov);
    // rb·Σa·rb is symmetric
    let inner = Sym2 {
        a: left[0][0] * rb.a + left[0][1] * rb.b,
        b: left[0][0] * rb.b + left[0][1] * rb.d,
        d: left[1][0] * rb.b + left[1][1] * rb.d,
    };
    let cross = inner.sqrt().trace();
    d[0] * d[0] + d[1] * d[1] + a.cov.trace() + b.cov.trace() - 2.0 * cross
}

/// `(distance, similarity)` via the matrix route. Distances are `gcd²`,
/// `kld` and `wd²`; similarities are `exp(−√d)` (`exp(−√wd²/c)` for WD and
/// NWD), floored at the smallest positive normal.
pub fn naive_metric(metric: Metric, a: &Gauss, b: &Gauss, c: f64) -> (f64, f64) {
    let d = match metric {
        Metric::Gcd => matrix_gcd_sq(a, b),
        Metric::Kld => matrix_kld(a, b),
        Metric::Wd | Metric::Nwd => matrix_wd_sq(a, b),
    }
    .max(0.0);
    let scaled = match metric {
        Metric::Wd | Metric::Nwd => d.sqrt() / c,
        _ => d.sqrt(),
    };
    (d, (-scaled).exp().max(f64::MIN_POSITIVE))
}

/// Diagonal Gaussian as `(mx, my, vx, vy)`.
pub type Diag = (f64, f64, f64, f64);

/// Similarity on diagonal Gaussians, same float order as the library.
pub fn scalar_similarity(metric: Metric, a: Diag, b: Diag, c: f64) -> f64 {
    let (amx, amy, avx, avy) = a;
    let (bmx, bmy, bvx, bvy) = b;
    let dx = amx - bmx;
    let dy = amy - bmy;
    let d = match metric {
        Metric::Gcd => {
            let mean_a = 2.0 * (dx * dx / avx + dy * dy / avy);
            let mean_b = 2.0 * (dx * dx / bvx + dy * dy / bvy);
            let sx = avx.sqrt() - bvx.sqrt();
            let sy = avy.sqrt() - bvy.sqrt();
            let frob = sx * sx + sy * sy;
            let cov_a = 2.0 * (1.0 / avx + 1.0 / avy) * frob;
            let cov_b = 2.0 * (1.0 / bvx + 1.0 / bvy) * frob;
            (mean_a + mean_b + cov_a + cov_b).sqrt()
        }
        Metric::Kld => {
            let trace = avx / bvx + avy / bvy;
            let maha = dx * dx / bvx + dy * dy / bvy;
            let log_det = ((bvx * bvy) / (avx * avy)).ln();
            (0.5 * (trace + maha - 2.0 + log_det)).max(0.0).sqrt()
        }
        Metric::Wd | Metric::Nwd => {
            let sx = avx.sqrt() - bvx.sqrt();
            let sy = avy.sqrt() - bvy.sqrt();
            (dx * dx + dy * dy + (sx * sx + sy * sy)).sqrt() / c
        }
    };
    (-d).exp().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveConfig {
    pub grf_scales: Vec<f64>,
    pub top_k: usize,
    pub band_lower: f64,
    pub band_upper: f64,
    pub metric: Metric,
    pub nwd_c: f64,
    pub rfla_background_threshold: f64,
}

impl Default for NaiveConfig {
    fn default() -> Self {
        Self {
            grf_scales: vec![1.0, 0.75, 0.5, 0.25],
            top_k: 9,
            band_lower: 0.6,
            band_upper: 0.95,
            metric: Metric::Gcd,
            nwd_c: 1.0,
            rfla_background_threshold: 0.8,
        }
    }
}

/// Location centers `(cx, cy, trf)` in level, row, column order.
pub fn naive_grid(width: u32, height: u32, levels: &[(u32, f64)]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &(stride, trf) in levels {
        let cols = (width + stride - 1) / stride;
        let rows = (height + stride - 1) / stride;
        for r in 0..rows {
            for c in 0..cols {
                let s = stride as f64;
                out.push(((c as f64 + 0.5) * s, (r as f64 + 0.5) * s, trf));
            }
        }
    }
    out
}

/// Row-major `[location][gt]` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveAssignment {
    pub rfd: Vec<Vec<f64>>,
    pub m_p: Vec<Vec<u8>>,
    pub m_f: Vec<Vec<u8>>,
    pub m_result: Vec<Vec<u8>>,
}

fn box_gaussian(b: &[f64; 4]) -> Diag {
    let w = b[2] - b[0];
    let h = b[3] - b[1];
    ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0, w * w / 4.0, h * h / 4.0)
}

fn naive_rfd(locations: &[(f64, f64, f64)], boxes: &[[f64; 4]], cfg: &NaiveConfig) -> Vec<Vec<f64>> {
    let mut rfd = vec![vec![0.0; boxes.len()]; locations.len()];
    for (l, &(cx, cy, trf)) in locations.iter().enumerate() {
        for (g, b) in boxes.iter().enumerate() {
            let gt = box_gaussian(b);
            let mut best = f64::NEG_INFINITY;
            for &s in &cfg.grf_scales {
                let d = s * trf;
                let v = d * d / 4.0;
                best = best.max(scalar_similarity(cfg.metric, gt, (cx, cy, v, v), cfg.nwd_c));
            }
            rfd[l][g] = best;
        }
    }
    rfd
}

/// Indices sorted by score descending, ties toward lower index, by repeated
/// selection of the best remaining entry.
pub fn selection_rank(scores: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut left = scores.to_vec();
    let mut out = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (bi, bs) = left[best];
            let (ci, cs) = left[i];
            if cs > bs || (cs == bs && ci < bi) {
                best = i;
            }
        }
        out.push(left.remove(best));
    }
    out
}

/// `m_p` OR `m_f`, spelled out.
pub fn naive_or(m_p: &[Vec<u8>], m_f: &[Vec<u8>]) -> Vec<Vec<u8>> {
    m_p.iter()
        .zip(m_f)
        .map(|(p, f)| p.iter().zip(f).map(|(&a, &b)| if a == 1 || b == 1 { 1 } else { 0 }).collect())
        .collect()
}

/// RFAssigner on explicit locations and `[x_min, y_min, x_max, y_max]` boxes.
pub fn naive_assign(locations: &[(f64, f64, f64)], boxes: &[[f64; 4]], cfg: &NaiveConfig) -> NaiveAssignment {
    let n_l = locations.len();
    let n_g = boxes.len();
    let mut m_p = vec![vec![0u8; n_g]; n_l];
    for (l, &(cx, cy, _)) in locations.iter().enumerate() {
        for (g, b) in boxes.iter().enumerate() {
            if b[0] <= cx && cx <= b[2] && b[1] <= cy && cy <= b[3] {
                m_p[l][g] = 1;
            }
        }
    }
    let rfd = naive_rfd(locations, boxes, cfg);
    let mut m_f = vec![vec![0u8; n_g]; n_l];
    if cfg.band_lower < cfg.band_upper {
        for g in 0..n_g {
            let mut pool = Vec::new();
            for l in 0..n_l {
                let s = rfd[l][g];
                if m_p[l][g] == 0 && s >= cfg.band_lower && s <= cfg.band_upper {
                    pool.push((l, s));
                }
            }
            if pool.len() == 1 {
                m_f[pool[0].0][g] = 1;
                continue;
            }
            if pool.is_empty() {
                continue;
            }
            let ranked = selection_rank(&pool);
            let taken = &ranked[..ranked.len().min(cfg.top_k)];
            let n = taken.len() as f64;
            let mut sum = 0.0;
            for &(_, s) in taken {
                sum += s;
            }
            let mean = sum / n;
            let mut sq = 0.0;
            for &(_, s) in taken {
                sq += (s - mean) * (s - mean);
            }
            let gate = mean + (sq / n).sqrt();
            for &(l, s) in taken {
                if s > gate {
                    m_f[l][g] = 1;
                }
            }
        }
    }
    let m_result = naive_or(&m_p, &m_f);
    NaiveAssignment { rfd, m_p, m_f, m_result }
}

/// Per-GT top-k by score, then rows whose best score is under the
/// background threshold are cleared. Result in `m_f`, `m_p` empty.
pub fn naive_rfla(locations: &[(f64, f64, f64)], boxes: &[[f64; 4]], cfg: &NaiveConfig) -> NaiveAssignment {
    let n_l = locations.len();
    let n_g = boxes.len();
    let rfd = naive_rfd(locations, boxes, cfg);
    let mut m_f = vec![vec![0u8; n_g]; n_l];
    for g in 0..n_g {
        let col: Vec<_> = (0..n_l).map(|l| (l, rfd[l][g])).collect();
        for &(l, _) in selection_rank(&col).iter().take(cfg.top_k) {
            m_f[l][g] = 1;
        }
    }
    for l in 0..n_l {
        let mut best = f64::NEG_INFINITY;
        for g in 0..n_g {
            best = best.max(rfd[l][g]);
        }
        if best < cfg.rfla_background_threshold {
            for g in 0..n_g {
                m_f[l][g] = 0;
            }
        }
    }
    let m_p = vec![vec![0u8; n_g]; n_l];
    let m_result = naive_or(&m_p, &m_f);
    NaiveAssignment { rfd, m_p, m_f, m_result }
}

/// Receptive field by explicit interval propagation: track the input span
/// covered by one output unit, layer by layer from the output back.
pub fn naive_trf(layers: &[(u32, u32)]) -> u64 {
    // span of output unit 0 in each layer's input, walking backwards
    let (mut lo, mut hi): (i64, i64) = (0, 0);
    for &(k, s) in layers.iter().rev() {
        lo *= i64::from(s);
        hi = hi * i64::from(s) + i64::from(k) - 1;
    }
    (hi - lo + 1) as u64
}
