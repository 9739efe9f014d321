//! The four predictor families.
//!
//! * Block-based prediction: planar, DC, and angular modes evaluated over a
//!   reference array built from the PU boundary.
//! * Sample-based angular prediction (SAP): the angular projection applied
//!   per pixel onto the immediately neighboring row or column.
//! * 3-tap prediction: a weighted sum of three causal neighbors whose
//!   positions depend on the mode group and whose weights come from a
//!   per-mode table.
//!
//! Pixel-wise methods run in closed loop: in lossless coding reconstruction
//! equals the source, so within a PU the predictors read already-scanned
//! source pixels, and across PU boundaries they read the canvas.

use crate::canvas::{Canvas, PuView, Rect, Scan};
use crate::modes::{inverse_angle, IntraMode};
use crate::plane::Plane;
use crate::weights::WeightSet;

/// Two-tap interpolation: `((32-w)*a + w*b + 16) >> 5`, exact integers.
#[inline]
pub fn interpolate_2tap(a: u8, b: u8, w: u32) -> u8 {
    debug_assert!(w <= 32);
    (((32 - w) * a as u32 + w * b as u32 + 16) >> 5) as u8
}

/// Relative offsets of the three prediction taps and the scan order that
/// keeps them causal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborConfig {
    /// Tap offsets `(dx, dy)` for a, b, c.
    pub taps: [(i32, i32); 3],
    pub scan: Scan,
}

/// Mode groups sharing one tap configuration. Index order matches the
/// residual-context grouping (block-based prediction uses a fifth group).
pub const GROUP_COUNT: usize = 4;

const CONFIGS: [NeighborConfig; GROUP_COUNT] = [
    // Modes 2..=9: down-left family, scanned column by column so the
    // below-left tap lies in the previous, fully coded column.
    NeighborConfig {
        taps: [(-1, 1), (-1, 0), (0, -1)],
        scan: Scan::ColMajor,
    },
    // Planar, DC, and modes 10..=18: left / up-left / up.
    NeighborConfig {
        taps: [(-1, 0), (-1, -1), (0, -1)],
        scan: Scan::RowMajor,
    },
    // Modes 19..=26: the up-left to vertical family, all taps in row y-1.
    NeighborConfig {
        taps: [(-1, -1), (0, -1), (1, -1)],
        scan: Scan::RowMajor,
    },
    // Modes 27..=34: the vertical to up-right family.
    NeighborConfig {
        taps: [(0, -1), (1, -1), (2, -1)],
        scan: Scan::RowMajor,
    },
];

/// Group index of a mode: 0 for modes 2-9, 1 for planar/DC/10-18,
/// 2 for 19-26, 3 for 27-34.
#[inline]
pub fn mode_group(mode: IntraMode) -> usize {
    match mode.id() {
        2..=9 => 0,
        0 | 1 | 10..=18 => 1,
        19..=26 => 2,
        _ => 3,
    }
}

/// Tap configuration for a mode's group.
#[inline]
pub fn neighbor_config(mode: IntraMode) -> &'static NeighborConfig {
    &CONFIGS[mode_group(mode)]
}

/// Pixel-wise prediction family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelMethod {
    Sap,
    ThreeTap,
}

/// Scan order of a PU for the given pixel-wise family and mode. SAP scans
/// the horizontal-family modes (2..=17) column by column; the 3-tap method
/// follows its tap configuration.
pub fn pixelwise_scan(method: PixelMethod, mode: IntraMode) -> Scan {
    match method {
        PixelMethod::Sap => {
            if (2..=17).contains(&mode.id()) {
                Scan::ColMajor
            } else {
                Scan::RowMajor
            }
        }
        PixelMethod::ThreeTap => neighbor_config(mode).scan,
    }
}

/// Boundary reference samples of a PU: the corner, two block-widths of top
/// row, and two block-heights of left column. Unavailable entries are filled
/// by nearest-available replication (scanning bottom-left to top-right); if
/// nothing is available every entry is 128.
#[derive(Debug, Clone)]
pub struct RefSamples {
    pub corner: u8,
    /// `2 * size` samples at `(pu.x - 1, pu.y + i)`.
    pub left: Vec<u8>,
    /// `2 * size` samples at `(pu.x + i, pu.y - 1)`.
    pub top: Vec<u8>,
}

pub fn reference_samples(canvas: &Canvas, pu: Rect) -> RefSamples {
    let n = pu.size as i64;
    let w = canvas.width() as i64;
    let h = canvas.height() as i64;
    let px = pu.x as i64;
    let py = pu.y as i64;

    let fetch = |x: i64, y: i64| -> Option<u8> {
        if x >= 0 && x < w && y >= 0 && y < h && canvas.is_available(x as u32, y as u32) {
            Some(canvas.sample(x as u32, y as u32))
        } else {
            None
        }
    };

    // Ordered boundary: left bottom-to-top, corner, top left-to-right.
    let total = (4 * n + 1) as usize;
    let mut ordered: Vec<Option<u8>> = Vec::with_capacity(total);
    for i in (0..2 * n).rev() {
        ordered.push(fetch(px - 1, py + i));
    }
    ordered.push(fetch(px - 1, py - 1));
    for i in 0..2 * n {
        ordered.push(fetch(px + i, py - 1));
    }

    let filled: Vec<u8> = if ordered.iter().all(|s| s.is_none()) {
        vec![128; total]
    } else {
        let first = ordered.iter().flatten().next().copied().unwrap();
        let mut prev = first;
        ordered
            .iter()
            .map(|s| {
                prev = s.unwrap_or(prev);
                prev
            })
            .collect()
    };

    let n = n as usize;
    let mut left: Vec<u8> = filled[..2 * n].to_vec();
    left.reverse();
    RefSamples {
        corner: filled[2 * n],
        left,
        top: filled[2 * n + 1..].to_vec(),
    }
}

/// Block-based prediction of a whole PU. Returns the predicted block in
/// raster order.
pub fn predict_block_hevc(canvas: &Canvas, pu: Rect, mode: IntraMode) -> Vec<u8> {
    let refs = reference_samples(canvas, pu);
    match mode.id() {
        0 => predict_planar(&refs, pu.size),
        1 => predict_dc(&refs, pu.size),
        _ => predict_angular(&refs, pu.size, mode),
    }
}

fn predict_planar(refs: &RefSamples, size: u32) -> Vec<u8> {
    let n = size as usize;
    let log2n = size.trailing_zeros();
    let top_right = refs.top[n] as u32;
    let bottom_left = refs.left[n] as u32;
    let mut out = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let hor = (n - 1 - x) as u32 * refs.left[y] as u32 + (x as u32 + 1) * top_right;
            let ver = (n - 1 - y) as u32 * refs.top[x] as u32 + (y as u32 + 1) * bottom_left;
            out.push(((hor + ver + size) >> (log2n + 1)) as u8);
        }
    }
    out
}

fn predict_dc(refs: &RefSamples, size: u32) -> Vec<u8> {
    let n = size as usize;
    let log2n = size.trailing_zeros();
    let sum: u32 = refs.top[..n].iter().map(|&v| v as u32).sum::<u32>()
        + refs.left[..n].iter().map(|&v| v as u32).sum::<u32>();
    let dc = ((sum + size) >> (log2n + 1)) as u8;
    vec![dc; n * n]
}

fn predict_angular(refs: &RefSamples, size: u32, mode: IntraMode) -> Vec<u8> {
    let n = size as i32;
    let angle = mode.angle();
    let vertical = mode.id() >= 18;

    // Main reference runs along the prediction boundary (top row for the
    // vertical family, left column otherwise); the side reference extends it
    // for negative displacements. Index 0 is the corner.
    let (main, side): (&[u8], &[u8]) = if vertical {
        (&refs.top, &refs.left)
    } else {
        (&refs.left, &refs.top)
    };

    // ref_main[offset + k] holds boundary sample k, k in -n ..= 2n.
    let offset = n as usize;
    let mut ref_main = vec![0u8; (3 * n + 1) as usize];
    ref_main[offset] = refs.corner;
    ref_main[offset + 1..].copy_from_slice(main);
    if angle < 0 {
        let inv = inverse_angle(angle);
        let k_min = (n * angle) >> 5;
        for k in k_min..0 {
            let side_idx = ((-k * inv + 128) >> 8) as usize;
            ref_main[(offset as i32 + k) as usize] = if side_idx == 0 {
                refs.corner
            } else {
                side[(side_idx - 1).min(side.len() - 1)]
            };
        }
    }

    let mut out = vec![0u8; (n * n) as usize];
    for line in 0..n {
        let proj = (line + 1) * angle;
        let i = proj >> 5;
        let f = (proj & 31) as u32;
        for pos in 0..n {
            let idx = (offset as i32 + pos + i + 1) as usize;
            let v = if f == 0 {
                ref_main[idx]
            } else {
                interpolate_2tap(ref_main[idx], ref_main[idx + 1], f)
            };
            // The vertical family predicts row `line` from the top row; the
            // horizontal family is its transpose.
            let (x, y) = if vertical { (pos, line) } else { (line, pos) };
            out[(y * n + x) as usize] = v;
        }
    }
    out
}

/// SAP prediction of a single pixel: project along the mode's angle onto the
/// immediately neighboring row (vertical family, modes 18..=34) or column
/// (horizontal family, modes 2..=17) and interpolate the two straddling
/// samples. Displacements landing exactly on a pixel copy it.
pub fn predict_pixel_sap(view: &PuView<'_>, x: u32, y: u32, mode: IntraMode) -> u8 {
    debug_assert!(mode.is_angular());
    let angle = mode.angle();
    let i = angle >> 5;
    let f = (angle & 31) as u32;
    if mode.id() >= 18 {
        let a = view.tap(x, y, i, -1);
        if f == 0 {
            a
        } else {
            interpolate_2tap(a, view.tap(x, y, i + 1, -1), f)
        }
    } else {
        let a = view.tap(x, y, -1, i);
        if f == 0 {
            a
        } else {
            interpolate_2tap(a, view.tap(x, y, -1, i + 1), f)
        }
    }
}

/// 3-tap prediction of a single pixel:
/// `clip((rho1*a + rho2*b + rho3*c + 32) >> 6)`.
pub fn predict_pixel_3tap(
    view: &PuView<'_>,
    x: u32,
    y: u32,
    cfg: &NeighborConfig,
    w: WeightSet,
) -> u8 {
    let a = view.tap(x, y, cfg.taps[0].0, cfg.taps[0].1) as i32;
    let b = view.tap(x, y, cfg.taps[1].0, cfg.taps[1].1) as i32;
    let c = view.tap(x, y, cfg.taps[2].0, cfg.taps[2].1) as i32;
    let p = (w.rho1 * a + w.rho2 * b + w.rho3 * c + 32) >> 6;
    p.clamp(0, 255) as u8
}

/// Same as `predict_pixel_3tap` but also reports the resolved tap samples,
/// for the trainer's sample collection.
pub fn predict_pixel_3tap_taps(
    view: &PuView<'_>,
    x: u32,
    y: u32,
    cfg: &NeighborConfig,
    w: WeightSet,
) -> (u8, [u8; 3]) {
    let a = view.tap(x, y, cfg.taps[0].0, cfg.taps[0].1);
    let b = view.tap(x, y, cfg.taps[1].0, cfg.taps[1].1);
    let c = view.tap(x, y, cfg.taps[2].0, cfg.taps[2].1);
    let p = (w.rho1 * a as i32 + w.rho2 * b as i32 + w.rho3 * c as i32 + 32) >> 6;
    (p.clamp(0, 255) as u8, [a, b, c])
}

/// One pixel-wise predictor instantiated for a (method, mode, weights)
/// triple. Carries enough to evaluate a pixel either directly against the
/// source plane (when every tap provably lands on an already-coded in-PU
/// pixel) or through the general padded view.
enum PixelPredictor {
    Sap {
        mode: IntraMode,
        o0: (i32, i32),
        o1: (i32, i32),
        f: u32,
    },
    ThreeTap {
        taps: [(i32, i32); 3],
        w: WeightSet,
    },
}

impl PixelPredictor {
    fn new(method: PixelMethod, mode: IntraMode, w: WeightSet) -> PixelPredictor {
        match method {
            PixelMethod::Sap => {
                debug_assert!(mode.is_angular());
                let angle = mode.angle();
                let i = angle >> 5;
                let f = (angle & 31) as u32;
                let (o0, o1) = if mode.id() >= 18 {
                    ((i, -1), (i + 1, -1))
                } else {
                    ((-1, i), (-1, i + 1))
                };
                PixelPredictor::Sap { mode, o0, o1, f }
            }
            PixelMethod::ThreeTap => PixelPredictor::ThreeTap {
                taps: neighbor_config(mode).taps,
                w,
            },
        }
    }

    fn offsets(&self) -> Vec<(i32, i32)> {
        match self {
            PixelPredictor::Sap { o0, o1, f, .. } => {
                if *f == 0 {
                    vec![*o0]
                } else {
                    vec![*o0, *o1]
                }
            }
            PixelPredictor::ThreeTap { taps, .. } => taps.to_vec(),
        }
    }

    /// Every tap read straight from the source raster; valid only inside
    /// the safe interior where causality is guaranteed by construction.
    #[inline]
    fn eval_direct(&self, plane: &Plane, x: u32, y: u32) -> u8 {
        let at = |o: (i32, i32)| plane.get((x as i32 + o.0) as u32, (y as i32 + o.1) as u32);
        match self {
            PixelPredictor::Sap { o0, o1, f, .. } => {
                let a = at(*o0);
                if *f == 0 {
                    a
                } else {
                    interpolate_2tap(a, at(*o1), *f)
                }
            }
            PixelPredictor::ThreeTap { taps, w } => {
                let p = (w.rho1 * at(taps[0]) as i32
                    + w.rho2 * at(taps[1]) as i32
                    + w.rho3 * at(taps[2]) as i32
                    + 32)
                    >> 6;
                p.clamp(0, 255) as u8
            }
        }
    }

    #[inline]
    fn eval_view(&self, view: &PuView<'_>, x: u32, y: u32) -> u8 {
        match self {
            PixelPredictor::Sap { mode, .. } => predict_pixel_sap(view, x, y, *mode),
            PixelPredictor::ThreeTap { taps, w } => {
                let cfg = NeighborConfig {
                    taps: *taps,
                    scan: Scan::RowMajor, // scan is irrelevant for a single eval
                };
                predict_pixel_3tap(view, x, y, &cfg, *w)
            }
        }
    }
}

/// Drives the closed-loop scan of a PU, calling `visit(flat, x, y, p)` for
/// every pixel in scan order (`flat` is the raster index within the PU).
/// Shared by full prediction and SAD screening.
fn drive_pixelwise(
    canvas: &Canvas,
    original: &Plane,
    pu: Rect,
    mode: IntraMode,
    w: WeightSet,
    method: PixelMethod,
    mut visit: impl FnMut(usize, u32, u32, u8),
) {
    let scan = pixelwise_scan(method, mode);
    let predictor = PixelPredictor::new(method, mode, w);

    // Pixels whose taps all land inside the PU can skip availability and
    // padding logic: causal taps are already coded and, in lossless coding,
    // equal the source.
    let offsets = predictor.offsets();
    let min_dx = offsets.iter().map(|o| o.0).min().unwrap();
    let max_dx = offsets.iter().map(|o| o.0).max().unwrap();
    let min_dy = offsets.iter().map(|o| o.1).min().unwrap();
    let max_dy = offsets.iter().map(|o| o.1).max().unwrap();
    let safe_x_lo = pu.x as i64 + (-min_dx).max(0) as i64;
    let safe_x_hi = pu.x as i64 + pu.size as i64 - 1 - max_dx.max(0) as i64;
    let safe_y_lo = pu.y as i64 + (-min_dy).max(0) as i64;
    let safe_y_hi = pu.y as i64 + pu.size as i64 - 1 - max_dy.max(0) as i64;

    let n = pu.size;
    let mut view = PuView::staged(canvas, original, pu, scan);
    for idx in 0..pu.pixels() {
        let (x, y) = scan.pos(pu, idx);
        let safe = (safe_x_lo..=safe_x_hi).contains(&(x as i64))
            && (safe_y_lo..=safe_y_hi).contains(&(y as i64));
        let p = if safe {
            predictor.eval_direct(original, x, y)
        } else {
            view.set_progress(idx);
            predictor.eval_view(&view, x, y)
        };
        visit(((y - pu.y) * n + (x - pu.x)) as usize, x, y, p);
    }
}

/// Pixel-wise prediction of a whole PU in closed loop. Returns the predicted
/// block and the residuals, both in raster order. SAP keeps planar and DC as
/// the block-based modes.
pub fn predict_pu_pixelwise(
    canvas: &Canvas,
    original: &Plane,
    pu: Rect,
    mode: IntraMode,
    w: WeightSet,
    method: PixelMethod,
) -> (Vec<u8>, Vec<i16>) {
    if method == PixelMethod::Sap && !mode.is_angular() {
        let pred = predict_block_hevc(canvas, pu, mode);
        let residual = block_residual(original, pu, &pred);
        return (pred, residual);
    }
    let n = pu.size as usize;
    let mut pred = vec![0u8; n * n];
    let mut residual = vec![0i16; n * n];
    drive_pixelwise(canvas, original, pu, mode, w, method, |flat, x, y, p| {
        pred[flat] = p;
        residual[flat] = original.get(x, y) as i16 - p as i16;
    });
    (pred, residual)
}

/// Sum of absolute prediction error of a PU, without materializing the
/// blocks. Used by SAD screening and the adaptive candidate search.
pub fn sad_pu_pixelwise(
    canvas: &Canvas,
    original: &Plane,
    pu: Rect,
    mode: IntraMode,
    w: WeightSet,
    method: PixelMethod,
) -> u64 {
    if method == PixelMethod::Sap && !mode.is_angular() {
        let pred = predict_block_hevc(canvas, pu, mode);
        return sad_against_block(original, pu, &pred);
    }
    let mut sad = 0u64;
    drive_pixelwise(canvas, original, pu, mode, w, method, |_, x, y, p| {
        sad += (original.get(x, y) as i64 - p as i64).unsigned_abs();
    });
    sad
}

/// SAD of the original against a raster-ordered predicted block.
pub fn sad_against_block(original: &Plane, pu: Rect, pred: &[u8]) -> u64 {
    let n = pu.size as usize;
    let mut sad = 0u64;
    for y in 0..n {
        for x in 0..n {
            let o = original.get(pu.x + x as u32, pu.y + y as u32) as i64;
            sad += (o - pred[y * n + x] as i64).unsigned_abs();
        }
    }
    sad
}

/// Per-pixel residual of a block prediction, raster order.
pub fn block_residual(original: &Plane, pu: Rect, pred: &[u8]) -> Vec<i16> {
    let n = pu.size as usize;
    let mut residual = vec![0i16; n * n];
    for y in 0..n {
        for x in 0..n {
            let o = original.get(pu.x + x as u32, pu.y + y as u32) as i16;
            residual[y * n + x] = o - pred[y * n + x] as i16;
        }
    }
    residual
}
