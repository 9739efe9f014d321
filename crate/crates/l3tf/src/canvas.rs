//! Reconstruction canvas: reconstructed samples plus per-pixel availability.
//!
//! Prediction only ever reads pixels that were reconstructed earlier in
//! coding order, or values produced by the padding rule. The padding rule
//! substitutes the nearest available sample (Chebyshev distance, ties broken
//! in row-major order around the clamped target); when nothing has been
//! reconstructed yet, the substitute is 128.

use crate::plane::Plane;

/// Square pixel region: the unit the codec partitions frames into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, size: u32) -> Rect {
        Rect { x, y, size }
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.size && y >= self.y && y < self.y + self.size
    }

    pub fn pixels(&self) -> u32 {
        self.size * self.size
    }
}

/// Pixel visitation order within a PU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    RowMajor,
    ColMajor,
}

impl Scan {
    /// Coordinates of the `idx`-th pixel of `pu` under this order.
    #[inline]
    pub fn pos(self, pu: Rect, idx: u32) -> (u32, u32) {
        debug_assert!(idx < pu.pixels());
        match self {
            Scan::RowMajor => (pu.x + idx % pu.size, pu.y + idx / pu.size),
            Scan::ColMajor => (pu.x + idx / pu.size, pu.y + idx % pu.size),
        }
    }

    /// Inverse of `pos`.
    #[inline]
    pub fn index(self, pu: Rect, x: u32, y: u32) -> u32 {
        debug_assert!(pu.contains(x, y));
        match self {
            Scan::RowMajor => (y - pu.y) * pu.size + (x - pu.x),
            Scan::ColMajor => (x - pu.x) * pu.size + (y - pu.y),
        }
    }
}

/// Reconstructed samples with per-pixel availability flags.
#[derive(Debug, Clone)]
pub struct Canvas {
    width: u32,
    height: u32,
    samples: Vec<u8>,
    avail: Vec<bool>,
    avail_count: usize,
}

/// Saved availability state of a rectangular region, for branch rollback
/// during rate-distortion search.
pub struct AvailSnapshot {
    rect: Rect,
    bits: Vec<bool>,
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Canvas {
        let n = width as usize * height as usize;
        Canvas {
            width,
            height,
            samples: vec![0; n],
            avail: vec![false; n],
            avail_count: 0,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn sample(&self, x: u32, y: u32) -> u8 {
        self.samples[self.idx(x, y)]
    }

    #[inline]
    pub fn is_available(&self, x: u32, y: u32) -> bool {
        self.avail[self.idx(x, y)]
    }

    pub fn available_count(&self) -> usize {
        self.avail_count
    }

    /// Writes one reconstructed pixel and marks it available.
    #[inline]
    pub fn commit_pixel(&mut self, x: u32, y: u32, v: u8) {
        let i = self.idx(x, y);
        self.samples[i] = v;
        if !self.avail[i] {
            self.avail[i] = true;
            self.avail_count += 1;
        }
    }

    /// Copies the PU region of `plane` into the canvas and marks it
    /// available. In lossless coding the reconstruction equals the source,
    /// so committing source samples is exact.
    pub fn commit_block(&mut self, pu: Rect, plane: &Plane) {
        for y in pu.y..pu.y + pu.size {
            for x in pu.x..pu.x + pu.size {
                self.commit_pixel(x, y, plane.get(x, y));
            }
        }
    }

    pub fn save_region(&self, rect: Rect) -> AvailSnapshot {
        let mut bits = Vec::with_capacity(rect.pixels() as usize);
        for y in rect.y..rect.y + rect.size {
            for x in rect.x..rect.x + rect.size {
                bits.push(self.avail[self.idx(x, y)]);
            }
        }
        AvailSnapshot { rect, bits }
    }

    pub fn restore_region(&mut self, snap: &AvailSnapshot) {
        let mut it = snap.bits.iter();
        for y in snap.rect.y..snap.rect.y + snap.rect.size {
            for x in snap.rect.x..snap.rect.x + snap.rect.size {
                let i = self.idx(x, y);
                let old = *it.next().unwrap();
                if self.avail[i] != old {
                    if old {
                        self.avail_count += 1;
                    } else {
                        self.avail_count -= 1;
                    }
                    self.avail[i] = old;
                }
            }
        }
    }
}

/// Read view over the canvas for predicting one PU.
///
/// Pixels of the PU that precede the current scan position count as
/// available: in lossless coding their reconstruction equals the source, so
/// the encoder reads them from the original plane while the decoder reads
/// the identical values from the canvas it has already filled in.
pub struct PuView<'a> {
    canvas: &'a Canvas,
    pu: Rect,
    scan: Scan,
    progress: u32,
    staged: Option<&'a Plane>,
}

impl<'a> PuView<'a> {
    /// Encoder-side view: in-PU reads come from the original plane, the
    /// canvas itself is untouched (candidate evaluation must not mutate).
    pub fn staged(canvas: &'a Canvas, original: &'a Plane, pu: Rect, scan: Scan) -> PuView<'a> {
        PuView {
            canvas,
            pu,
            scan,
            progress: 0,
            staged: Some(original),
        }
    }

    /// Decoder-side view: the canvas already holds every decoded pixel.
    pub fn live(canvas: &'a Canvas, pu: Rect, scan: Scan) -> PuView<'a> {
        PuView {
            canvas,
            pu,
            scan,
            progress: 0,
            staged: None,
        }
    }

    /// Number of PU pixels already coded in scan order.
    pub fn set_progress(&mut self, progress: u32) {
        self.progress = progress;
    }

    #[inline]
    fn available(&self, x: u32, y: u32) -> bool {
        if self.pu.contains(x, y) {
            self.scan.index(self.pu, x, y) < self.progress
        } else {
            self.canvas.is_available(x, y)
        }
    }

    #[inline]
    fn value(&self, x: u32, y: u32) -> u8 {
        match self.staged {
            Some(plane) if self.pu.contains(x, y) => plane.get(x, y),
            _ => self.canvas.sample(x, y),
        }
    }

    fn nothing_reconstructed(&self) -> bool {
        self.progress == 0 && self.canvas.avail_count == 0
    }

    /// Resolves the tap at offset `(dx, dy)` from pixel `(x, y)`, applying
    /// the padding rule when the target is out of frame or not yet coded.
    pub fn tap(&self, x: u32, y: u32, dx: i32, dy: i32) -> u8 {
        let w = self.canvas.width as i64;
        let h = self.canvas.height as i64;
        let tx = x as i64 + dx as i64;
        let ty = y as i64 + dy as i64;
        if tx >= 0 && tx < w && ty >= 0 && ty < h && self.available(tx as u32, ty as u32) {
            return self.value(tx as u32, ty as u32);
        }
        if self.nothing_reconstructed() {
            return 128;
        }
        // Nearest available sample around the clamped target. Ring scan in
        // row-major order makes the substitution deterministic on both the
        // encoder and the decoder.
        let cx = tx.clamp(0, w - 1);
        let cy = ty.clamp(0, h - 1);
        let max_r = w.max(h);
        for r in 0..=max_r {
            for sy in cy - r..=cy + r {
                if sy < 0 || sy >= h {
                    continue;
                }
                for sx in cx - r..=cx + r {
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    if (cy - sy).abs() != r && (cx - sx).abs() != r {
                        continue; // interior of the ring, already scanned
                    }
                    if self.available(sx as u32, sy as u32) {
                        return self.value(sx as u32, sy as u32);
                    }
                }
            }
        }
        128
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_orders_cover_all_pixels_once() {
        let pu = Rect::new(4, 8, 4);
        for scan in [Scan::RowMajor, Scan::ColMajor] {
            let mut seen = [false; 16];
            for idx in 0..16 {
                let (x, y) = scan.pos(pu, idx);
                assert!(pu.contains(x, y));
                assert_eq!(scan.index(pu, x, y), idx);
                let flat = ((y - pu.y) * 4 + (x - pu.x)) as usize;
                assert!(!seen[flat]);
                seen[flat] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn colmajor_walks_columns_top_down() {
        let pu = Rect::new(0, 0, 3);
        let order: Vec<(u32, u32)> = (0..9).map(|i| Scan::ColMajor.pos(pu, i)).collect();
        assert_eq!(order[0], (0, 0));
        assert_eq!(order[1], (0, 1));
        assert_eq!(order[3], (1, 0));
    }

    #[test]
    fn tap_reads_committed_neighbors() {
        let mut canvas = Canvas::new(8, 8);
        let plane = Plane::from_fn(8, 8, |x, y| (x * 10 + y) as u8);
        canvas.commit_block(Rect::new(0, 0, 4), &plane);
        let pu = Rect::new(4, 0, 4);
        let view = PuView::staged(&canvas, &plane, pu, Scan::RowMajor);
        assert_eq!(view.tap(4, 0, -1, 0), plane.get(3, 0));
    }

    #[test]
    fn tap_with_nothing_reconstructed_is_128() {
        let canvas = Canvas::new(4, 4);
        let plane = Plane::filled(4, 4, 77);
        let view = PuView::staged(&canvas, &plane, Rect::new(0, 0, 4), Scan::RowMajor);
        assert_eq!(view.tap(0, 0, -1, 0), 128);
        assert_eq!(view.tap(0, 0, 0, -1), 128);
    }

    #[test]
    fn padding_replicates_nearest_scanned_pixel() {
        let canvas = Canvas::new(4, 4);
        let plane = Plane::filled(4, 4, 200);
        let mut view = PuView::staged(&canvas, &plane, Rect::new(0, 0, 4), Scan::RowMajor);
        view.set_progress(1); // (0,0) coded
        // Above-frame tap for (1,0) falls back to the scanned neighbor.
        assert_eq!(view.tap(1, 0, 0, -1), 200);
        // Left-of-frame tap for (0,1) after the first row is coded.
        view.set_progress(4);
        assert_eq!(view.tap(0, 1, -1, 0), 200);
    }

    #[test]
    fn staged_view_does_not_see_future_pixels() {
        let mut canvas = Canvas::new(4, 4);
        let plane = Plane::from_fn(4, 4, |x, y| (x + 4 * y) as u8);
        canvas.commit_pixel(3, 3, 99);
        let mut view = PuView::staged(&canvas, &plane, Rect::new(0, 0, 2), Scan::RowMajor);
        view.set_progress(2);
        // (0,1) is scan index 2, not yet coded; nearest available of the
        // clamped target (0,1) is the scanned pixel (0,0).
        assert_eq!(view.tap(0, 1, -1, 0), plane.get(0, 0));
    }

    #[test]
    fn save_restore_region_round_trips() {
        let mut canvas = Canvas::new(8, 8);
        let plane = Plane::filled(8, 8, 1);
        canvas.commit_block(Rect::new(0, 0, 4), &plane);
        let snap = canvas.save_region(Rect::new(0, 0, 8));
        canvas.commit_block(Rect::new(4, 4, 4), &plane);
        assert!(canvas.is_available(5, 5));
        canvas.restore_region(&snap);
        assert!(!canvas.is_available(5, 5));
        assert!(canvas.is_available(1, 1));
        assert_eq!(canvas.available_count(), 16);
    }
}
