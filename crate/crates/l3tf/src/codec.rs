//! Encoder and decoder.
//!
//! The encoder partitions each frame into CTUs, recursively decides the
//! quadtree split by exact bit cost, screens intra modes by SAD, optionally
//! refines the 3-tap weights per PU over eight candidate sets (signaled with
//! a 3-bit flag), and commits the cheapest decision. Costing runs on context
//! snapshots, so the bits reported for a decision equal the bits emitted
//! when it is written. The decoder mirrors every decision from the stream
//! and reconstructs bit-exactly.

use crate::canvas::{Canvas, PuView, Rect, Scan};
use crate::entropy::{
    cost_residual_block, map_residual, rice_decode, rice_encode, unmap_residual, BitSink,
    BitSource, RiceContext,
};
use crate::modes::{IntraMode, MODE_COUNT};
use crate::plane::Plane;
use crate::predict::{
    block_residual, mode_group, neighbor_config, pixelwise_scan, predict_block_hevc,
    predict_pixel_3tap, predict_pixel_3tap_taps, predict_pixel_sap, predict_pu_pixelwise,
    sad_against_block, sad_pu_pixelwise, PixelMethod,
};
use crate::rng::{prng_for_pu, Prng64};
use crate::weights::{WeightSet, WeightTable};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"L3TF";
pub const VERSION: u8 = 1;
/// Header length in bytes: magic, version, method, ctu, min_pu, three u32
/// fields, and the 35x3 offset-encoded weight table.
pub const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 1 + 4 + 4 + 4 + 3 * MODE_COUNT;

/// Smallest PU size that carries the 3-bit candidate flag under the
/// adaptive method; smaller PUs always use the offline weights.
pub const ADAPTIVE_MIN_PU: u32 = 16;

/// Prediction method of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    BlockHevc,
    Sap,
    ThreeTapOffline,
    ThreeTapAdaptive,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::BlockHevc,
        Method::Sap,
        Method::ThreeTapOffline,
        Method::ThreeTapAdaptive,
    ];

    pub fn to_u8(self) -> u8 {
        match self {
            Method::BlockHevc => 0,
            Method::Sap => 1,
            Method::ThreeTapOffline => 2,
            Method::ThreeTapAdaptive => 3,
        }
    }

    pub fn from_u8(v: u8) -> Result<Method> {
        match v {
            0 => Ok(Method::BlockHevc),
            1 => Ok(Method::Sap),
            2 => Ok(Method::ThreeTapOffline),
            3 => Ok(Method::ThreeTapAdaptive),
            _ => Err(Error::MalformedStream("unknown method byte")),
        }
    }

    /// CLI spelling.
    pub fn name(self) -> &'static str {
        match self {
            Method::BlockHevc => "block",
            Method::Sap => "sap",
            Method::ThreeTapOffline => "3tap",
            Method::ThreeTapAdaptive => "adaptive",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// True for the methods whose prediction consumes the weight table.
    pub fn uses_weights(self) -> bool {
        matches!(self, Method::ThreeTapOffline | Method::ThreeTapAdaptive)
    }
}

/// Encoder settings and the weight table embedded into the stream header.
#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub method: Method,
    pub ctu_size: u32,
    pub min_pu: u32,
    pub weights: WeightTable,
    pub frame_index: u32,
}

impl EncoderConfig {
    pub fn new(method: Method, weights: WeightTable) -> EncoderConfig {
        EncoderConfig {
            method,
            ctu_size: 64,
            min_pu: 4,
            weights,
            frame_index: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = |v: u32| v.is_power_of_two();
        if !pow2(self.ctu_size) || !pow2(self.min_pu) {
            return Err(Error::InvalidConfig("ctu_size and min_pu must be powers of two"));
        }
        if self.min_pu < 4 || self.ctu_size > 64 || self.min_pu > self.ctu_size {
            return Err(Error::InvalidConfig("require 4 <= min_pu <= ctu_size <= 64"));
        }
        self.weights.validate()?;
        for mode in 0..MODE_COUNT as u8 {
            if !self.weights.get(mode).storable() {
                return Err(Error::InvalidConfig(
                    "weight component outside the storable range [-128, 127]",
                ));
            }
        }
        Ok(())
    }
}

/// Screening width by PU size: all 35 modes are ranked by SAD and the best
/// N survive to RDO.
pub fn n_for_size(size: u32) -> usize {
    match size {
        4 | 8 => 8,
        _ => 3,
    }
}

/// True when the PU carries the 3-bit candidate flag.
pub fn flag_applies(method: Method, size: u32) -> bool {
    method == Method::ThreeTapAdaptive && size >= ADAPTIVE_MIN_PU
}

/// The six single-step weight perturbations, as ordered `(i, j)` component
/// pairs meaning `+1` on component `i` and `-1` on component `j`.
const PERTURBATION_PAIRS: [(usize, usize); 6] =
    [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];

/// The six single-step perturbations of an offline weight set, in table
/// order. Shared by the per-PU candidate search and stage-2 training.
pub fn perturbation_candidates(offline: WeightSet) -> [WeightSet; 6] {
    let mut out = [offline; 6];
    for (idx, &(i, j)) in PERTURBATION_PAIRS.iter().enumerate() {
        let mut c = offline.components();
        c[i] += 1;
        c[j] -= 1;
        out[idx] = WeightSet::from_components(c);
    }
    out
}

/// The eight weight candidates of one PU and mode: index 0 is the offline
/// set, 1..=6 the single-step perturbations, 7 a pseudo-random two/three-step
/// transfer drawn from the PU's deterministic generator.
#[derive(Debug, Clone, Copy)]
pub struct CandidateSet {
    pub sets: [WeightSet; 8],
}

pub fn candidate_set(offline: WeightSet, rng: &mut Prng64) -> CandidateSet {
    let mut sets = [offline; 8];
    sets[1..7].copy_from_slice(&perturbation_candidates(offline));
    let (i, j) = PERTURBATION_PAIRS[rng.next_below(6) as usize];
    let d = 2 + rng.next_below(2) as i32;
    let mut c = offline.components();
    c[i] += d;
    c[j] -= d;
    sets[7] = WeightSet::from_components(c);
    CandidateSet { sets }
}

/// HEVC-style most probable modes from the left and above neighbor PUs.
/// A missing neighbor counts as DC.
pub fn derive_mpms(left: Option<IntraMode>, above: Option<IntraMode>) -> [IntraMode; 3] {
    let l = left.map_or(1, IntraMode::id);
    let a = above.map_or(1, IntraMode::id);
    let wrap_down = |m: u8| if m == 2 { 34 } else { m - 1 };
    let wrap_up = |m: u8| if m == 34 { 2 } else { m + 1 };
    let ids: [u8; 3] = if l == a {
        if l >= 2 {
            [l, wrap_down(l), wrap_up(l)]
        } else {
            [0, 1, 26]
        }
    } else {
        let third = [0u8, 1, 26]
            .into_iter()
            .find(|&m| m != l && m != a)
            .unwrap();
        [l, a, third]
    };
    ids.map(IntraMode::new)
}

/// Bits `signal_mode` will write for `mode` under `mpms`.
pub fn mode_signal_bits(mode: IntraMode, mpms: &[IntraMode; 3]) -> u64 {
    match mpms.iter().position(|&m| m == mode) {
        Some(0) => 2,
        Some(_) => 3,
        None => 6,
    }
}

/// MPM hit: "1" plus a truncated index; miss: "0" plus the 5-bit rank of the
/// mode among the 32 non-MPM modes in ascending id order.
pub fn signal_mode(sink: &mut BitSink, mode: IntraMode, mpms: &[IntraMode; 3]) {
    match mpms.iter().position(|&m| m == mode) {
        Some(0) => {
            sink.push_bit(1);
            sink.push_bit(0);
        }
        Some(i) => {
            sink.push_bit(1);
            sink.push_bit(1);
            sink.push_bit(i as u32 - 1);
        }
        None => {
            sink.push_bit(0);
            let rank = (0..mode.id()).filter(|&m| !mpms.iter().any(|p| p.id() == m)).count();
            sink.push_bits(rank as u32, 5);
        }
    }
}

/// Exact inverse of `signal_mode`.
pub fn parse_mode(source: &mut BitSource<'_>, mpms: &[IntraMode; 3]) -> Result<IntraMode> {
    if source.read_bit()? == 1 {
        if source.read_bit()? == 0 {
            Ok(mpms[0])
        } else if source.read_bit()? == 0 {
            Ok(mpms[1])
        } else {
            Ok(mpms[2])
        }
    } else {
        let rank = source.read_bits(5)? as usize;
        (0..MODE_COUNT as u8)
            .filter(|&m| !mpms.iter().any(|p| p.id() == m))
            .nth(rank)
            .map(IntraMode::new)
            .ok_or(Error::MalformedStream("mode rank out of range"))
    }
}

/// One adaptive Golomb-Rice context per (predictor group, PU size class),
/// reset at every frame start. Block-based prediction uses a fifth group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtxBank {
    ctx: [[RiceContext; 5]; 5],
}

impl CtxBank {
    pub fn new() -> CtxBank {
        CtxBank {
            ctx: [[RiceContext::new(); 5]; 5],
        }
    }

    fn get(&self, group: usize, size_class: usize) -> &RiceContext {
        &self.ctx[group][size_class]
    }

    fn get_mut(&mut self, group: usize, size_class: usize) -> &mut RiceContext {
        &mut self.ctx[group][size_class]
    }
}

impl Default for CtxBank {
    fn default() -> Self {
        CtxBank::new()
    }
}

fn size_class(size: u32) -> usize {
    (size.trailing_zeros() - 2) as usize
}

fn ctx_group(method: Method, mode: IntraMode) -> usize {
    if method == Method::BlockHevc {
        4
    } else {
        mode_group(mode)
    }
}

/// Residual coding order of a PU, matching its prediction scan.
fn residual_scan(method: Method, mode: IntraMode) -> Scan {
    match method {
        Method::BlockHevc => Scan::RowMajor,
        Method::Sap => pixelwise_scan(PixelMethod::Sap, mode),
        _ => pixelwise_scan(PixelMethod::ThreeTap, mode),
    }
}

/// Per-PU mode bookkeeping at 4-pixel granularity, used for MPM derivation.
#[derive(Debug, Clone)]
struct ModeMap {
    cells_w: u32,
    cells: Vec<u8>,
}

const MODE_NONE: u8 = 0xFF;

struct ModeSnapshot {
    rect: Rect,
    cells: Vec<u8>,
}

impl ModeMap {
    fn new(width: u32, height: u32) -> ModeMap {
        let cells_w = width.div_ceil(4);
        let cells_h = height.div_ceil(4);
        ModeMap {
            cells_w,
            cells: vec![MODE_NONE; (cells_w * cells_h) as usize],
        }
    }

    fn at(&self, x: u32, y: u32) -> Option<IntraMode> {
        let v = self.cells[(y / 4 * self.cells_w + x / 4) as usize];
        (v != MODE_NONE).then(|| IntraMode::new(v))
    }

    fn set_pu(&mut self, pu: Rect, mode: IntraMode) {
        for cy in pu.y / 4..(pu.y + pu.size) / 4 {
            for cx in pu.x / 4..(pu.x + pu.size) / 4 {
                self.cells[(cy * self.cells_w + cx) as usize] = mode.id();
            }
        }
    }

    fn save_region(&self, rect: Rect) -> ModeSnapshot {
        let mut cells = Vec::new();
        for cy in rect.y / 4..(rect.y + rect.size) / 4 {
            for cx in rect.x / 4..(rect.x + rect.size) / 4 {
                cells.push(self.cells[(cy * self.cells_w + cx) as usize]);
            }
        }
        ModeSnapshot { rect, cells }
    }

    fn restore_region(&mut self, snap: &ModeSnapshot) {
        let mut it = snap.cells.iter();
        for cy in snap.rect.y / 4..(snap.rect.y + snap.rect.size) / 4 {
            for cx in snap.rect.x / 4..(snap.rect.x + snap.rect.size) / 4 {
                self.cells[(cy * self.cells_w + cx) as usize] = *it.next().unwrap();
            }
        }
    }
}

/// Final choice for one PU.
#[derive(Debug, Clone)]
pub struct PuDecision {
    pub mode: IntraMode,
    /// Weight-candidate index; 0 unless the adaptive flag applies.
    pub candidate_index: u8,
    /// Exact cost of the PU payload: mode signaling + flag + residuals.
    pub bits: u64,
    pub prediction: Vec<u8>,
    pub residual: Vec<i16>,
    mpms: [IntraMode; 3],
    n_screen: u8,
    /// Every `(mode, candidate, bits)` triple RDO evaluated for this PU.
    evaluated: Vec<(u8, u8, u64)>,
    taps: Option<Vec<TapSample>>,
}

enum CuPlan {
    Outside,
    Leaf(PuDecision),
    Split(Vec<CuPlan>),
}

/// One collected training sample: tap values and the coded pixel.
#[derive(Debug, Clone, Copy)]
pub struct TapSample {
    pub mode: u8,
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub x: u8,
}

/// Per-PU record of an encode, for audits and training.
#[derive(Debug, Clone)]
pub struct PuTrace {
    pub x: u32,
    pub y: u32,
    pub size: u32,
    pub mode: u8,
    pub candidate_index: u8,
    pub flagged: bool,
    /// Bits reported by RDO for this PU.
    pub planned_bits: u64,
    /// Bits actually written for this PU's payload.
    pub measured_bits: u64,
    /// SAD screening width before MPM augmentation.
    pub n_screen: u8,
    /// Every `(mode, candidate, bits)` triple RDO evaluated for this PU.
    pub evaluated: Vec<(u8, u8, u64)>,
}

/// Encoder-side record of a whole frame.
#[derive(Debug, Clone, Default)]
pub struct FrameTrace {
    pub pus: Vec<PuTrace>,
    pub taps: Vec<TapSample>,
    /// Exact payload bits before byte padding (header excluded).
    pub payload_bits: u64,
}

/// Encodes a frame to a standalone byte stream.
pub fn encode_frame(plane: &Plane, config: &EncoderConfig) -> Result<Vec<u8>> {
    encode_frame_traced(plane, config, false).map(|(bytes, _)| bytes)
}

/// Encodes a frame and reports the per-PU trace; `collect_taps` additionally
/// records the resolved tap samples of every coded pixel (3-tap methods).
pub fn encode_frame_traced(
    plane: &Plane,
    config: &EncoderConfig,
    collect_taps: bool,
) -> Result<(Vec<u8>, FrameTrace)> {
    config.validate()?;
    if plane.width() < config.min_pu || plane.height() < config.min_pu {
        return Err(Error::FrameTooSmall {
            width: plane.width(),
            height: plane.height(),
            min_pu: config.min_pu,
        });
    }

    let padded_w = plane.width().div_ceil(config.min_pu) * config.min_pu;
    let padded_h = plane.height().div_ceil(config.min_pu) * config.min_pu;
    let padded = plane.padded_to(padded_w, padded_h);

    let mut enc = FrameEncoder {
        cfg: config.clone(),
        canvas: Canvas::new(padded_w, padded_h),
        modes: ModeMap::new(padded_w, padded_h),
        bank: CtxBank::new(),
        padded,
        collect_taps,
    };

    let mut sink = BitSink::new();
    let mut emit_bank = CtxBank::new();
    let mut trace = FrameTrace::default();

    let ctu = config.ctu_size;
    for cy in (0..padded_h).step_by(ctu as usize) {
        for cx in (0..padded_w).step_by(ctu as usize) {
            let rect = Rect::new(cx, cy, ctu);
            let (_bits, plan) = enc.plan_cu(rect);
            enc.emit_cu(&plan, rect, &mut sink, &mut emit_bank, &mut trace);
        }
    }
    debug_assert_eq!(enc.bank, emit_bank, "planning and emission diverged");
    trace.payload_bits = sink.bit_len();

    let mut out = Vec::with_capacity(HEADER_LEN + sink.bit_len() as usize / 8 + 1);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(config.method.to_u8());
    out.push(config.ctu_size as u8);
    out.push(config.min_pu as u8);
    out.extend_from_slice(&plane.width().to_be_bytes());
    out.extend_from_slice(&plane.height().to_be_bytes());
    out.extend_from_slice(&config.frame_index.to_be_bytes());
    for mode in 0..MODE_COUNT as u8 {
        for c in config.weights.get(mode).components() {
            out.push((c + 128) as u8);
        }
    }
    out.extend_from_slice(&sink.finish());
    Ok((out, trace))
}

struct FrameEncoder {
    cfg: EncoderConfig,
    padded: Plane,
    canvas: Canvas,
    modes: ModeMap,
    bank: CtxBank,
    collect_taps: bool,
}

impl FrameEncoder {
    fn fully_inside(&self, cu: Rect) -> bool {
        cu.x + cu.size <= self.padded.width() && cu.y + cu.size <= self.padded.height()
    }

    fn outside(&self, cu: Rect) -> bool {
        cu.x >= self.padded.width() || cu.y >= self.padded.height()
    }

    fn children(cu: Rect) -> [Rect; 4] {
        let half = cu.size / 2;
        [
            Rect::new(cu.x, cu.y, half),
            Rect::new(cu.x + half, cu.y, half),
            Rect::new(cu.x, cu.y + half, half),
            Rect::new(cu.x + half, cu.y + half, half),
        ]
    }

    /// Plans a CU: decides leaf-vs-split by exact bits and leaves the
    /// encoder state advanced by the chosen branch.
    fn plan_cu(&mut self, cu: Rect) -> (u64, CuPlan) {
        if self.outside(cu) {
            return (0, CuPlan::Outside);
        }
        if !self.fully_inside(cu) {
            // Forced split: geometry is known to the decoder, no bit.
            let mut bits = 0;
            let mut children = Vec::with_capacity(4);
            for child in Self::children(cu) {
                let (b, plan) = self.plan_cu(child);
                bits += b;
                children.push(plan);
            }
            return (bits, CuPlan::Split(children));
        }
        if cu.size == self.cfg.min_pu {
            let decision = self.plan_pu(cu);
            let bits = decision.bits;
            return (bits, CuPlan::Leaf(decision));
        }

        let avail_snap = self.canvas.save_region(cu);
        let mode_snap = self.modes.save_region(cu);
        let bank_snap = self.bank.clone();

        let leaf = self.plan_pu(cu);
        let leaf_bits = 1 + leaf.bits;
        let leaf_bank = self.bank.clone();

        self.canvas.restore_region(&avail_snap);
        self.modes.restore_region(&mode_snap);
        self.bank = bank_snap;

        let mut split_bits = 1u64;
        let mut children = Vec::with_capacity(4);
        for child in Self::children(cu) {
            let (b, plan) = self.plan_cu(child);
            split_bits += b;
            children.push(plan);
        }

        if leaf_bits <= split_bits {
            // Both branches mark the whole CU available with identical
            // samples; only the mode map and contexts need rewinding.
            self.modes.restore_region(&mode_snap);
            self.modes.set_pu(cu, leaf.mode);
            self.bank = leaf_bank;
            (leaf_bits, CuPlan::Leaf(leaf))
        } else {
            (split_bits, CuPlan::Split(children))
        }
    }

    fn mpms_for(&self, pu: Rect) -> [IntraMode; 3] {
        let left = (pu.x > 0).then(|| self.modes.at(pu.x - 1, pu.y)).flatten();
        let above = (pu.y > 0).then(|| self.modes.at(pu.x, pu.y - 1)).flatten();
        derive_mpms(left, above)
    }

    fn predict_full(&self, pu: Rect, mode: IntraMode, w: WeightSet) -> (Vec<u8>, Vec<i16>) {
        match self.cfg.method {
            Method::BlockHevc => {
                let pred = predict_block_hevc(&self.canvas, pu, mode);
                let residual = block_residual(&self.padded, pu, &pred);
                (pred, residual)
            }
            Method::Sap => predict_pu_pixelwise(
                &self.canvas,
                &self.padded,
                pu,
                mode,
                w,
                PixelMethod::Sap,
            ),
            _ => predict_pu_pixelwise(
                &self.canvas,
                &self.padded,
                pu,
                mode,
                w,
                PixelMethod::ThreeTap,
            ),
        }
    }

    fn sad_of(&self, pu: Rect, mode: IntraMode, w: WeightSet) -> u64 {
        match self.cfg.method {
            Method::BlockHevc => {
                let pred = predict_block_hevc(&self.canvas, pu, mode);
                sad_against_block(&self.padded, pu, &pred)
            }
            Method::Sap => {
                sad_pu_pixelwise(&self.canvas, &self.padded, pu, mode, w, PixelMethod::Sap)
            }
            _ => sad_pu_pixelwise(
                &self.canvas,
                &self.padded,
                pu,
                mode,
                w,
                PixelMethod::ThreeTap,
            ),
        }
    }

    /// Ranks all 35 modes by SAD under the active predictor (offline
    /// weights for the 3-tap methods), keeps the best N for the PU size,
    /// then appends absent MPMs.
    fn screen_modes(&self, pu: Rect, mpms: &[IntraMode; 3]) -> (Vec<IntraMode>, u8) {
        let n = n_for_size(pu.size);
        let mut scored: Vec<(u64, u8)> = IntraMode::all()
            .map(|mode| {
                let w = self.cfg.weights.get(mode.id());
                (self.sad_of(pu, mode, w), mode.id())
            })
            .collect();
        scored.sort_by_key(|&(sad, id)| (sad, id));
        let mut list: Vec<IntraMode> = scored[..n].iter().map(|&(_, id)| IntraMode::new(id)).collect();
        for &m in mpms {
            if !list.contains(&m) {
                list.push(m);
            }
        }
        (list, n as u8)
    }

    /// Widens each screened mode to its eight weight candidates, pools the
    /// SADs, and keeps the N best (mode, candidate) pairs.
    fn adaptive_search(
        &self,
        pu: Rect,
        screened: &[IntraMode],
    ) -> Vec<(IntraMode, u8, WeightSet)> {
        let n = n_for_size(pu.size);
        let mut pool: Vec<(u64, u8, u8, WeightSet)> = Vec::with_capacity(screened.len() * 8);
        for &mode in screened {
            let mut rng = prng_for_pu(self.cfg.frame_index, pu.x, pu.y, mode);
            let cands = candidate_set(self.cfg.weights.get(mode.id()), &mut rng);
            for (ci, &w) in cands.sets.iter().enumerate() {
                let sad = sad_pu_pixelwise(
                    &self.canvas,
                    &self.padded,
                    pu,
                    mode,
                    w,
                    PixelMethod::ThreeTap,
                );
                pool.push((sad, mode.id(), ci as u8, w));
            }
        }
        pool.sort_by_key(|&(sad, id, ci, _)| (sad, id, ci));
        pool.truncate(n);
        pool.into_iter()
            .map(|(_, id, ci, w)| (IntraMode::new(id), ci, w))
            .collect()
    }

    /// Full RDO over the refined candidate list: exact residual bits plus
    /// mode signaling plus the flag where it applies.
    fn rdo_select(
        &self,
        pu: Rect,
        refined: &[(IntraMode, u8, WeightSet)],
        mpms: [IntraMode; 3],
        n_screen: u8,
    ) -> PuDecision {
        debug_assert!(!refined.is_empty());
        let sc = size_class(pu.size);
        let flag_bits: u64 = if flag_applies(self.cfg.method, pu.size) { 3 } else { 0 };
        let mut best: Option<(u64, u8, u8)> = None;
        let mut winner = None;
        let mut evaluated = Vec::with_capacity(refined.len());
        for &(mode, cand, w) in refined {
            let (pred, residual) = self.predict_full(pu, mode, w);
            let seq = scan_residuals(&residual, pu, residual_scan(self.cfg.method, mode));
            let group = ctx_group(self.cfg.method, mode);
            let (res_bits, _) = cost_residual_block(self.bank.get(group, sc), &seq);
            let bits = res_bits + mode_signal_bits(mode, &mpms) + flag_bits;
            evaluated.push((mode.id(), cand, bits));
            let key = (bits, mode.id(), cand);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
                winner = Some(PuDecision {
                    mode,
                    candidate_index: cand,
                    bits,
                    prediction: pred,
                    residual,
                    mpms,
                    n_screen,
                    evaluated: Vec::new(),
                    taps: None,
                });
            }
        }
        let mut winner = winner.unwrap();
        winner.evaluated = evaluated;
        winner
    }

    fn plan_pu(&mut self, pu: Rect) -> PuDecision {
        let mpms = self.mpms_for(pu);
        let (screened, n_screen) = self.screen_modes(pu, &mpms);
        let refined: Vec<(IntraMode, u8, WeightSet)> =
            if flag_applies(self.cfg.method, pu.size) {
                self.adaptive_search(pu, &screened)
            } else {
                screened
                    .into_iter()
                    .map(|m| (m, 0, self.cfg.weights.get(m.id())))
                    .collect()
            };
        let mut decision = self.rdo_select(pu, &refined, mpms, n_screen);

        if self.collect_taps && self.cfg.method.uses_weights() {
            decision.taps = Some(self.capture_taps(pu, &decision));
        }

        // Commit: advance the live context exactly as costing did, mark the
        // region reconstructed, record the mode.
        let seq = scan_residuals(
            &decision.residual,
            pu,
            residual_scan(self.cfg.method, decision.mode),
        );
        let group = ctx_group(self.cfg.method, decision.mode);
        let sc = size_class(pu.size);
        let (_, end) = cost_residual_block(self.bank.get(group, sc), &seq);
        *self.bank.get_mut(group, sc) = end;
        self.canvas.commit_block(pu, &self.padded);
        self.modes.set_pu(pu, decision.mode);
        decision
    }

    /// Re-runs the winning 3-tap prediction recording the resolved taps.
    /// Runs before the PU commits, so the view matches coding time.
    fn capture_taps(&self, pu: Rect, decision: &PuDecision) -> Vec<TapSample> {
        let mode = decision.mode;
        let w = if decision.candidate_index == 0 {
            self.cfg.weights.get(mode.id())
        } else {
            let mut rng = prng_for_pu(self.cfg.frame_index, pu.x, pu.y, mode);
            candidate_set(self.cfg.weights.get(mode.id()), &mut rng).sets
                [decision.candidate_index as usize]
        };
        let cfg = neighbor_config(mode);
        let scan = pixelwise_scan(PixelMethod::ThreeTap, mode);
        let mut view = PuView::staged(&self.canvas, &self.padded, pu, scan);
        let mut out = Vec::with_capacity(pu.pixels() as usize);
        for idx in 0..pu.pixels() {
            view.set_progress(idx);
            let (x, y) = scan.pos(pu, idx);
            let (_, [a, b, c]) = predict_pixel_3tap_taps(&view, x, y, cfg, w);
            out.push(TapSample {
                mode: mode.id(),
                a,
                b,
                c,
                x: self.padded.get(x, y),
            });
        }
        out
    }

    fn emit_cu(
        &self,
        plan: &CuPlan,
        cu: Rect,
        sink: &mut BitSink,
        bank: &mut CtxBank,
        trace: &mut FrameTrace,
    ) {
        match plan {
            CuPlan::Outside => {}
            CuPlan::Leaf(decision) => {
                if self.fully_inside(cu) && cu.size > self.cfg.min_pu {
                    sink.push_bit(0);
                }
                self.emit_pu(decision, cu, sink, bank, trace);
            }
            CuPlan::Split(children) => {
                if self.fully_inside(cu) && cu.size > self.cfg.min_pu {
                    sink.push_bit(1);
                }
                for (child, plan) in Self::children(cu).into_iter().zip(children) {
                    self.emit_cu(plan, child, sink, bank, trace);
                }
            }
        }
    }

    fn emit_pu(
        &self,
        decision: &PuDecision,
        pu: Rect,
        sink: &mut BitSink,
        bank: &mut CtxBank,
        trace: &mut FrameTrace,
    ) {
        let start = sink.bit_len();
        signal_mode(sink, decision.mode, &decision.mpms);
        let flagged = flag_applies(self.cfg.method, pu.size);
        if flagged {
            sink.push_bits(decision.candidate_index as u32, 3);
        }
        let seq = scan_residuals(
            &decision.residual,
            pu,
            residual_scan(self.cfg.method, decision.mode),
        );
        let group = ctx_group(self.cfg.method, decision.mode);
        let ctx = bank.get_mut(group, size_class(pu.size));
        for &r in &seq {
            rice_encode(sink, ctx, map_residual(r));
        }
        let measured = sink.bit_len() - start;
        debug_assert_eq!(measured, decision.bits, "planned bits != emitted bits");
        trace.pus.push(PuTrace {
            x: pu.x,
            y: pu.y,
            size: pu.size,
            mode: decision.mode.id(),
            candidate_index: decision.candidate_index,
            flagged,
            planned_bits: decision.bits,
            measured_bits: measured,
            n_screen: decision.n_screen,
            evaluated: decision.evaluated.clone(),
        });
        if let Some(taps) = &decision.taps {
            trace.taps.extend_from_slice(taps);
        }
    }
}

/// Residuals of a raster-ordered block in the given scan order.
fn scan_residuals(residual: &[i16], pu: Rect, scan: Scan) -> Vec<i32> {
    let n = pu.size;
    (0..pu.pixels())
        .map(|idx| {
            let (x, y) = scan.pos(pu, idx);
            residual[((y - pu.y) * n + (x - pu.x)) as usize] as i32
        })
        .collect()
}

/// Per-PU record produced while decoding, for stream audits.
#[derive(Debug, Clone, Copy)]
pub struct PuAudit {
    pub x: u32,
    pub y: u32,
    pub size: u32,
    pub mode: u8,
    pub candidate_index: u8,
    pub flagged: bool,
}

/// Decodes a stream back to the original plane, bit-exactly.
pub fn decode_frame(bytes: &[u8]) -> Result<Plane> {
    decode_frame_internal(bytes, None)
}

/// Decodes a stream and reports every PU (position, size, mode, flag).
pub fn audit_stream(bytes: &[u8]) -> Result<(Plane, Vec<PuAudit>)> {
    let mut audits = Vec::new();
    let plane = decode_frame_internal(bytes, Some(&mut audits))?;
    Ok((plane, audits))
}

struct FrameDecoder<'a> {
    method: Method,
    min_pu: u32,
    frame_index: u32,
    weights: WeightTable,
    canvas: Canvas,
    modes: ModeMap,
    bank: CtxBank,
    source: BitSource<'a>,
}

fn decode_frame_internal(bytes: &[u8], mut audits: Option<&mut Vec<PuAudit>>) -> Result<Plane> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedStream("header truncated"));
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let method = Method::from_u8(bytes[5])?;
    let ctu_size = bytes[6] as u32;
    let min_pu = bytes[7] as u32;
    let be_u32 = |o: usize| u32::from_be_bytes(bytes[o..o + 4].try_into().unwrap());
    let width = be_u32(8);
    let height = be_u32(12);
    let frame_index = be_u32(16);

    if !ctu_size.is_power_of_two()
        || !min_pu.is_power_of_two()
        || min_pu < 4
        || ctu_size > 64
        || min_pu > ctu_size
    {
        return Err(Error::MalformedStream("bad partition sizes"));
    }
    if width == 0 || height == 0 || width < min_pu || height < min_pu {
        return Err(Error::MalformedStream("bad frame dimensions"));
    }
    // Every coded pixel costs at least one payload bit, which bounds the
    // credible dimensions of a stream and caps decoder allocations.
    let payload_bits = (bytes.len() - HEADER_LEN) as u64 * 8;
    let claimed = width.div_ceil(min_pu) as u64
        * min_pu as u64
        * (height.div_ceil(min_pu) as u64 * min_pu as u64);
    if claimed > payload_bits {
        return Err(Error::MalformedStream("stream too short for dimensions"));
    }

    let mut weights = WeightTable::uniform(WeightSet::new(64, 0, 0));
    for mode in 0..MODE_COUNT {
        let o = 20 + 3 * mode;
        let w = WeightSet::new(
            bytes[o] as i32 - 128,
            bytes[o + 1] as i32 - 128,
            bytes[o + 2] as i32 - 128,
        );
        if w.sum() != 64 {
            return Err(Error::MalformedStream("embedded weight table violates sum"));
        }
        weights.set(mode as u8, w);
    }

    let padded_w = width.div_ceil(min_pu) * min_pu;
    let padded_h = height.div_ceil(min_pu) * min_pu;
    let mut dec = FrameDecoder {
        method,
        min_pu,
        frame_index,
        weights,
        canvas: Canvas::new(padded_w, padded_h),
        modes: ModeMap::new(padded_w, padded_h),
        bank: CtxBank::new(),
        source: BitSource::new(&bytes[HEADER_LEN..]),
    };

    for cy in (0..padded_h).step_by(ctu_size as usize) {
        for cx in (0..padded_w).step_by(ctu_size as usize) {
            dec.decode_cu(Rect::new(cx, cy, ctu_size), &mut audits)?;
        }
    }

    let padded = Plane::from_fn(padded_w, padded_h, |x, y| dec.canvas.sample(x, y));
    Ok(padded.cropped_to(width, height))
}

impl FrameDecoder<'_> {
    fn decode_cu(&mut self, cu: Rect, audits: &mut Option<&mut Vec<PuAudit>>) -> Result<()> {
        let w = self.canvas.width();
        let h = self.canvas.height();
        if cu.x >= w || cu.y >= h {
            return Ok(());
        }
        let inside = cu.x + cu.size <= w && cu.y + cu.size <= h;
        let split = if !inside {
            true
        } else if cu.size == self.min_pu {
            false
        } else {
            self.source.read_bit()? == 1
        };
        if split {
            let half = cu.size / 2;
            for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
                self.decode_cu(Rect::new(cu.x + dx, cu.y + dy, half), audits)?;
            }
            Ok(())
        } else {
            self.decode_pu(cu, audits)
        }
    }

    fn decode_pu(&mut self, pu: Rect, audits: &mut Option<&mut Vec<PuAudit>>) -> Result<()> {
        let left = (pu.x > 0).then(|| self.modes.at(pu.x - 1, pu.y)).flatten();
        let above = (pu.y > 0).then(|| self.modes.at(pu.x, pu.y - 1)).flatten();
        let mpms = derive_mpms(left, above);
        let mode = parse_mode(&mut self.source, &mpms)?;

        let flagged = flag_applies(self.method, pu.size);
        let cand = if flagged {
            self.source.read_bits(3)? as u8
        } else {
            0
        };
        let w = if cand == 0 {
            self.weights.get(mode.id())
        } else {
            let mut rng = prng_for_pu(self.frame_index, pu.x, pu.y, mode);
            candidate_set(self.weights.get(mode.id()), &mut rng).sets[cand as usize]
        };

        let scan = residual_scan(self.method, mode);
        let group = ctx_group(self.method, mode);
        let sc = size_class(pu.size);

        let block_style = self.method == Method::BlockHevc
            || (self.method == Method::Sap && !mode.is_angular());
        if block_style {
            let pred = predict_block_hevc(&self.canvas, pu, mode);
            for idx in 0..pu.pixels() {
                let (x, y) = scan.pos(pu, idx);
                let m = rice_decode(&mut self.source, self.bank.get_mut(group, sc))?;
                let r = unmap_residual(m);
                let flat = ((y - pu.y) * pu.size + (x - pu.x)) as usize;
                let v = pred[flat] as i32 + r;
                if !(0..=255).contains(&v) {
                    return Err(Error::MalformedStream("reconstruction out of range"));
                }
                self.canvas.commit_pixel(x, y, v as u8);
            }
        } else {
            let pixel_method = if self.method == Method::Sap {
                PixelMethod::Sap
            } else {
                PixelMethod::ThreeTap
            };
            let cfg = neighbor_config(mode);
            for idx in 0..pu.pixels() {
                let (x, y) = scan.pos(pu, idx);
                let p = {
                    let mut view = PuView::live(&self.canvas, pu, scan);
                    view.set_progress(idx);
                    match pixel_method {
                        PixelMethod::Sap => predict_pixel_sap(&view, x, y, mode),
                        PixelMethod::ThreeTap => predict_pixel_3tap(&view, x, y, cfg, w),
                    }
                };
                let m = rice_decode(&mut self.source, self.bank.get_mut(group, sc))?;
                let r = unmap_residual(m);
                let v = p as i32 + r;
                if !(0..=255).contains(&v) {
                    return Err(Error::MalformedStream("reconstruction out of range"));
                }
                self.canvas.commit_pixel(x, y, v as u8);
            }
        }
        self.modes.set_pu(pu, mode);
        if let Some(list) = audits {
            list.push(PuAudit {
                x: pu.x,
                y: pu.y,
                size: pu.size,
                mode: mode.id(),
                candidate_index: cand,
                flagged,
            });
        }
        Ok(())
    }
}
