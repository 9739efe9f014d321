//! Offline two-stage weight optimization.
//!
//! Stage 1 alternates between encoding the training corpus with the current
//! weights, collecting (taps, pixel) samples per mode from the committed
//! decisions, and refitting each mode by constrained least squares. Stage 2
//! is a greedy bitrate descent over the six single-step weight perturbations
//! per mode, using full corpus re-encodes as the cost oracle.

use crate::codec::{
    encode_frame_traced, perturbation_candidates, EncoderConfig, Method,
};
use crate::modes::{IntraMode, MODE_COUNT};
use crate::plane::Plane;
use crate::predict::neighbor_config;
use crate::weights::{WeightSet, WeightTable};
use crate::{Error, Result};

/// One training sample: resolved tap values and the coded pixel.
#[derive(Debug, Clone, Copy)]
pub struct SampleRec {
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub x: u8,
}

/// Per-mode sample records collected from a training encode.
#[derive(Debug, Clone)]
pub struct SampleLog {
    pub by_mode: Vec<Vec<SampleRec>>,
}

impl SampleLog {
    fn new() -> SampleLog {
        SampleLog {
            by_mode: vec![Vec::new(); MODE_COUNT],
        }
    }

    pub fn total(&self) -> usize {
        self.by_mode.iter().map(Vec::len).sum()
    }
}

/// Stage-1 trace: corpus bitrate per iteration (index 0 is the initial
/// table) and which iterate won.
#[derive(Debug, Clone, Default)]
pub struct Stage1Report {
    pub bitrates: Vec<u64>,
    pub best_iteration: usize,
    /// Sample count per mode at each collection pass.
    pub records_per_mode: Vec<[usize; MODE_COUNT]>,
}

/// Stage-2 trace: every acceptance strictly lowers the corpus bitrate.
#[derive(Debug, Clone, Default)]
pub struct Stage2Report {
    pub initial_bits: u64,
    pub final_bits: u64,
    pub passes: u32,
    pub accepts: Vec<Stage2Accept>,
}

#[derive(Debug, Clone, Copy)]
pub struct Stage2Accept {
    pub pass: u32,
    pub mode: u8,
    /// Perturbation row 1..=6.
    pub candidate: u8,
    pub bits: u64,
}

impl Stage1Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, bits) in self.bitrates.iter().enumerate() {
            out.push_str(&format!("stage1 iter={i} bits={bits}\n"));
        }
        out.push_str(&format!(
            "stage1 best iter={} bits={}\n",
            self.best_iteration, self.bitrates[self.best_iteration]
        ));
        out
    }
}

impl Stage2Report {
    pub fn to_text(&self) -> String {
        let mut out = format!("stage2 initial bits={}\n", self.initial_bits);
        for a in &self.accepts {
            out.push_str(&format!(
                "stage2 pass={} mode={} candidate={} bits={} accepted\n",
                a.pass, a.mode, a.candidate, a.bits
            ));
        }
        out.push_str(&format!(
            "stage2 final bits={} passes={}\n",
            self.final_bits, self.passes
        ));
        out
    }
}

/// Exact payload bits of encoding the whole corpus with the 3-tap offline
/// method under `weights`. The training objective for both stages.
pub fn corpus_payload_bits(corpus: &[Plane], weights: &WeightTable) -> Result<u64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0;
    for (i, plane) in corpus.iter().enumerate() {
        let mut cfg = EncoderConfig::new(Method::ThreeTapOffline, weights.clone());
        cfg.frame_index = i as u32;
        let (_, trace) = encode_frame_traced(plane, &cfg, false)?;
        total += trace.payload_bits;
    }
    Ok(total)
}

/// Encodes every corpus image with the current weights and records, for
/// every coded pixel, the chosen mode, the three resolved taps, and the
/// pixel value.
pub fn collect_samples(corpus: &[Plane], weights: &WeightTable) -> Result<SampleLog> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut log = SampleLog::new();
    for (i, plane) in corpus.iter().enumerate() {
        let mut cfg = EncoderConfig::new(Method::ThreeTapOffline, weights.clone());
        cfg.frame_index = i as u32;
        let (_, trace) = encode_frame_traced(plane, &cfg, true)?;
        for t in trace.taps {
            log.by_mode[t.mode as usize].push(SampleRec {
                a: t.a,
                b: t.b,
                c: t.c,
                x: t.x,
            });
        }
    }
    Ok(log)
}

/// Constrained least squares for one mode: minimize the squared prediction
/// error subject to the weights summing to one, by substituting
/// `rho3 = 1 - rho1 - rho2` into two-variable normal equations. The result
/// is scaled by 64 with `rho3` fixed so the integer sum stays exact.
///
/// Returns `None` (keep the previous weights) for fewer than 3 records, a
/// singular normal matrix, or a fit outside the storable range.
pub fn ls_fit_mode(records: &[SampleRec]) -> Option<WeightSet> {
    if records.len() < 3 {
        return None;
    }
    let (mut suu, mut svv, mut suv, mut sut, mut svt) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for r in records {
        let u = r.a as f64 - r.c as f64;
        let v = r.b as f64 - r.c as f64;
        let t = r.x as f64 - r.c as f64;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        sut += u * t;
        svt += v * t;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-9 {
        return None;
    }
    let rho1 = (sut * svv - svt * suv) / det;
    let rho2 = (svt * suu - sut * suv) / det;
    let q1 = (rho1 * 64.0).round() as i32;
    let q2 = (rho2 * 64.0).round() as i32;
    let w = WeightSet::new(q1, q2, 64 - q1 - q2);
    if w.storable() {
        Some(w)
    } else {
        None
    }
}

/// Initial table: the two straddling taps of each angular mode receive the
/// two-tap interpolation split implied by the mode's fractional
/// displacement, doubled to scale 64; the remaining tap gets 0. Modes whose
/// projection lands exactly on a tap copy it. Planar and DC start near
/// uniform.
pub fn default_init_weights() -> WeightTable {
    let mut table = WeightTable::uniform(WeightSet::new(22, 21, 21));
    for mode in IntraMode::all().filter(|m| m.is_angular()) {
        let cfg = neighbor_config(mode);
        let angle = mode.angle();
        let i = angle >> 5;
        let f = angle & 31;
        let (n0, n1) = if mode.id() >= 18 {
            ((i, -1), (i + 1, -1))
        } else {
            ((-1, i), (-1, i + 1))
        };
        let tap_pos = |target: (i32, i32)| {
            cfg.taps
                .iter()
                .position(|&t| t == target)
                .expect("straddling neighbor is one of the group's taps")
        };
        let mut comps = [0i32; 3];
        comps[tap_pos(n0)] += 2 * (32 - f);
        if f != 0 {
            comps[tap_pos(n1)] += 2 * f;
        }
        table.set(mode.id(), WeightSet::from_components(comps));
    }
    table
}

/// Stage 1: iterate collect -> fit -> measure until the corpus bitrate
/// stops improving or `max_iters` is reached. Returns the weights of the
/// best-bitrate iteration, never blindly the last one.
pub fn stage1_train(
    corpus: &[Plane],
    init: &WeightTable,
    max_iters: u32,
) -> Result<(WeightTable, Stage1Report)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if max_iters < 1 {
        return Err(Error::InvalidConfig("max_iters must be at least 1"));
    }
    let mut report = Stage1Report::default();
    let init_bits = corpus_payload_bits(corpus, init)?;
    report.bitrates.push(init_bits);
    let mut best = (init_bits, init.clone(), 0usize);
    let mut current = init.clone();

    for iter in 1..=max_iters {
        let log = collect_samples(corpus, &current)?;
        let mut counts = [0usize; MODE_COUNT];
        let mut next = current.clone();
        for (mode, records) in log.by_mode.iter().enumerate() {
            counts[mode] = records.len();
            if let Some(w) = ls_fit_mode(records) {
                next.set(mode as u8, w);
            }
        }
        report.records_per_mode.push(counts);
        let bits = corpus_payload_bits(corpus, &next)?;
        report.bitrates.push(bits);
        let improved = bits < best.0;
        if improved {
            best = (bits, next.clone(), iter as usize);
        }
        current = next;
        if !improved {
            break;
        }
    }
    report.best_iteration = best.2;
    Ok((best.1, report))
}

/// Stage 2: greedy bitrate descent. For every mode in turn, try the six
/// single-step perturbations by re-encoding the whole corpus, accept the
/// best candidate only if it strictly lowers the bitrate, and repeat full
/// passes while a pass improved anything.
pub fn stage2_search(
    corpus: &[Plane],
    weights: &WeightTable,
) -> Result<(WeightTable, Stage2Report)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut w = weights.clone();
    let mut b_opt = corpus_payload_bits(corpus, &w)?;
    let mut report = Stage2Report {
        initial_bits: b_opt,
        ..Stage2Report::default()
    };

    let mut pass = 0u32;
    loop {
        pass += 1;
        let pass_start_bits = b_opt;
        for mode in 0..MODE_COUNT as u8 {
            let mut best_cand: Option<(u64, u8, WeightSet)> = None;
            for (row, cand) in perturbation_candidates(w.get(mode)).into_iter().enumerate() {
                if !cand.storable() {
                    continue;
                }
                let mut trial = w.clone();
                trial.set(mode, cand);
                let bits = corpus_payload_bits(corpus, &trial)?;
                let row = row as u8 + 1;
                if best_cand.is_none_or(|(bb, br, _)| (bits, row) < (bb, br)) {
                    best_cand = Some((bits, row, cand));
                }
            }
            if let Some((bits, row, cand)) = best_cand {
                if bits < b_opt {
                    b_opt = bits;
                    w.set(mode, cand);
                    report.accepts.push(Stage2Accept {
                        pass,
                        mode,
                        candidate: row,
                        bits,
                    });
                }
            }
        }
        if b_opt >= pass_start_bits {
            break;
        }
    }
    report.final_bits = b_opt;
    report.passes = pass;
    Ok((w, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng64;
    use crate::synth;

    fn spanning_records(n: usize, seed: u64, f: impl Fn(i32, i32, i32) -> i32) -> Vec<SampleRec> {
        let mut rng = Prng64::new(seed);
        (0..n)
            .map(|_| {
                let a = 40 + rng.next_below(160) as i32;
                let b = 40 + rng.next_below(160) as i32;
                let c = 40 + rng.next_below(160) as i32;
                SampleRec {
                    a: a as u8,
                    b: b as u8,
                    c: c as u8,
                    x: f(a, b, c).clamp(0, 255) as u8,
                }
            })
            .collect()
    }

    #[test]
    fn default_weights_are_valid_and_directional() {
        let table = default_init_weights();
        table.validate().unwrap();
        assert_eq!(table.get(0), WeightSet::new(22, 21, 21));
        assert_eq!(table.get(1), WeightSet::new(22, 21, 21));
        // Pure directions copy the tap the projection lands on.
        assert_eq!(table.get(10), WeightSet::new(64, 0, 0));
        assert_eq!(table.get(2), WeightSet::new(64, 0, 0));
        assert_eq!(table.get(26), WeightSet::new(0, 64, 0));
        assert_eq!(table.get(34), WeightSet::new(0, 64, 0));
        assert_eq!(table.get(18), WeightSet::new(0, 64, 0));
        // Fractional displacements split between the straddling taps.
        assert_eq!(table.get(3), WeightSet::new(52, 12, 0));
        assert_eq!(table.get(19), WeightSet::new(52, 12, 0));
        for mode in IntraMode::all() {
            assert_eq!(table.get(mode.id()).sum(), 64);
            assert!(table.get(mode.id()).storable());
        }
    }

    #[test]
    fn ls_fit_recovers_exact_relations() {
        // x == a on spanning data.
        let recs = spanning_records(60, 1, |a, _, _| a);
        assert_eq!(ls_fit_mode(&recs), Some(WeightSet::new(64, 0, 0)));

        // x == (a + b) / 2, with components forced even so the mean is exact.
        let mut recs = spanning_records(60, 2, |a, b, _| (a + b) / 2);
        for r in &mut recs {
            r.a &= !1;
            r.b &= !1;
            r.x = ((r.a as i32 + r.b as i32) / 2) as u8;
        }
        assert_eq!(ls_fit_mode(&recs), Some(WeightSet::new(32, 32, 0)));
    }

    #[test]
    fn ls_fit_degenerate_cases_fall_back() {
        assert_eq!(ls_fit_mode(&[]), None);
        let two = spanning_records(2, 3, |a, _, _| a);
        assert_eq!(ls_fit_mode(&two), None);
        let constant: Vec<SampleRec> = (0..50)
            .map(|_| SampleRec {
                a: 100,
                b: 100,
                c: 100,
                x: 100,
            })
            .collect();
        assert_eq!(ls_fit_mode(&constant), None);
    }

    /// The quantized fit stays within the provable quantization bound of the
    /// brute-force integer grid optimum.
    #[test]
    fn ls_fit_matches_grid_search_oracle() {
        let sse = |recs: &[SampleRec], w: WeightSet| -> f64 {
            recs.iter()
                .map(|r| {
                    let p = (w.rho1 as f64 * r.a as f64
                        + w.rho2 as f64 * r.b as f64
                        + w.rho3 as f64 * r.c as f64)
                        / 64.0;
                    let d = r.x as f64 - p;
                    d * d
                })
                .sum()
        };
        for seed in 0..8u64 {
            let mut rng = Prng64::new(seed * 31 + 5);
            let recs: Vec<SampleRec> = (0..50)
                .map(|_| {
                    let a = 60 + rng.next_below(120) as i32;
                    let b = 60 + rng.next_below(120) as i32;
                    let c = 60 + rng.next_below(120) as i32;
                    let x = (3 * a + 2 * b + 3 * c) / 8 + rng.next_below(7) as i32 - 3;
                    SampleRec {
                        a: a as u8,
                        b: b as u8,
                        c: c as u8,
                        x: x.clamp(0, 255) as u8,
                    }
                })
                .collect();
            let fit = ls_fit_mode(&recs).unwrap();

            // Brute-force grid: all triples summing to 64, components in
            // [-64, 128].
            let mut best = f64::INFINITY;
            for r1 in -64..=128 {
                for r2 in -64..=128 {
                    let r3 = 64 - r1 - r2;
                    if !(-64..=128).contains(&r3) {
                        continue;
                    }
                    let s = sse(&recs, WeightSet::new(r1, r2, r3));
                    if s < best {
                        best = s;
                    }
                }
            }

            // Rounding each of rho1, rho2 by <= 0.5/64 changes the SSE by at
            // most the quadratic form of the normal matrix at that radius.
            let (mut suu, mut svv, mut suv) = (0.0f64, 0.0, 0.0);
            for r in &recs {
                let u = r.a as f64 - r.c as f64;
                let v = r.b as f64 - r.c as f64;
                suu += u * u;
                svv += v * v;
                suv += u * v;
            }
            let bound = (0.5 / 64.0) * (0.5 / 64.0) * (suu + svv + 2.0 * suv.abs());
            let got = sse(&recs, fit);
            assert!(
                got <= best + bound + 1e-6,
                "seed {seed}: fit SSE {got} vs grid {best} (+{bound})"
            );
        }
    }

    #[test]
    fn collect_samples_one_record_per_pixel() {
        let plane = synth::mixed_content(4, 4, 13);
        let weights = default_init_weights();
        let log = collect_samples(&[plane], &weights).unwrap();
        assert_eq!(log.total(), 16);
        let log2 = collect_samples(&[synth::mixed_content(4, 4, 13)], &weights).unwrap();
        for m in 0..MODE_COUNT {
            assert_eq!(log.by_mode[m].len(), log2.by_mode[m].len());
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let weights = default_init_weights();
        assert!(matches!(
            collect_samples(&[], &weights),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            stage1_train(&[], &weights, 5),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            stage2_search(&[], &weights),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn stage1_returns_best_iterate_and_recovers_filter() {
        let corpus: Vec<_> = (0..4)
            .map(|i| synth::three_tap_generated(64, 64, i, (48, 8, 8), 2))
            .collect();
        let init = default_init_weights();
        let (trained, report) = stage1_train(&corpus, &init, 6).unwrap();
        // Returned weights correspond to the argmin bitrate iterate.
        let min_bits = *report.bitrates.iter().min().unwrap();
        assert_eq!(report.bitrates[report.best_iteration], min_bits);
        assert_eq!(corpus_payload_bits(&corpus, &trained).unwrap(), min_bits);
        // The dominant fitted mode follows the generating filter.
        let last = report.records_per_mode.last().unwrap();
        let busiest = (0..MODE_COUNT).max_by_key(|&m| last[m]).unwrap();
        assert!(last[busiest] >= 500, "busiest mode has {} records", last[busiest]);
        let w = trained.get(busiest as u8);
        assert!(
            (w.rho1 - 48).abs() <= 2 && (w.rho2 - 8).abs() <= 2 && (w.rho3 - 8).abs() <= 2,
            "mode {busiest} fitted {:?}",
            w.components()
        );
    }

    #[test]
    fn stage2_descends_and_is_idempotent_at_a_minimum() {
        let corpus: Vec<_> = (0..2)
            .map(|i| synth::photo_like(32, 32, 40 + i))
            .collect();
        let (w1, _) = stage1_train(&corpus, &default_init_weights(), 3).unwrap();
        let (w2, report) = stage2_search(&corpus, &w1).unwrap();
        assert!(report.final_bits <= report.initial_bits);
        let mut prev = report.initial_bits;
        for a in &report.accepts {
            assert!(a.bits < prev, "acceptance must strictly descend");
            prev = a.bits;
        }
        // Re-running on its own output accepts nothing.
        let (w3, report2) = stage2_search(&corpus, &w2).unwrap();
        assert_eq!(w3, w2);
        assert!(report2.accepts.is_empty());
        assert_eq!(report2.passes, 1);
    }
}
