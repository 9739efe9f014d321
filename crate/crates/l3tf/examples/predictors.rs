//! Tour of the prediction families on a small block: block-based intra
//! prediction, sample-based angular prediction (SAP), and 3-tap filtering.
//!
//! ```text
//! cargo run --release -p l3tf --example predictors
//! ```

use l3tf::canvas::{Canvas, Rect};
use l3tf::modes::IntraMode;
use l3tf::predict::{
    neighbor_config, predict_block_hevc, predict_pu_pixelwise, PixelMethod,
};
use l3tf::synth;
use l3tf::weights::WeightSet;

fn show_block(label: &str, block: &[u8], n: usize) {
    println!("{label}:");
    for y in 0..n {
        let row: Vec<String> = (0..n).map(|x| format!("{:>4}", block[y * n + x])).collect();
        println!("  {}", row.join(""));
    }
}

fn main() {
    // Reconstruct the whole left/top context so the 8x8 PU at (8, 8) has
    // real references.
    let image = synth::photo_like(24, 24, 7);
    let mut canvas = Canvas::new(24, 24);
    canvas.commit_block(Rect::new(0, 0, 24), &image);
    let pu = Rect::new(8, 8, 8);

    show_block(
        "source block",
        &(0..64u32)
            .map(|i| image.get(8 + i % 8, 8 + i / 8))
            .collect::<Vec<_>>(),
        8,
    );

    for mode_id in [26u8, 10, 18] {
        let mode = IntraMode::new(mode_id);
        let block = predict_block_hevc(&canvas, pu, mode);
        show_block(&format!("block-based prediction, mode {mode_id}"), &block, 8);

        let (sap, _) = predict_pu_pixelwise(
            &canvas,
            &image,
            pu,
            mode,
            WeightSet::new(64, 0, 0),
            PixelMethod::Sap,
        );
        show_block(&format!("SAP (pixel-wise), mode {mode_id}"), &sap, 8);
    }

    // The 3-tap filter mixes three causal neighbors per pixel; the tap
    // positions depend on the mode group.
    for (mode_id, w) in [(10u8, WeightSet::new(48, 8, 8)), (30, WeightSet::new(20, 34, 10))] {
        let mode = IntraMode::new(mode_id);
        let cfg = neighbor_config(mode);
        println!(
            "mode {mode_id}: taps {:?}, weights {:?}/64",
            cfg.taps,
            w.components()
        );
        let (pred, residual) =
            predict_pu_pixelwise(&canvas, &image, pu, mode, w, PixelMethod::ThreeTap);
        show_block(&format!("3-tap prediction, mode {mode_id}"), &pred, 8);
        let sad: u64 = residual.iter().map(|r| r.unsigned_abs() as u64).sum();
        println!("  SAD vs source: {sad}\n");
    }
}
