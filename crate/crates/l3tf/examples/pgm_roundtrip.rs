//! File-level flow through the PGM format and the CLI plumbing: write a
//! PGM, encode it to a stream file, decode it back, compare byte-for-byte.
//!
//! ```text
//! cargo run --release -p l3tf --example pgm_roundtrip
//! ```

use l3tf::cli;
use l3tf::plane::{load_pgm, store_pgm};
use l3tf::synth;

fn main() {
    let dir = std::env::temp_dir().join(format!("l3tf-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create temp dir");
    let src = dir.join("input.pgm");
    let bin = dir.join("input.l3tf");
    let out = dir.join("decoded.pgm");
    let weights = dir.join("weights.txt");

    let plane = synth::photo_like(120, 96, 5);
    std::fs::write(&src, store_pgm(&plane)).expect("write pgm");
    std::fs::write(
        &weights,
        l3tf::trainer::default_init_weights().to_text(),
    )
    .expect("write weights");

    let arg = |s: &std::path::Path| s.to_string_lossy().into_owned();
    let code = cli::run(&[
        "encode".into(),
        "--in".into(),
        arg(&src),
        "--out".into(),
        arg(&bin),
        "--method".into(),
        "3tap".into(),
        "--weights".into(),
        arg(&weights),
    ]);
    assert_eq!(code, 0, "encode must succeed");

    let code = cli::run(&[
        "decode".into(),
        "--in".into(),
        arg(&bin),
        "--out".into(),
        arg(&out),
    ]);
    assert_eq!(code, 0, "decode must succeed");

    let original = std::fs::read(&src).unwrap();
    let decoded = std::fs::read(&out).unwrap();
    assert_eq!(original, decoded, "PGM payload must round trip byte-exactly");
    assert_eq!(load_pgm(&decoded).unwrap(), plane);

    println!("wrote {}", src.display());
    println!("stream {} ({} bytes)", bin.display(), std::fs::metadata(&bin).unwrap().len());
    println!("decoded file is byte-identical to the source PGM");

    let _ = std::fs::remove_dir_all(&dir);
}
