//! Command-line front end: `encode`, `decode`, `train`, and `bench`.
//!
//! Exit codes: 0 ok, 1 usage or I/O error, 2 malformed stream,
//! 3 round-trip verification failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::codec::{decode_frame, encode_frame, EncoderConfig, Method};
use crate::plane::{load_pgm, store_pgm, Plane};
use crate::trainer::{default_init_weights, stage1_train, stage2_search};
use crate::weights::WeightTable;
use crate::Error;

/// Reference average reductions reported for HM12.0-based implementations
/// of these methods, printed as a footnote for orientation.
const REFERENCE_AVERAGES: &str =
    "note: reference averages from HM12.0-based evaluations: sap 8.74, 3tap 11.55, adaptive 12.02 (percent bitrate reduction)";

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: msg.into(),
        }
    }

    fn round_trip(msg: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match e {
            Error::BadMagic | Error::UnsupportedVersion(_) | Error::MalformedStream(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

/// Runs one command. `args` excludes the program name. Output goes to
/// standard out, diagnostics to standard error; the return value is the
/// process exit code.
pub fn run(args: &[String]) -> i32 {
    let result = match args.first().map(String::as_str) {
        Some("encode") => cmd_encode(&args[1..]),
        Some("decode") => cmd_decode(&args[1..]),
        Some("train") => cmd_train(&args[1..]),
        Some("bench") => cmd_bench(&args[1..]),
        Some(other) => Err(CliError::usage(format!("unknown command '{other}'"))),
        None => Err(CliError::usage(USAGE.trim_start())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

const USAGE: &str = "
usage:
  l3tf encode --in <pgm> --out <bin> --method <block|sap|3tap|adaptive>
              [--weights <file>] [--ctu 64] [--min-pu 4] [--frame-index 0]
  l3tf decode --in <bin> --out <pgm>
  l3tf train  --corpus <dir> --out <weights file> [--stage 1|2|both]
              [--max-iters 10] [--init <weights file>]
  l3tf bench  --corpus <dir> --weights <file>
              [--methods block,sap,3tap,adaptive] [--csv <path>]
";

/// `--flag value` pairs, rejecting unknown or repeated flags.
struct Flags {
    values: BTreeMap<String, String>,
}

impl Flags {
    fn parse(args: &[String], allowed: &[&str]) -> Result<Flags, CliError> {
        let mut values = BTreeMap::new();
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let name = flag
                .strip_prefix("--")
                .ok_or_else(|| CliError::usage(format!("unexpected argument '{flag}'")))?;
            if !allowed.contains(&name) {
                return Err(CliError::usage(format!("unknown flag '--{name}'")));
            }
            let value = it
                .next()
                .ok_or_else(|| CliError::usage(format!("missing value for '--{name}'")))?;
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(CliError::usage(format!("duplicate flag '--{name}'")));
            }
        }
        Ok(Flags { values })
    }

    fn required(&self, name: &str) -> Result<&str, CliError> {
        self.values
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| CliError::usage(format!("missing required flag '--{name}'")))
    }

    fn optional(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    fn numeric<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T, CliError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::usage(format!("bad value for '--{name}': {v}"))),
        }
    }
}

fn read_plane(path: &str) -> Result<Plane, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    Ok(load_pgm(&bytes)?)
}

fn read_weights(path: &str) -> Result<WeightTable, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    Ok(WeightTable::from_text(&text)?)
}

/// Weight table for a method: required file for the 3-tap methods, the
/// built-in defaults otherwise (`--weights` is ignored by block and sap).
fn weights_for(method: Method, flags: &Flags) -> Result<WeightTable, CliError> {
    if method.uses_weights() {
        read_weights(flags.required("weights")?)
    } else {
        Ok(default_init_weights())
    }
}

fn cmd_encode(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(
        args,
        &["in", "out", "method", "weights", "ctu", "min-pu", "frame-index"],
    )?;
    let method = Method::from_name(flags.required("method")?)
        .ok_or_else(|| CliError::usage("method must be block, sap, 3tap, or adaptive"))?;
    let plane = read_plane(flags.required("in")?)?;
    let mut config = EncoderConfig::new(method, weights_for(method, &flags)?);
    config.ctu_size = flags.numeric("ctu", 64u32)?;
    config.min_pu = flags.numeric("min-pu", 4u32)?;
    config.frame_index = flags.numeric("frame-index", 0u32)?;

    let bytes = encode_frame(&plane, &config)?;
    std::fs::write(flags.required("out")?, &bytes)?;
    let bits = bytes.len() as u64 * 8;
    let bpp = bits as f64 / (plane.width() as f64 * plane.height() as f64);
    println!("bits={bits} bpp={bpp:.4}");
    Ok(())
}

fn cmd_decode(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args, &["in", "out"])?;
    let input = flags.required("in")?;
    let bytes = std::fs::read(input).map_err(|e| CliError::usage(format!("{input}: {e}")))?;
    let plane = decode_frame(&bytes)?;
    std::fs::write(flags.required("out")?, store_pgm(&plane))?;
    Ok(())
}

/// PGM files of a corpus directory, sorted by file name for determinism.
fn load_corpus(dir: &str) -> Result<Vec<(String, Plane)>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("{dir}: {e}")))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("pgm"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    let mut corpus = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let bytes = std::fs::read(&path)?;
        corpus.push((name, load_pgm(&bytes)?));
    }
    Ok(corpus)
}

fn cmd_train(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args, &["corpus", "out", "stage", "max-iters", "init"])?;
    let stage = flags.optional("stage").unwrap_or("both");
    if !["1", "2", "both"].contains(&stage) {
        return Err(CliError::usage("stage must be 1, 2, or both"));
    }
    let max_iters = flags.numeric("max-iters", 10u32)?;
    let corpus: Vec<Plane> = load_corpus(flags.required("corpus")?)?
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    if corpus.is_empty() {
        return Err(CliError::usage("corpus contains no .pgm images"));
    }
    let init = match flags.optional("init") {
        Some(path) => read_weights(path)?,
        None => default_init_weights(),
    };

    let mut weights = init;
    if stage == "1" || stage == "both" {
        let (w, report) = stage1_train(&corpus, &weights, max_iters)?;
        print!("{}", report.to_text());
        weights = w;
    }
    if stage == "2" || stage == "both" {
        let (w, report) = stage2_search(&corpus, &weights)?;
        print!("{}", report.to_text());
        weights = w;
    }
    std::fs::write(flags.required("out")?, weights.to_text())?;
    Ok(())
}

struct BenchCell {
    bits: u64,
    bpp: f64,
    reduction_pct: f64,
}

fn cmd_bench(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args, &["corpus", "weights", "methods", "csv"])?;
    let weights = read_weights(flags.required("weights")?)?;
    let corpus = load_corpus(flags.required("corpus")?)?;
    if corpus.is_empty() {
        return Err(CliError::usage("corpus contains no .pgm images"));
    }
    let methods: Vec<Method> = match flags.optional("methods") {
        None => Method::ALL.to_vec(),
        Some(selection) => {
            let mut list = Vec::new();
            for name in selection.split(',') {
                let m = Method::from_name(name.trim()).ok_or_else(|| {
                    CliError::usage(format!("unknown method '{name}' in --methods"))
                })?;
                if !list.contains(&m) {
                    list.push(m);
                }
            }
            list
        }
    };

    // The block-based method is the reduction baseline; encode it even when
    // it is not a requested column.
    let mut cells: BTreeMap<(String, &'static str), BenchCell> = BTreeMap::new();
    let mut baseline_bpp: BTreeMap<String, f64> = BTreeMap::new();
    let mut encode_methods = methods.clone();
    if !encode_methods.contains(&Method::BlockHevc) {
        encode_methods.insert(0, Method::BlockHevc);
    }

    for (name, plane) in &corpus {
        let pixels = plane.width() as f64 * plane.height() as f64;
        for &method in &encode_methods {
            let config = EncoderConfig::new(method, weights.clone());
            let bytes = encode_frame(plane, &config)?;
            let decoded = decode_frame(&bytes)?;
            if decoded != *plane {
                return Err(CliError::round_trip(format!(
                    "round trip failed for {name} with method {}",
                    method.name()
                )));
            }
            let bits = bytes.len() as u64 * 8;
            let bpp = bits as f64 / pixels;
            if method == Method::BlockHevc {
                baseline_bpp.insert(name.clone(), bpp);
            }
            cells.insert(
                (name.clone(), method.name()),
                BenchCell {
                    bits,
                    bpp,
                    reduction_pct: 0.0,
                },
            );
        }
        for &method in &encode_methods {
            let base = baseline_bpp[name];
            let cell = cells.get_mut(&(name.clone(), method.name())).unwrap();
            cell.reduction_pct = 100.0 * (1.0 - cell.bpp / base);
        }
    }

    // Table: rows are images plus the corpus average, columns the methods,
    // cells the percent reduction versus the block baseline.
    let name_width = corpus
        .iter()
        .map(|(n, _)| n.len())
        .chain(std::iter::once("Average".len()))
        .max()
        .unwrap();
    let mut table = format!("{:<name_width$}", "image");
    for m in &methods {
        let _ = write!(table, " {:>9}", m.name());
    }
    table.push('\n');
    for (name, _) in &corpus {
        let _ = write!(table, "{name:<name_width$}");
        for m in &methods {
            let cell = &cells[&(name.clone(), m.name())];
            let _ = write!(table, " {:>9.2}", cell.reduction_pct);
        }
        table.push('\n');
    }
    let _ = write!(table, "{:<name_width$}", "Average");
    for m in &methods {
        let avg = corpus
            .iter()
            .map(|(n, _)| cells[&(n.clone(), m.name())].reduction_pct)
            .sum::<f64>()
            / corpus.len() as f64;
        let _ = write!(table, " {avg:>9.2}");
    }
    table.push('\n');
    println!("{table}{REFERENCE_AVERAGES}");

    if let Some(csv_path) = flags.optional("csv") {
        let mut csv = String::from("image,method,bits,bpp,reduction_pct\n");
        for (name, _) in &corpus {
            for m in &methods {
                let cell = &cells[&(name.clone(), m.name())];
                let _ = writeln!(
                    csv,
                    "{name},{},{},{:.4},{:.2}",
                    m.name(),
                    cell.bits,
                    cell.bpp,
                    cell.reduction_pct
                );
            }
        }
        for m in &methods {
            let avg = corpus
                .iter()
                .map(|(n, _)| cells[&(n.clone(), m.name())].reduction_pct)
                .sum::<f64>()
                / corpus.len() as f64;
            let avg_bits: u64 = corpus
                .iter()
                .map(|(n, _)| cells[&(n.clone(), m.name())].bits)
                .sum::<u64>()
                / corpus.len() as u64;
            let avg_bpp = corpus
                .iter()
                .map(|(n, _)| cells[&(n.clone(), m.name())].bpp)
                .sum::<f64>()
                / corpus.len() as f64;
            let _ = writeln!(csv, "Average,{},{avg_bits},{avg_bpp:.4},{avg:.2}", m.name());
        }
        std::fs::write(Path::new(csv_path), csv)?;
    }
    Ok(())
}
