use std::fmt;

/// Errors produced by the codec, the file formats, and the trainer.
#[derive(Debug)]
pub enum Error {
    /// PGM input does not follow the binary P5 layout.
    MalformedPgm(&'static str),
    /// Bitstream does not start with the expected magic bytes.
    BadMagic,
    /// Bitstream declares a version this build does not understand.
    UnsupportedVersion(u8),
    /// Bitstream is structurally broken (truncated, inconsistent, or corrupt).
    MalformedStream(&'static str),
    /// Weight table text or embedded table violates the format contract.
    BadWeightTable(String),
    /// Encoder configuration violates its invariants.
    InvalidConfig(&'static str),
    /// Frame is smaller than the minimum prediction unit.
    FrameTooSmall {
        width: u32,
        height: u32,
        min_pu: u32,
    },
    /// Trainer was given an empty corpus.
    EmptyCorpus,
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MalformedPgm(msg) => write!(f, "malformed PGM: {msg}"),
            Error::BadMagic => write!(f, "bad magic: not an L3TF stream"),
            Error::UnsupportedVersion(v) => write!(f, "unsupported stream version {v}"),
            Error::MalformedStream(msg) => write!(f, "malformed stream: {msg}"),
            Error::BadWeightTable(msg) => write!(f, "bad weight table: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::FrameTooSmall {
                width,
                height,
                min_pu,
            } => write!(f, "frame {width}x{height} smaller than minimum PU {min_pu}"),
            Error::EmptyCorpus => write!(f, "corpus contains no images"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
