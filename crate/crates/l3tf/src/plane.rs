//! 8-bit grayscale raster and binary PGM (P5) I/O.

use crate::{Error, Result};

/// Row-major 8-bit sample raster. The unit of encoding and reconstruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl Plane {
    /// Builds a plane from raw samples. Panics if the sample count does not
    /// match `width * height` or a dimension is zero; planes are constructed
    /// by trusted code paths and this is a programming error, not input.
    pub fn new(width: u32, height: u32, samples: Vec<u8>) -> Plane {
        assert!(width > 0 && height > 0, "plane dimensions must be nonzero");
        assert_eq!(
            samples.len(),
            width as usize * height as usize,
            "sample count must equal width*height"
        );
        Plane {
            width,
            height,
            samples,
        }
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Plane {
        Plane::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Plane {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Plane::new(width, height, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize] = v;
    }

    /// Extends the raster to `(new_w, new_h)` by replicating the last column
    /// and row. Used to round frames up to a multiple of the minimum PU size.
    pub fn padded_to(&self, new_w: u32, new_h: u32) -> Plane {
        assert!(new_w >= self.width && new_h >= self.height);
        if new_w == self.width && new_h == self.height {
            return self.clone();
        }
        Plane::from_fn(new_w, new_h, |x, y| {
            self.get(x.min(self.width - 1), y.min(self.height - 1))
        })
    }

    /// Returns the top-left `w x h` sub-raster.
    pub fn cropped_to(&self, w: u32, h: u32) -> Plane {
        assert!(w <= self.width && h <= self.height);
        if w == self.width && h == self.height {
            return self.clone();
        }
        Plane::from_fn(w, h, |x, y| self.get(x, y))
    }
}

/// Parses a binary PGM (P5, maxval 255). Header comments starting with `#`
/// are skipped. Payloads shorter than `width*height` are rejected.
pub fn load_pgm(bytes: &[u8]) -> Result<Plane> {
    let mut pos = 0usize;

    let magic = take_token(bytes, &mut pos).ok_or(Error::MalformedPgm("missing magic"))?;
    if magic != b"P5" {
        return Err(Error::MalformedPgm("not a binary PGM (expected P5)"));
    }
    let width = parse_dim(take_token(bytes, &mut pos), "width")?;
    let height = parse_dim(take_token(bytes, &mut pos), "height")?;
    let maxval = parse_dim(take_token(bytes, &mut pos), "maxval")?;
    if maxval != 255 {
        return Err(Error::MalformedPgm("maxval must be 255"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedPgm("missing separator before payload")),
    }

    let count = width as usize * height as usize;
    let payload = bytes
        .get(pos..pos + count)
        .ok_or(Error::MalformedPgm("truncated payload"))?;
    Ok(Plane::new(width, height, payload.to_vec()))
}

/// Serializes a plane as binary PGM. `load_pgm(store_pgm(p)) == p`.
pub fn store_pgm(plane: &Plane) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", plane.width(), plane.height());
    let mut out = Vec::with_capacity(header.len() + plane.samples().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(plane.samples());
    out
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn take_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(&bytes[start..*pos])
    } else {
        None
    }
}

fn parse_dim(token: Option<&[u8]>, what: &'static str) -> Result<u32> {
    let token = token.ok_or(Error::MalformedPgm("truncated header"))?;
    let s = std::str::from_utf8(token).map_err(|_| Error::MalformedPgm("non-ascii header"))?;
    let v: u32 = s.parse().map_err(|_| Error::MalformedPgm("bad header number"))?;
    if v == 0 && what != "maxval" {
        return Err(Error::MalformedPgm("zero dimension"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_p5() {
        let bytes = b"P5\n2 2\n255\n\x00\xff\x80\x40";
        let p = load_pgm(bytes).unwrap();
        assert_eq!((p.width(), p.height()), (2, 2));
        assert_eq!(p.samples(), &[0, 255, 128, 64]);
    }

    #[test]
    fn skips_header_comments() {
        let with = b"P5\n# c\n2 2\n255\n\x01\x02\x03\x04";
        let without = b"P5\n2 2\n255\n\x01\x02\x03\x04";
        assert_eq!(load_pgm(with).unwrap(), load_pgm(without).unwrap());
    }

    #[test]
    fn rejects_truncated_payload() {
        let bytes = b"P5\n2 2\n255\n\x01\x02\x03";
        assert!(matches!(
            load_pgm(bytes),
            Err(Error::MalformedPgm("truncated payload"))
        ));
    }

    #[test]
    fn rejects_wrong_maxval_and_magic() {
        assert!(load_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(load_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(load_pgm(b"P5\n0 2\n255\n").is_err());
    }

    #[test]
    fn stores_expected_layout() {
        let p = Plane::new(1, 1, vec![7]);
        let bytes = store_pgm(&p);
        assert!(bytes.starts_with(b"P5\n1 1\n255\n"));
        assert_eq!(bytes.last(), Some(&7));

        let p = Plane::new(2, 1, vec![0, 255]);
        let bytes = store_pgm(&p);
        assert!(bytes.starts_with(b"P5\n2 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
    }

    #[test]
    fn pad_then_crop_is_identity() {
        let p = Plane::from_fn(5, 3, |x, y| (x * 7 + y * 13) as u8);
        let padded = p.padded_to(8, 4);
        assert_eq!(padded.get(7, 3), p.get(4, 2));
        assert_eq!(padded.cropped_to(5, 3), p);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// PGM round trip is the identity on valid planes.
            #[test]
            fn pgm_round_trip(
                w in 1u32..40,
                h in 1u32..40,
                seed in 0u64..u64::MAX,
            ) {
                let mut state = seed;
                let plane = Plane::from_fn(w, h, |_, _| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (state >> 33) as u8
                });
                prop_assert_eq!(load_pgm(&store_pgm(&plane)).unwrap(), plane);
            }
        }
    }
}
