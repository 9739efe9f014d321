//! Deterministic synthetic test images.
//!
//! Everything here is a pure function of the seed, using only integer and
//! basic float arithmetic, so corpora are reproducible across platforms.

use crate::plane::Plane;
use crate::rng::Prng64;

fn unit(rng: &mut Prng64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// One octave of value noise: random lattice values interpolated bilinearly.
fn value_noise(width: u32, height: u32, cell: u32, rng: &mut Prng64) -> Vec<f64> {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| unit(rng)).collect();
    let mut out = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let fx = x as f64 / cell as f64;
            let fy = y as f64 / cell as f64;
            let ix = fx.floor() as u32;
            let iy = fy.floor() as u32;
            let tx = fx - ix as f64;
            let ty = fy - iy as f64;
            // Smoothstep weights avoid visible lattice seams.
            let sx = tx * tx * (3.0 - 2.0 * tx);
            let sy = ty * ty * (3.0 - 2.0 * ty);
            let at = |gx: u32, gy: u32| lattice[(gy * gw + gx) as usize];
            let top = at(ix, iy) * (1.0 - sx) + at(ix + 1, iy) * sx;
            let bot = at(ix, iy + 1) * (1.0 - sx) + at(ix + 1, iy + 1) * sx;
            out.push(top * (1.0 - sy) + bot * sy);
        }
    }
    out
}

/// Multi-octave value noise with soft shading, a few hard-edged shapes, and
/// faint grain: a stand-in for natural photographic content.
pub fn photo_like(width: u32, height: u32, seed: u64) -> Plane {
    let mut rng = Prng64::new(seed.wrapping_mul(0x9E37_79B9).wrapping_add(17));
    let octaves = [(32u32, 1.0f64), (16, 0.5), (8, 0.25), (4, 0.1)];
    let mut field = vec![0.0f64; (width * height) as usize];
    let mut amp_sum = 0.0;
    for &(cell, amp) in &octaves {
        let layer = value_noise(width, height, cell.min(width.max(4)), &mut rng);
        for (acc, v) in field.iter_mut().zip(layer) {
            *acc += amp * v;
        }
        amp_sum += amp;
    }

    // Gentle global illumination gradient.
    let gx = unit(&mut rng) - 0.5;
    let gy = unit(&mut rng) - 0.5;

    let mut plane = Plane::from_fn(width, height, |x, y| {
        let base = field[(y * width + x) as usize] / amp_sum;
        let shade = gx * x as f64 / width as f64 + gy * y as f64 / height as f64;
        let v = 35.0 + 185.0 * (base + 0.35 * shade).clamp(0.0, 1.0);
        v as u8
    });

    // A few hard-edged rectangles and disks over the texture.
    let shapes = 2 + (rng.next_below(3)) as usize;
    for _ in 0..shapes {
        let cx = rng.next_below(width as u64) as i64;
        let cy = rng.next_below(height as u64) as i64;
        let rw = (4 + rng.next_below((width as u64 / 3).max(2))) as i64;
        let rh = (4 + rng.next_below((height as u64 / 3).max(2))) as i64;
        let delta = rng.next_below(90) as i64 - 45;
        let disk = rng.next_below(2) == 0;
        for y in 0..height as i64 {
            for x in 0..width as i64 {
                let inside = if disk {
                    let dx = x - cx;
                    let dy = y - cy;
                    dx * dx * rh * rh + dy * dy * rw * rw <= rw * rw * rh * rh
                } else {
                    (x - cx).abs() < rw / 2 && (y - cy).abs() < rh / 2
                };
                if inside {
                    let v = plane.get(x as u32, y as u32) as i64 + delta;
                    plane.set(x as u32, y as u32, v.clamp(0, 255) as u8);
                }
            }
        }
    }

    // Faint sensor grain.
    Plane::from_fn(width, height, |x, y| {
        let v = plane.get(x, y) as i64 + rng.next_below(5) as i64 - 2;
        v.clamp(0, 255) as u8
    })
}

/// Fuzz material: constant, gradient, noise, photo-like, blocky, and edged
/// content, selected by the seed.
pub fn mixed_content(width: u32, height: u32, seed: u64) -> Plane {
    let mut rng = Prng64::new(seed ^ 0xC0FF_EE00);
    match seed % 6 {
        0 => Plane::filled(width, height, rng.next_below(256) as u8),
        1 => {
            let sx = rng.next_below(5) as u32;
            let sy = rng.next_below(5) as u32;
            Plane::from_fn(width, height, |x, y| ((x * sx + y * sy) % 256) as u8)
        }
        2 => Plane::from_fn(width, height, |_, _| rng.next_below(256) as u8),
        3 => photo_like(width, height, seed),
        4 => {
            // Blocky "screen content": constant tiles of random levels.
            let tile = 1 + rng.next_below(12) as u32;
            let levels: Vec<u8> = (0..256).map(|_| rng.next_below(256) as u8).collect();
            Plane::from_fn(width, height, |x, y| {
                let h = (x / tile).wrapping_mul(31).wrapping_add((y / tile).wrapping_mul(131));
                levels[(h % 256) as usize]
            })
        }
        _ => {
            // Smooth ramp with sparse impulse noise.
            let mut plane =
                Plane::from_fn(width, height, |x, y| ((x * 3 + y * 2) % 200 + 20) as u8);
            let impulses = (width as u64 * height as u64) / 16;
            for _ in 0..impulses {
                let x = rng.next_below(width as u64) as u32;
                let y = rng.next_below(height as u64) as u32;
                plane.set(x, y, rng.next_below(256) as u8);
            }
            plane
        }
    }
}

/// Image driven by a known 3-tap filter over (left, up-left, up) plus
/// bounded noise; trainer recovery tests check the filter is re-estimated.
pub fn three_tap_generated(
    width: u32,
    height: u32,
    seed: u64,
    weights: (i32, i32, i32),
    noise_amp: i32,
) -> Plane {
    let (w1, w2, w3) = weights;
    assert_eq!(w1 + w2 + w3, 64);
    let mut rng = Prng64::new(seed.wrapping_add(0xABCD));
    let mut plane = Plane::filled(width, height, 0);
    // Random walks with occasional jumps seed the first row and column; the
    // jumps propagate as oriented structure that keeps the taps
    // distinguishable for estimation.
    let step = |rng: &mut Prng64, v: i64| -> i64 {
        let jump = if rng.next_below(10) == 0 {
            rng.next_below(81) as i64 - 40
        } else {
            rng.next_below(9) as i64 - 4
        };
        (v + jump).clamp(8, 248)
    };
    let mut v = 90 + rng.next_below(80) as i64;
    for x in 0..width {
        v = step(&mut rng, v);
        plane.set(x, 0, v as u8);
    }
    v = plane.get(0, 0) as i64;
    for y in 1..height {
        v = step(&mut rng, v);
        plane.set(0, y, v as u8);
    }
    for y in 1..height {
        for x in 1..width {
            let a = plane.get(x - 1, y) as i64;
            let b = plane.get(x - 1, y - 1) as i64;
            let c = plane.get(x, y - 1) as i64;
            let noise = if noise_amp > 0 {
                rng.next_below(2 * noise_amp as u64 + 1) as i64 - noise_amp as i64
            } else {
                0
            };
            let p = (w1 as i64 * a + w2 as i64 * b + w3 as i64 * c + 32) >> 6;
            plane.set(x, y, (p + noise).clamp(0, 255) as u8);
        }
    }
    plane
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(photo_like(48, 48, 7), photo_like(48, 48, 7));
        assert_eq!(mixed_content(33, 21, 11), mixed_content(33, 21, 11));
        assert_ne!(photo_like(48, 48, 7), photo_like(48, 48, 8));
    }

    #[test]
    fn photo_like_uses_a_wide_range() {
        let p = photo_like(128, 128, 3);
        let min = *p.samples().iter().min().unwrap();
        let max = *p.samples().iter().max().unwrap();
        assert!(max - min > 60, "expected contrast, got {min}..{max}");
    }

    #[test]
    fn three_tap_generated_follows_its_filter() {
        let p = three_tap_generated(32, 32, 1, (48, 8, 8), 0);
        for y in 1..32 {
            for x in 1..32 {
                let a = p.get(x - 1, y) as i64;
                let b = p.get(x - 1, y - 1) as i64;
                let c = p.get(x, y - 1) as i64;
                let expect = ((48 * a + 8 * b + 8 * c + 32) >> 6).clamp(0, 255) as u8;
                assert_eq!(p.get(x, y), expect);
            }
        }
    }
}
