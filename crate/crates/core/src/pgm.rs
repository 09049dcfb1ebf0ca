// SPDX-License-Identifier: Apache-2.0

//! Binary greyscale (P5) image output for map dumps.

use std::io::{self, Write};
use std::path::Path;

use crate::num::Scalar;

/// Encodes a row-major `w` x `h` grid, `data[j * w + i]`, as P5. Values are
/// scaled linearly from `[min, max]` to `[0, 255]`; a constant grid maps to
/// 0. Row `j = 0` is written last so +y points up in viewers. Non-finite
/// values are written as 0.
pub fn encode<T: Scalar>(data: &[T], w: usize, h: usize) -> Vec<u8> {
    assert_eq!(data.len(), w * h, "pgm grid size");
    let finite = data.iter().map(|v| v.as_f64()).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for j in (0..h).rev() {
        for i in 0..w {
            let v = data[j * w + i].as_f64();
            let px = if v.is_finite() && span > 0.0 {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            out.push(px);
        }
    }
    out
}

pub fn write<T: Scalar>(path: &Path, data: &[T], w: usize, h: usize) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode(data, w, h))?;
    f.flush()
}
