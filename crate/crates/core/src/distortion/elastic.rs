use rand::Rng;

use crate::clip::Frame;
use crate::error::{Error, Result};
use crate::rng;

/// Per-pixel displacement in pixels, row-major `H × W` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub height: usize,
    pub width: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            dx: vec![0.0; height * width],
            dy: vec![0.0; height * width],
        }
    }

    pub fn constant(height: usize, width: usize, dx: f64, dy: f64) -> Self {
        Self {
            height,
            width,
            dx: vec![dx; height * width],
            dy: vec![dy; height * width],
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.dx
            .iter()
            .zip(&self.dy)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0, f64::max)
    }
}

/// Symmetric reflection: `-1 → 0`, `n → n-1`, periodic with period `2n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable smoothing with reflected borders.
fn smooth(plane: &[f64], height: usize, width: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, w)| w * row[reflect(x as isize + i as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, w)| w * tmp[reflect(y as isize + i as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Random smooth displacement field.
///
/// `alpha` and `sigma` are fractions of `min(height, width)`: the field's largest displacement
/// is exactly `alpha · min(H, W)` pixels and the noise is smoothed with a Gaussian of standard
/// deviation `sigma · min(H, W)` pixels, truncated at three standard deviations.
pub fn elastic_field(
    height: usize,
    width: usize,
    alpha: f64,
    sigma: f64,
    seed: u64,
) -> Result<DisplacementField> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidInput("field must be non-empty".into()));
    }
    if alpha == 0.0 {
        return Ok(DisplacementField::zeros(height, width));
    }
    let side = height.min(width) as f64;
    let mut rng = rng::seeded(seed);
    let n = height * width;
    let noise_x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let noise_y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let kernel = gaussian_kernel(sigma * side);
    let mut field = DisplacementField {
        height,
        width,
        dx: smooth(&noise_x, height, width, &kernel),
        dy: smooth(&noise_y, height, width, &kernel),
    };
    let max = field.max_magnitude();
    if max > 0.0 {
        let scale = alpha * side / max;
        field.dx.iter_mut().for_each(|v| *v *= scale);
        field.dy.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(field)
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}

/// Bilinear backward warp: output pixel `(x, y)` samples the input at `(x − dx, y − dy)`,
/// with reflected borders. Results are rounded half-to-even.
pub fn warp_frame(frame: &Frame, field: &DisplacementField) -> Result<Frame> {
    let (h, w, c) = (frame.height(), frame.width(), frame.channels());
    if field.height != h || field.width != w {
        return Err(Error::dims(
            format!("field {h}x{w}"),
            format!("field {}x{}", field.height, field.width),
        ));
    }
    let mut out = Vec::with_capacity(h * w * c);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let sx = x as f64 - field.dx[i];
            let sy = y as f64 - field.dy[i];
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let xa = reflect(x0 as isize, w);
            let xb = reflect(x0 as isize + 1, w);
            let ya = reflect(y0 as isize, h);
            let yb = reflect(y0 as isize + 1, h);
            for ch in 0..c {
                let v = (1.0 - fy) * ((1.0 - fx) * frame.get(ya, xa, ch) as f64 + fx * frame.get(ya, xb, ch) as f64)
                    + fy * ((1.0 - fx) * frame.get(yb, xa, ch) as f64 + fx * frame.get(yb, xb, ch) as f64);
                out.push(to_u8(v));
            }
        }
    }
    Frame::new(h, w, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_addressing() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(8, 4), 0);
        assert_eq!(reflect(-9, 4), 0);
        assert_eq!(reflect(0, 1), 0);
        assert_eq!(reflect(-3, 1), 0);
    }

    #[test]
    fn zero_alpha_gives_zero_field() {
        let f = elastic_field(8, 9, 0.0, 0.05, 1).unwrap();
        assert_eq!(f, DisplacementField::zeros(8, 9));
    }

    #[test]
    fn field_is_deterministic_and_normalized() {
        let a = elastic_field(32, 24, 0.06, 0.05, 99).unwrap();
        let b = elastic_field(32, 24, 0.06, 0.05, 99).unwrap();
        assert_eq!(a, b);
        assert!((a.max_magnitude() - 0.06 * 24.0).abs() < 1e-6);
        assert_ne!(a, elastic_field(32, 24, 0.06, 0.05, 100).unwrap());
        assert!(elastic_field(4, 4, -1.0, 0.05, 0).is_err());
        assert!(elastic_field(4, 4, 0.1, 0.0, 0).is_err());
    }

    #[test]
    fn zero_field_is_identity() {
        let data: Vec<u8> = (0..5 * 7 * 3).map(|i| (i * 37 % 256) as u8).collect();
        let frame = Frame::new(5, 7, 3, data).unwrap();
        assert_eq!(warp_frame(&frame, &DisplacementField::zeros(5, 7)).unwrap(), frame);
    }

    #[test]
    fn unit_shift_reflects_border_column() {
        #[rustfmt::skip]
        let pattern = vec![
            1, 2, 3, 4,
            5, 6, 7, 8,
            9, 10, 11, 12,
            13, 14, 15, 16,
        ];
        let frame = Frame::new(4, 4, 1, pattern).unwrap();
        let out = warp_frame(&frame, &DisplacementField::constant(4, 4, 1.0, 0.0)).unwrap();
        // out(x, y) = in(x - 1, y); column -1 reflects to column 0
        #[rustfmt::skip]
        let want = vec![
            1, 1, 2, 3,
            5, 5, 6, 7,
            9, 9, 10, 11,
            13, 13, 14, 15,
        ];
        assert_eq!(out.data(), &want[..]);
    }

    #[test]
    fn constant_frame_survives_any_field() {
        let frame = Frame::filled(16, 16, 3, 173).unwrap();
        let field = elastic_field(16, 16, 0.3, 0.05, 5).unwrap();
        assert_eq!(warp_frame(&frame, &field).unwrap(), frame);
    }

    #[test]
    fn field_shape_mismatch() {
        let frame = Frame::filled(4, 4, 1, 0).unwrap();
        assert!(matches!(
            warp_frame(&frame, &DisplacementField::zeros(4, 5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
