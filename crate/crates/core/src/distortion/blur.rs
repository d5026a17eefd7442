use crate::clip::Frame;
use crate::error::{Error, Result};

use super::elastic::{reflect, to_u8};

/// Square motion-blur kernel of side `length`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    pub size: usize,
    pub weights: Vec<f64>,
}

impl BlurKernel {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A line segment of `length` samples through the kernel center at `angle` radians
/// (counter-clockwise from the +x axis). Each sample is splatted bilinearly, so off-axis
/// lines are anti-aliased. The kernel sums to one.
pub fn motion_blur_kernel(length: usize, angle: f64) -> Result<BlurKernel> {
    if length == 0 || length.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "kernel length must be odd and >= 1, got {length}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::InvalidConfig(format!("non-finite angle {angle}")));
    }
    let size = length;
    let center = (size / 2) as f64;
    let mut weights = vec![0.0; size * size];
    let share = 1.0 / length as f64;
    let (sin, cos) = angle.sin_cos();
    for i in 0..length {
        let t = i as f64 - center;
        let x = center + t * cos;
        let y = center - t * sin;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as usize, y0 as usize);
        for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
            for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                let w = wx * wy;
                if w == 0.0 {
                    continue;
                }
                let (r, c) = ((y0 + dy).min(size - 1), (x0 + dx).min(size - 1));
                weights[r * size + c] += share * w;
            }
        }
    }
    Ok(BlurKernel { size, weights })
}

/// Applies `kernel` centered on every pixel with reflected borders, channel by channel.
pub fn apply_kernel(frame: &Frame, kernel: &BlurKernel) -> Frame {
    if kernel.size == 1 {
        return frame.clone();
    }
    let (h, w, c) = (frame.height(), frame.width(), frame.channels());
    let r = (kernel.size / 2) as isize;
    let taps: Vec<(isize, isize, f64)> = (0..kernel.size)
        .flat_map(|i| (0..kernel.size).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let wgt = kernel.at(i, j);
            (wgt != 0.0).then_some((i as isize - r, j as isize - r, wgt))
        })
        .collect();
    let mut out = Vec::with_capacity(h * w * c);
    let mut acc = vec![0.0f64; c];
    for y in 0..h {
        for x in 0..w {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &(dy, dx, wgt) in &taps {
                let sy = reflect(y as isize + dy, h);
                let sx = reflect(x as isize + dx, w);
                for (ch, a) in acc.iter_mut().enumerate() {
                    *a += wgt * frame.get(sy, sx, ch) as f64;
                }
            }
            out.extend(acc.iter().map(|&v| to_u8(v)));
        }
    }
    Frame::new(h, w, c, out).expect("same shape as input")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel() {
        let k = motion_blur_kernel(1, 0.7).unwrap();
        assert_eq!(k.weights, vec![1.0]);
    }

    #[test]
    fn horizontal_kernel() {
        let k = motion_blur_kernel(5, 0.0).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let want = if r == 2 { 0.2 } else { 0.0 };
                assert!((k.at(r, c) - want).abs() < 1e-15, "({r},{c})");
            }
        }
    }

    #[test]
    fn vertical_kernel_is_a_column() {
        let k = motion_blur_kernel(3, std::f64::consts::FRAC_PI_2).unwrap();
        for r in 0..3 {
            assert!((k.at(r, 1) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn even_length_rejected() {
        assert!(motion_blur_kernel(4, 0.0).is_err());
        assert!(motion_blur_kernel(0, 0.0).is_err());
    }

    #[test]
    fn blur_preserves_constant_frames() {
        let f = Frame::filled(9, 9, 3, 77).unwrap();
        let k = motion_blur_kernel(7, 0.4).unwrap();
        assert_eq!(apply_kernel(&f, &k), f);
    }

    #[test]
    fn horizontal_blur_of_an_edge() {
        // columns: 0 0 | 100 100 ; three-tap box along rows
        let data = vec![0, 0, 100, 100];
        let f = Frame::new(1, 4, 1, data).unwrap();
        let k = motion_blur_kernel(3, 0.0).unwrap();
        let out = apply_kernel(&f, &k);
        // x=1: (0 + 0 + 100)/3 = 33.3 -> 33 ; x=2: (0+100+100)/3 = 66.7 -> 67
        assert_eq!(out.data(), &[0, 33, 67, 100]);
    }
}
