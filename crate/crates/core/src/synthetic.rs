//! Seeded synthetic clips for tests, fixtures and offline experiments.
//!
//! [`moving_clips`]: a drifting sinusoidal texture over a color gradient with a bright disk moving
//! along a straight line, so consecutive frames differ smoothly.
//!
//! [`tiled_clips`]: a static background of flat tiles (an 8×8 mosaic) with a small disk moving
//! across it, i.e. a fixed camera watching one object.

use std::f64::consts::TAU;

use rand::Rng;

use crate::clip::{Clip, ClipSet, Frame};
use crate::rng;

struct Scene {
    base: [f64; 3],
    gradient: [f64; 3],
    amplitude: f64,
    freq: (f64, f64),
    velocity: (f64, f64),
    phase: f64,
    disk: (f64, f64, f64),
    disk_velocity: (f64, f64),
    disk_color: [f64; 3],
}

impl Scene {
    fn sample(rng: &mut rng::Rng, h: usize, w: usize) -> Self {
        let mut color = || [rng.random_range(40.0..200.0), rng.random_range(40.0..200.0), rng.random_range(40.0..200.0)];
        let base = color();
        let disk_color = color();
        let side = h.min(w) as f64;
        Self {
            base,
            gradient: [
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
            ],
            amplitude: rng.random_range(20.0..50.0),
            freq: (
                rng.random_range(1.0..4.0) * TAU / w as f64,
                rng.random_range(1.0..4.0) * TAU / h as f64,
            ),
            velocity: (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            phase: rng.random_range(0.0..TAU),
            disk: (
                rng.random_range(0.2..0.8) * w as f64,
                rng.random_range(0.2..0.8) * h as f64,
                rng.random_range(0.1..0.2) * side,
            ),
            disk_velocity: (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            disk_color,
        }
    }

    fn render(&self, t: usize, h: usize, w: usize, channels: usize) -> Frame {
        let t = t as f64;
        let (cx, cy, r) = (
            self.disk.0 + self.disk_velocity.0 * t,
            self.disk.1 + self.disk_velocity.1 * t,
            self.disk.2,
        );
        let mut data = Vec::with_capacity(h * w * channels);
        for y in 0..h {
            for x in 0..w {
                let (xf, yf) = (x as f64, y as f64);
                let wave = self.amplitude
                    * (self.freq.0 * (xf - self.velocity.0 * t) + self.freq.1 * (yf - self.velocity.1 * t) + self.phase)
                        .sin();
                let ramp = yf / h as f64 - 0.5;
                // soft disk edge, 1.5 px
                let d = ((xf - cx).powi(2) + (yf - cy).powi(2)).sqrt();
                let cover = ((r - d) / 1.5 + 0.5).clamp(0.0, 1.0);
                for ch in 0..channels {
                    let bg = self.base[ch] + self.gradient[ch] * ramp + wave;
                    let v = bg * (1.0 - cover) + self.disk_color[ch] * cover;
                    data.push(v.round_ties_even().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Frame::new(h, w, channels, data).expect("valid synthetic frame")
    }
}

/// `count` clips of `frames` frames each, ids `clip0000`, `clip0001`, ...
pub fn moving_clips(count: usize, frames: usize, height: usize, width: usize, channels: usize, seed: u64) -> ClipSet {
    let clips = (0..count)
        .map(|i| {
            let mut r = rng::derived(seed, &[i as u64]);
            let scene = Scene::sample(&mut r, height, width);
            let frames = (0..frames).map(|t| scene.render(t, height, width, channels)).collect();
            Clip::new(format!("clip{i:04}"), frames).expect("valid synthetic clip")
        })
        .collect();
    ClipSet::new(format!("synthetic-{seed}"), clips).expect("non-empty synthetic set")
}

struct TiledScene {
    base: [f64; 3],
    tiles: Vec<f64>,
    disk: (f64, f64),
    disk_velocity: (f64, f64),
    disk_offset: f64,
}

const TILES: usize = 8;

impl TiledScene {
    fn sample(rng: &mut rng::Rng, h: usize, w: usize) -> Self {
        let base = [
            rng.random_range(60.0..190.0),
            rng.random_range(60.0..190.0),
            rng.random_range(60.0..190.0),
        ];
        let tiles = (0..TILES * TILES).map(|_| rng.random_range(-50.0..50.0)).collect();
        Self {
            base,
            tiles,
            disk: (
                rng.random_range(0.25..0.75) * w as f64,
                rng.random_range(0.25..0.75) * h as f64,
            ),
            disk_velocity: (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
            disk_offset: rng.random_range(-80.0..80.0),
        }
    }

    fn render(&self, t: usize, h: usize, w: usize, channels: usize) -> Frame {
        let t = t as f64;
        let (cx, cy) = (self.disk.0 + self.disk_velocity.0 * t, self.disk.1 + self.disk_velocity.1 * t);
        let r = 0.1 * h.min(w) as f64;
        let mut data = Vec::with_capacity(h * w * channels);
        for y in 0..h {
            for x in 0..w {
                let tile = self.tiles[(y * TILES / h) * TILES + x * TILES / w];
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let cover = ((r - d) / 1.5 + 0.5).clamp(0.0, 1.0);
                for ch in 0..channels {
                    let v = self.base[ch] + tile + cover * self.disk_offset;
                    data.push(v.round_ties_even().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Frame::new(h, w, channels, data).expect("valid synthetic frame")
    }
}

/// Like [`moving_clips`] but with the static tiled background scene.
pub fn tiled_clips(count: usize, frames: usize, height: usize, width: usize, channels: usize, seed: u64) -> ClipSet {
    let clips = (0..count)
        .map(|i| {
            let mut r = rng::derived(seed, &[i as u64]);
            let scene = TiledScene::sample(&mut r, height, width);
            let frames = (0..frames).map(|t| scene.render(t, height, width, channels)).collect();
            Clip::new(format!("clip{i:04}"), frames).expect("valid synthetic clip")
        })
        .collect();
    ClipSet::new(format!("tiled-{seed}"), clips).expect("non-empty synthetic set")
}
