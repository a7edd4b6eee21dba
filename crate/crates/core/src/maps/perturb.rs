//! Seeded smooth perturbations with bounded C¹ size.
//!
//! A perturbation of amplitude `a` adds a displacement `a·φ` where both
//! `sup|φ| ≤ 1` and `sup‖Dφ‖ ≤ 1`, so the perturbed map stays within `a` of
//! its base in value and in first derivative.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Mat2;
use crate::geometry::Point;

/// One sinusoidal mode `weight · sin(2π·freq·s + phase) / (2π·freq)` on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleMode {
    pub weight: f64,
    pub freq: u32,
    pub phase: f64,
}

/// Plane wave `sin(k·x + phase) / (√2·|k|)` driving one displacement component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneMode {
    pub wave: Point,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Perturbation {
    Circle { modes: [CircleMode; 2] },
    Planar { modes: [PlaneMode; 2] },
}

impl Perturbation {
    pub fn circle(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: f64 = rng.gen_range(0.2..0.8);
        let mut mode = |weight: f64| CircleMode {
            weight,
            freq: rng.gen_range(1..=3),
            phase: rng.gen_range(0.0..TAU),
        };
        Perturbation::Circle {
            modes: [mode(w), mode(1.0 - w)],
        }
    }

    pub fn planar(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mode = || {
            let k: f64 = rng.gen_range(1.0..3.0);
            let dir: f64 = rng.gen_range(0.0..TAU);
            PlaneMode {
                wave: Point::new(k * dir.cos(), k * dir.sin()),
                phase: rng.gen_range(0.0..TAU),
            }
        };
        Perturbation::Planar {
            modes: [mode(), mode()],
        }
    }

    /// Unit-size displacement on the circle and its derivative.
    pub fn circle_shape(&self, s: f64) -> (f64, f64) {
        match self {
            Perturbation::Circle { modes } => modes.iter().fold((0.0, 0.0), |(v, dv), m| {
                let w = TAU * m.freq as f64;
                let arg = w * s + m.phase;
                (v + m.weight * arg.sin() / w, dv + m.weight * arg.cos())
            }),
            Perturbation::Planar { .. } => (0.0, 0.0),
        }
    }

    /// Unit-size planar displacement and its Jacobian.
    pub fn planar_shape(&self, p: Point) -> (Point, Mat2) {
        match self {
            Perturbation::Planar { modes } => {
                let comp = |m: &PlaneMode| {
                    let k = m.wave.norm();
                    let scale = 1.0 / (std::f64::consts::SQRT_2 * k);
                    let arg = m.wave.dot(p) + m.phase;
                    (scale * arg.sin(), m.wave * (scale * arg.cos()))
                };
                let (vx, gx) = comp(&modes[0]);
                let (vy, gy) = comp(&modes[1]);
                (Point::new(vx, vy), Mat2::new(gx.x, gx.y, gy.x, gy.y))
            }
            Perturbation::Circle { .. } => (Point::ORIGIN, Mat2::new(0.0, 0.0, 0.0, 0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_shape_is_periodic_and_c1_bounded() {
        for seed in 0..20 {
            let p = Perturbation::circle(seed);
            let (v0, d0) = p.circle_shape(0.0);
            let (v1, d1) = p.circle_shape(1.0);
            assert!((v0 - v1).abs() < 1e-12 && (d0 - d1).abs() < 1e-12);
            for k in 0..1000 {
                let (v, dv) = p.circle_shape(k as f64 / 1000.0);
                assert!(v.abs() <= 1.0 && dv.abs() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn planar_shape_is_c1_bounded() {
        for seed in 0..20 {
            let p = Perturbation::planar(seed);
            for k in 0..500 {
                let x = Point::new((k as f64 * 0.37).sin() * 5.0, (k as f64 * 0.11).cos() * 5.0);
                let (v, j) = p.planar_shape(x);
                assert!(v.norm() <= 1.0);
                assert!(j.operator_norm() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(Perturbation::planar(9), Perturbation::planar(9));
        assert_ne!(Perturbation::circle(1), Perturbation::circle(2));
    }
}
