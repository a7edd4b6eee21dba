//! Differentiable self-maps of a planar chart or the circle, words over a
//! generator alphabet, and forward/reverse composition.

mod linalg;
mod perturb;
pub mod text;
mod word;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circle_delta, wrap_unit, Point};

pub use linalg::{Jacobian, Mat2};
pub use perturb::{CircleMode, Perturbation, PlaneMode};
pub use word::{
    apply_word, word_jacobian_det, word_log_det, Direction, SystemSpec, Word, WordMap,
};

/// Anything that can be evaluated and differentiated pointwise.
pub trait DiffMap: Sync {
    fn eval(&self, p: Point) -> Point;
    fn jacobian(&self, p: Point) -> Jacobian;
    fn is_circle(&self) -> bool;
}

/// A generator: one of the closed-form maps, a seeded perturbation of one,
/// or the inverse of one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    /// `x ↦ κ·Rot(θ)(x − anchor) + anchor`, θ in degrees.
    Affine {
        kappa: f64,
        theta: f64,
        anchor: Point,
    },
    /// North-south map of the circle: the stereographic conjugate of
    /// `t ↦ λt`, attracting at `pole` and repelling at `pole + 1/2`.
    Moebius { lambda: f64, pole: f64 },
    /// Rotation by `angle` turns.
    Rotation { angle: f64 },
    Perturbed {
        base: Box<MapSpec>,
        amplitude: f64,
        seed: u64,
        shape: Perturbation,
    },
    Inverse { of: Box<MapSpec> },
}

const NEWTON_MAX_ITER: usize = 60;

impl MapSpec {
    pub fn affine(kappa: f64, theta: f64, anchor: Point) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "affine scale kappa={kappa} outside (0, 1)"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter("angle theta is not finite".into()));
        }
        Ok(MapSpec::Affine {
            kappa,
            theta,
            anchor,
        })
    }

    pub fn moebius(lambda: f64, pole: f64) -> Result<Self> {
        if !(lambda > 0.5 && lambda < 1.0) {
            return Err(Error::Multiplier(lambda));
        }
        Ok(MapSpec::Moebius {
            lambda,
            pole: wrap_unit(pole),
        })
    }

    pub fn rotation(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidParameter("rotation angle is not finite".into()));
        }
        Ok(MapSpec::Rotation { angle })
    }

    pub fn perturbed(base: MapSpec, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "perturbation amplitude {amplitude} must be nonnegative"
            )));
        }
        let shape = if base.is_circle() {
            Perturbation::circle(seed)
        } else {
            Perturbation::planar(seed)
        };
        Ok(MapSpec::Perturbed {
            base: Box::new(base),
            amplitude,
            seed,
            shape,
        })
    }

    pub fn inverse(&self) -> MapSpec {
        match self {
            MapSpec::Inverse { of } => (**of).clone(),
            other => MapSpec::Inverse {
                of: Box::new(other.clone()),
            },
        }
    }

    /// Lower bound on the smallest singular value of the derivative.
    fn min_stretch(&self) -> f64 {
        match self {
            MapSpec::Affine { kappa, .. } => *kappa,
            MapSpec::Moebius { lambda, .. } => lambda.min(1.0 / lambda),
            MapSpec::Rotation { .. } => 1.0,
            MapSpec::Perturbed {
                base, amplitude, ..
            } => base.min_stretch() - amplitude,
            MapSpec::Inverse { of } => 1.0 / of.max_stretch(),
        }
    }

    fn max_stretch(&self) -> f64 {
        match self {
            MapSpec::Affine { kappa, .. } => *kappa,
            MapSpec::Moebius { lambda, .. } => lambda.max(1.0 / lambda),
            MapSpec::Rotation { .. } => 1.0,
            MapSpec::Perturbed {
                base, amplitude, ..
            } => base.max_stretch() + amplitude,
            MapSpec::Inverse { of } => 1.0 / of.min_stretch(),
        }
    }

    /// Closed-form maps are diffeomorphisms; a perturbation keeps that
    /// property while its C¹ size stays below half the base's weakest stretch.
    pub fn is_invertible(&self) -> bool {
        match self {
            MapSpec::Perturbed {
                base, amplitude, ..
            } => base.is_invertible() && *amplitude < 0.5 * base.min_stretch(),
            MapSpec::Inverse { of } => of.is_invertible(),
            _ => true,
        }
    }

    pub fn is_circle(&self) -> bool {
        match self {
            MapSpec::Affine { .. } => false,
            MapSpec::Moebius { .. } | MapSpec::Rotation { .. } => true,
            MapSpec::Perturbed { base, .. } => base.is_circle(),
            MapSpec::Inverse { of } => of.is_circle(),
        }
    }

    pub fn eval(&self, p: Point) -> Point {
        match self {
            MapSpec::Affine {
                kappa,
                theta,
                anchor,
            } => *anchor + Mat2::scaled_rotation(*kappa, *theta).apply(p - *anchor),
            MapSpec::Moebius { lambda, pole } => Point::on_circle(moebius(*lambda, *pole, p.x)),
            MapSpec::Rotation { angle } => Point::on_circle(p.x + angle),
            MapSpec::Perturbed {
                base,
                amplitude,
                shape,
                ..
            } => {
                let q = base.eval(p);
                if base.is_circle() {
                    Point::on_circle(q.x + amplitude * shape.circle_shape(p.x).0)
                } else {
                    q + shape.planar_shape(p).0 * *amplitude
                }
            }
            MapSpec::Inverse { of } => of.eval_inverse(p),
        }
    }

    /// Preimage of `p`; closed form where available, Newton otherwise.
    pub fn eval_inverse(&self, p: Point) -> Point {
        match self {
            MapSpec::Affine {
                kappa,
                theta,
                anchor,
            } => *anchor + Mat2::scaled_rotation(1.0 / kappa, -theta).apply(p - *anchor),
            MapSpec::Moebius { lambda, pole } => {
                Point::on_circle(moebius(1.0 / lambda, *pole, p.x))
            }
            MapSpec::Rotation { angle } => Point::on_circle(p.x - angle),
            MapSpec::Perturbed { base, .. } => self.newton_inverse(base.eval_inverse(p), p),
            MapSpec::Inverse { of } => of.eval(p),
        }
    }

    fn newton_inverse(&self, start: Point, target: Point) -> Point {
        let mut x = start;
        if self.is_circle() {
            for _ in 0..NEWTON_MAX_ITER {
                let r = circle_delta(target.x, self.eval(x).x);
                if r.abs() < 1e-15 {
                    break;
                }
                let d = self.jacobian(x).det();
                x = Point::on_circle(x.x - r / d);
            }
        } else {
            for _ in 0..NEWTON_MAX_ITER {
                let r = self.eval(x) - target;
                if r.norm() <= 1e-15 * (1.0 + target.norm()) {
                    break;
                }
                let Jacobian::Planar(j) = self.jacobian(x) else {
                    unreachable!("planar map with scalar derivative")
                };
                match j.inverse() {
                    Some(ji) => x = x - ji.apply(r),
                    None => break,
                }
            }
        }
        x
    }

    pub fn jacobian(&self, p: Point) -> Jacobian {
        match self {
            MapSpec::Affine { kappa, theta, .. } => {
                Jacobian::Planar(Mat2::scaled_rotation(*kappa, *theta))
            }
            MapSpec::Moebius { lambda, pole } => {
                Jacobian::Scalar(moebius_derivative(*lambda, *pole, p.x))
            }
            MapSpec::Rotation { .. } => Jacobian::Scalar(1.0),
            MapSpec::Perturbed {
                base,
                amplitude,
                shape,
                ..
            } => match base.jacobian(p) {
                Jacobian::Scalar(d) => Jacobian::Scalar(d + amplitude * shape.circle_shape(p.x).1),
                Jacobian::Planar(m) => {
                    let dp = shape.planar_shape(p).1;
                    Jacobian::Planar(m.add(&Mat2::new(
                        amplitude * dp.a,
                        amplitude * dp.b,
                        amplitude * dp.c,
                        amplitude * dp.d,
                    )))
                }
            },
            MapSpec::Inverse { of } => {
                let q = of.eval_inverse(p);
                of.jacobian(q)
                    .inverse()
                    .unwrap_or(Jacobian::Scalar(f64::INFINITY))
            }
        }
    }
}

impl DiffMap for MapSpec {
    fn eval(&self, p: Point) -> Point {
        MapSpec::eval(self, p)
    }
    fn jacobian(&self, p: Point) -> Jacobian {
        MapSpec::jacobian(self, p)
    }
    fn is_circle(&self) -> bool {
        MapSpec::is_circle(self)
    }
}

/// Half-angle offset from the pole, in `[-π/2, π/2)`.
fn half_angle(pole: f64, s: f64) -> f64 {
    std::f64::consts::PI * circle_delta(pole, s)
}

fn moebius(lambda: f64, pole: f64, s: f64) -> f64 {
    let u = half_angle(pole, s);
    // cos(u) >= 0, so atan2 stays in [-π/2, π/2]
    let v = (lambda * u.sin()).atan2(u.cos());
    pole + v / std::f64::consts::PI
}

fn moebius_derivative(lambda: f64, pole: f64, s: f64) -> f64 {
    let u = half_angle(pole, s);
    let (sn, cs) = u.sin_cos();
    lambda / (cs * cs + lambda * lambda * sn * sn)
}

/// Whether the Jacobian at `x` has a non-real eigenvalue pair.
pub fn complex_eigenvalue_check(m: &impl DiffMap, x: Point) -> Result<bool> {
    match m.jacobian(x) {
        Jacobian::Planar(j) => Ok(j.discriminant() < -1e-12),
        Jacobian::Scalar(_) => Err(Error::Dimension(
            "eigenvalue check needs a planar map".into(),
        )),
    }
}

/// Central finite-difference derivative, wrap-aware on the circle.
pub fn finite_difference(m: &impl DiffMap, x: Point, step: f64) -> Jacobian {
    if m.is_circle() {
        let fp = m.eval(Point::on_circle(x.x + step)).x;
        let fm = m.eval(Point::on_circle(x.x - step)).x;
        Jacobian::Scalar(circle_delta(fm, fp) / (2.0 * step))
    } else {
        let dx = Point::new(step, 0.0);
        let dy = Point::new(0.0, step);
        let cx = (m.eval(x + dx) - m.eval(x - dx)) * (0.5 / step);
        let cy = (m.eval(x + dy) - m.eval(x - dy)) * (0.5 / step);
        Jacobian::Planar(Mat2::new(cx.x, cy.x, cx.y, cy.y))
    }
}
