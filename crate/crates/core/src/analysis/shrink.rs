use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{diameter, Disk, Domain, GridSet, Point};
use crate::maps::{Direction, SystemSpec, Word};

/// Samples on the boundary circle used to locate each image.
const BOUNDARY_SAMPLES: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkTime {
    pub r0: usize,
    /// Rasterized diameter of `ĥ^{r₀}_ω(U)`.
    pub diam_r0: f64,
    /// Rasterized diameter of `ĥ^{r₀−1}_ω(U)`; absent when `r₀ = 0`.
    pub diam_prev: Option<f64>,
}

/// Rasterizes `ĥ^r_ω(U)` on a square chart fitted to the image: a cell
/// belongs to the image when the inverse word maps its center into `U`.
fn image_diameter(sys: &SystemSpec, word: &Word, r: usize, u: &Disk, resolution: usize) -> Result<f64> {
    let prefix = word.prefix(r);
    let maps = sys.maps();
    let forward = |p: Point| prefix.application_order().fold(p, |q, s| maps[s].eval(q));
    let boundary: Vec<Point> = (0..BOUNDARY_SAMPLES)
        .map(|k| {
            let a = TAU * k as f64 / BOUNDARY_SAMPLES as f64;
            forward(u.center + Point::new(a.cos(), a.sin()) * u.radius)
        })
        .collect();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &boundary {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let half = 0.5 * (xmax - xmin).max(ymax - ymin) * (1.0 + 1.0 / 16.0);
    let center = Point::new(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    let domain = Domain::square(center, half.max(f64::MIN_POSITIVE), resolution)?;
    let symbols: Vec<usize> = prefix.application_order().collect();
    let set = GridSet::from_predicate(&domain, |c| {
        let back = symbols.iter().rev().fold(c, |q, &s| maps[s].eval_inverse(q));
        (back - u.center).norm() <= u.radius
    });
    if set.is_empty() {
        return Err(Error::Resolution(format!(
            "image after {r} steps has no cell at resolution {resolution}"
        )));
    }
    diameter(&set)
}

/// Smallest `r` with `diam(ĥ^r_ω(U)) < δ`, rasterized at `resolution` on a
/// chart fitted to each image.
pub fn shrink_time(
    sys: &SystemSpec,
    word: &Word,
    u: &Disk,
    delta: f64,
    max_r: usize,
    resolution: usize,
) -> Result<ShrinkTime> {
    if sys.is_circle() {
        return Err(Error::Dimension("shrink time needs a planar system".into()));
    }
    if word.direction != Direction::Reverse {
        return Err(Error::InvalidParameter("shrink time uses reverse words".into()));
    }
    word.check_alphabet(sys.alphabet())?;
    if let Some(i) = sys.maps().iter().position(|g| !g.is_invertible()) {
        return Err(Error::Invertibility(i));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta={delta} must be positive")));
    }
    let mut prev = None;
    let mut last = f64::INFINITY;
    for r in 0..=max_r.min(word.len()) {
        let d = image_diameter(sys, word, r, u, resolution)?;
        if d < delta {
            return Ok(ShrinkTime {
                r0: r,
                diam_r0: d,
                diam_prev: prev,
            });
        }
        prev = Some(d);
        last = d;
    }
    Err(Error::Horizon {
        delta,
        max_r,
        last_diameter: last,
    })
}
