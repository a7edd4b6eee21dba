//! Charts, disks and rasterized sets.
//!
//! Everything measurable lives on a [`Domain`]: either a planar rectangle
//! split into `resolution × resolution` cells, or the circle `[0, 1)` split
//! into `resolution` arcs. A cell belongs to a set iff its center satisfies
//! the set's predicate, and volume is always normalized by the whole chart.

mod density;
mod distance;
mod gridset;
pub mod io;

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use density::{density_points, local_density, volume_ratio};
pub use distance::{diameter, distance_field, hausdorff_distance};
pub use gridset::GridSet;

/// Smallest admissible number of cells per axis.
pub const MIN_RESOLUTION: usize = 16;

/// Default number of cells per axis.
pub const DEFAULT_RESOLUTION: usize = 1024;

/// A point in chart coordinates. Circle points use `x` only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// A circle point; the coordinate is reduced to `[0, 1)`.
    pub fn on_circle(s: f64) -> Self {
        Point {
            x: wrap_unit(s),
            y: 0.0,
        }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Reduce a circle coordinate to `[0, 1)`.
pub fn wrap_unit(s: f64) -> f64 {
    let r = s.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed circle displacement `b - a`, reduced to `[-1/2, 1/2)`.
pub fn circle_delta(a: f64, b: f64) -> f64 {
    (b - a + 0.5).rem_euclid(1.0) - 0.5
}

/// Wraparound distance on the circle of circumference 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Rect {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    Circle,
}

/// A chart: planar rectangle or the circle, with its raster resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
    resolution: usize,
}

impl Domain {
    pub fn rect(xmin: f64, xmax: f64, ymin: f64, ymax: f64, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        let finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::Domain(format!(
                "rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}] has no positive extent"
            )));
        }
        Ok(Domain {
            kind: DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            },
            resolution,
        })
    }

    /// Square chart centered at `center` with the given half-width.
    pub fn square(center: Point, half_width: f64, resolution: usize) -> Result<Self> {
        Domain::rect(
            center.x - half_width,
            center.x + half_width,
            center.y - half_width,
            center.y + half_width,
            resolution,
        )
    }

    pub fn circle(resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Domain {
            kind: DomainKind::Circle,
            resolution,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, DomainKind::Circle)
    }

    /// Cells per row.
    pub fn width(&self) -> usize {
        self.resolution
    }

    /// Number of rows (1 on the circle).
    pub fn height(&self) -> usize {
        match self.kind {
            DomainKind::Rect { .. } => self.resolution,
            DomainKind::Circle => 1,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Cell extent along x and y. On the circle both are `1/resolution`.
    pub fn cell_size(&self) -> (f64, f64) {
        let n = self.resolution as f64;
        match self.kind {
            DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => ((xmax - xmin) / n, (ymax - ymin) / n),
            DomainKind::Circle => (1.0 / n, 1.0 / n),
        }
    }

    /// The larger of the two cell extents.
    pub fn cell_width(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        dx.max(dy)
    }

    pub fn cell_diagonal(&self) -> f64 {
        match self.kind {
            DomainKind::Rect { .. } => {
                let (dx, dy) = self.cell_size();
                dx.hypot(dy)
            }
            DomainKind::Circle => 1.0 / self.resolution as f64,
        }
    }

    /// Volume of a one-cell-thick boundary ring of a half-domain split:
    /// one row of cells in the plane, two cells on the circle.
    pub fn split_ring_volume(&self) -> f64 {
        match self.kind {
            DomainKind::Rect { .. } => 1.0 / self.resolution as f64,
            DomainKind::Circle => 2.0 / self.resolution as f64,
        }
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let n = self.resolution;
        match self.kind {
            DomainKind::Rect { xmin, ymin, .. } => {
                let (dx, dy) = self.cell_size();
                let (i, j) = (index % n, index / n);
                Point::new(
                    xmin + (i as f64 + 0.5) * dx,
                    ymin + (j as f64 + 0.5) * dy,
                )
            }
            DomainKind::Circle => Point::new((index as f64 + 0.5) / n as f64, 0.0),
        }
    }

    /// Column and row of the cell containing `p`, if any.
    pub fn cell_coords(&self, p: Point) -> Option<(usize, usize)> {
        let n = self.resolution;
        match self.kind {
            DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                if !(p.x >= xmin && p.x < xmax && p.y >= ymin && p.y < ymax) {
                    return None;
                }
                let (dx, dy) = self.cell_size();
                let i = (((p.x - xmin) / dx) as usize).min(n - 1);
                let j = (((p.y - ymin) / dy) as usize).min(n - 1);
                Some((i, j))
            }
            DomainKind::Circle => {
                if !p.x.is_finite() {
                    return None;
                }
                let i = ((wrap_unit(p.x) * n as f64) as usize).min(n - 1);
                Some((i, 0))
            }
        }
    }

    pub fn cell_of(&self, p: Point) -> Option<usize> {
        self.cell_coords(p).map(|(i, j)| j * self.resolution + i)
    }

    /// Chart distance: Euclidean in the plane, wraparound on the circle.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        match self.kind {
            DomainKind::Rect { .. } => (a - b).norm(),
            DomainKind::Circle => circle_distance(a.x, b.x),
        }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        match self.kind {
            DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax,
            DomainKind::Circle => p.x.is_finite(),
        }
    }

    /// Whether the disk lies inside the chart (arcs shorter than the circle).
    pub fn contains_disk(&self, d: &Disk) -> bool {
        match self.kind {
            DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                d.center.x - d.radius >= xmin
                    && d.center.x + d.radius <= xmax
                    && d.center.y - d.radius >= ymin
                    && d.center.y + d.radius <= ymax
            }
            DomainKind::Circle => d.radius < 0.5,
        }
    }

    /// Neighbouring cells in the 4-neighbourhood (wrapping on the circle).
    pub fn neighbours(&self, index: usize) -> impl Iterator<Item = usize> {
        let n = self.resolution;
        let mut out = [usize::MAX; 4];
        match self.kind {
            DomainKind::Circle => {
                out[0] = (index + 1) % n;
                out[1] = (index + n - 1) % n;
            }
            DomainKind::Rect { .. } => {
                let (i, j) = (index % n, index / n);
                if i + 1 < n {
                    out[0] = index + 1;
                }
                if i > 0 {
                    out[1] = index - 1;
                }
                if j + 1 < n {
                    out[2] = index + n;
                }
                if j > 0 {
                    out[3] = index - n;
                }
            }
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    /// Same chart at a different resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Domain {
            kind: self.kind,
            resolution,
        })
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Resolution(format!(
            "resolution {resolution} below minimum {MIN_RESOLUTION}"
        )));
    }
    Ok(())
}

/// A closed ball `B(center, radius)`; an arc on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Disk { center, radius })
    }

    pub fn arc(center: f64, radius: f64) -> Result<Self> {
        if radius >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "arc radius {radius} must be below 1/2"
            )));
        }
        Disk::new(Point::on_circle(center), radius)
    }

    pub fn contains(&self, domain: &Domain, p: Point) -> bool {
        domain.distance(self.center, p) <= self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Indices of cells whose centers lie in the disk, in increasing order.
    pub fn cells(&self, domain: &Domain) -> Vec<usize> {
        let n = domain.resolution();
        let mut out = Vec::new();
        match domain.kind() {
            DomainKind::Rect { xmin, ymin, .. } => {
                let (dx, dy) = domain.cell_size();
                let col = |x: f64| ((x - xmin) / dx - 0.5).floor();
                let row = |y: f64| ((y - ymin) / dy - 0.5).floor();
                let j0 = (row(self.center.y - self.radius) as i64).max(0);
                let j1 = (row(self.center.y + self.radius) as i64 + 1).min(n as i64 - 1);
                let i0 = (col(self.center.x - self.radius) as i64).max(0);
                let i1 = (col(self.center.x + self.radius) as i64 + 1).min(n as i64 - 1);
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        let idx = j as usize * n + i as usize;
                        if self.contains(domain, domain.cell_center(idx)) {
                            out.push(idx);
                        }
                    }
                }
            }
            DomainKind::Circle => {
                let nf = n as f64;
                let lo = ((self.center.x - self.radius) * nf - 0.5).floor() as i64;
                let hi = ((self.center.x + self.radius) * nf - 0.5).ceil() as i64;
                if hi - lo + 1 >= n as i64 {
                    out.extend((0..n).filter(|&i| self.contains(domain, domain.cell_center(i))));
                } else {
                    for k in lo..=hi {
                        let idx = k.rem_euclid(n as i64) as usize;
                        if self.contains(domain, domain.cell_center(idx)) {
                            out.push(idx);
                        }
                    }
                    out.sort_unstable();
                }
            }
        }
        out
    }

    /// Cell count of the rasterized disk.
    pub fn cell_count(&self, domain: &Domain) -> usize {
        self.cells(domain).len()
    }

    /// Number of cells of the rasterized disk that touch its complement
    /// (4-neighbourhood); the disk's one-cell boundary ring.
    pub fn ring_cells(&self, domain: &Domain) -> usize {
        self.cells(domain)
            .into_iter()
            .filter(|&c| {
                domain
                    .neighbours(c)
                    .any(|k| !self.contains(domain, domain.cell_center(k)))
            })
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_circle_distance() {
        assert_eq!(wrap_unit(1.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert!(wrap_unit(-1e-18) < 1.0);
        assert!((circle_distance(0.05, 0.95) - 0.1).abs() < 1e-15);
        assert!((circle_delta(0.95, 0.05) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_resolution() {
        assert!(matches!(Domain::circle(8), Err(Error::Resolution(_))));
        assert!(Domain::rect(0.0, 1.0, 0.0, 1.0, 15).is_err());
    }

    #[test]
    fn rejects_degenerate_rectangle() {
        assert!(matches!(
            Domain::rect(1.0, 1.0, 0.0, 1.0, 32),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cell_lookup_inverts_center() {
        let d = Domain::rect(-2.0, 3.0, 1.0, 2.0, 64).unwrap();
        for idx in [0, 63, 64, 4095, 1234] {
            assert_eq!(d.cell_of(d.cell_center(idx)), Some(idx));
        }
        assert_eq!(d.cell_of(Point::new(3.5, 1.5)), None);
        let c = Domain::circle(100).unwrap();
        assert_eq!(c.cell_of(Point::new(1.004, 0.0)), Some(0));
        assert_eq!(c.cell_of(Point::new(-0.004, 0.0)), Some(99));
    }

    #[test]
    fn arc_radius_must_be_short() {
        assert!(Disk::arc(0.2, 0.5).is_err());
        assert!(Disk::new(Point::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn disk_cells_match_brute_force() {
        let d = Domain::rect(0.0, 1.0, 0.0, 2.0, 50).unwrap();
        let disk = Disk::new(Point::new(0.3, 0.7), 0.21).unwrap();
        let brute: Vec<usize> = (0..d.cell_count())
            .filter(|&i| (d.cell_center(i) - disk.center).norm() <= disk.radius)
            .collect();
        assert_eq!(disk.cells(&d), brute);
        let c = Domain::circle(64).unwrap();
        let arc = Disk::arc(0.02, 0.1).unwrap();
        let brute: Vec<usize> = (0..64)
            .filter(|&i| circle_distance(c.cell_center(i).x, 0.02) <= 0.1)
            .collect();
        assert_eq!(arc.cells(&c), brute);
    }
}
