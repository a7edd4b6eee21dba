//! Contraction systems `{T, S₁, …, S_{k−1}}` built from a rotation-scaling
//! `T` and its conjugates `S_y(x) = T(x − y) + y`, their absorbing balls,
//! and raster Hutchinson attractors.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, Disk, Domain, GridSet, Point};
use crate::maps::{MapSpec, SystemSpec};

/// Largest number of anchors tried before giving up on a cover.
pub const MAX_ANCHORS: usize = 256;

/// Charts around a ball extend this fraction past its radius.
const CHART_MARGIN: f64 = 1.0 / 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub kappa: f64,
    /// Rotation angle in degrees.
    pub theta: f64,
    pub delta: f64,
    /// Radius of the absorbing ball as a multiple of `delta`.
    pub u_factor: f64,
}

impl ConstructionParams {
    pub fn new(kappa: f64, theta: f64, delta: f64) -> Self {
        ConstructionParams {
            kappa,
            theta,
            delta,
            u_factor: 16.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.75 && self.kappa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa={} outside (3/4, 1)",
                self.kappa
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta={} must be positive",
                self.delta
            )));
        }
        if !(self.u_factor > 0.0 && self.u_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "u_factor={} must be positive",
                self.u_factor
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta is not finite".into()));
        }
        Ok(())
    }

    /// The ball `V = B(0, δ)`.
    pub fn v(&self) -> Disk {
        Disk {
            center: Point::ORIGIN,
            radius: self.delta,
        }
    }

    /// The candidate absorbing ball `U = B(0, u_factor·δ)`.
    pub fn u(&self) -> Disk {
        Disk {
            center: Point::ORIGIN,
            radius: self.u_factor * self.delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionResult {
    pub params: ConstructionParams,
    /// `T` followed by one conjugate per anchor.
    pub system: SystemSpec,
    /// Anchors on the circle `|x| = 3δ/4`.
    pub anchors: Vec<Point>,
    pub u: Disk,
    pub cover_verified: bool,
}

impl ConstructionResult {
    /// Number of maps `k` (anchors plus `T`).
    pub fn k(&self) -> usize {
        self.anchors.len() + 1
    }
}

/// Square chart around `disk` with a small margin.
pub fn chart_around(disk: &Disk, resolution: usize) -> Result<Domain> {
    Domain::square(disk.center, disk.radius * (1.0 + CHART_MARGIN), resolution)
}

/// `m` equally spaced points on `|x| = 3δ/4`, the first on the positive x-axis.
pub fn anchors(delta: f64, m: usize) -> Vec<Point> {
    (0..m)
        .map(|j| {
            let a = TAU * j as f64 / m as f64;
            Point::new(a.cos(), a.sin()) * (0.75 * delta)
        })
        .collect()
}

fn construction_system(p: &ConstructionParams, anchors: &[Point]) -> Result<SystemSpec> {
    let mut gens = vec![MapSpec::affine(p.kappa, p.theta, Point::ORIGIN)?];
    for &y in anchors {
        gens.push(MapSpec::affine(p.kappa, p.theta, y)?);
    }
    SystemSpec::new(gens, false)
}

/// Fraction of the cells of the closed ball `V̄` left outside
/// `T(V) ∪ ⋃ S_y(V)`. With `exact = false` the scan stops at the first
/// uncovered cell and returns a positive value without counting the rest.
fn uncovered_fraction(sys: &SystemSpec, v: &Disk, domain: &Domain, exact: bool) -> f64 {
    let closure: Vec<Point> = (0..domain.cell_count())
        .map(|i| domain.cell_center(i))
        .filter(|c| (*c - v.center).norm() <= v.radius)
        .collect();
    let covered = |c: &Point| {
        sys.maps()
            .iter()
            .any(|g| (g.eval_inverse(*c) - v.center).norm() < v.radius)
    };
    if exact {
        let missed = closure.par_iter().filter(|c| !covered(c)).count();
        missed as f64 / closure.len() as f64
    } else if closure.par_iter().any(|c| !covered(c)) {
        1.0
    } else {
        0.0
    }
}

/// Builds `{T, S₁, …, S_{k−1}}` with the fewest equally spaced anchors whose
/// images, together with `T(V)`, cover the rasterized closed ball `V̄`.
pub fn build_construction(p: &ConstructionParams, resolution: usize) -> Result<ConstructionResult> {
    p.validate()?;
    let v = p.v();
    let domain = chart_around(&v, resolution)?;
    for m in 1..=MAX_ANCHORS {
        let ys = anchors(p.delta, m);
        let sys = construction_system(p, &ys)?;
        if uncovered_fraction(&sys, &v, &domain, false) == 0.0 {
            return Ok(ConstructionResult {
                params: *p,
                system: sys,
                anchors: ys,
                u: p.u(),
                cover_verified: true,
            });
        }
    }
    let sys = construction_system(p, &anchors(p.delta, MAX_ANCHORS))?;
    Err(Error::Construction {
        max_anchors: MAX_ANCHORS,
        uncovered: uncovered_fraction(&sys, &v, &domain, true),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Absorption {
    pub absorbing: bool,
    /// Largest distance of an image cell center outside `U` (0 when absorbing).
    pub escape_distance: f64,
}

/// Rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Bounds {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Bounds {
    fn of_points(points: impl IntoIterator<Item = Point>) -> Option<Bounds> {
        let mut it = points.into_iter();
        let p = it.next()?;
        let mut b = Bounds {
            xmin: p.x,
            xmax: p.x,
            ymin: p.y,
            ymax: p.y,
        };
        for q in it {
            b.xmin = b.xmin.min(q.x);
            b.xmax = b.xmax.max(q.x);
            b.ymin = b.ymin.min(q.y);
            b.ymax = b.ymax.max(q.y);
        }
        Some(b)
    }

    fn grow(&self, by: f64) -> Bounds {
        Bounds {
            xmin: self.xmin - by,
            xmax: self.xmax + by,
            ymin: self.ymin - by,
            ymax: self.ymax + by,
        }
    }

    fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    fn boundary(&self, per_edge: usize) -> impl Iterator<Item = Point> + '_ {
        (0..per_edge).flat_map(move |k| {
            let t = k as f64 / per_edge as f64;
            let x = self.xmin + t * (self.xmax - self.xmin);
            let y = self.ymin + t * (self.ymax - self.ymin);
            let xr = self.xmax - t * (self.xmax - self.xmin);
            let yr = self.ymax - t * (self.ymax - self.ymin);
            [
                Point::new(x, self.ymin),
                Point::new(self.xmax, y),
                Point::new(xr, self.ymax),
                Point::new(self.xmin, yr),
            ]
        })
    }
}

const EDGE_SAMPLES: usize = 256;

/// Bounding box of the included cells (full cell extents).
fn set_bounds(a: &GridSet) -> Option<Bounds> {
    let (dx, dy) = a.domain().cell_size();
    Bounds::of_points(a.centers()).map(|b| Bounds {
        xmin: b.xmin - dx / 2.0,
        xmax: b.xmax + dx / 2.0,
        ymin: b.ymin - dy / 2.0,
        ymax: b.ymax + dy / 2.0,
    })
}

/// Box containing `g(box)`, from the image of its boundary plus a margin.
fn image_bounds(g: &MapSpec, b: &Bounds, margin: f64) -> Bounds {
    Bounds::of_points(b.boundary(EDGE_SAMPLES).map(|p| g.eval(p)))
        .expect("boundary is nonempty")
        .grow(margin)
}

/// Rasterized image `g(a)`: a cell is included when its center pulls back
/// into an included cell of `a`.
pub fn image(g: &MapSpec, a: &GridSet) -> Result<GridSet> {
    images(std::slice::from_ref(g), a)
}

/// Rasterized preimage `g⁻¹(a)`: a cell is included when `g` maps its center
/// into an included cell of `a`.
pub fn preimage(g: &MapSpec, a: &GridSet) -> GridSet {
    GridSet::from_predicate(a.domain(), |c| a.contains_point(g.eval(c)))
}

fn images(maps: &[MapSpec], a: &GridSet) -> Result<GridSet> {
    let domain = a.domain();
    if let Some(i) = maps.iter().position(|g| !g.is_invertible()) {
        return Err(Error::Invertibility(i));
    }
    if maps.iter().any(|g| g.is_circle() != domain.is_circle()) {
        return Err(Error::Dimension(
            "map and set live on different spaces".into(),
        ));
    }
    if domain.is_circle() {
        return Ok(GridSet::from_predicate(domain, |c| {
            maps.iter().any(|g| a.contains_point(g.eval_inverse(c)))
        }));
    }
    let Some(src) = set_bounds(a) else {
        return Ok(GridSet::empty(domain));
    };
    let margin = 2.0 * domain.cell_diagonal();
    let boxes: Vec<Bounds> = maps.iter().map(|g| image_bounds(g, &src, margin)).collect();
    Ok(GridSet::from_predicate(domain, |c| {
        maps.iter()
            .zip(&boxes)
            .any(|(g, b)| b.contains(c) && a.contains_point(g.eval_inverse(c)))
    }))
}

/// One application of the set operator `A ↦ ⋃ᵢ hᵢ(A)` on the grid of `a`.
pub fn hutchinson_step(sys: &SystemSpec, a: &GridSet) -> Result<GridSet> {
    images(sys.maps(), a)
}

/// Whether the rasterized union of generator images of `u` stays inside `u`.
pub fn check_absorbing(sys: &SystemSpec, u: &Disk, resolution: usize) -> Result<Absorption> {
    if sys.is_circle() {
        return Err(Error::Dimension("absorbing balls need a planar system".into()));
    }
    let ring = (0..EDGE_SAMPLES).map(|k| {
        let a = TAU * k as f64 / EDGE_SAMPLES as f64;
        u.center + Point::new(a.cos(), a.sin()) * u.radius
    });
    let mut pts: Vec<Point> = ring.collect();
    let images: Vec<Point> = sys
        .maps()
        .iter()
        .flat_map(|g| pts.iter().map(move |p| g.eval(*p)))
        .collect();
    pts.extend(images);
    pts.push(u.center);
    let b = Bounds::of_points(pts).expect("nonempty");
    let half = (b.xmax - b.xmin).max(b.ymax - b.ymin) / 2.0;
    let center = Point::new((b.xmin + b.xmax) / 2.0, (b.ymin + b.ymax) / 2.0);
    let domain = Domain::square(center, half * 1.1, resolution)?;
    let raster = GridSet::from_disk(&domain, u);
    let img = hutchinson_step(sys, &raster)?;
    let escape = img
        .centers()
        .into_par_iter()
        .map(|c| ((c - u.center).norm() - u.radius).max(0.0))
        .reduce(|| 0.0, f64::max);
    Ok(Absorption {
        absorbing: escape == 0.0,
        escape_distance: escape,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attractor {
    pub set: GridSet,
    pub iterations: usize,
    /// Hausdorff distance between the last two iterates.
    pub final_hausdorff: f64,
}

/// Iterates the Hutchinson operator from the rasterized absorbing ball `u`
/// (on [`chart_around`]`(u)`) until successive iterates are within `tol`.
pub fn attractor(
    sys: &SystemSpec,
    u: &Disk,
    resolution: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Attractor> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol={tol} must be positive")));
    }
    let abs = check_absorbing(sys, u, resolution)?;
    if !abs.absorbing {
        return Err(Error::InvalidParameter(format!(
            "ball of radius {} is not absorbing (escape distance {})",
            u.radius, abs.escape_distance
        )));
    }
    let domain = chart_around(u, resolution)?;
    let mut current = GridSet::from_disk(&domain, u);
    let mut last = f64::INFINITY;
    for n in 1..=max_iter {
        let next = hutchinson_step(sys, &current)?;
        if next.is_empty() {
            return Err(Error::EmptySet("Hutchinson iterate vanished on the grid".into()));
        }
        last = hausdorff_distance(&current, &next)?;
        current = next;
        if last < tol {
            return Ok(Attractor {
                set: current,
                iterations: n,
                final_hausdorff: last,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_distance: last,
    })
}

/// Summary written by the `construct` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub kappa: f64,
    pub theta: f64,
    pub delta: f64,
    pub k: usize,
    pub cover_verified: bool,
    pub absorbing_verified: bool,
    pub iterations: usize,
    pub final_hausdorff: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::diameter;

    fn t_only(kappa: f64) -> SystemSpec {
        SystemSpec::new(vec![MapSpec::affine(kappa, 179.0, Point::ORIGIN).unwrap()], false).unwrap()
    }

    /// Independent cover oracle: closed-form image disks
    /// `S_y(V) = B((I − κA)y, κδ)`, checked at the same cell centers.
    fn cover_by_disks(p: &ConstructionParams, m: usize, resolution: usize) -> bool {
        let domain = chart_around(&p.v(), resolution).unwrap();
        let (s, c) = p.theta.to_radians().sin_cos();
        let r = p.kappa * p.delta;
        let centers: Vec<Point> = std::iter::once(Point::ORIGIN)
            .chain(anchors(p.delta, m).into_iter().map(|y| {
                let ay = Point::new(c * y.x - s * y.y, s * y.x + c * y.y);
                y - ay * p.kappa
            }))
            .collect();
        (0..domain.cell_count()).all(|i| {
            let x = domain.cell_center(i);
            x.norm() > p.delta || centers.iter().any(|&z| (x - z).norm() < r)
        })
    }

    #[test]
    fn anchor_count_matches_disk_oracle() {
        let p = ConstructionParams::new(0.76, 179.0, 1.0);
        let res = 256;
        let m_oracle = (1..=MAX_ANCHORS).find(|&m| cover_by_disks(&p, m, res)).unwrap();
        let built = build_construction(&p, res).unwrap();
        assert!(built.cover_verified);
        assert_eq!(built.anchors.len(), m_oracle);
        assert_eq!(built.k(), m_oracle + 1);
    }

    #[test]
    fn larger_scale_needs_fewer_anchors() {
        let a = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), 256).unwrap();
        let b = build_construction(&ConstructionParams::new(0.999, 179.0, 1.0), 256).unwrap();
        assert!(b.k() < a.k(), "{} vs {}", b.k(), a.k());
    }

    #[test]
    fn anchor_count_is_scale_free() {
        let a = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), 256).unwrap();
        let b = build_construction(&ConstructionParams::new(0.76, 179.0, 2.0), 256).unwrap();
        assert_eq!(a.k(), b.k());
    }

    #[test]
    fn impossible_cover_is_reported() {
        // with no rotation the conjugates' images stay inside radius 15/16
        match build_construction(&ConstructionParams::new(0.76, 0.0, 1.0), 64) {
            Err(Error::Construction { uncovered, .. }) => assert!(uncovered > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(build_construction(&ConstructionParams::new(0.7, 179.0, 1.0), 64).is_err());
    }

    #[test]
    fn absorbing_checks() {
        let u = Disk::new(Point::ORIGIN, 16.0).unwrap();
        assert!(check_absorbing(&t_only(0.9), &u, 128).unwrap().absorbing);
        let c = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), 256).unwrap();
        let abs = check_absorbing(&c.system, &u, 256).unwrap();
        assert!(abs.absorbing && abs.escape_distance == 0.0);
        let tiny = Disk::new(Point::ORIGIN, 0.1).unwrap();
        let abs = check_absorbing(&c.system, &tiny, 256).unwrap();
        assert!(!abs.absorbing);
        // conjugate images sit near |(I − κA)y| ≈ 1.32, far outside radius 0.1
        assert!(abs.escape_distance > 1.0);
    }

    #[test]
    fn fixed_point_cell_is_preserved() {
        let domain = Domain::square(Point::ORIGIN, 1.0, 33).unwrap();
        let centre = domain.cell_of(Point::ORIGIN).unwrap();
        let a = GridSet::from_cells(&domain, [centre]);
        assert_eq!(hutchinson_step(&t_only(0.76), &a).unwrap(), a);
    }

    #[test]
    fn image_volume_is_bounded_by_determinant() {
        let c = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), 128).unwrap();
        let domain = chart_around(&c.u, 256).unwrap();
        let a = GridSet::from_disk(&domain, &Disk::new(Point::new(2.0, -1.0), 5.0).unwrap());
        let img = hutchinson_step(&c.system, &a).unwrap();
        let s = c.system.maps().len() as f64;
        let slack = s * a.inner_boundary().volume();
        assert!(img.volume() <= s * 0.76f64.powi(2) * a.volume() + slack);
        let u_raster = GridSet::from_disk(&domain, &c.u);
        assert!(hutchinson_step(&c.system, &u_raster).unwrap().is_subset(&u_raster).unwrap());
    }

    #[test]
    fn single_contraction_collapses_to_origin() {
        let u = Disk::new(Point::ORIGIN, 16.0).unwrap();
        let res = 256;
        let att = attractor(&t_only(0.76), &u, res, 0.5 * 34.0 / res as f64, 200).unwrap();
        let diag = att.set.domain().cell_diagonal();
        assert!(!att.set.is_empty());
        // each raster step can move a point by half a cell diagonal; summed
        // over the contraction this stays within diag / (2(1 − κ))
        let bound = diag / (2.0 * (1.0 - 0.76)) + diag / 2.0;
        assert!(att.set.centers().iter().all(|c| c.norm() <= bound));
        assert!(att.set.contains_point(Point::new(1e-9, 1e-9)));
    }

    #[test]
    fn single_contraction_diameters_shrink_geometrically() {
        let u = Disk::new(Point::ORIGIN, 16.0).unwrap();
        let domain = chart_around(&u, 512).unwrap();
        let h = domain.cell_diagonal();
        let sys = t_only(0.76);
        let mut a = GridSet::from_disk(&domain, &u);
        let d0 = diameter(&a).unwrap();
        for n in 1..=8 {
            a = hutchinson_step(&sys, &a).unwrap();
            let expected = 0.76f64.powi(n) * d0;
            assert!((diameter(&a).unwrap() - expected).abs() <= 2.0 * h, "n={n}");
        }
    }

    #[test]
    fn iteration_count_follows_contraction_rate() {
        let u = Disk::new(Point::ORIGIN, 16.0).unwrap();
        let res = 256;
        let tol = chart_around(&u, res).unwrap().cell_width();
        let att = attractor(&t_only(0.76), &u, res, tol, 200).unwrap();
        let bound = ((tol / 32.0).ln() / 0.76f64.ln()).ceil() as usize + 5;
        assert!(att.iterations <= bound, "{} > {bound}", att.iterations);
    }

    #[test]
    fn attractor_is_forward_invariant_and_equivariant() {
        let res = 256;
        let c1 = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), res).unwrap();
        let c2 = build_construction(&ConstructionParams::new(0.76, 179.0, 2.0), res).unwrap();
        let cw = chart_around(&c1.u, res).unwrap().cell_width();
        let a1 = attractor(&c1.system, &c1.u, res, cw, 200).unwrap();
        let a2 = attractor(&c2.system, &c2.u, res, 2.0 * cw, 200).unwrap();
        // same cells, since the second chart is the first scaled by 2
        let differing = a1
            .set
            .bits()
            .iter()
            .zip(a2.set.bits())
            .filter(|(x, y)| x != y)
            .count();
        assert!(differing as f64 <= 0.01 * a1.set.count() as f64, "{differing}");
        let step = hutchinson_step(&c1.system, &a1.set).unwrap();
        assert!(step.is_subset(&a1.set.dilate(cw)).unwrap());
        // the closed ball V lies in every iterate, so in the attractor
        let v = GridSet::from_disk(a1.set.domain(), &Disk::new(Point::ORIGIN, 0.95).unwrap());
        assert!(v.is_subset(&a1.set).unwrap());
    }

    #[test]
    fn construction_maps_have_complex_eigenvalues() {
        let c = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), 128).unwrap();
        for g in c.system.maps() {
            for k in 0..100 {
                let x = Point::new((k as f64 * 0.731).sin() * 3.0, (k as f64 * 0.419).cos() * 3.0);
                assert!(crate::maps::complex_eigenvalue_check(g, x).unwrap());
            }
        }
    }
}
