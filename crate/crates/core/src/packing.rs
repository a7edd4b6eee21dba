//! Packing disks with mostly-complement content into an ambient disk.
//!
//! A family `{B(p, δ_p)}` inside the ambient disk `B(y, δ)` is checked
//! against four conditions on the grid:
//!
//! 1. every disk lies in the ambient disk;
//! 2. the disks are pairwise disjoint;
//! 3. the union covers more than `2/3` of the ambient disk;
//! 4. each disk is more than half covered by the complement of the target.
//!
//! Volumes are cell counts normalized by the cell count of the ambient disk.
//! Containment and disjointness tolerate one boundary ring of cells, while
//! the two strict volume inequalities must clear their boundary rings, so a
//! family is only declared feasible when rasterization cannot be the reason.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::io::{load_pgm, pgm_dimensions, save_pgm, PgmFormat};
use crate::geometry::{local_density, Disk, Domain, DomainKind, GridSet, Point};

/// Fraction of the ambient disk the union must exceed.
pub const COVER_FRACTION: f64 = 2.0 / 3.0;
/// Fraction of each disk the complement must exceed.
pub const COMPLEMENT_FRACTION: f64 = 0.5;
/// Target density above which no family can satisfy all four conditions.
pub const DENSITY_PREMISE: f64 = 0.75;
/// Radius, in cells, of the balls used to flag density points of the complement.
pub const DP_RADIUS_CELLS: f64 = 4.0;
/// Smallest radius, in cells, that greedy placement accepts.
pub const MIN_RADIUS_CELLS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PackingInstance {
    pub ambient: Disk,
    /// The set `B`; disks should mostly avoid it.
    pub target: GridSet,
    pub family: Vec<Disk>,
}

impl PackingInstance {
    pub fn new(ambient: Disk, target: GridSet, family: Vec<Disk>) -> Result<Self> {
        let domain = target.domain();
        if domain.is_circle() {
            return Err(Error::Dimension("packing needs a planar chart".into()));
        }
        if !domain.contains_disk(&ambient) {
            return Err(Error::Domain(format!(
                "ambient disk at ({}, {}) radius {} leaves the chart",
                ambient.center.x, ambient.center.y, ambient.radius
            )));
        }
        if ambient.cell_count(domain) == 0 {
            return Err(Error::Resolution("ambient disk contains no cell".into()));
        }
        Ok(PackingInstance {
            ambient,
            target,
            family,
        })
    }

    pub fn domain(&self) -> &Domain {
        self.target.domain()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub cond4: bool,
    /// Worst disk: (ring allowance − cells outside the ambient disk) / vol(ambient).
    pub margin1: Option<f64>,
    /// Worst pair: (ring allowance − shared cells) / vol(ambient).
    pub margin2: Option<f64>,
    /// (vol(⋃) − 2/3·vol(ambient)) / vol(ambient).
    pub margin3: f64,
    /// Worst disk: (vol(Bᶜ ∩ D) − vol(D)/2) / vol(ambient).
    pub margin4: Option<f64>,
    /// vol(⋃ family ∩ ambient) / vol(ambient).
    pub covered_fraction: f64,
    /// vol(B ∩ ambient) / vol(ambient).
    pub density_premise: f64,
    /// Every center is a grid density point of `Bᶜ` at threshold 3/4.
    pub centers_in_dp: bool,
    pub feasible: bool,
}

/// Cells of each disk, computed once and shared by all checks.
struct Rasters {
    ambient: Vec<usize>,
    disks: Vec<Vec<usize>>,
    rings: Vec<usize>,
}

impl Rasters {
    fn new(inst: &PackingInstance) -> Self {
        let domain = inst.domain();
        let disks: Vec<Vec<usize>> = inst.family.par_iter().map(|d| d.cells(domain)).collect();
        let rings = inst.family.par_iter().map(|d| d.ring_cells(domain)).collect();
        Rasters {
            ambient: inst.ambient.cells(domain),
            disks,
            rings,
        }
    }
}

fn sorted_overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Fraction of the chart-clipped disk around `p` that lies in `a`.
fn clipped_ratio(a: &GridSet, p: Point, radius: f64) -> Option<f64> {
    let domain = a.domain();
    domain.cell_of(p)?;
    let cells = Disk { center: p, radius }.cells(domain);
    if cells.is_empty() {
        return None;
    }
    let inside = cells.iter().filter(|&&i| a.contains_cell(i)).count();
    Some(inside as f64 / cells.len() as f64)
}

/// Check the four conditions and the density-point premise on the grid.
pub fn verify_conditions(inst: &PackingInstance) -> PackingReport {
    let domain = inst.domain();
    let r = Rasters::new(inst);
    let amb_n = r.ambient.len() as f64;
    let mut in_ambient = vec![false; domain.cell_count()];
    for &c in &r.ambient {
        in_ambient[c] = true;
    }

    let outside: Vec<f64> = r
        .disks
        .par_iter()
        .zip(&r.rings)
        .map(|(cells, &ring)| {
            let out = cells.iter().filter(|&&c| !in_ambient[c]).count();
            (ring as f64 - out as f64) / amb_n
        })
        .collect();
    let margin1 = outside.iter().copied().reduce(f64::min);

    let k = inst.family.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let margin2 = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&inst.family[i], &inst.family[j]);
            let near = (a.center - b.center).norm() <= a.radius + b.radius + domain.cell_diagonal();
            let shared = if near { sorted_overlap(&r.disks[i], &r.disks[j]) } else { 0 };
            let allowance = if r.disks[i].len() <= r.disks[j].len() { r.rings[i] } else { r.rings[j] };
            (allowance as f64 - shared as f64) / amb_n
        })
        .reduce_with(f64::min);

    let mut union = vec![false; domain.cell_count()];
    for cells in &r.disks {
        for &c in cells {
            union[c] = true;
        }
    }
    let covered = r.ambient.iter().filter(|&&c| union[c]).count() as f64;
    let union_total = union.iter().filter(|&&b| b).count() as f64;
    let ring_total: usize = r.rings.iter().sum();
    let lhs3 = union_total - COVER_FRACTION * amb_n;
    let cond3 = lhs3 > ring_total as f64;

    let complement: Vec<(f64, bool)> = r
        .disks
        .par_iter()
        .zip(&r.rings)
        .map(|(cells, &ring)| {
            let free = cells.iter().filter(|&&c| !inst.target.contains_cell(c)).count() as f64;
            let lhs = free - COMPLEMENT_FRACTION * cells.len() as f64;
            (lhs / amb_n, lhs > ring as f64)
        })
        .collect();
    let margin4 = complement.iter().map(|m| m.0).reduce(f64::min);

    let in_target = r.ambient.iter().filter(|&&c| inst.target.contains_cell(c)).count() as f64;
    let bc = inst.target.complement();
    let dp_r = DP_RADIUS_CELLS * domain.cell_width();
    let centers_in_dp = inst
        .family
        .iter()
        .all(|d| clipped_ratio(&bc, d.center, dp_r).is_some_and(|f| f >= DENSITY_PREMISE));

    let cond1 = margin1.is_none_or(|m| m >= 0.0);
    let cond2 = margin2.is_none_or(|m| m >= 0.0);
    let cond4 = complement.iter().all(|m| m.1);
    PackingReport {
        cond1,
        cond2,
        cond3,
        cond4,
        margin1,
        margin2,
        margin3: lhs3 / amb_n,
        margin4,
        covered_fraction: covered / amb_n,
        density_premise: in_target / amb_n,
        centers_in_dp,
        feasible: cond1 && cond2 && cond3 && cond4,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    /// Half the covered fraction of the ambient disk.
    pub lower_bound: f64,
    /// vol(Bᶜ ∩ ambient) / vol(ambient).
    pub actual: f64,
    pub density_premise: f64,
    /// The target fills more than 3/4 of the ambient disk, so the complement
    /// cannot reach the 1/3 that a feasible family forces.
    pub infeasible_with_density_premise: bool,
}

/// Both sides of the chain `vol(Bᶜ ∩ ambient) > vol(⋃)/2 > vol(ambient)/3`.
pub fn contradiction_bound(inst: &PackingInstance) -> ContradictionReport {
    let domain = inst.domain();
    let ambient = inst.ambient.cells(domain);
    let mut union = vec![false; domain.cell_count()];
    for d in &inst.family {
        for c in d.cells(domain) {
            union[c] = true;
        }
    }
    let n = ambient.len() as f64;
    let covered = ambient.iter().filter(|&&c| union[c]).count() as f64;
    let in_target = ambient.iter().filter(|&&c| inst.target.contains_cell(c)).count() as f64;
    let premise = in_target / n;
    ContradictionReport {
        lower_bound: 0.5 * covered / n,
        actual: 1.0 - premise,
        density_premise: premise,
        infeasible_with_density_premise: premise > DENSITY_PREMISE,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub instance: PackingInstance,
    pub report: PackingReport,
}

/// Place disks one at a time until the union covers enough, `max_disks` are
/// placed, or no admissible center remains.
///
/// Each step picks the cell with the highest local complement density at
/// `min_radius` (ties: larger free radius, then lower index) among cells where
/// a disk of `min_radius` already satisfies the complement condition, and
/// grows the disk to the largest radius found by bisection that still does.
/// Disks stay geometrically inside the ambient disk and apart from each other,
/// which keeps their rasters contained and disjoint.
pub fn greedy_pack(target: &GridSet, ambient: Disk, min_radius: f64, max_disks: usize) -> Result<GreedyOutcome> {
    let inst = PackingInstance::new(ambient, target.clone(), Vec::new())?;
    let domain = *target.domain();
    let cw = domain.cell_width();
    if !(min_radius >= MIN_RADIUS_CELLS * cw - 1e-12 * cw) {
        return Err(Error::InvalidParameter(format!(
            "min radius {min_radius} below {MIN_RADIUS_CELLS} cell widths ({})",
            MIN_RADIUS_CELLS * cw
        )));
    }
    let bc = target.complement();
    let score = local_density(&bc, min_radius)?;
    let amb_cells = ambient.cells(&domain);
    let amb_n = amb_cells.len() as f64;

    // free radius of every ambient cell: distance to the ambient boundary and
    // to every placed disk, shrunk slightly so touching disks share no cell
    let gap = 1e-9 * cw;
    let mut free: Vec<f64> = amb_cells
        .iter()
        .map(|&c| ambient.radius - (domain.cell_center(c) - ambient.center).norm() - gap)
        .collect();

    let admissible = |d: &Disk| -> bool {
        let cells = d.cells(&domain);
        let inside = cells.iter().filter(|&&c| bc.contains_cell(c)).count() as f64;
        inside - COMPLEMENT_FRACTION * cells.len() as f64 > d.ring_cells(&domain) as f64
    };
    let mut order: Vec<usize> = (0..amb_cells.len())
        .into_par_iter()
        .filter(|&k| {
            let c = amb_cells[k];
            score[c] > COMPLEMENT_FRACTION
                && free[k] >= min_radius
                && admissible(&Disk {
                    center: domain.cell_center(c),
                    radius: min_radius,
                })
        })
        .collect();
    order.sort_by(|&a, &b| score[amb_cells[b]].total_cmp(&score[amb_cells[a]]).then(a.cmp(&b)));

    let mut family = Vec::new();
    let mut union_cells = 0usize;
    let mut ring_total = 0usize;
    while family.len() < max_disks {
        if union_cells as f64 - COVER_FRACTION * amb_n > ring_total as f64 {
            break;
        }
        let mut best: Option<usize> = None;
        for &k in &order {
            if free[k] < min_radius {
                continue;
            }
            match best {
                None => best = Some(k),
                Some(b) if score[amb_cells[k]] < score[amb_cells[b]] => break,
                Some(b) if free[k] > free[b] => best = Some(k),
                _ => {}
            }
        }
        let Some(k) = best else { break };
        let center = domain.cell_center(amb_cells[k]);
        let at = |radius| Disk { center, radius };
        let mut radius = free[k];
        if !admissible(&at(radius)) {
            let (mut lo, mut hi) = (min_radius, free[k]);
            while hi - lo > 0.25 * cw {
                let mid = 0.5 * (lo + hi);
                if admissible(&at(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            radius = lo;
        }
        let disk = at(radius);
        union_cells += disk.cell_count(&domain);
        ring_total += disk.ring_cells(&domain);
        free.par_iter_mut().zip(&amb_cells).for_each(|(f, &c)| {
            let d = (domain.cell_center(c) - center).norm() - radius - gap;
            if d < *f {
                *f = d;
            }
        });
        family.push(disk);
    }
    let instance = PackingInstance { family, ..inst };
    let report = verify_conditions(&instance);
    Ok(GreedyOutcome { instance, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl From<Disk> for DiskSpec {
    fn from(d: Disk) -> Self {
        DiskSpec {
            cx: d.center.x,
            cy: d.center.y,
            r: d.radius,
        }
    }
}

impl DiskSpec {
    pub fn to_disk(self) -> Result<Disk> {
        Disk::new(Point::new(self.cx, self.cy), self.r)
    }
}

/// On-disk form of an instance. The target is a square PGM; `bounds` gives
/// the chart as `[xmin, xmax, ymin, ymax]` and defaults to the unit square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub ambient: DiskSpec,
    pub target: PathBuf,
    pub family: Vec<DiskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 4]>,
}

/// Read an instance JSON; a relative target path is taken relative to the
/// JSON file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<PackingInstance> {
    let path = path.as_ref();
    let file: InstanceFile = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    let target = match path.parent() {
        Some(dir) if file.target.is_relative() => dir.join(&file.target),
        _ => file.target.clone(),
    };
    let (w, h) = pgm_dimensions(&target)?;
    if w != h {
        return Err(Error::Domain(format!("target bitmap is {w}x{h}, expected a square")));
    }
    let [xmin, xmax, ymin, ymax] = file.bounds.unwrap_or([0.0, 1.0, 0.0, 1.0]);
    let domain = Domain::rect(xmin, xmax, ymin, ymax, w)?;
    let target = load_pgm(&domain, &target)?;
    let family = file.family.iter().map(|d| d.to_disk()).collect::<Result<_>>()?;
    PackingInstance::new(file.ambient.to_disk()?, target, family)
}

/// Write an instance as JSON plus its target bitmap; the JSON refers to the
/// bitmap by file name.
pub fn save_instance(inst: &PackingInstance, json: impl AsRef<Path>, pgm: impl AsRef<Path>) -> Result<()> {
    let pgm = pgm.as_ref();
    save_pgm(&inst.target, PgmFormat::Raw, pgm)?;
    let bounds = match inst.domain().kind() {
        DomainKind::Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        } => [xmin, xmax, ymin, ymax],
        DomainKind::Circle => return Err(Error::Dimension("packing needs a planar chart".into())),
    };
    let file = InstanceFile {
        ambient: inst.ambient.into(),
        target: pgm.file_name().map(PathBuf::from).unwrap_or_else(|| pgm.to_path_buf()),
        family: inst.family.iter().map(|&d| d.into()).collect(),
        bounds: Some(bounds),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(json, text)?;
    Ok(())
}
