use rayon::prelude::*;

use super::{Disk, Domain, DomainKind, GridSet};
use crate::error::{Error, Result};

/// `vol(a ∩ d) / vol(d)` on the grid. The disk must lie inside the chart.
pub fn volume_ratio(a: &GridSet, d: &Disk) -> Result<f64> {
    let domain = a.domain();
    if !domain.contains_disk(d) {
        return Err(Error::Domain(format!(
            "disk at ({}, {}) radius {} leaves the chart",
            d.center.x, d.center.y, d.radius
        )));
    }
    let cells = d.cells(domain);
    if cells.is_empty() {
        return Err(Error::Resolution(format!(
            "disk radius {} contains no cell center",
            d.radius
        )));
    }
    let inside = cells.iter().filter(|&&i| a.contains_cell(i)).count();
    Ok(inside as f64 / cells.len() as f64)
}

/// Per-row half-widths (in cells) of the rasterized disk of `radius` around
/// a cell center: row offset `dj` spans columns `-w..=w`.
fn disk_stencil(domain: &Domain, radius: f64) -> Vec<(i64, i64)> {
    let (dx, dy) = domain.cell_size();
    let rows = (radius / dy).floor() as i64;
    (-rows..=rows)
        .filter_map(|dj| {
            let rem = radius * radius - (dj as f64 * dy).powi(2);
            if rem < 0.0 {
                return None;
            }
            Some((dj, (rem.sqrt() / dx).floor() as i64))
        })
        .collect()
}

/// Cells whose local density of `a` at the smallest radius reaches `threshold`;
/// a grid approximation of the Lebesgue density points of `a`.
///
/// Near the chart edge the ball is clipped to the chart.
pub fn density_points(a: &GridSet, radii: &[f64], threshold: f64) -> Result<GridSet> {
    let domain = *a.domain();
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
    }
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside (1/2, 1]"
        )));
    }
    let r = *radii.last().unwrap();
    if r < 2.0 * domain.cell_width() {
        return Err(Error::Resolution(format!(
            "radius {r} below two cell widths ({})",
            2.0 * domain.cell_width()
        )));
    }
    let fraction = local_density(a, r)?;
    let bits = fraction.into_iter().map(|f| f >= threshold).collect();
    GridSet::from_bits(&domain, bits)
}

/// For every cell, the fraction of cells of the disk of `radius` around its
/// center (clipped to the chart) that belong to `a`.
pub fn local_density(a: &GridSet, radius: f64) -> Result<Vec<f64>> {
    let domain = *a.domain();
    let r = radius;
    let n = domain.resolution();
    Ok(match domain.kind() {
        DomainKind::Circle => {
            if r >= 0.5 {
                return Err(Error::Domain(format!("arc radius {r} must be below 1/2")));
            }
            let w = (r * n as f64).floor() as i64;
            // prefix sums over a tripled copy handle wraparound
            let mut prefix = vec![0usize; 3 * n + 1];
            for k in 0..3 * n {
                prefix[k + 1] = prefix[k] + a.contains_cell(k % n) as usize;
            }
            let total = (2 * w + 1) as f64;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let lo = (n as i64 + i as i64 - w) as usize;
                    let hi = (n as i64 + i as i64 + w) as usize;
                    (prefix[hi + 1] - prefix[lo]) as f64 / total
                })
                .collect()
        }
        DomainKind::Rect { .. } => {
            let stencil = disk_stencil(&domain, r);
            let prefix: Vec<Vec<usize>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut row = vec![0usize; n + 1];
                    for i in 0..n {
                        row[i + 1] = row[i] + a.contains_cell(j * n + i) as usize;
                    }
                    row
                })
                .collect();
            (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = ((idx % n) as i64, (idx / n) as i64);
                    let (mut inside, mut total) = (0usize, 0usize);
                    for &(dj, w) in &stencil {
                        let jj = j + dj;
                        if jj < 0 || jj >= n as i64 {
                            continue;
                        }
                        let lo = (i - w).max(0) as usize;
                        let hi = (i + w).min(n as i64 - 1) as usize;
                        inside += prefix[jj as usize][hi + 1] - prefix[jj as usize][lo];
                        total += hi + 1 - lo;
                    }
                    inside as f64 / total as f64
                })
                .collect()
        }
    })
}
