use rayon::prelude::*;

use super::{DomainKind, GridSet, Point};
use crate::error::{Error, Result};

const FAR: f64 = 1e20;

/// Squared distance transform of a sampled function with unit spacing
/// (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            // z[0] is -inf, so this stops at k = 0
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Distance from every cell center to the nearest included cell center,
/// in chart units (wraparound on the circle). Infinite for an empty set.
pub fn distance_field(set: &GridSet) -> Vec<f64> {
    let domain = set.domain();
    let n = domain.resolution();
    if set.is_empty() {
        return vec![f64::INFINITY; set.len()];
    }
    match domain.kind() {
        DomainKind::Circle => {
            let f: Vec<f64> = (0..3 * n)
                .map(|k| if set.contains_cell(k % n) { 0.0 } else { FAR })
                .collect();
            let mut out = vec![0.0; 3 * n];
            edt_1d(&f, &mut out);
            let h = 1.0 / n as f64;
            out[n..2 * n].iter().map(|d| d.sqrt() * h).collect()
        }
        DomainKind::Rect { .. } => {
            let (dx, dy) = domain.cell_size();
            let ratio = (dy / dx).powi(2);
            // rows: squared distance in units of dx
            let mut rows = vec![0.0; n * n];
            rows.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
                let f: Vec<f64> = (0..n)
                    .map(|i| if set.contains_cell(j * n + i) { 0.0 } else { FAR })
                    .collect();
                edt_1d(&f, row);
            });
            // columns: rescale to units of dy so spacing is one
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let f: Vec<f64> = (0..n)
                        .map(|j| {
                            let v = rows[j * n + i];
                            if v >= FAR * 0.5 {
                                FAR
                            } else {
                                v / ratio
                            }
                        })
                        .collect();
                    let mut out = vec![0.0; n];
                    edt_1d(&f, &mut out);
                    out
                })
                .collect();
            let mut field = vec![0.0; n * n];
            field.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
                for (i, cell) in row.iter_mut().enumerate() {
                    *cell = cols[i][j].sqrt() * dy;
                }
            });
            field
        }
    }
}

fn directed(from: &GridSet, field_to: &[f64]) -> f64 {
    from.bits()
        .par_iter()
        .zip(field_to.par_iter())
        .filter(|(&b, _)| b)
        .map(|(_, &d)| d)
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between the cell-center sets of two nonempty GridSets.
pub fn hausdorff_distance(a: &GridSet, b: &GridSet) -> Result<f64> {
    if a.domain() != b.domain() {
        return Err(Error::Domain(
            "Hausdorff distance needs a common domain and resolution".into(),
        ));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("Hausdorff distance of an empty set".into()));
    }
    let da = distance_field(a);
    let db = distance_field(b);
    Ok(directed(b, &da).max(directed(a, &db)))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Largest chart distance between two included cell centers.
pub fn diameter(set: &GridSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet("diameter of an empty set".into()));
    }
    let domain = set.domain();
    let n = domain.resolution();
    match domain.kind() {
        DomainKind::Circle => {
            let xs: Vec<f64> = set.centers().iter().map(|p| p.x).collect();
            let best = xs
                .par_iter()
                .map(|&x| {
                    let anti = (x + 0.5).rem_euclid(1.0);
                    let k = xs.partition_point(|&v| v < anti);
                    let mut d: f64 = 0.0;
                    for c in [k.wrapping_sub(1), k, k + 1] {
                        let c = c.min(xs.len() - 1);
                        d = d.max(super::circle_distance(x, xs[c]));
                    }
                    d
                })
                .reduce(|| 0.0, f64::max);
            Ok(best)
        }
        DomainKind::Rect { .. } => {
            // extreme cells of each row span the convex hull
            let mut extremes = Vec::new();
            for j in 0..n {
                let row = &set.bits()[j * n..(j + 1) * n];
                if let Some(first) = row.iter().position(|&b| b) {
                    let last = row.iter().rposition(|&b| b).unwrap();
                    extremes.push(domain.cell_center(j * n + first));
                    extremes.push(domain.cell_center(j * n + last));
                }
            }
            let hull = convex_hull(extremes);
            let best = (0..hull.len())
                .into_par_iter()
                .map(|i| {
                    hull[i + 1..]
                        .iter()
                        .map(|&q| (hull[i] - q).norm())
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Disk, Domain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_field(set: &GridSet) -> Vec<f64> {
        let d = set.domain();
        let pts = set.centers();
        (0..set.len())
            .map(|i| {
                let c = d.cell_center(i);
                pts.iter()
                    .map(|&p| d.distance(c, p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn brute_hausdorff(a: &GridSet, b: &GridSet) -> f64 {
        let d = a.domain();
        let (pa, pb) = (a.centers(), b.centers());
        let dir = |x: &[Point], y: &[Point]| {
            x.iter()
                .map(|&p| y.iter().map(|&q| d.distance(p, q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(&pa, &pb).max(dir(&pb, &pa))
    }

    fn random_set(d: &Domain, density: f64, seed: u64) -> GridSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = (0..d.cell_count()).map(|_| rng.gen_bool(density)).collect();
        GridSet::from_bits(d, bits).unwrap()
    }

    #[test]
    fn field_matches_brute_force_on_anisotropic_grid() {
        let d = Domain::rect(0.0, 2.0, -1.0, 0.5, 24).unwrap();
        for seed in 0..5 {
            let s = random_set(&d, 0.03, seed);
            if s.is_empty() {
                continue;
            }
            let fast = distance_field(&s);
            let slow = brute_field(&s);
            for (x, y) in fast.iter().zip(&slow) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn circle_field_wraps() {
        let d = Domain::circle(50).unwrap();
        let s = GridSet::from_cells(&d, [0]);
        let f = distance_field(&s);
        assert!((f[49] - 1.0 / 50.0).abs() < 1e-12);
        assert!((f[25] - 25.0 / 50.0).abs() < 1e-12);
        for seed in 0..5 {
            let s = random_set(&d, 0.1, seed);
            if s.is_empty() {
                continue;
            }
            let fast = distance_field(&s);
            for (x, y) in fast.iter().zip(brute_field(&s)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hausdorff_identity_and_empty() {
        let d = Domain::rect(0.0, 1.0, 0.0, 1.0, 32).unwrap();
        let a = random_set(&d, 0.2, 1);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let e = GridSet::empty(&d);
        assert!(matches!(hausdorff_distance(&a, &e), Err(Error::EmptySet(_))));
    }

    #[test]
    fn hausdorff_two_cells() {
        let d = Domain::rect(0.0, 1.0, 0.0, 1.0, 64).unwrap();
        let p = Point::new(0.1, 0.2);
        let q = Point::new(0.7, 0.9);
        let a = GridSet::from_cells(&d, [d.cell_of(p).unwrap()]);
        let b = GridSet::from_cells(&d, [d.cell_of(q).unwrap()]);
        let h = hausdorff_distance(&a, &b).unwrap();
        assert!((h - (p - q).norm()).abs() <= d.cell_diagonal());
    }

    #[test]
    fn hausdorff_matches_brute_force() {
        let d = Domain::rect(-1.0, 1.0, -1.0, 1.0, 20).unwrap();
        for seed in 0..6 {
            let a = random_set(&d, 0.05, seed);
            let b = random_set(&d, 0.05, seed + 100);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let fast = hausdorff_distance(&a, &b).unwrap();
            assert!((fast - brute_hausdorff(&a, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn disk_versus_one_ring_dilation() {
        // frozen by enumeration: a disk and its one-cell dilation differ by
        // exactly one cell width in Hausdorff distance
        let d = Domain::rect(0.0, 1.0, 0.0, 1.0, 128).unwrap();
        let disk = GridSet::from_disk(&d, &Disk::new(Point::new(0.5, 0.5), 0.3).unwrap());
        let h = d.cell_width();
        let ring = disk.dilate(h * 1.0001);
        let hd = hausdorff_distance(&disk, &ring).unwrap();
        assert!((hd - brute_hausdorff(&disk, &ring)).abs() < 1e-12);
        assert!(hd <= 2.0 * h);
    }

    #[test]
    fn diameter_of_disk_and_arc() {
        let d = Domain::rect(-1.0, 1.0, -1.0, 1.0, 256).unwrap();
        let disk = GridSet::from_disk(&d, &Disk::new(Point::ORIGIN, 0.5).unwrap());
        let diam = diameter(&disk).unwrap();
        assert!(diam <= 1.0 && diam > 1.0 - 2.0 * d.cell_diagonal());
        let pts = disk.centers();
        let brute = pts
            .iter()
            .step_by(7)
            .flat_map(|p| pts.iter().map(move |q| (*p - *q).norm()))
            .fold(0.0, f64::max);
        assert!(diam >= brute - 1e-12);

        let c = Domain::circle(100).unwrap();
        let arc = GridSet::from_predicate(&c, |p| p.x < 0.2);
        assert!((diameter(&arc).unwrap() - 0.19).abs() < 1e-12);
        let two = GridSet::from_cells(&c, [0, 50]);
        assert!((diameter(&two).unwrap() - 0.5).abs() < 1e-12);
    }
}
