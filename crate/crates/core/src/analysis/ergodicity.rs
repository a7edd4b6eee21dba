use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invariance_defect, DefectDirection};
use crate::construction::{image, preimage};
use crate::error::{Error, Result};
use crate::geometry::{circle_delta, Domain, DomainKind, GridSet, Point};
use crate::maps::{MapSpec, SystemSpec};

/// Candidates must keep their volume inside this open interval.
const VOLUME_WINDOW: (f64, f64) = (0.05, 0.95);

/// A defect below this many split-ring volumes counts as invariant.
const RING_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityParams {
    /// Number of random half-domain starting sets.
    pub seed_sets: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErgodicityVerdict {
    #[serde(rename = "candidate invariant set found")]
    CandidateFound,
    #[serde(rename = "no intermediate invariant set found at this resolution")]
    NoCandidate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub resolution: usize,
    /// Smallest preimage defect seen at intermediate volume; `None` if no
    /// iterate ever had intermediate volume.
    pub best_defect: Option<f64>,
    pub best_volume: Option<f64>,
    /// Defect below which a set counts as invariant.
    pub threshold: f64,
    pub verdict: ErgodicityVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub report: ErgodicityReport,
    /// The set achieving `best_defect`.
    pub best: Option<GridSet>,
}

impl ProbeOutcome {
    pub fn found(&self) -> bool {
        self.report.verdict == ErgodicityVerdict::CandidateFound
    }
}

/// Fixed points of a circle map, located by sign changes of the displacement
/// between neighbouring cell centers.
fn fixed_points(g: &MapSpec, domain: &Domain) -> Vec<f64> {
    let n = domain.resolution();
    let disp: Vec<f64> = (0..n)
        .map(|i| circle_delta(domain.cell_center(i).x, g.eval(domain.cell_center(i)).x))
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (disp[i], disp[(i + 1) % n]);
        // a genuine crossing, not the ±1/2 branch jump
        if a.abs() < 0.25 && b.abs() < 0.25 && (a <= 0.0) != (b <= 0.0) {
            let s = domain.cell_center(i).x;
            out.push(s + a / (a - b) / n as f64);
        }
    }
    out
}

/// Largest number of arc pairs in a periodic starting set on the circle.
const MAX_COMB: usize = 12;

/// Starting sets: arcs between consecutive fixed points of each circle
/// generator; on the circle, combs of `m` equally spaced arcs of length
/// `1/(2m)` for `2 ≤ m ≤ 12` at a seeded phase (invariant under rotations of
/// order dividing `m`); then seeded random half-domains.
fn seed_sets(sys: &SystemSpec, domain: &Domain, p: &ErgodicityParams) -> Vec<GridSet> {
    let mut out = Vec::new();
    if domain.is_circle() {
        for g in sys.generators() {
            let fixed = fixed_points(g, domain);
            if fixed.len() < 2 {
                continue;
            }
            for k in 0..fixed.len() {
                let (a, b) = (fixed[k], fixed[(k + 1) % fixed.len()]);
                let len = (b - a).rem_euclid(1.0);
                out.push(GridSet::from_predicate(domain, |c| (c.x - a).rem_euclid(1.0) < len));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    if domain.is_circle() {
        for m in 2..=MAX_COMB {
            let phi: f64 = rng.gen();
            let m = m as f64;
            out.push(GridSet::from_predicate(domain, |c| {
                ((c.x - phi).rem_euclid(1.0) * 2.0 * m) as u64 % 2 == 0
            }));
        }
    }
    for _ in 0..p.seed_sets {
        match domain.kind() {
            DomainKind::Circle => {
                let phi: f64 = rng.gen();
                out.push(GridSet::from_predicate(domain, |c| (c.x - phi).rem_euclid(1.0) < 0.5));
            }
            DomainKind::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let normal = Point::new(a.cos(), a.sin());
                let center = Point::new(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
                let offset = rng.gen_range(-0.25..0.25) * 0.5 * (xmax - xmin).min(ymax - ymin);
                out.push(GridSet::from_predicate(domain, |c| (c - center).dot(normal) < offset));
            }
        }
    }
    out
}

/// Cellwise majority of `b`, its preimages and its images; ties keep `b`.
fn refine(sys: &SystemSpec, b: &GridSet) -> Result<GridSet> {
    let mut votes: Vec<u32> = b.bits().iter().map(|&x| x as u32).collect();
    let mut total = 1u32;
    for g in sys.maps() {
        for set in [preimage(g, b), image(g, b)?] {
            for (v, &x) in votes.iter_mut().zip(set.bits()) {
                *v += x as u32;
            }
            total += 1;
        }
    }
    let bits = votes
        .iter()
        .zip(b.bits())
        .map(|(&v, &keep)| match (2 * v).cmp(&total) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => keep,
        })
        .collect();
    GridSet::from_bits(b.domain(), bits)
}

/// Best (defect, volume, set) reached from one starting set.
fn search(sys: &SystemSpec, start: GridSet, steps: usize) -> Result<Option<(f64, f64, GridSet)>> {
    let mut best: Option<(f64, f64, GridSet)> = None;
    let mut b = start;
    for step in 0..=steps {
        let vol = b.volume();
        if vol > VOLUME_WINDOW.0 && vol < VOLUME_WINDOW.1 {
            let d = invariance_defect(sys, &b, DefectDirection::Preimage)?;
            if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                best = Some((d, vol, b.clone()));
            }
        }
        if step == steps {
            break;
        }
        let next = refine(sys, &b)?;
        if next == b {
            break;
        }
        b = next;
    }
    Ok(best)
}

/// Falsification search for an invariant set `g⁻¹(B) = B` of intermediate
/// volume. Finding none is consistent with ergodicity at this resolution;
/// it is not a proof.
pub fn ergodicity_probe(sys: &SystemSpec, domain: &Domain, p: &ErgodicityParams) -> Result<ProbeOutcome> {
    if sys.is_circle() != domain.is_circle() {
        return Err(Error::Dimension("system and domain live on different spaces".into()));
    }
    if let Some(i) = sys.maps().iter().position(|g| !g.is_invertible()) {
        return Err(Error::Invertibility(i));
    }
    let threshold = RING_FACTOR * domain.split_ring_volume();
    let starts = seed_sets(sys, domain, p);
    let results: Vec<Option<(f64, f64, GridSet)>> = starts
        .into_par_iter()
        .map(|s| search(sys, s, p.refine_steps))
        .collect::<Result<_>>()?;
    // first strict minimum keeps the choice independent of scheduling
    let mut best: Option<(f64, f64, GridSet)> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|(bd, _, _)| r.0 < *bd) {
            best = Some(r);
        }
    }
    let found = best.as_ref().is_some_and(|(d, _, _)| *d < threshold);
    Ok(ProbeOutcome {
        report: ErgodicityReport {
            resolution: domain.resolution(),
            best_defect: best.as_ref().map(|b| b.0),
            best_volume: best.as_ref().map(|b| b.1),
            threshold,
            verdict: if found {
                ErgodicityVerdict::CandidateFound
            } else {
                ErgodicityVerdict::NoCandidate
            },
        },
        best: best.map(|b| b.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{minimality_test, MinimalityParams};

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn params() -> ErgodicityParams {
        ErgodicityParams {
            seed_sets: 8,
            refine_steps: 20,
            seed: 5,
        }
    }

    fn one(g: MapSpec) -> SystemSpec {
        SystemSpec::new(vec![g], false).unwrap()
    }

    #[test]
    fn third_rotation_has_exact_invariant_set() {
        let domain = Domain::circle(3 * 512).unwrap();
        let sys = one(MapSpec::rotation(1.0 / 3.0).unwrap());
        // the known invariant set [0,1/6) ∪ [1/3,1/2) ∪ [2/3,5/6)
        let known = GridSet::from_predicate(&domain, |c| (c.x * 6.0) as usize % 2 == 0);
        assert_eq!(invariance_defect(&sys, &known, DefectDirection::Preimage).unwrap(), 0.0);
        let out = ergodicity_probe(&sys, &domain, &params()).unwrap();
        assert!(out.found());
        assert_eq!(out.report.best_defect, Some(0.0));
        assert!((out.report.best_volume.unwrap() - 0.5).abs() <= 2.0 / 1536.0);
    }

    #[test]
    fn north_south_map_alone_has_invariant_arcs() {
        let domain = Domain::circle(4096).unwrap();
        let sys = one(MapSpec::moebius(0.7, 0.0).unwrap());
        let fixed = fixed_points(&sys.generators()[0], &domain);
        assert_eq!(fixed.len(), 2);
        assert!(fixed.iter().any(|f| (f - 0.5).abs() < 1e-9));
        let out = ergodicity_probe(&sys, &domain, &params()).unwrap();
        assert!(out.found(), "{:?}", out.report);
        assert!((out.report.best_volume.unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn half_rotation_has_invariant_comb() {
        let domain = Domain::circle(2048).unwrap();
        let sys = one(MapSpec::rotation(0.5).unwrap());
        let out = ergodicity_probe(&sys, &domain, &params()).unwrap();
        assert!(out.found(), "{:?}", out.report);
    }

    #[test]
    fn golden_rotation_has_no_candidate() {
        let domain = Domain::circle(1024).unwrap();
        let sys = one(MapSpec::rotation(GOLDEN).unwrap());
        let out = ergodicity_probe(&sys, &domain, &params()).unwrap();
        assert!(!out.found(), "{:?}", out.report);
        assert!(out.report.best_defect.unwrap() > out.report.threshold);
    }

    #[test]
    fn minimal_system_admits_no_exact_candidate() {
        // a system that is ε-dense from every start can only have invariant
        // sets whose closure and complement closure are both dense
        let domain = Domain::circle(2048).unwrap();
        let sys = SystemSpec::new(
            vec![MapSpec::moebius(0.7, 0.0).unwrap(), MapSpec::rotation(GOLDEN).unwrap()],
            false,
        )
        .unwrap();
        let full = GridSet::full(&domain);
        let eps = 4.0 / 2048.0;
        assert!(minimality_test(&sys, &full, &MinimalityParams::new(0.01, 300, 4, 1))
            .unwrap()
            .is_dense());
        let out = ergodicity_probe(&sys, &domain, &params()).unwrap();
        if let (Some(0.0), Some(b)) = (out.report.best_defect, &out.best) {
            assert_eq!(b.dilate(eps).count(), b.len());
            assert_eq!(b.complement().dilate(eps).count(), b.len());
        }
        assert!(!out.found());
    }

    #[test]
    fn needs_invertible_generators() {
        let domain = Domain::circle(256).unwrap();
        let g = MapSpec::perturbed(MapSpec::rotation(0.1).unwrap(), 0.9, 1).unwrap();
        assert!(matches!(
            ergodicity_probe(&one(g), &domain, &params()),
            Err(Error::Invertibility(0))
        ));
    }
}
