//! Orbit-density (minimality) tests, invariance defects, bounded-distortion
//! estimates, shrink times and the ergodicity probe.

mod distortion;
mod ergodicity;
mod minimality;
mod shrink;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{image, preimage};
use crate::error::{Error, Result};
use crate::geometry::{GridSet, Point};
use crate::maps::SystemSpec;

pub use distortion::{
    contraction_factor, distortion_bound, empirical_distortion, holder_constant,
    DistortionRange, DistortionReport, EmpiricalParams, HolderEstimate, CONSISTENCY_SLACK,
};
pub use ergodicity::{ergodicity_probe, ErgodicityParams, ErgodicityReport, ErgodicityVerdict, ProbeOutcome};
pub use minimality::{
    minimality_test, MinimalityParams, MinimalityReport, MinimalityVerdict, WORD_BUDGET,
};
pub use shrink::{shrink_time, ShrinkTime};

/// Which side of the invariance equation to compare against the set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectDirection {
    /// `vol(a Δ ⋃ᵢ gᵢ(a))`
    Image,
    /// `maxᵢ vol(gᵢ⁻¹(a) Δ a)`
    Preimage,
}

/// How far `a` is from being invariant, as a volume fraction of the chart.
pub fn invariance_defect(sys: &SystemSpec, a: &GridSet, direction: DefectDirection) -> Result<f64> {
    if sys.is_circle() != a.domain().is_circle() {
        return Err(Error::Dimension("system and set live on different spaces".into()));
    }
    match direction {
        DefectDirection::Image => {
            let mut union = GridSet::empty(a.domain());
            for g in sys.maps() {
                union.union_with(&image(g, a)?)?;
            }
            Ok(a.symmetric_difference(&union)?.volume())
        }
        DefectDirection::Preimage => {
            sys.require_invertible()?;
            sys.maps().iter().try_fold(0.0f64, |worst, g| {
                Ok(worst.max(preimage(g, a).symmetric_difference(a)?.volume()))
            })
        }
    }
}

/// `n` included cell centers of `set`, drawn uniformly with replacement.
pub(crate) fn sample_centers(set: &GridSet, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let cells: Vec<usize> = set.cells().collect();
    if cells.is_empty() {
        return Err(Error::EmptySet("cannot sample from an empty set".into()));
    }
    let domain = set.domain();
    Ok((0..n)
        .map(|_| domain.cell_center(cells[rng.gen_range(0..cells.len())]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{attractor, build_construction, chart_around, ConstructionParams};
    use crate::geometry::{Disk, Domain};
    use crate::maps::MapSpec;

    #[test]
    fn empty_set_has_no_defect() {
        let sys = SystemSpec::new(vec![MapSpec::rotation(0.3).unwrap()], true).unwrap();
        let e = GridSet::empty(&Domain::circle(64).unwrap());
        assert_eq!(invariance_defect(&sys, &e, DefectDirection::Image).unwrap(), 0.0);
        assert_eq!(invariance_defect(&sys, &e, DefectDirection::Preimage).unwrap(), 0.0);
    }

    #[test]
    fn rotation_preimage_defect_is_exact() {
        let domain = Domain::circle(60).unwrap();
        // arc of 30 cells shifted by 6 cells: 12 cells differ
        let a = GridSet::from_cells(&domain, 0..30);
        let sys = SystemSpec::new(vec![MapSpec::rotation(0.1).unwrap()], false).unwrap();
        let d = invariance_defect(&sys, &a, DefectDirection::Preimage).unwrap();
        assert!((d - 12.0 / 60.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn half_ball_is_not_invariant_under_half_turn_contraction() {
        let u = Disk::new(Point::ORIGIN, 16.0).unwrap();
        let domain = chart_around(&u, 128).unwrap();
        let left = GridSet::from_predicate(&domain, |p| p.x < 0.0 && p.norm() <= 16.0);
        let sys =
            SystemSpec::new(vec![MapSpec::affine(0.76, 179.0, Point::ORIGIN).unwrap()], false).unwrap();
        assert!(invariance_defect(&sys, &left, DefectDirection::Image).unwrap() > 0.1);
    }

    #[test]
    fn attractor_is_nearly_invariant() {
        let res = 256;
        let c = build_construction(&ConstructionParams::new(0.76, 179.0, 1.0), res).unwrap();
        let cw = chart_around(&c.u, res).unwrap().cell_width();
        let att = attractor(&c.system, &c.u, res, cw, 200).unwrap();
        let d = invariance_defect(&c.system, &att.set, DefectDirection::Image).unwrap();
        let ring = att.set.boundary_ring(2.0 * cw).volume();
        assert!(d <= ring, "{d} > {ring}");
    }

    #[test]
    fn preimage_defect_needs_invertible_maps() {
        let sys = SystemSpec::new(
            vec![MapSpec::perturbed(MapSpec::rotation(0.2).unwrap(), 0.9, 3).unwrap()],
            false,
        )
        .unwrap();
        let a = GridSet::from_cells(&Domain::circle(64).unwrap(), 0..10);
        assert!(matches!(
            invariance_defect(&sys, &a, DefectDirection::Preimage),
            Err(Error::Invertibility(0))
        ));
    }
}
