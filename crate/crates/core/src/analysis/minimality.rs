use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample_centers;
use crate::error::{Error, Result};
use crate::geometry::{Disk, GridSet, Point};
use crate::maps::SystemSpec;

/// Default number of map evaluations allowed per start point.
pub const WORD_BUDGET: u64 = 10_000_000;

/// Points landing within this fraction of ε of an accepted point are not
/// expanded. Under a contraction by ξ the pruned branch stays within
/// `CLAIM_FRACTION·ε/(1 − ξ)` of an explored one; at ε/2 that drift exceeds ε
/// for ξ = 0.76 and leaves gaps the orbit would have filled.
const CLAIM_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityParams {
    pub epsilon: f64,
    pub max_word_len: usize,
    pub samples: usize,
    pub seed: u64,
    /// Map evaluations allowed per start point.
    pub budget: u64,
}

impl MinimalityParams {
    pub fn new(epsilon: f64, max_word_len: usize, samples: usize, seed: u64) -> Self {
        MinimalityParams {
            epsilon,
            max_word_len,
            samples,
            seed,
            budget: WORD_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinimalityVerdict {
    #[serde(rename = "eps-dense")]
    EpsDense,
    #[serde(rename = "not-eps-dense")]
    NotEpsDense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub epsilon: f64,
    pub max_word_len: usize,
    pub samples: usize,
    /// Largest fraction of the region left uncovered by one start point's orbit.
    pub uncovered_fraction: f64,
    pub verdict: MinimalityVerdict,
}

impl MinimalityReport {
    pub fn is_dense(&self) -> bool {
        self.verdict == MinimalityVerdict::EpsDense
    }
}

struct Orbit<'a> {
    region: &'a GridSet,
    epsilon: f64,
    covered: Vec<bool>,
    claimed: Vec<bool>,
    remaining: usize,
}

impl<'a> Orbit<'a> {
    fn new(region: &'a GridSet, epsilon: f64) -> Self {
        Orbit {
            region,
            epsilon,
            covered: vec![false; region.len()],
            claimed: vec![false; region.len()],
            remaining: region.count(),
        }
    }

    fn uncovered(&self) -> f64 {
        self.remaining as f64 / self.region.count() as f64
    }

    /// Marks the ε-ball around `p` as covered and a smaller ball as claimed.
    fn accept(&mut self, p: Point) {
        let domain = self.region.domain();
        for i in (Disk { center: p, radius: self.epsilon }).cells(domain) {
            if !self.covered[i] {
                self.covered[i] = true;
                if self.region.contains_cell(i) {
                    self.remaining -= 1;
                }
            }
        }
        for i in (Disk { center: p, radius: self.epsilon * CLAIM_FRACTION }).cells(domain) {
            self.claimed[i] = true;
        }
    }

    /// Breadth-first orbit of `x0` under words of length up to `max_len`.
    /// A point landing in a claimed cell (near an accepted point) or
    /// off the chart is not expanded further.
    fn explore(mut self, sys: &SystemSpec, x0: Point, max_len: usize, budget: u64) -> Result<f64> {
        let domain = *self.region.domain();
        self.accept(x0);
        let mut frontier = vec![x0];
        let mut evaluations = 0u64;
        for _ in 0..max_len {
            if self.remaining == 0 || frontier.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for &x in &frontier {
                for g in sys.maps() {
                    evaluations += 1;
                    if evaluations > budget {
                        return Err(Error::Budget {
                            budget,
                            uncovered: self.uncovered(),
                        });
                    }
                    let y = g.eval(x);
                    let Some(cell) = domain.cell_of(y) else {
                        continue;
                    };
                    if self.claimed[cell] {
                        continue;
                    }
                    self.accept(y);
                    next.push(y);
                }
            }
            frontier = next;
        }
        Ok(self.uncovered())
    }
}

/// Checks that the forward orbit of every sampled start point in `region`
/// comes within ε of every cell of `region` using words of length at most
/// `max_word_len`.
pub fn minimality_test(sys: &SystemSpec, region: &GridSet, p: &MinimalityParams) -> Result<MinimalityReport> {
    let domain = region.domain();
    if sys.is_circle() != domain.is_circle() {
        return Err(Error::Dimension("system and region live on different spaces".into()));
    }
    if !(p.epsilon >= 2.0 * domain.cell_width()) {
        return Err(Error::Resolution(format!(
            "epsilon {} is below two cell widths ({})",
            p.epsilon,
            2.0 * domain.cell_width()
        )));
    }
    if p.max_word_len == 0 || p.samples == 0 {
        return Err(Error::InvalidParameter(
            "word length and sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let starts = sample_centers(region, p.samples, &mut rng)?;
    let results: Vec<Result<f64>> = starts
        .par_iter()
        .map(|&x0| Orbit::new(region, p.epsilon).explore(sys, x0, p.max_word_len, p.budget))
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(MinimalityReport {
        epsilon: p.epsilon,
        max_word_len: p.max_word_len,
        samples: p.samples,
        uncovered_fraction: worst,
        verdict: if worst == 0.0 {
            MinimalityVerdict::EpsDense
        } else {
            MinimalityVerdict::NotEpsDense
        },
    })
}
