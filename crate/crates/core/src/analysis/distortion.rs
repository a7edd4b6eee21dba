use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample_centers;
use crate::error::{Error, Result};
use crate::geometry::{GridSet, Point};
use crate::maps::{DiffMap, MapSpec, Mat2, SystemSpec};

/// Relative slack allowed when comparing observed ratios with `L_H`.
pub const CONSISTENCY_SLACK: f64 = 0.05;

fn log_det(m: &impl DiffMap, p: Point) -> Result<f64> {
    let det = m.jacobian(p).det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Degeneracy { x: p.x, y: p.y });
    }
    Ok(det.abs().ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    /// Largest observed `|log|det Dm(x)| − log|det Dm(y)|| / |x − y|^α`.
    pub constant: f64,
    pub samples: usize,
}

/// Sampled lower estimate of the α-Hölder constant of `log|det Dm|` over
/// `region`. Half of the pairs are drawn uniformly from the region, half are
/// near pairs at separations between one and 64 cell widths, where smooth
/// maps show their largest difference quotients.
pub fn holder_constant(
    m: &impl DiffMap,
    alpha: f64,
    region: &GridSet,
    pairs: usize,
    seed: u64,
) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha={alpha} outside (0, 1]")));
    }
    let domain = region.domain();
    let (dx, dy) = domain.cell_size();
    let h = domain.cell_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = sample_centers(region, 2 * pairs, &mut rng)?;
    let jitter = |rng: &mut ChaCha8Rng, p: Point| {
        if domain.is_circle() {
            Point::on_circle(p.x + rng.gen_range(-0.5..0.5) * dx)
        } else {
            Point::new(
                p.x + rng.gen_range(-0.5..0.5) * dx,
                p.y + rng.gen_range(-0.5..0.5) * dy,
            )
        }
    };
    let mut pts = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let x = jitter(&mut rng, base[2 * k]);
        let y = if k % 2 == 0 {
            jitter(&mut rng, base[2 * k + 1])
        } else {
            let r = h * 64f64.powf(rng.gen::<f64>());
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            if domain.is_circle() {
                Point::on_circle(x.x + r * a.cos().signum())
            } else {
                x + Point::new(a.cos(), a.sin()) * r
            }
        };
        pts.push((x, y));
    }
    let constant = pts
        .par_iter()
        .map(|&(x, y)| {
            let d = domain.distance(x, y);
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok::<f64, Error>((log_det(m, x)? - log_det(m, y)?).abs() / d.powf(alpha))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(HolderEstimate {
        constant,
        samples: pairs,
    })
}

/// Largest Jacobian operator norm over the maps of `sys` at up to `samples`
/// evenly strided cells of `region`.
pub fn contraction_factor(sys: &SystemSpec, region: &GridSet, samples: usize) -> Result<f64> {
    let cells: Vec<usize> = region.cells().collect();
    if cells.is_empty() {
        return Err(Error::EmptySet("contraction factor over an empty region".into()));
    }
    let stride = cells.len().div_ceil(samples.max(1));
    let domain = region.domain();
    let xi = cells
        .par_iter()
        .step_by(stride)
        .map(|&i| {
            let p = domain.cell_center(i);
            sys.maps()
                .iter()
                .map(|g| g.jacobian(p).operator_norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if xi >= 1.0 {
        return Err(Error::NotAContraction(xi));
    }
    Ok(xi)
}

/// `L_H = exp{C ξ^α diam^α / (1 − ξ^α)}`.
pub fn distortion_bound(c: f64, xi: f64, alpha: f64, diam: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("contraction factor {xi} outside (0, 1)")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("Hölder constant {c} must be nonnegative")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha={alpha} outside (0, 1]")));
    }
    if !(diam > 0.0 && diam.is_finite()) {
        return Err(Error::Domain(format!("diameter {diam} must be positive")));
    }
    let xa = xi.powf(alpha);
    Ok((c * xa * diam.powf(alpha) / (1.0 - xa)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalParams {
    pub min_len: usize,
    pub max_len: usize,
    pub words: usize,
    pub pairs: usize,
    pub seed: u64,
}

/// Extreme values of `|det Dĥ(x) / det Dĥ(y)|` over sampled reverse words
/// and point pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionRange {
    pub min: f64,
    pub max: f64,
    /// Word-pair combinations evaluated.
    pub samples: usize,
}

impl DistortionRange {
    /// Whether the range sits inside `[1/L_H, L_H]` up to the relative slack.
    pub fn consistent_with(&self, l_h: f64, slack: f64) -> bool {
        self.min >= (1.0 - slack) / l_h && self.max <= l_h * (1.0 + slack)
    }
}

/// Every sampled reverse word (length uniform in `min_len..=max_len`, symbols
/// uniform over the alphabet) is evaluated at every sampled pair of cell
/// centers of `set`.
pub fn empirical_distortion(sys: &SystemSpec, set: &GridSet, p: &EmpiricalParams) -> Result<DistortionRange> {
    if p.min_len > p.max_len {
        return Err(Error::InvalidParameter(format!(
            "word length range {}..={} is empty",
            p.min_len, p.max_len
        )));
    }
    if p.words == 0 || p.pairs == 0 {
        return Err(Error::InvalidParameter("need at least one word and one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let pts = sample_centers(set, 2 * p.pairs, &mut rng)?;
    let s = sys.alphabet();
    let words: Vec<Vec<usize>> = (0..p.words)
        .map(|_| {
            let len = rng.gen_range(p.min_len..=p.max_len);
            (0..len).map(|_| rng.gen_range(0..s)).collect()
        })
        .collect();
    let steps: Vec<Step> = sys.maps().iter().map(Step::new).collect();
    let (min, max) = words
        .par_iter()
        .map(|w| {
            let mut ld = Vec::with_capacity(pts.len());
            for &x in &pts {
                // reverse iteration: the last symbol acts first
                let mut q = x;
                let mut acc = LogProduct::default();
                for &sym in w.iter().rev() {
                    let (det, next) = steps[sym].det_and_eval(q);
                    acc.push(det, q)?;
                    q = next;
                }
                ld.push(acc.ln());
            }
            Ok::<_, Error>(ld.chunks(2).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                let r = c[0] - c[1];
                (lo.min(r), hi.max(r))
            }))
        })
        .try_reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| Ok((a.0.min(b.0), a.1.max(b.1))),
        )?;
    Ok(DistortionRange {
        min: min.exp(),
        max: max.exp(),
        samples: p.words * p.pairs,
    })
}

/// A generator prepared for repeated evaluation: affine maps keep their
/// matrix so the trigonometry runs once.
enum Step<'a> {
    Affine { m: Mat2, anchor: Point },
    General(&'a MapSpec),
}

impl<'a> Step<'a> {
    fn new(spec: &'a MapSpec) -> Self {
        match spec {
            MapSpec::Affine { kappa, theta, anchor } => Step::Affine {
                m: Mat2::scaled_rotation(*kappa, *theta),
                anchor: *anchor,
            },
            other => Step::General(other),
        }
    }

    fn det_and_eval(&self, p: Point) -> (f64, Point) {
        match self {
            Step::Affine { m, anchor } => (m.det(), *anchor + m.apply(p - *anchor)),
            Step::General(g) => (g.jacobian(p).det(), g.eval(p)),
        }
    }
}

/// Running `log` of a product of `|det|` values, renormalized instead of
/// taking a logarithm per factor.
#[derive(Default)]
struct LogProduct {
    log: f64,
    prod: Option<f64>,
}

impl LogProduct {
    fn push(&mut self, det: f64, at: Point) -> Result<()> {
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Degeneracy { x: at.x, y: at.y });
        }
        let p = self.prod.unwrap_or(1.0) * det.abs();
        if !(1e-150..=1e150).contains(&p) {
            self.log += p.ln();
            self.prod = None;
        } else {
            self.prod = Some(p);
        }
        Ok(())
    }

    fn ln(&self) -> f64 {
        self.log + self.prod.map_or(0.0, f64::ln)
    }
}

/// Summary written by the `distortion` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub xi: f64,
    pub diam: f64,
    #[serde(rename = "L_H")]
    pub l_h: f64,
    pub emp_min: f64,
    pub emp_max: f64,
    pub consistent: bool,
    pub samples: usize,
}

impl DistortionReport {
    pub fn new(alpha: f64, c: f64, xi: f64, diam: f64, range: &DistortionRange) -> Result<Self> {
        let l_h = distortion_bound(c, xi, alpha, diam)?;
        Ok(DistortionReport {
            alpha,
            c,
            xi,
            diam,
            l_h,
            emp_min: range.min,
            emp_max: range.max,
            consistent: range.consistent_with(l_h, CONSISTENCY_SLACK),
            samples: range.samples,
        })
    }
}
