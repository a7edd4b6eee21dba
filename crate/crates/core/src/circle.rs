//! The north-south map plus a rotation on the circle: minimality and
//! ergodicity probes, rational substitutions and perturbation sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    ergodicity_probe, minimality_test, ErgodicityParams, ErgodicityReport, ErgodicityVerdict,
    MinimalityParams, MinimalityReport, MinimalityVerdict,
};
use crate::error::{Error, Result};
use crate::geometry::{Domain, GridSet};
use crate::maps::{MapSpec, SystemSpec};

/// Fractional part of the golden ratio, the default rotation angle.
pub const GOLDEN_ANGLE: f64 = 0.618_033_988_749_894_9;

/// Perturbation amplitudes must stay below this.
pub const MAX_SWEEP_AMPLITUDE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleExampleParams {
    /// Derivative of the north-south map at its attracting fixed point.
    pub lambda: f64,
    /// Rotation angle in turns.
    pub angle: f64,
    /// Rational replacement `p/q` for the angle.
    pub rational: Option<(u64, u64)>,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for CircleExampleParams {
    fn default() -> Self {
        CircleExampleParams {
            lambda: 0.7,
            angle: GOLDEN_ANGLE,
            rational: None,
            amplitude: 0.0,
            seed: 0,
        }
    }
}

/// Settings shared by the minimality and ergodicity probes of this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub resolution: usize,
    pub epsilon: f64,
    pub max_word_len: usize,
    pub samples: usize,
    pub seed_sets: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            resolution: 4096,
            epsilon: 0.01,
            max_word_len: 300,
            samples: 10,
            seed_sets: 8,
            refine_steps: 20,
            seed: 0,
        }
    }
}

/// Both probe reports for one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePair {
    pub minimality: MinimalityReport,
    pub ergodicity: ErgodicityReport,
}

impl ProbePair {
    /// Dense orbits and no intermediate invariant set.
    pub fn passes(&self) -> bool {
        self.minimality.verdict == MinimalityVerdict::EpsDense
            && self.ergodicity.verdict == ErgodicityVerdict::NoCandidate
    }

    /// Neither probe passes.
    pub fn fails_both(&self) -> bool {
        self.minimality.verdict == MinimalityVerdict::NotEpsDense
            && self.ergodicity.verdict == ErgodicityVerdict::CandidateFound
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.5 && lambda < 1.0) {
        return Err(Error::Multiplier(lambda));
    }
    Ok(())
}

fn check_angle(angle: f64) -> Result<()> {
    if !(0.0..1.0).contains(&angle) {
        return Err(Error::InvalidParameter(format!("rotation angle {angle} outside [0, 1)")));
    }
    Ok(())
}

fn pair(lambda: f64, angle: f64, amplitude: f64, seed: u64) -> Result<SystemSpec> {
    let mut f1 = MapSpec::moebius(lambda, 0.0)?;
    let mut r = MapSpec::rotation(angle)?;
    if amplitude > 0.0 {
        f1 = MapSpec::perturbed(f1, amplitude, seed)?;
        r = MapSpec::perturbed(r, amplitude, seed.wrapping_add(1))?;
    }
    SystemSpec::new(vec![f1, r], false)
}

/// `{f₁, R}`: the north-south map attracting at 0 and repelling at 1/2, and
/// the rotation by `angle`; both perturbed when `amplitude > 0`.
pub fn build_circle_example(p: &CircleExampleParams) -> Result<SystemSpec> {
    check_lambda(p.lambda)?;
    check_angle(p.angle)?;
    pair(p.lambda, p.angle, p.amplitude, p.seed)
}

pub fn run_probes(sys: &SystemSpec, s: &ProbeSettings) -> Result<ProbePair> {
    let domain = Domain::circle(s.resolution)?;
    let minimality = minimality_test(
        sys,
        &GridSet::full(&domain),
        &MinimalityParams::new(s.epsilon, s.max_word_len, s.samples, s.seed),
    )?;
    let ergodicity = ergodicity_probe(
        sys,
        &domain,
        &ErgodicityParams {
            seed_sets: s.seed_sets,
            refine_steps: s.refine_steps,
            seed: s.seed,
        },
    )?
    .report;
    Ok(ProbePair {
        minimality,
        ergodicity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalReport {
    pub gamma: String,
    pub gamma_value: f64,
    pub pair: ProbePair,
    pub north_south: ProbePair,
    pub rotation: ProbePair,
    /// Each generator alone fails both probes.
    pub singles_fail: bool,
    /// The pair passes both probes.
    pub pair_passes: bool,
}

/// Replaces the rotation angle by the rational `γ = p/q` and probes the
/// pair and each generator on its own.
pub fn rational_substitution_experiment(
    p: &CircleExampleParams,
    s: &ProbeSettings,
) -> Result<RationalReport> {
    check_lambda(p.lambda)?;
    let (num, den) = p.rational.ok_or_else(|| {
        Error::InvalidParameter("rational substitution needs a fraction p/q".into())
    })?;
    if den == 0 {
        return Err(Error::InvalidParameter("denominator must be nonzero".into()));
    }
    let gamma = (num % den) as f64 / den as f64;
    let sys = pair(p.lambda, gamma, 0.0, p.seed)?;
    let single = |g: &MapSpec| SystemSpec::new(vec![g.clone()], false);
    let systems = [
        sys.clone(),
        single(&sys.generators()[0])?,
        single(&sys.generators()[1])?,
    ];
    let mut runs = systems
        .par_iter()
        .map(|sys| run_probes(sys, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let (pair, north_south, rotation) = (
        runs.next().unwrap(),
        runs.next().unwrap(),
        runs.next().unwrap(),
    );
    Ok(RationalReport {
        gamma: format!("{num}/{den}"),
        gamma_value: gamma,
        singles_fail: north_south.fails_both() && rotation.fails_both(),
        pair_passes: pair.passes(),
        pair,
        north_south,
        rotation,
    })
}

/// One amplitude of a robustness sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub minimality_verdict: MinimalityVerdict,
    pub uncovered_fraction: f64,
    pub ergodicity_verdict: ErgodicityVerdict,
    pub best_defect: Option<f64>,
}

impl SweepRow {
    fn new(amplitude: f64, probes: &ProbePair) -> Self {
        SweepRow {
            amplitude,
            minimality_verdict: probes.minimality.verdict,
            uncovered_fraction: probes.minimality.uncovered_fraction,
            ergodicity_verdict: probes.ergodicity.verdict,
            best_defect: probes.ergodicity.best_defect,
        }
    }

    fn same_verdicts(&self, other: &SweepRow) -> bool {
        self.minimality_verdict == other.minimality_verdict
            && self.ergodicity_verdict == other.ergodicity_verdict
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub baseline: SweepRow,
    /// Rows in ascending amplitude.
    pub rows: Vec<SweepRow>,
    /// Largest amplitude up to which every row keeps the baseline verdicts.
    pub largest_stable_amplitude: Option<f64>,
}

/// Perturbs both generators (seeded) at each amplitude and reruns the probes.
pub fn robustness_sweep(
    p: &CircleExampleParams,
    amplitudes: &[f64],
    s: &ProbeSettings,
) -> Result<RobustnessReport> {
    check_lambda(p.lambda)?;
    check_angle(p.angle)?;
    if let Some(a) = amplitudes
        .iter()
        .find(|&&a| !(0.0..MAX_SWEEP_AMPLITUDE).contains(&a))
    {
        return Err(Error::InvalidParameter(format!(
            "amplitude {a} outside [0, {MAX_SWEEP_AMPLITUDE})"
        )));
    }
    let mut amps = amplitudes.to_vec();
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    let baseline = SweepRow::new(0.0, &run_probes(&pair(p.lambda, p.angle, 0.0, p.seed)?, s)?);
    let rows = amps
        .par_iter()
        .map(|&a| {
            let sys = pair(p.lambda, p.angle, a, p.seed)?;
            Ok(SweepRow::new(a, &run_probes(&sys, s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let largest_stable_amplitude = rows
        .iter()
        .take_while(|r| r.same_verdicts(&baseline))
        .last()
        .map(|r| r.amplitude);
    Ok(RobustnessReport {
        baseline,
        rows,
        largest_stable_amplitude,
    })
}

fn verdict_label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

/// CSV table with columns
/// `amplitude,minimality_verdict,uncovered_fraction,ergodicity_verdict,best_defect`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "amplitude",
        "minimality_verdict",
        "uncovered_fraction",
        "ergodicity_verdict",
        "best_defect",
    ])?;
    for r in rows {
        w.write_record([
            r.amplitude.to_string(),
            verdict_label(&r.minimality_verdict),
            r.uncovered_fraction.to_string(),
            verdict_label(&r.ergodicity_verdict),
            r.best_defect.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{circle_delta, Point};
    use crate::maps::{finite_difference, Jacobian};

    fn quick() -> ProbeSettings {
        ProbeSettings {
            resolution: 2048,
            epsilon: 0.02,
            max_word_len: 200,
            samples: 4,
            seed_sets: 6,
            refine_steps: 15,
            seed: 3,
        }
    }

    #[test]
    fn north_south_fixed_points_and_multipliers() {
        let sys = build_circle_example(&CircleExampleParams::default()).unwrap();
        let f1 = &sys.generators()[0];
        let n = 100_000;
        let crossings: Vec<f64> = (0..n)
            .filter_map(|i| {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                let (da, db) = (
                    circle_delta(a, f1.eval(Point::on_circle(a)).x),
                    circle_delta(b, f1.eval(Point::on_circle(b)).x),
                );
                ((da <= 0.0) != (db <= 0.0) && da.abs() < 0.25).then_some(a)
            })
            .collect();
        assert_eq!(crossings.len(), 2, "{crossings:?}");
        let fd = |s: f64| match finite_difference(f1, Point::on_circle(s), 1e-6) {
            Jacobian::Scalar(d) => d,
            Jacobian::Planar(_) => unreachable!(),
        };
        let (dp, dq) = (fd(0.0), fd(0.5));
        assert!((dp - 0.7).abs() < 1e-6 && (dq - 1.0 / 0.7).abs() < 1e-6);
        assert!(dp.abs() < 1.0 && dq.abs() > 1.0);
        assert!((dp * dq - 1.0).abs() < 1e-6);
    }

    #[test]
    fn north_south_inverse_round_trip() {
        let sys = build_circle_example(&CircleExampleParams::default()).unwrap();
        let f1 = &sys.generators()[0];
        for k in 0..10_000 {
            let s = Point::on_circle(k as f64 / 10_000.0);
            assert!(circle_delta(f1.eval_inverse(f1.eval(s)).x, s.x).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_multiplier() {
        let p = CircleExampleParams {
            lambda: 0.4,
            ..Default::default()
        };
        assert!(matches!(build_circle_example(&p), Err(Error::Multiplier(_))));
    }

    #[test]
    fn golden_pair_is_minimal_and_no_candidate() {
        let sys = build_circle_example(&CircleExampleParams::default()).unwrap();
        let r = run_probes(&sys, &quick()).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn zero_angle_is_not_minimal() {
        let p = CircleExampleParams {
            angle: 0.0,
            ..Default::default()
        };
        let r = run_probes(&build_circle_example(&p).unwrap(), &quick()).unwrap();
        assert!(!r.minimality.is_dense());
    }

    #[test]
    fn minimality_is_invariant_under_conjugation() {
        // moving the pole conjugates the pair by a rotation
        for pole in [0.0, 0.123, 0.5] {
            let sys = SystemSpec::new(
                vec![
                    MapSpec::moebius(0.7, pole).unwrap(),
                    MapSpec::rotation(GOLDEN_ANGLE).unwrap(),
                ],
                false,
            )
            .unwrap();
            let r = run_probes(&sys, &quick()).unwrap();
            assert!(r.minimality.is_dense(), "pole {pole}");
        }
    }

    #[test]
    fn coarse_rational_substitution_separates_pair_from_singles() {
        let p = CircleExampleParams {
            rational: Some((3, 5)),
            ..Default::default()
        };
        let s = ProbeSettings {
            resolution: 2000,
            epsilon: 0.05,
            ..quick()
        };
        let r = rational_substitution_experiment(&p, &s).unwrap();
        assert!(r.singles_fail, "{r:?}");
        assert!(r.pair_passes, "{r:?}");
    }

    #[test]
    fn degenerate_rationals() {
        let zero = CircleExampleParams {
            rational: Some((0, 1)),
            ..Default::default()
        };
        let r = rational_substitution_experiment(&zero, &quick()).unwrap();
        assert!(!r.pair.minimality.is_dense());
        let missing = CircleExampleParams::default();
        assert!(rational_substitution_experiment(&missing, &quick()).is_err());
    }

    #[test]
    fn sweep_baseline_and_bounds() {
        let p = CircleExampleParams::default();
        let rep = robustness_sweep(&p, &[0.0, 0.005], &quick()).unwrap();
        assert!(rep.rows[0].same_verdicts(&rep.baseline));
        assert_eq!(rep.rows[0].uncovered_fraction, rep.baseline.uncovered_fraction);
        assert_eq!(rep.largest_stable_amplitude, Some(0.005));
        assert!(robustness_sweep(&p, &[0.5], &quick()).is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&rep.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "amplitude,minimality_verdict,uncovered_fraction,ergodicity_verdict,best_defect\n"
        ));
        assert!(text.contains("eps-dense"));
    }
}
