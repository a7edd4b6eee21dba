use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ifsdyn::analysis::{
    contraction_factor, empirical_distortion, ergodicity_probe, holder_constant, minimality_test, shrink_time,
    DistortionReport, EmpiricalParams, ErgodicityParams, MinimalityParams,
};
use ifsdyn::circle::{
    build_circle_example, rational_substitution_experiment, robustness_sweep, run_probes, write_sweep_csv,
    CircleExampleParams, ProbeSettings,
};
use ifsdyn::construction::{attractor, build_construction, chart_around, check_absorbing, ConstructionParams, ConstructionReport};
use ifsdyn::geometry::io::{save_pgm, write_disks, write_point_cloud, PgmFormat};
use ifsdyn::geometry::{diameter, Disk, Domain, GridSet, Point, DEFAULT_RESOLUTION};
use ifsdyn::maps::text::{format_system, parse_system};
use ifsdyn::maps::{Direction, SystemSpec, Word};
use ifsdyn::packing::{
    contradiction_bound, greedy_pack, load_instance, save_instance, verify_conditions, MIN_RADIUS_CELLS,
};
use ifsdyn::GENERATOR;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::{
    CircleArgs, Cli, Command, ConstructArgs, DistortionArgs, ErgodicityArgs, Global, IterationArgs, MinimalityArgs,
    PackingCommand, RegionArgs,
};

const CIRCLE_RESOLUTION: usize = 4096;

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    std::fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    match &cli.command {
        Command::Construct(a) => construct(g, a),
        Command::Minimality(a) => minimality(g, a),
        Command::Distortion(a) => distortion(g, a),
        Command::Ergodicity(a) => ergodicity(g, a),
        Command::Circle(a) => circle(g, a),
        Command::Packing { action } => packing(g, action),
    }
}

/// Writes the module report with the run's provenance fields added.
fn write_report(g: &Global, command: &str, resolution: usize, report: &impl Serialize) -> Result<()> {
    let mut obj = match serde_json::to_value(report)? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("report".into(), other);
            m
        }
    };
    obj.insert("command".into(), command.into());
    obj.insert("generator".into(), GENERATOR.into());
    obj.insert("seed".into(), g.seed.into());
    obj.insert("resolution".into(), resolution.into());
    let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
    text.push('\n');
    let path = g.out.join("report.json");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn save_set(g: &Global, name: &str, set: &GridSet) -> Result<()> {
    save_pgm(set, PgmFormat::Raw, g.out.join(format!("{name}.pgm")))?;
    let mut w = BufWriter::new(File::create(g.out.join(format!("{name}.csv")))?);
    write_point_cloud(set, &mut w)?;
    Ok(())
}

fn load_system(path: &Path) -> Result<SystemSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading system {}", path.display()))?;
    parse_system(&text).with_context(|| format!("parsing system {}", path.display()))
}

fn attractor_of(sys: &SystemSpec, u: &Disk, resolution: usize, it: &IterationArgs) -> Result<ifsdyn::construction::Attractor> {
    let cell = chart_around(u, resolution)?.cell_width();
    // "within two cells" is inclusive; the iteration stops on a strict test
    let tol = it.tol.unwrap_or(2.0 * cell * (1.0 + 1e-9));
    Ok(attractor(sys, u, resolution, tol, it.max_iter)?)
}

/// The system and the region its probes run on: the whole circle, or the
/// attractor grown from the ball `B(0, u_radius)`.
fn system_region(g: &Global, r: &RegionArgs, resolution: usize) -> Result<(SystemSpec, GridSet)> {
    let sys = load_system(&r.system)?;
    let region = if sys.is_circle() {
        GridSet::full(&Domain::circle(resolution)?)
    } else {
        let u = Disk::new(Point::ORIGIN, r.u_radius)?;
        let a = attractor_of(&sys, &u, resolution, &r.iteration)?;
        save_set(g, "attractor", &a.set)?;
        a.set
    };
    Ok((sys, region))
}

fn construct(g: &Global, a: &ConstructArgs) -> Result<()> {
    let resolution = g.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let params = ConstructionParams {
        u_factor: a.u_factor,
        ..ConstructionParams::new(a.kappa, a.theta, a.delta)
    };
    let built = build_construction(&params, resolution)?;
    std::fs::write(g.out.join("system.txt"), format_system(&built.system)?)?;
    let absorption = check_absorbing(&built.system, &built.u, resolution)?;
    let (iterations, final_hausdorff) = if absorption.absorbing {
        let att = attractor_of(&built.system, &built.u, resolution, &a.iteration)?;
        save_set(g, "attractor", &att.set)?;
        (att.iterations, att.final_hausdorff)
    } else {
        (0, f64::NAN)
    };
    let report = ConstructionReport {
        kappa: a.kappa,
        theta: a.theta,
        delta: a.delta,
        k: built.k(),
        cover_verified: built.cover_verified,
        absorbing_verified: absorption.absorbing,
        iterations,
        final_hausdorff,
    };
    write_report(g, "construct", resolution, &report)
}

fn minimality(g: &Global, a: &MinimalityArgs) -> Result<()> {
    let resolution = g.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let (sys, region) = system_region(g, &a.region, resolution)?;
    let epsilon = if a.relative {
        a.epsilon * diameter(&region)?
    } else {
        a.epsilon
    };
    let params = MinimalityParams {
        budget: a.budget,
        ..MinimalityParams::new(epsilon, a.max_word_len, a.samples, g.seed)
    };
    let report = minimality_test(&sys, &region, &params)?;
    write_report(g, "minimality", resolution, &report)
}

#[derive(Serialize)]
struct DistortionOutput {
    #[serde(flatten)]
    distortion: DistortionReport,
    shrink: Option<ifsdyn::analysis::ShrinkTime>,
}

fn distortion(g: &Global, a: &DistortionArgs) -> Result<()> {
    let resolution = g.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let (sys, region) = system_region(g, &a.region, resolution)?;
    let mut c: f64 = 0.0;
    for (i, m) in sys.maps().iter().enumerate() {
        let est = holder_constant(m, a.alpha, &region, a.holder_pairs, g.seed.wrapping_add(i as u64))?;
        c = c.max(est.constant);
    }
    let xi = contraction_factor(&sys, &region, a.xi_samples)?;
    let diam = diameter(&region)?;
    let range = empirical_distortion(
        &sys,
        &region,
        &EmpiricalParams {
            min_len: a.min_len,
            max_len: a.max_len,
            words: a.words,
            pairs: a.pairs,
            seed: g.seed,
        },
    )?;
    let shrink = match a.delta {
        Some(delta) => {
            let word = Word::random(a.max_r, sys.alphabet(), Direction::Reverse, g.seed)?;
            let u = Disk::new(Point::ORIGIN, a.region.u_radius)?;
            Some(shrink_time(&sys, &word, &u, delta, a.max_r, resolution)?)
        }
        None => None,
    };
    let report = DistortionOutput {
        distortion: DistortionReport::new(a.alpha, c, xi, diam, &range)?,
        shrink,
    };
    write_report(g, "distortion", resolution, &report)
}

fn ergodicity(g: &Global, a: &ErgodicityArgs) -> Result<()> {
    let sys = load_system(&a.region.system)?;
    let default = if sys.is_circle() { CIRCLE_RESOLUTION } else { DEFAULT_RESOLUTION };
    let resolution = g.resolution.unwrap_or(default);
    let domain = if sys.is_circle() {
        Domain::circle(resolution)?
    } else {
        chart_around(&Disk::new(Point::ORIGIN, a.region.u_radius)?, resolution)?
    };
    let params = ErgodicityParams {
        seed_sets: a.seed_sets,
        refine_steps: a.refine_steps,
        seed: g.seed,
    };
    let outcome = ergodicity_probe(&sys, &domain, &params)?;
    if let Some(best) = &outcome.best {
        save_set(g, "candidate", best)?;
    }
    write_report(g, "ergodicity", resolution, &outcome.report)
}

fn parse_fraction(s: &str) -> Result<(u64, u64)> {
    let Some((p, q)) = s.split_once('/') else {
        bail!("rational {s:?} is not of the form p/q");
    };
    let p = p.trim().parse().with_context(|| format!("numerator of {s:?}"))?;
    let q: u64 = q.trim().parse().with_context(|| format!("denominator of {s:?}"))?;
    if q == 0 {
        bail!("rational {s:?} has a zero denominator");
    }
    Ok((p, q))
}

#[derive(Serialize)]
struct CircleOutput {
    example: ifsdyn::circle::ProbePair,
    #[serde(skip_serializing_if = "Option::is_none")]
    rational: Option<ifsdyn::circle::RationalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<ifsdyn::circle::RobustnessReport>,
}

fn circle(g: &Global, a: &CircleArgs) -> Result<()> {
    let resolution = g.resolution.unwrap_or(CIRCLE_RESOLUTION);
    let params = CircleExampleParams {
        lambda: a.lambda,
        angle: a.angle,
        rational: a.rational.as_deref().map(parse_fraction).transpose()?,
        amplitude: a.amplitude,
        seed: g.seed,
    };
    let settings = ProbeSettings {
        resolution,
        epsilon: a.epsilon,
        max_word_len: a.max_word_len,
        samples: a.samples,
        seed_sets: a.seed_sets,
        refine_steps: a.refine_steps,
        seed: g.seed,
    };
    let sys = build_circle_example(&params)?;
    std::fs::write(g.out.join("system.txt"), format_system(&sys)?)?;
    let example = run_probes(&sys, &settings)?;
    let rational = match params.rational {
        Some(_) => Some(rational_substitution_experiment(&params, &settings)?),
        None => None,
    };
    let sweep = match &a.amplitudes {
        Some(amps) => {
            let report = robustness_sweep(&params, amps, &settings)?;
            let mut w = BufWriter::new(File::create(g.out.join("sweep.csv"))?);
            write_sweep_csv(&report.rows, &mut w)?;
            Some(report)
        }
        None => None,
    };
    write_report(
        g,
        "circle",
        resolution,
        &CircleOutput {
            example,
            rational,
            sweep,
        },
    )
}

#[derive(Serialize)]
struct PackingOutput {
    #[serde(flatten)]
    report: ifsdyn::packing::PackingReport,
    contradiction: ifsdyn::packing::ContradictionReport,
    disks: usize,
}

fn check_resolution(g: &Global, domain: &Domain) -> Result<usize> {
    let res = domain.resolution();
    match g.resolution {
        Some(r) if r != res => bail!("--resolution {r} differs from the target bitmap ({res})"),
        _ => Ok(res),
    }
}

fn packing(g: &Global, action: &PackingCommand) -> Result<()> {
    match action {
        PackingCommand::Verify { instance } => {
            let inst = load_instance(instance).with_context(|| format!("loading {}", instance.display()))?;
            let resolution = check_resolution(g, inst.domain())?;
            let out = PackingOutput {
                report: verify_conditions(&inst),
                contradiction: contradiction_bound(&inst),
                disks: inst.family.len(),
            };
            write_report(g, "packing verify", resolution, &out)
        }
        PackingCommand::Greedy {
            instance,
            min_radius,
            max_disks,
        } => {
            let inst = load_instance(instance).with_context(|| format!("loading {}", instance.display()))?;
            let resolution = check_resolution(g, inst.domain())?;
            let min_radius = min_radius.unwrap_or(MIN_RADIUS_CELLS * inst.domain().cell_width());
            let result = greedy_pack(&inst.target, inst.ambient, min_radius, *max_disks)?;
            save_instance(&result.instance, g.out.join("instance.json"), g.out.join("target.pgm"))?;
            let mut w = BufWriter::new(File::create(g.out.join("disks.csv"))?);
            write_disks(&result.instance.family, &mut w)?;
            let out = PackingOutput {
                contradiction: contradiction_bound(&result.instance),
                disks: result.instance.family.len(),
                report: result.report,
            };
            write_report(g, "packing greedy", resolution, &out)
        }
    }
}
