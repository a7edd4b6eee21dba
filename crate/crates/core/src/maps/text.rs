//! Line-oriented text format for [`SystemSpec`]s.
//!
//! ```text
//! # Constructed system, two generators
//! affine kappa=0.76 theta=179 anchor=0,0
//! affine kappa=0.76 theta=179 anchor=0.75,0
//! perturb base=2 amp=0.01 seed=42
//! inverses=false
//! ```
//!
//! `perturb base=i` replaces generator `i` (1-based) by its seeded
//! perturbation. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{MapSpec, SystemSpec};
use crate::error::{Error, Result};
use crate::geometry::Point;

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, tokens: &[&'a str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key=value, got {tok:?}")))?;
            if map.insert(k, v).is_some() {
                return Err(err(line, format!("duplicate key {k:?}")));
            }
        }
        Ok(Fields { line, map })
    }

    fn take(&mut self, key: &str) -> Result<&'a str> {
        self.map
            .remove(key)
            .ok_or_else(|| err(self.line, format!("missing key {key:?}")))
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| err(self.line, format!("{key}={v:?} is not a number")))
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(err(self.line, format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_point(line: usize, v: &str) -> Result<Point> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| err(line, format!("point {v:?} must be x,y")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| err(line, format!("bad coordinate {s:?}")))
    };
    Ok(Point::new(parse(a)?, parse(b)?))
}

pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let mut gens: Vec<MapSpec> = Vec::new();
    let mut inverses: Option<bool> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if let Some(v) = tokens[0].strip_prefix("inverses=") {
            if tokens.len() != 1 {
                return Err(err(line, "inverses= stands on its own line"));
            }
            if inverses.is_some() {
                return Err(err(line, "inverses given twice"));
            }
            inverses = Some(match v {
                "true" => true,
                "false" => false,
                _ => return Err(err(line, format!("inverses must be true or false, got {v:?}"))),
            });
            continue;
        }
        let mut f = Fields::parse(line, &tokens[1..])?;
        let wrap = |e: Error| match e {
            Error::Parse { .. } => e,
            other => err(line, other.to_string()),
        };
        match tokens[0] {
            "affine" => {
                let kappa = f.f64("kappa")?;
                let theta = f.f64("theta")?;
                let anchor = parse_point(line, f.take("anchor")?)?;
                f.finish()?;
                gens.push(MapSpec::affine(kappa, theta, anchor).map_err(wrap)?);
            }
            "rotation" => {
                let angle = f.f64("angle")?;
                f.finish()?;
                gens.push(MapSpec::rotation(angle).map_err(wrap)?);
            }
            "moebius" => {
                let lambda = f.f64("lambda")?;
                let pole = f.f64("pole")?;
                f.finish()?;
                gens.push(MapSpec::moebius(lambda, pole).map_err(wrap)?);
            }
            "perturb" => {
                let base = f.take("base")?;
                let idx: usize = base
                    .parse()
                    .map_err(|_| err(line, format!("base={base:?} is not an index")))?;
                let amp = f.f64("amp")?;
                let seed_s = f.take("seed")?;
                let seed: u64 = seed_s
                    .parse()
                    .map_err(|_| err(line, format!("seed={seed_s:?} is not an integer")))?;
                f.finish()?;
                if idx == 0 || idx > gens.len() {
                    return Err(err(
                        line,
                        format!("base={idx} must name an earlier generator (1..={})", gens.len()),
                    ));
                }
                let original = gens[idx - 1].clone();
                gens[idx - 1] = MapSpec::perturbed(original, amp, seed).map_err(wrap)?;
            }
            other => return Err(err(line, format!("unknown generator kind {other:?}"))),
        }
    }
    SystemSpec::new(gens, inverses.unwrap_or(false))
}

fn write_base(out: &mut String, m: &MapSpec) -> Result<()> {
    match m {
        MapSpec::Affine {
            kappa,
            theta,
            anchor,
        } => writeln!(
            out,
            "affine kappa={kappa} theta={theta} anchor={},{}",
            anchor.x, anchor.y
        ),
        MapSpec::Rotation { angle } => writeln!(out, "rotation angle={angle}"),
        MapSpec::Moebius { lambda, pole } => writeln!(out, "moebius lambda={lambda} pole={pole}"),
        MapSpec::Perturbed { base, .. } => return write_base(out, base),
        MapSpec::Inverse { .. } => {
            return Err(Error::InvalidParameter(
                "inverse generators have no text form; use inverses=true".into(),
            ))
        }
    }
    .expect("writing to a String cannot fail");
    Ok(())
}

fn write_perturbations(out: &mut String, index: usize, m: &MapSpec) {
    if let MapSpec::Perturbed {
        base,
        amplitude,
        seed,
        ..
    } = m
    {
        write_perturbations(out, index, base);
        writeln!(out, "perturb base={index} amp={amplitude} seed={seed}").unwrap();
    }
}

pub fn format_system(sys: &SystemSpec) -> Result<String> {
    let mut out = String::new();
    for (i, g) in sys.generators().iter().enumerate() {
        write_base(&mut out, g)?;
        write_perturbations(&mut out, i + 1, g);
    }
    writeln!(out, "inverses={}", sys.include_inverses()).unwrap();
    Ok(out)
}
