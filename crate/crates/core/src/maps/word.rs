use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DiffMap, Jacobian, Mat2, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Order in which a word's symbols are composed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `f_{ω_n} ∘ ⋯ ∘ f_{ω_1}`: the first symbol acts first.
    Forward,
    /// `h_{ω_1} ∘ ⋯ ∘ h_{ω_n}`: the first symbol acts last.
    Reverse,
}

/// Finite word over generator indices (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub symbols: Vec<usize>,
    pub direction: Direction,
}

impl Word {
    pub fn new(symbols: Vec<usize>, direction: Direction) -> Self {
        Word { symbols, direction }
    }

    pub fn forward(symbols: Vec<usize>) -> Self {
        Word::new(symbols, Direction::Forward)
    }

    pub fn reverse(symbols: Vec<usize>) -> Self {
        Word::new(symbols, Direction::Reverse)
    }

    pub fn empty(direction: Direction) -> Self {
        Word::new(Vec::new(), direction)
    }

    /// Uniform random word of length `len` over `alphabet` symbols.
    pub fn random(len: usize, alphabet: usize, direction: Direction, seed: u64) -> Result<Self> {
        if alphabet == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Word::new((0..len).map(|_| rng.gen_range(0..alphabet)).collect(), direction))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Word made of the first `r` symbols.
    pub fn prefix(&self, r: usize) -> Word {
        Word::new(self.symbols[..r.min(self.len())].to_vec(), self.direction)
    }

    /// Symbols in the order their maps are applied to a point.
    pub fn application_order(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self.direction {
            Direction::Forward => Box::new(self.symbols.iter().copied()),
            Direction::Reverse => Box::new(self.symbols.iter().rev().copied()),
        }
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.symbols.iter().find(|&&s| s >= alphabet) {
            Some(&symbol) => Err(Error::Alphabet { symbol, alphabet }),
            None => Ok(()),
        }
    }
}

/// A finite generating set, optionally closed under inverses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSpec {
    generators: Vec<MapSpec>,
    include_inverses: bool,
    #[serde(skip)]
    maps: Vec<MapSpec>,
}

impl SystemSpec {
    pub fn new(generators: Vec<MapSpec>, include_inverses: bool) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParameter("system needs at least one generator".into()));
        }
        let circle = generators[0].is_circle();
        if generators.iter().any(|g| g.is_circle() != circle) {
            return Err(Error::Dimension(
                "generators mix planar and circle maps".into(),
            ));
        }
        if include_inverses {
            if let Some(i) = generators.iter().position(|g| !g.is_invertible()) {
                return Err(Error::Invertibility(i));
            }
        }
        let mut maps = generators.clone();
        if include_inverses {
            maps.extend(generators.iter().map(MapSpec::inverse));
        }
        Ok(SystemSpec {
            generators,
            include_inverses,
            maps,
        })
    }

    pub fn generators(&self) -> &[MapSpec] {
        &self.generators
    }

    pub fn include_inverses(&self) -> bool {
        self.include_inverses
    }

    /// Maps indexed by word symbols: the generators, then their inverses
    /// when the system is a group.
    pub fn maps(&self) -> &[MapSpec] {
        &self.maps
    }

    pub fn alphabet(&self) -> usize {
        self.maps.len()
    }

    pub fn is_circle(&self) -> bool {
        self.generators[0].is_circle()
    }

    pub fn all_invertible(&self) -> bool {
        self.generators.iter().all(MapSpec::is_invertible)
    }

    /// Index of the first generator that is not invertible.
    pub fn require_invertible(&self) -> Result<()> {
        match self.generators.iter().position(|g| !g.is_invertible()) {
            Some(i) => Err(Error::Invertibility(i)),
            None => Ok(()),
        }
    }

    /// The same system with every generator replaced.
    pub fn map_generators(&self, f: impl Fn(usize, &MapSpec) -> Result<MapSpec>) -> Result<Self> {
        let gens = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| f(i, g))
            .collect::<Result<Vec<_>>>()?;
        SystemSpec::new(gens, self.include_inverses)
    }
}

pub fn apply_word(sys: &SystemSpec, w: &Word, x: Point) -> Result<Point> {
    w.check_alphabet(sys.alphabet())?;
    Ok(w.application_order()
        .fold(x, |p, s| sys.maps()[s].eval(p)))
}

/// Determinant of the derivative of the composed word at `x` (chain rule).
pub fn word_jacobian_det(sys: &SystemSpec, w: &Word, x: Point) -> Result<f64> {
    w.check_alphabet(sys.alphabet())?;
    let mut p = x;
    let mut det = 1.0;
    for s in w.application_order() {
        let m = &sys.maps()[s];
        det *= m.jacobian(p).det();
        p = m.eval(p);
    }
    Ok(det)
}

/// `log|det D(word)(x)|`, accumulated term by term.
pub fn word_log_det(sys: &SystemSpec, w: &Word, x: Point) -> Result<f64> {
    w.check_alphabet(sys.alphabet())?;
    let mut p = x;
    let mut acc = 0.0;
    for s in w.application_order() {
        let m = &sys.maps()[s];
        acc += m.jacobian(p).det().abs().ln();
        p = m.eval(p);
    }
    Ok(acc)
}

/// A word of a system viewed as a single map.
#[derive(Clone, Debug)]
pub struct WordMap<'a> {
    sys: &'a SystemSpec,
    word: Word,
}

impl<'a> WordMap<'a> {
    pub fn new(sys: &'a SystemSpec, word: Word) -> Result<Self> {
        word.check_alphabet(sys.alphabet())?;
        Ok(WordMap { sys, word })
    }
}

impl DiffMap for WordMap<'_> {
    fn eval(&self, p: Point) -> Point {
        self.word
            .application_order()
            .fold(p, |q, s| self.sys.maps()[s].eval(q))
    }

    fn jacobian(&self, p: Point) -> Jacobian {
        let mut q = p;
        let mut acc = if self.sys.is_circle() {
            Jacobian::Scalar(1.0)
        } else {
            Jacobian::Planar(Mat2::IDENTITY)
        };
        for s in self.word.application_order() {
            let m = &self.sys.maps()[s];
            acc = match (m.jacobian(q), acc) {
                (Jacobian::Planar(j), Jacobian::Planar(a)) => Jacobian::Planar(j.mul(&a)),
                (Jacobian::Scalar(j), Jacobian::Scalar(a)) => Jacobian::Scalar(j * a),
                _ => unreachable!("systems are dimensionally homogeneous"),
            };
            q = m.eval(q);
        }
        acc
    }

    fn is_circle(&self) -> bool {
        self.sys.is_circle()
    }
}
