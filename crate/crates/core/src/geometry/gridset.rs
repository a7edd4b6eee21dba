use rayon::prelude::*;

use super::{Disk, Domain, Point};
use crate::error::{Error, Result};

/// A rasterized measurable subset of a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    domain: Domain,
    bits: Vec<bool>,
}

impl GridSet {
    pub fn empty(domain: &Domain) -> Self {
        GridSet {
            domain: *domain,
            bits: vec![false; domain.cell_count()],
        }
    }

    pub fn full(domain: &Domain) -> Self {
        GridSet {
            domain: *domain,
            bits: vec![true; domain.cell_count()],
        }
    }

    pub fn from_bits(domain: &Domain, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != domain.cell_count() {
            return Err(Error::Resolution(format!(
                "bitmap has {} cells, domain has {}",
                bits.len(),
                domain.cell_count()
            )));
        }
        Ok(GridSet {
            domain: *domain,
            bits,
        })
    }

    /// Cells whose centers satisfy `pred`.
    pub fn from_predicate<F>(domain: &Domain, pred: F) -> Self
    where
        F: Fn(Point) -> bool + Sync,
    {
        let mut bits = vec![false; domain.cell_count()];
        bits.par_iter_mut()
            .enumerate()
            .for_each(|(i, b)| *b = pred(domain.cell_center(i)));
        GridSet {
            domain: *domain,
            bits,
        }
    }

    pub fn from_disk(domain: &Domain, disk: &Disk) -> Self {
        let mut set = GridSet::empty(domain);
        for idx in disk.cells(domain) {
            set.bits[idx] = true;
        }
        set
    }

    pub fn from_cells(domain: &Domain, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut set = GridSet::empty(domain);
        for idx in cells {
            set.bits[idx] = true;
        }
        set
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.bits.par_iter().filter(|&&b| b).count()
    }

    /// Normalized volume: included cells over total cells.
    pub fn volume(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn contains_cell(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    /// Whether the cell containing `p` is included; points off the chart are not.
    pub fn contains_point(&self, p: Point) -> bool {
        self.domain.cell_of(p).is_some_and(|i| self.bits[i])
    }

    /// Indices of included cells in increasing order.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn centers(&self) -> Vec<Point> {
        self.cells().map(|i| self.domain.cell_center(i)).collect()
    }

    fn check_same(&self, other: &GridSet) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::Domain(
                "operands live on different domains or resolutions".into(),
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &GridSet, f: impl Fn(bool, bool) -> bool + Sync) -> Result<GridSet> {
        self.check_same(other)?;
        let bits = self
            .bits
            .par_iter()
            .zip(other.bits.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridSet {
            domain: self.domain,
            bits,
        })
    }

    pub fn complement(&self) -> GridSet {
        GridSet {
            domain: self.domain,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &GridSet) -> Result<GridSet> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn is_subset(&self, other: &GridSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self
            .bits
            .par_iter()
            .zip(other.bits.par_iter())
            .all(|(&a, &b)| !a || b))
    }

    /// In-place union used by accumulation loops.
    pub fn union_with(&mut self, other: &GridSet) -> Result<()> {
        self.check_same(other)?;
        self.bits
            .par_iter_mut()
            .zip(other.bits.par_iter())
            .for_each(|(a, &b)| *a |= b);
        Ok(())
    }

    /// Neighbouring cells in the 4-neighbourhood (wrapping on the circle).
    pub fn neighbours(&self, index: usize) -> impl Iterator<Item = usize> {
        self.domain.neighbours(index)
    }

    /// Included cells with at least one excluded 4-neighbour.
    pub fn inner_boundary(&self) -> GridSet {
        let mut bits = vec![false; self.bits.len()];
        bits.par_iter_mut().enumerate().for_each(|(i, b)| {
            *b = self.bits[i] && self.neighbours(i).any(|k| !self.bits[k]);
        });
        GridSet {
            domain: self.domain,
            bits,
        }
    }

    /// Cells within `radius` (chart units) of the set.
    pub fn dilate(&self, radius: f64) -> GridSet {
        if self.is_empty() {
            return self.clone();
        }
        let field = super::distance_field(self);
        let bits = field.par_iter().map(|&d| d <= radius).collect();
        GridSet {
            domain: self.domain,
            bits,
        }
    }

    /// Cells at distance more than `radius` from the complement.
    pub fn erode(&self, radius: f64) -> GridSet {
        self.complement().dilate(radius).complement()
    }

    /// Cells within `radius` of the boundary between the set and its complement.
    pub fn boundary_ring(&self, radius: f64) -> GridSet {
        let outer = self.dilate(radius);
        let inner = self.erode(radius);
        outer
            .difference(&inner)
            .expect("dilation preserves the domain")
    }
}
