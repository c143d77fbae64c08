//! Cube geometry on `Z^d`, the nearest-neighbour Laplacian and the counting
//! functions used by the discrete oracle.

use std::ops::{Add, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("cube radius must be >= 1 and dimension >= 1 (got k = {radius}, d = {dimension})")]
    InvalidCube { radius: usize, dimension: usize },
    #[error("torus side must be >= 1 and dimension >= 1 (got N = {side}, d = {dimension})")]
    InvalidTorus { side: usize, dimension: usize },
    #[error("site has {got} coordinates, domain has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("site {0:?} or one of its neighbours lies outside the stored cube")]
    NeighborOutside(Vec<i64>),
    #[error(
        "field on a cube of radius {stored} cannot resolve the flux through radius {requested}"
    )]
    DomainTooSmall { stored: usize, requested: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

/// `Q_k = {-k+1, ..., k-1}^d`, stored row-major with the first coordinate
/// most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cube {
    radius: usize,
    dimension: usize,
}

impl Cube {
    pub fn new(radius: usize, dimension: usize) -> Result<Self, LatticeError> {
        if radius == 0 || dimension == 0 {
            return Err(LatticeError::InvalidCube { radius, dimension });
        }
        Ok(Self { radius, dimension })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> usize {
        2 * self.radius - 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index stride of `axis`; axis 0 has the largest stride.
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dimension - 1 - axis) as u32)
    }

    fn half(&self) -> i64 {
        self.radius as i64 - 1
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dimension && site.iter().all(|x| x.abs() <= self.half())
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let side = self.side() as i64;
        Some(
            site.iter()
                .fold(0i64, |acc, &x| acc * side + x + self.half()) as usize,
        )
    }

    pub fn site(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let mut site = vec![0i64; self.dimension];
        for x in site.iter_mut().rev() {
            *x = (index % side) as i64 - self.half();
            index /= side;
        }
        site
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// The next cube out, `Q_{k+1}`.
    pub fn grow(&self) -> Cube {
        Cube {
            radius: self.radius + 1,
            dimension: self.dimension,
        }
    }

    /// Sites of `Q_{k+1} \ Q_k`, in row-major order of `Q_{k+1}`.
    pub fn ring(&self) -> Vec<Vec<i64>> {
        self.grow().sites().filter(|s| !self.contains(s)).collect()
    }
}

/// Periodic lattice `(Z / N Z)^d` with a precomputed neighbour table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Torus {
    side: usize,
    dimension: usize,
    coordinates: Vec<i64>,
    neighbors: Vec<usize>,
}

impl Torus {
    pub fn new(side: usize, dimension: usize) -> Result<Self, LatticeError> {
        if side == 0 || dimension == 0 {
            return Err(LatticeError::InvalidTorus { side, dimension });
        }
        let len = side
            .checked_pow(dimension as u32)
            .ok_or(LatticeError::Overflow("torus size"))?;
        let mut neighbors = Vec::with_capacity(len * 2 * dimension);
        let mut coordinates = Vec::with_capacity(len * dimension);
        for index in 0..len {
            let site = Self::coords(side, dimension, index);
            coordinates.extend_from_slice(&site);
            for axis in 0..dimension {
                for step in [-1i64, 1] {
                    let mut nb = site.clone();
                    nb[axis] = (nb[axis] + step).rem_euclid(side as i64);
                    neighbors.push(Self::flat(side, &nb));
                }
            }
        }
        Ok(Self {
            side,
            dimension,
            coordinates,
            neighbors,
        })
    }

    fn coords(side: usize, dimension: usize, mut index: usize) -> Vec<i64> {
        let mut site = vec![0i64; dimension];
        for x in site.iter_mut().rev() {
            *x = (index % side) as i64;
            index /= side;
        }
        site
    }

    fn flat(side: usize, site: &[i64]) -> usize {
        site.iter().fold(0usize, |acc, &x| {
            acc * side + x.rem_euclid(side as i64) as usize
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.neighbors.len() / (2 * self.dimension)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates in `{0, ..., N-1}^d` of a flat index.
    pub fn site(&self, index: usize) -> Vec<i64> {
        self.coordinates_of(index).to_vec()
    }

    #[inline]
    pub fn coordinates_of(&self, index: usize) -> &[i64] {
        &self.coordinates[index * self.dimension..(index + 1) * self.dimension]
    }

    /// Flat index of a site; coordinates wrap.
    pub fn index_of(&self, site: &[i64]) -> usize {
        Self::flat(self.side, site)
    }

    /// The `2d` neighbours of a flat index.
    #[inline]
    pub fn neighbors(&self, index: usize) -> &[usize] {
        let k = 2 * self.dimension;
        &self.neighbors[index * k..(index + 1) * k]
    }

    /// `sum_{nb} (u_nb - u_i)` with periodic wrap.
    #[inline]
    pub fn laplacian_at(&self, values: &[f64], index: usize) -> f64 {
        let ui = values[index];
        self.neighbors(index)
            .iter()
            .map(|&nb| values[nb] - ui)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Cube(Cube),
    Torus(Torus),
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Cube(c) => c.len(),
            Domain::Torus(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Cube(c) => c.dimension(),
            Domain::Torus(t) => t.dimension(),
        }
    }
}

/// Values attached to every site of a cube or torus.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField<T> {
    domain: Domain,
    values: Vec<T>,
}

impl<T> HeightField<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Default,
{
    pub fn new(domain: Domain, values: Vec<T>) -> Result<Self, LatticeError> {
        if values.len() != domain.len() {
            return Err(LatticeError::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: Domain, value: T) -> Self {
        let values = vec![value; domain.len()];
        Self { domain, values }
    }

    pub fn from_fn(domain: Domain, mut f: impl FnMut(&[i64]) -> T) -> Self {
        let values = (0..domain.len())
            .map(|i| match &domain {
                Domain::Cube(c) => f(&c.site(i)),
                Domain::Torus(t) => f(&t.site(i)),
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn check_dimension(&self, site: &[i64]) -> Result<(), LatticeError> {
        let expected = self.domain.dimension();
        if site.len() != expected {
            return Err(LatticeError::DimensionMismatch {
                expected,
                got: site.len(),
            });
        }
        Ok(())
    }

    /// Value at `site`; torus coordinates wrap, cube coordinates must be inside.
    pub fn get(&self, site: &[i64]) -> Result<T, LatticeError> {
        self.check_dimension(site)?;
        match &self.domain {
            Domain::Cube(c) => c
                .index_of(site)
                .map(|i| self.values[i])
                .ok_or_else(|| LatticeError::NeighborOutside(site.to_vec())),
            Domain::Torus(t) => Ok(self.values[t.index_of(site)]),
        }
    }

    /// Discrete Laplacian `sum_{|r - i|_1 = 1} (u_r - u_i)`.
    pub fn laplacian(&self, site: &[i64]) -> Result<T, LatticeError> {
        let center = self.get(site)?;
        let mut total = T::default();
        let mut nb = site.to_vec();
        for axis in 0..site.len() {
            for step in [-1i64, 1] {
                nb[axis] = site[axis] + step;
                let value = self
                    .get(&nb)
                    .map_err(|_| LatticeError::NeighborOutside(site.to_vec()))?;
                total = total + (value - center);
            }
            nb[axis] = site[axis];
        }
        Ok(total)
    }
}

fn flux_cube<T>(field: &HeightField<T>, radius: usize) -> Result<Cube, LatticeError> {
    match &field.domain {
        Domain::Cube(c) if c.radius() > radius => Cube::new(radius, c.dimension()),
        Domain::Cube(c) => Err(LatticeError::DomainTooSmall {
            stored: c.radius(),
            requested: radius,
        }),
        Domain::Torus(_) => Err(LatticeError::DomainTooSmall {
            stored: 0,
            requested: radius,
        }),
    }
}

/// Sum of outward differences `w_r - w_i` over pairs `i in Q_k`, `r` outside
/// `Q_k`, `|i - r|_1 = 1`. The field must live on a cube of radius `> k`.
pub fn boundary_flux<T>(field: &HeightField<T>, radius: usize) -> Result<T, LatticeError>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Default,
{
    let inner = flux_cube(field, radius)?;
    let mut total = T::default();
    for site in inner.sites() {
        let wi = field.get(&site)?;
        let mut nb = site.clone();
        for axis in 0..site.len() {
            for step in [-1i64, 1] {
                nb[axis] = site[axis] + step;
                if !inner.contains(&nb) {
                    total = total + (field.get(&nb)? - wi);
                }
            }
            nb[axis] = site[axis];
        }
    }
    Ok(total)
}

/// `sum_{i in Q_k} laplacian(i)`.
pub fn laplacian_sum<T>(field: &HeightField<T>, radius: usize) -> Result<T, LatticeError>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Default,
{
    let inner = flux_cube(field, radius)?;
    let mut total = T::default();
    for site in inner.sites() {
        total = total + field.laplacian(&site)?;
    }
    Ok(total)
}

/// Ring size `c_{k,d} = (2k+1)^d - (2k-1)^d = |Q_{k+1} \ Q_k|`.
pub fn ring_size(radius: u64, dimension: u32) -> u64 {
    assert!(
        radius >= 1 && dimension >= 1,
        "ring_size needs k >= 1, d >= 1"
    );
    let outer = (2 * radius + 1)
        .checked_pow(dimension)
        .expect("ring size overflows u64");
    outer - (2 * radius - 1).pow(dimension)
}

/// Free sites of an extension, `xi_{k,d} = c_{k+1,d} - c_{k,d}`.
pub fn extension_freedom(radius: u64, dimension: u32) -> u64 {
    ring_size(radius + 1, dimension) - ring_size(radius, dimension)
}

/// Weak compositions of `j` into `m` ordered parts, `C(j + m - 1, m - 1)`.
pub fn compositions(parts: u64, total: u64) -> Result<u128, LatticeError> {
    assert!(parts >= 1, "compositions needs at least one part");
    let mut acc: u128 = 1;
    // after step i, acc = C(total + i, i)
    for i in 1..parts as u128 {
        acc = acc
            .checked_mul(total as u128 + i)
            .ok_or(LatticeError::Overflow("compositions"))?
            / i;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: Vec<i64>) -> HeightField<i64> {
        let cube = Cube::new(values.len().div_ceil(2), 1).unwrap();
        HeightField::new(Domain::Cube(cube), values).unwrap()
    }

    #[test]
    fn cube_enumeration() {
        let q = Cube::new(2, 2).unwrap();
        assert_eq!(q.len(), 9);
        assert_eq!(q.site(0), vec![-1, -1]);
        assert_eq!(q.site(8), vec![1, 1]);
        for (i, s) in q.sites().enumerate() {
            assert_eq!(q.index_of(&s), Some(i));
        }
        assert_eq!(q.index_of(&[2, 0]), None);
        assert_eq!(q.stride(0), 3);
        assert_eq!(q.stride(1), 1);
        assert!(Cube::new(0, 1).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let f = line(vec![0, 1, 0]);
        assert_eq!(f.laplacian(&[0]).unwrap(), -2);
        let cube = Cube::new(2, 2).unwrap();
        let g = HeightField::from_fn(Domain::Cube(cube), |s| i64::from(s == [0, 0]));
        assert_eq!(g.laplacian(&[0, 0]).unwrap(), -4);
        let flat = HeightField::constant(Domain::Cube(cube), 7.5f64);
        assert_eq!(flat.laplacian(&[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_rejects_edge_of_cube() {
        let f = line(vec![0, 1, 0]);
        assert!(matches!(
            f.laplacian(&[1]),
            Err(LatticeError::NeighborOutside(_))
        ));
        assert!(matches!(
            f.laplacian(&[0, 0]),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn torus_wraps() {
        let t = Torus::new(3, 1).unwrap();
        let f = HeightField::new(Domain::Torus(t.clone()), vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.laplacian(&[0]).unwrap(), 1.0);
        assert_eq!(f.laplacian(&[1]).unwrap(), -2.0);
        assert_eq!(f.laplacian(&[2]).unwrap(), 1.0);
        assert_eq!(t.laplacian_at(f.values(), 1), -2.0);
        assert_eq!(t.neighbors(0), &[2, 1]);
        let single = Torus::new(1, 2).unwrap();
        assert_eq!(single.laplacian_at(&[3.0], 0), 0.0);
    }

    #[test]
    fn flux_example() {
        let f = line(vec![2, 0, 3]);
        assert_eq!(boundary_flux(&f, 1).unwrap(), 5);
        assert_eq!(laplacian_sum(&f, 1).unwrap(), 5);
        assert!(matches!(
            boundary_flux(&f, 2),
            Err(LatticeError::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn ring_sizes() {
        for k in 1..6 {
            assert_eq!(ring_size(k, 1), 2);
            assert_eq!(extension_freedom(k, 1), 0);
        }
        assert_eq!(ring_size(1, 2), 8);
        assert_eq!(ring_size(2, 3), 98);
        assert_eq!(extension_freedom(1, 2), 8);
        for k in 1..50 {
            assert_eq!(extension_freedom(k, 2), 8);
            assert_eq!(extension_freedom(k, 3), 48 * k + 24);
        }
        for d in 1..=3u32 {
            for k in 1..=4usize {
                let ring = Cube::new(k, d as usize).unwrap().ring();
                assert_eq!(ring.len() as u64, ring_size(k as u64, d));
            }
        }
    }

    #[test]
    fn compositions_small() {
        assert_eq!(compositions(1, 17).unwrap(), 1);
        assert_eq!(compositions(2, 3).unwrap(), 4);
        assert_eq!(compositions(3, 2).unwrap(), 6);
        assert_eq!(compositions(5, 0).unwrap(), 1);
    }

    #[test]
    fn compositions_overflow_detected() {
        assert_eq!(
            compositions(200, 1_000_000),
            Err(LatticeError::Overflow("compositions"))
        );
    }
}
