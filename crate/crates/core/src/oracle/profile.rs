use crate::disorder::QuenchedField;
use crate::lattice::{Cube, Domain, HeightField};

use super::OracleError;

/// Integer profile `w: Q_{k+1} -> {0, ..., A}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteProfile {
    radius: usize,
    dimension: usize,
    cap: i64,
    values: Vec<i64>,
}

impl DiscreteProfile {
    /// `values` are in row-major order of `Q_{radius+1}`.
    pub fn new(
        radius: usize,
        dimension: usize,
        cap: i64,
        values: Vec<i64>,
    ) -> Result<Self, OracleError> {
        let cube = Cube::new(radius, dimension)?.grow();
        if values.len() != cube.len() {
            return Err(OracleError::InvalidParameter(format!(
                "profile on Q_{} needs {} values, got {}",
                radius + 1,
                cube.len(),
                values.len()
            )));
        }
        if cap < 0 {
            return Err(OracleError::InvalidParameter(format!(
                "height cap {cap} is negative"
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v < 0 || v > cap) {
            return Err(OracleError::OutOfRange(format!(
                "profile value {v} outside 0..={cap}"
            )));
        }
        Ok(Self {
            radius,
            dimension,
            cap,
            values,
        })
    }

    pub fn zero(radius: usize, dimension: usize, cap: i64) -> Result<Self, OracleError> {
        let len = Cube::new(radius, dimension)?.grow().len();
        Self::new(radius, dimension, cap, vec![0; len])
    }

    /// `k`: admissibility is imposed on `Q_k`.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The support `Q_{k+1}`.
    pub fn support(&self) -> Cube {
        Cube::new(self.radius + 1, self.dimension).expect("validated at construction")
    }

    pub fn as_field(&self) -> HeightField<i64> {
        HeightField::new(Domain::Cube(self.support()), self.values.clone())
            .expect("length validated")
    }
}

/// Materialised table `fbar_i(j)` for `i in Q_R`, `0 <= j <= A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenDisorder {
    cube: Cube,
    cap: i64,
    table: Vec<i64>,
}

impl FrozenDisorder {
    pub fn from_fn(
        radius: usize,
        dimension: usize,
        cap: i64,
        mut fbar: impl FnMut(&[i64], i64) -> i64,
    ) -> Result<Self, OracleError> {
        if cap < 0 {
            return Err(OracleError::InvalidParameter(format!(
                "height cap {cap} is negative"
            )));
        }
        let cube = Cube::new(radius, dimension)?;
        let mut table = Vec::with_capacity(cube.len() * (cap as usize + 1));
        for site in cube.sites() {
            for h in 0..=cap {
                let v = if h == 0 { 0 } else { fbar(&site, h) };
                if v < 0 {
                    return Err(OracleError::InvalidParameter(format!(
                        "fbar at {site:?}, height {h} is negative ({v})"
                    )));
                }
                table.push(v);
            }
        }
        Ok(Self { cube, cap, table })
    }

    /// Ceilings of the field's strengths on `Q_radius`.
    pub fn from_field(field: &QuenchedField, radius: usize, cap: i64) -> Result<Self, OracleError> {
        Self::from_fn(radius, field.dimension(), cap, |site, h| {
            field.fbar(site, h)
        })
    }

    pub fn zero(radius: usize, dimension: usize, cap: i64) -> Result<Self, OracleError> {
        Self::from_fn(radius, dimension, cap, |_, _| 0)
    }

    /// Cube `Q_R` covered by the table.
    pub fn cube(&self) -> Cube {
        self.cube
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// Row of `site` in the table, if covered.
    pub fn row(&self, site: &[i64]) -> Option<usize> {
        self.cube.index_of(site)
    }

    #[inline]
    pub fn at_row(&self, row: usize, height: i64) -> i64 {
        self.table[row * (self.cap as usize + 1) + height as usize]
    }

    pub fn get(&self, site: &[i64], height: i64) -> Option<i64> {
        if !(0..=self.cap).contains(&height) {
            return None;
        }
        self.row(site).map(|r| self.at_row(r, height))
    }

    pub fn max_value(&self) -> i64 {
        self.table.iter().copied().max().unwrap_or(0)
    }

    /// Table on `Q_{k+1}` that keeps this table on `Q_k` and takes the ring
    /// `Q_{k+1} \ Q_k` from `ring`, whose rows follow [`Cube::ring`] order.
    pub fn with_ring(&self, radius: usize, ring: &[i64]) -> Result<Self, OracleError> {
        let inner = Cube::new(radius, self.cube.dimension())?;
        self.require(inner, self.cap)?;
        let width = self.cap as usize + 1;
        let expected = inner.ring().len() * width;
        if ring.len() != expected || ring.iter().any(|&v| v < 0) {
            return Err(OracleError::InvalidParameter(format!(
                "ring table needs {expected} non-negative entries, got {}",
                ring.len()
            )));
        }
        let cube = inner.grow();
        let mut table = Vec::with_capacity(cube.len() * width);
        let mut ring_rows = ring.chunks(width);
        for site in cube.sites() {
            if inner.contains(&site) {
                let row = self.row(&site).expect("coverage checked");
                table.extend_from_slice(&self.table[row * width..(row + 1) * width]);
            } else {
                let row = ring_rows.next().expect("length checked");
                table.push(0);
                table.extend_from_slice(&row[1..]);
            }
        }
        Ok(Self {
            cube,
            cap: self.cap,
            table,
        })
    }

    /// Errors unless the table covers `cube` up to height `cap`.
    pub fn require(&self, cube: Cube, cap: i64) -> Result<(), OracleError> {
        if cube.dimension() != self.cube.dimension()
            || cube.radius() > self.cube.radius()
            || cap > self.cap
        {
            return Err(OracleError::DisorderTooSmall {
                needed_radius: cube.radius(),
                needed_cap: cap,
                radius: self.cube.radius(),
                cap: self.cap,
            });
        }
        Ok(())
    }
}

/// `laplacian(w)_i - fbar_i(w_i) + F >= 0` at every `i in Q_k`, evaluated
/// site by site on the profile's height field.
pub fn is_admissible(
    profile: &DiscreteProfile,
    disorder: &FrozenDisorder,
    force: i64,
) -> Result<bool, OracleError> {
    let inner = Cube::new(profile.radius(), profile.dimension())?;
    disorder.require(inner, profile.cap())?;
    let field = profile.as_field();
    for site in inner.sites() {
        let lap = field.laplacian(&site)?;
        let w = field.get(&site)?;
        let fbar = disorder.get(&site, w).expect("coverage checked");
        if lap - fbar + force < 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        let zero = FrozenDisorder::zero(2, 1, 3).unwrap();
        let flat = DiscreteProfile::zero(1, 1, 3).unwrap();
        assert!(is_admissible(&flat, &zero, 0).unwrap());
        let spike = DiscreteProfile::new(1, 1, 3, vec![0, 3, 0]).unwrap();
        assert!(!is_admissible(&spike, &zero, 0).unwrap());
        let valley = DiscreteProfile::new(1, 1, 1, vec![1, 0, 1]).unwrap();
        assert!(is_admissible(&valley, &FrozenDisorder::zero(2, 1, 1).unwrap(), 0).unwrap());
    }

    #[test]
    fn admissibility_sees_disorder() {
        let d = FrozenDisorder::from_fn(1, 1, 2, |_, h| h).unwrap();
        let w = DiscreteProfile::new(1, 1, 2, vec![1, 1, 1]).unwrap();
        assert!(!is_admissible(&w, &d, 0).unwrap());
        assert!(is_admissible(&w, &d, 1).unwrap());
    }

    #[test]
    fn profile_validation() {
        assert!(DiscreteProfile::new(1, 1, 1, vec![0, 2, 0]).is_err());
        assert!(DiscreteProfile::new(1, 1, 1, vec![0, 0]).is_err());
        let d = FrozenDisorder::zero(1, 1, 0).unwrap();
        let w = DiscreteProfile::zero(1, 1, 1).unwrap();
        assert!(matches!(
            is_admissible(&w, &d, 0),
            Err(OracleError::DisorderTooSmall { .. })
        ));
    }

    #[test]
    fn height_zero_row_is_zero() {
        let d = FrozenDisorder::from_fn(2, 2, 2, |_, _| 5).unwrap();
        assert_eq!(d.get(&[1, -1], 0), Some(0));
        assert_eq!(d.get(&[1, -1], 2), Some(5));
        assert_eq!(d.get(&[2, 0], 1), None);
    }

    #[test]
    fn ring_replacement() {
        let inner = FrozenDisorder::from_fn(1, 1, 2, |_, h| 10 * h).unwrap();
        // ring of Q_1 in d = 1 is {-1, 1}
        let ring = [9, 1, 2, 9, 3, 4];
        let d = inner.with_ring(1, &ring).unwrap();
        assert_eq!(d.get(&[0], 2), Some(20));
        assert_eq!(d.get(&[-1], 0), Some(0));
        assert_eq!(d.get(&[-1], 2), Some(2));
        assert_eq!(d.get(&[1], 1), Some(3));
        assert!(inner.with_ring(1, &ring[..3]).is_err());
    }
}
