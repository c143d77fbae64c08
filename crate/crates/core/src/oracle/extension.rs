//! Extensions of a profile on `Q_{k+1}` to the next shell.
//!
//! A profile `w` on `Q_{k+1}` is extended by choosing values on the shell
//! `S = Q_{k+2} \ Q_{k+1}`. The extension is admissible when every site of
//! the ring `R = Q_{k+1} \ Q_k` has non-negative velocity
//! `laplacian_r - fbar_r(w_r) + F`, and its velocity is the ring sum of those
//! terms. Shell values are enumerated exhaustively.

use std::collections::BTreeMap;

use crate::lattice::{compositions, extension_freedom, ring_size, Cube};

use super::{check_budget, DiscreteProfile, FrozenDisorder, OracleError};

/// Geometry of the ring and shell around `Q_k`.
#[derive(Debug, Clone)]
pub struct ExtensionPlan {
    radius: usize,
    dimension: usize,
    cap: i64,
    /// Support index (in `Q_{k+1}`) of each ring site.
    ring_sites: Vec<usize>,
    ring_coordinates: Vec<Vec<i64>>,
    /// Neighbours of each ring site inside `Q_{k+1}`.
    inner_neighbors: Vec<Vec<usize>>,
    /// Shell digits adjacent to each ring site.
    shell_neighbors: Vec<Vec<usize>>,
    shell_len: usize,
}

impl ExtensionPlan {
    pub fn new(
        radius: usize,
        dimension: usize,
        cap: i64,
        budget: u64,
    ) -> Result<Self, OracleError> {
        if cap < 0 {
            return Err(OracleError::InvalidParameter(format!(
                "height cap {cap} is negative"
            )));
        }
        let inner = Cube::new(radius, dimension)?;
        let support = inner.grow();
        let outer = support.grow();
        let shell: Vec<Vec<i64>> = outer.sites().filter(|s| !support.contains(s)).collect();
        check_budget(cap, shell.len() as u64, budget)?;
        let mut ring_sites = Vec::new();
        let mut ring_coordinates = Vec::new();
        let mut inner_neighbors = Vec::new();
        let mut shell_neighbors = Vec::new();
        for site in inner.ring() {
            let mut ins = Vec::new();
            let mut outs = Vec::new();
            let mut nb = site.clone();
            for axis in 0..dimension {
                for step in [-1i64, 1] {
                    nb[axis] = site[axis] + step;
                    match support.index_of(&nb) {
                        Some(j) => ins.push(j),
                        None => outs.push(
                            shell
                                .iter()
                                .position(|s| *s == nb)
                                .expect("neighbour in shell"),
                        ),
                    }
                }
                nb[axis] = site[axis];
            }
            ring_sites.push(support.index_of(&site).expect("ring lies in Q_{k+1}"));
            ring_coordinates.push(site);
            inner_neighbors.push(ins);
            shell_neighbors.push(outs);
        }
        Ok(Self {
            radius,
            dimension,
            cap,
            ring_sites,
            ring_coordinates,
            inner_neighbors,
            shell_neighbors,
            shell_len: shell.len(),
        })
    }

    pub fn ring_len(&self) -> usize {
        self.ring_sites.len()
    }

    pub fn shell_len(&self) -> usize {
        self.shell_len
    }

    /// Ring sites in [`Cube::ring`] order.
    pub fn ring_coordinates(&self) -> &[Vec<i64>] {
        &self.ring_coordinates
    }

    /// Profile values on the ring, in [`Cube::ring`] order.
    pub fn ring_values(&self, profile: &DiscreteProfile) -> Vec<i64> {
        self.ring_sites
            .iter()
            .map(|&r| profile.values()[r])
            .collect()
    }

    /// The part of a profile that extensions depend on: ring values followed
    /// by their inner neighbours.
    pub fn footprint(&self, profile: &DiscreteProfile) -> Vec<i64> {
        let w = profile.values();
        let mut key = self.ring_values(profile);
        key.extend(self.inner_neighbors.iter().flatten().map(|&j| w[j]));
        key
    }

    fn check_profile(&self, profile: &DiscreteProfile) -> Result<(), OracleError> {
        if profile.radius() != self.radius
            || profile.dimension() != self.dimension
            || profile.cap() > self.cap
        {
            return Err(OracleError::InvalidParameter(format!(
                "profile (k = {}, d = {}, A = {}) does not match extension plan (k = {}, d = {}, A = {})",
                profile.radius(),
                profile.dimension(),
                profile.cap(),
                self.radius,
                self.dimension,
                self.cap
            )));
        }
        Ok(())
    }

    /// Calls `visit` with the ring Laplacians of every shell assignment.
    pub fn for_each_extension(
        &self,
        profile: &DiscreteProfile,
        mut visit: impl FnMut(&[i64]),
    ) -> Result<(), OracleError> {
        self.check_profile(profile)?;
        let w = profile.values();
        let base: Vec<i64> = self
            .ring_sites
            .iter()
            .zip(&self.inner_neighbors)
            .zip(&self.shell_neighbors)
            .map(|((&r, ins), outs)| {
                ins.iter().map(|&j| w[j]).sum::<i64>() - (ins.len() + outs.len()) as i64 * w[r]
            })
            .collect();
        let mut shell = vec![0i64; self.shell_len];
        let mut laplacians = base.clone();
        loop {
            for (slot, lap) in laplacians.iter_mut().enumerate() {
                *lap = base[slot]
                    + self.shell_neighbors[slot]
                        .iter()
                        .map(|&s| shell[s])
                        .sum::<i64>();
            }
            visit(&laplacians);
            // odometer, last digit fastest
            let mut digit = self.shell_len;
            loop {
                if digit == 0 {
                    return Ok(());
                }
                digit -= 1;
                if shell[digit] < self.cap {
                    shell[digit] += 1;
                    break;
                }
                shell[digit] = 0;
            }
        }
    }

    /// `fbar_r(w_r)` on the ring, read from a table covering `Q_{k+1}`.
    pub fn ring_fbars(
        &self,
        profile: &DiscreteProfile,
        disorder: &FrozenDisorder,
    ) -> Result<Vec<i64>, OracleError> {
        self.check_profile(profile)?;
        disorder.require(Cube::new(self.radius + 1, self.dimension)?, profile.cap())?;
        Ok(self
            .ring_sites
            .iter()
            .zip(&self.ring_coordinates)
            .map(|(&r, site)| {
                disorder
                    .get(site, profile.values()[r])
                    .expect("coverage checked")
            })
            .collect())
    }

    /// Number of admissible extensions for each attainable ring velocity.
    pub fn velocity_histogram(
        &self,
        profile: &DiscreteProfile,
        disorder: &FrozenDisorder,
        force: i64,
    ) -> Result<BTreeMap<i64, u64>, OracleError> {
        let fbars = self.ring_fbars(profile, disorder)?;
        let mut histogram = BTreeMap::new();
        self.for_each_extension(profile, |laps| {
            let mut total = 0;
            for (lap, fbar) in laps.iter().zip(&fbars) {
                let v = lap - fbar + force;
                if v < 0 {
                    return;
                }
                total += v;
            }
            *histogram.entry(total).or_insert(0u64) += 1;
        })?;
        Ok(histogram)
    }

    /// Distinct ring-Laplacian vectors over all shell assignments, with
    /// multiplicities.
    pub fn laplacian_classes(
        &self,
        profile: &DiscreteProfile,
    ) -> Result<Vec<(Vec<i64>, u64)>, OracleError> {
        let mut classes = BTreeMap::new();
        self.for_each_extension(profile, |laps| {
            *classes.entry(laps.to_vec()).or_insert(0u64) += 1
        })?;
        Ok(classes.into_iter().collect())
    }
}

/// Extension weight `sum_ext exp(lambda sum_R lap - mu sum_R velocity)` for
/// one ring disorder, from precomputed Laplacian classes.
pub fn extension_weight(
    classes: &[(Vec<i64>, u64)],
    ring_fbars: &[i64],
    force: i64,
    lambda: f64,
    mu: f64,
) -> f64 {
    let mut total = 0.0;
    'class: for (laps, count) in classes {
        let mut lap_sum = 0i64;
        let mut velocity_sum = 0i64;
        for (lap, fbar) in laps.iter().zip(ring_fbars) {
            let v = lap - fbar + force;
            if v < 0 {
                continue 'class;
            }
            lap_sum += lap;
            velocity_sum += v;
        }
        total += *count as f64 * (lambda * lap_sum as f64 - mu * velocity_sum as f64).exp();
    }
    total
}

/// Admissible extensions of `profile` with ring velocity exactly `velocity`.
pub fn count_extensions_by_velocity(
    profile: &DiscreteProfile,
    disorder: &FrozenDisorder,
    force: i64,
    velocity: i64,
    budget: u64,
) -> Result<u64, OracleError> {
    let plan = ExtensionPlan::new(profile.radius(), profile.dimension(), profile.cap(), budget)?;
    Ok(plan
        .velocity_histogram(profile, disorder, force)?
        .get(&velocity)
        .copied()
        .unwrap_or(0))
}

/// `N_{c_{k,d}, j} * (A + 1)^{xi_{k,d}}`.
pub fn extension_count_bound(
    radius: usize,
    dimension: usize,
    cap: i64,
    velocity: u64,
) -> Result<u128, OracleError> {
    let c = ring_size(radius as u64, dimension as u32);
    let xi = extension_freedom(radius as u64, dimension as u32);
    let n = compositions(c, velocity)?;
    let free = (cap as u128 + 1)
        .checked_pow(xi as u32)
        .ok_or(OracleError::InvalidParameter(
            "extension bound overflows".into(),
        ))?;
    n.checked_mul(free).ok_or(OracleError::InvalidParameter(
        "extension bound overflows".into(),
    ))
}
