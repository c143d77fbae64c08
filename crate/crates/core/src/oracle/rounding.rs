//! Rounding real height fields to integer profiles.

use serde::{Deserialize, Serialize};

use crate::disorder::QuenchedField;
use crate::lattice::{Cube, Domain, HeightField, Torus};

use super::{DiscreteProfile, FrozenDisorder, OracleError};

/// Result of [`round_and_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedProfile {
    /// Rounded values on `Q_{k+1}`, row-major.
    pub values: Vec<i64>,
    /// Smallest `laplacian(w)_i - 2d - fbar_i(w_i) + floor(F)` over `Q_k`.
    pub min_slack: i64,
    /// Largest `fbar_i(w_i)` over `Q_k`.
    pub max_fbar: i64,
    pub passed: bool,
}

fn field_cube(u: &HeightField<f64>) -> Result<Cube, OracleError> {
    match u.domain() {
        Domain::Cube(c) if c.radius() >= 2 => Ok(*c),
        _ => Err(OracleError::InvalidParameter(
            "rounding needs a field on a cube Q_{k+1} with k >= 1".into(),
        )),
    }
}

/// Rounds `u` on `Q_{k+1}` half-up and checks the slackened admissibility
/// `laplacian(w)_i - 2d - fbar_i(w_i) + floor(F) >= 0` on `Q_k`.
///
/// Heights must lie in `[0, A + 1/2)` where `A` is the disorder table's cap.
pub fn round_and_check(
    u: &HeightField<f64>,
    disorder: &FrozenDisorder,
    force: f64,
) -> Result<RoundedProfile, OracleError> {
    if !(force >= 0.0 && force.is_finite()) {
        return Err(OracleError::InvalidParameter(format!(
            "force {force} must be finite and non-negative"
        )));
    }
    let support = field_cube(u)?;
    let radius = support.radius() - 1;
    let dimension = support.dimension();
    let inner = Cube::new(radius, dimension)?;
    let cap = disorder.cap();
    disorder.require(inner, cap)?;
    let limit = cap as f64 + 0.5;
    let mut values = Vec::with_capacity(u.values().len());
    for &x in u.values() {
        if !(0.0..limit).contains(&x) {
            return Err(OracleError::OutOfRange(format!(
                "height {x} outside [0, {limit})"
            )));
        }
        values.push((x + 0.5).floor() as i64);
    }
    let profile = DiscreteProfile::new(radius, dimension, cap, values)?;
    let w = profile.as_field();
    let slack_base = force.floor() as i64 - 2 * dimension as i64;
    let mut min_slack = i64::MAX;
    let mut max_fbar = 0;
    for site in inner.sites() {
        let wi = w.get(&site)?;
        let fbar = disorder.get(&site, wi).expect("coverage checked");
        max_fbar = max_fbar.max(fbar);
        min_slack = min_slack.min(w.laplacian(&site)? - fbar + slack_base);
    }
    Ok(RoundedProfile {
        values: profile.values().to_vec(),
        min_slack,
        max_fbar,
        passed: min_slack >= 0,
    })
}

/// A window of a simulated state, shifted down to start at height zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// `u - offset` on `center + Q_{k+1}`, as a field on `Q_{k+1}`.
    pub heights: HeightField<f64>,
    /// `fbar` on `Q_k` at heights `0..=cap` of the shifted frame.
    pub disorder: FrozenDisorder,
    /// `floor` of the lowest height in the window.
    pub offset: i64,
}

/// The torus heights on `center + Q_{k+1}` (coordinates wrapped) lowered by
/// the integer `floor(min u)`, with the matching `fbar` table on `Q_k`.
///
/// The cap is the largest rounded height, the smallest cap that
/// [`round_and_check`] accepts.
pub fn snapshot_around(
    heights: &[f64],
    torus: &Torus,
    field: &QuenchedField,
    center: &[i64],
    radius: usize,
) -> Result<Snapshot, OracleError> {
    if heights.len() != torus.len()
        || center.len() != torus.dimension()
        || field.dimension() != torus.dimension()
    {
        return Err(OracleError::InvalidParameter(
            "snapshot inputs do not match the torus".into(),
        ));
    }
    if torus.side() < 2 * radius + 1 {
        return Err(OracleError::InvalidParameter(format!(
            "torus side {} cannot hold Q_{} without wrapping onto itself",
            torus.side(),
            radius + 1
        )));
    }
    let support = Cube::new(radius + 1, torus.dimension())?;
    let absolute = |site: &[i64]| -> usize {
        let shifted: Vec<i64> = site.iter().zip(center).map(|(a, b)| a + b).collect();
        torus.index_of(&shifted)
    };
    let raw = HeightField::from_fn(Domain::Cube(support), |site| heights[absolute(site)]);
    if raw.values().iter().any(|x| !x.is_finite()) {
        return Err(OracleError::OutOfRange(
            "snapshot heights must be finite".into(),
        ));
    }
    let low = raw
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .floor();
    let offset = low as i64;
    let lowered = HeightField::from_fn(Domain::Cube(support), |site| {
        raw.get(site).expect("site in support") - low
    });
    let cap = lowered
        .values()
        .iter()
        .map(|x| (x + 0.5).floor() as i64)
        .max()
        .unwrap_or(0);
    let disorder = FrozenDisorder::from_fn(radius, torus.dimension(), cap, |site, h| {
        field.fbar(torus.coordinates_of(absolute(site)), h + offset)
    })?;
    Ok(Snapshot {
        heights: lowered,
        disorder,
        offset,
    })
}
