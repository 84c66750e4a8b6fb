//! Traveling and pulsating waves of the limit problem and the Duvaut
//! transform linking temperature to the obstacle variable `w`.

mod duvaut;
mod pulsating;
mod traveling;

pub use duvaut::{duvaut_transform, DuvautField};
pub use pulsating::{pulsating_wave, validate_pulsating, PulsatingConfig, PulsatingReport, PulsatingWave};
pub use traveling::{eq13_residual, solve_a, TravelingWave};

/// Cell average of a periodic reactant field sampled at equally spaced
/// points, with a warning when the field drops below 1 somewhere.
pub fn mu0(v0: &[f64]) -> crate::Result<(f64, Option<String>)> {
    if v0.is_empty() || v0.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::Domain("v0 must be a non-empty finite sample".into()));
    }
    let mean = v0.iter().sum::<f64>() / v0.len() as f64;
    let min = v0.iter().cloned().fold(f64::INFINITY, f64::min);
    let warning = (min < 1.0).then(|| format!("v0 >= 1 violated: minimum sample {min}"));
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok((mean, warning))
}
