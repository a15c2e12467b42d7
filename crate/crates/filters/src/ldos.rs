//! Local density of states of the filter network and coupling calibration.
//!
//! The LDOS seen from mode j is
//! rho_j(w) = -(1/pi) Im [(w I - H_eff)^{-1}]_{jj},
//! a sum of Lorentzians over the collective modes weighted by their overlap
//! with mode j. A weakly coupled extra mode at frequency w decays by the
//! golden rule at Gamma = 2 pi c^2 rho_j(w), which is what the calibration
//! inverts.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::network::CoupledModeNetwork;
use crate::spectrum::{linear_grid, Spectrum};

type C64 = Complex<f64>;

fn check_lossy(net: &CoupledModeNetwork) -> Result<()> {
    if net.external_decay().iter().all(|&k| k == 0.0) {
        return Err(Error::LosslessLdos);
    }
    Ok(())
}

/// LDOS at one mode over a frequency grid (rad/s).
pub fn ldos(net: &CoupledModeNetwork, mode: usize, grid: &[f64]) -> Result<Spectrum<f64>> {
    let all = ldos_all(net, grid)?;
    if mode >= net.num_modes() {
        return Err(Error::Domain(format!(
            "mode {mode} out of range ({} modes)",
            net.num_modes()
        )));
    }
    Ok(all.map(|v| v[mode]))
}

/// LDOS at every mode over a frequency grid; one factorization per point.
pub fn ldos_all(net: &CoupledModeNetwork, grid: &[f64]) -> Result<Spectrum<Vec<f64>>> {
    check_lossy(net)?;
    let n = net.num_modes();
    let h = net.h_eff();
    let mut values = Vec::with_capacity(grid.len());
    for &w in grid {
        let mut a = -h.clone();
        for j in 0..n {
            a[(j, j)] += C64::new(w, 0.0);
        }
        let inv = a
            .try_inverse()
            .ok_or(Error::SingularResolvent { omega: w })?;
        values.push(
            (0..n)
                .map(|j| -inv[(j, j)].im / std::f64::consts::PI)
                .collect(),
        );
    }
    Spectrum::new(grid.to_vec(), values)
}

/// LDOS at a single mode and frequency.
pub fn ldos_at(net: &CoupledModeNetwork, mode: usize, omega: f64) -> Result<f64> {
    Ok(ldos(net, mode, &[omega])?.values()[0])
}

/// Coupling strength c (rad/s) that gives an extra mode attached to
/// `target` the decay rate `kappa_target` at frequency `omega`, by
/// inverting the golden rule Gamma = 2 pi c^2 rho_target(omega).
///
/// Fails when the LDOS at the requested frequency is below 1% of the peak
/// value a single decay channel could provide (2/(pi kappa_max)): there the
/// golden-rule inversion would demand a coupling too strong for the
/// weak-coupling picture it is based on.
pub fn calibrate_coupling(
    net: &CoupledModeNetwork,
    target: usize,
    omega: f64,
    kappa_target: f64,
) -> Result<f64> {
    if !(kappa_target >= 0.0) || !kappa_target.is_finite() {
        return Err(Error::Domain("target decay rate must be >= 0 and finite".into()));
    }
    if kappa_target == 0.0 {
        return Ok(0.0);
    }
    let rho = ldos_at(net, target, omega)?;
    let kappa_max = net
        .external_decay()
        .iter()
        .fold(0.0f64, |acc, &k| acc.max(k));
    let threshold = 0.01 * 2.0 / (std::f64::consts::PI * kappa_max);
    if rho <= threshold {
        return Err(Error::Calibration { ldos: rho, threshold });
    }
    Ok((kappa_target / (2.0 * std::f64::consts::PI * rho)).sqrt())
}

/// Frequencies of near-zero LDOS minima at one mode.
///
/// Scans `census` (a window in rad/s) with `points` samples and returns the
/// strict local minima whose LDOS is below `threshold_rel` times the
/// maximum LDOS inside `passband`. Boundary samples are not minima.
pub fn near_zero_minima(
    net: &CoupledModeNetwork,
    mode: usize,
    passband: (f64, f64),
    census: (f64, f64),
    points: usize,
    threshold_rel: f64,
) -> Result<Vec<f64>> {
    if points < 3 {
        return Err(Error::Domain("census needs at least 3 points".into()));
    }
    if !(census.0 < census.1) || !(passband.0 < passband.1) {
        return Err(Error::Domain("windows must be ordered (low, high)".into()));
    }
    let grid = linear_grid(census.0, census.1, points);
    let spec = ldos(net, mode, &grid)?;
    let vals = spec.values();
    let peak = spec
        .iter()
        .filter(|(w, _)| *w >= passband.0 && *w <= passband.1)
        .fold(0.0f64, |acc, (_, &v)| acc.max(v));
    if peak <= 0.0 {
        return Err(Error::Domain("passband window contains no positive LDOS".into()));
    }
    let cut = threshold_rel * peak;
    Ok((1..vals.len() - 1)
        .filter(|&i| vals[i] < vals[i - 1] && vals[i] < vals[i + 1] && vals[i] < cut)
        .map(|i| grid[i])
        .collect())
}
