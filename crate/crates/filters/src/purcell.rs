//! Qubit Purcell decay through the filtered readout chain.
//!
//! The readout chain is the filter network with a readout resonator hung
//! off one stage and the qubit, treated as a linear mode, hung off the
//! resonator. The Purcell-limited T1 is extracted from the complex
//! eigenvalue of the mode that is mostly qubit: the decay it inherits from
//! the lossy filter is the imaginary part (first-order model) or the real
//! part of the linearized second-order model that keeps the counter-
//! rotating terms.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::ldos::{calibrate_coupling, ldos_at};
use crate::linalg;
use crate::network::{CoupledModeNetwork, ModeRole};

type C64 = Complex<f64>;

/// Decay rates below this fraction of the fastest filter decay are treated
/// as exactly zero and reported as infinite T1, so downstream log-domain
/// fits can exclude them deterministically.
const ZERO_RATE_REL: f64 = 1e-12;

/// Ambiguity threshold for assigning an eigenvector to the qubit: if the
/// two best qubit weights are closer than this, the point is near an
/// anticrossing and has no meaningful single-mode T1.
const HYBRIDIZATION_GAP: f64 = 0.01;

/// Which dynamical model extracts the qubit eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Model {
    /// First-order coupled-mode equations (rotating-wave approximation).
    Rwa,
    /// Second-order equations of motion without the rotating-wave
    /// approximation, linearized to doubled dimension.
    #[default]
    Full,
}

/// How the resonator-filter coupling is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResonatorCoupling {
    /// Coupling rate c_{j,r} given directly, rad/s.
    Direct(f64),
    /// Target resonator decay rate kappa_r, rad/s; the coupling is
    /// calibrated against the filter LDOS at the resonator frequency.
    Calibrated(f64),
}

/// Readout chain: filter + readout resonator + qubit.
#[derive(Debug, Clone)]
pub struct ReadoutChain {
    pub filter: CoupledModeNetwork,
    /// Resonator frequency omega_r, rad/s.
    pub resonator_frequency: f64,
    /// Filter stage the resonator couples to, 0-based.
    pub resonator_stage: usize,
    pub resonator_coupling: ResonatorCoupling,
    /// Qubit frequency omega_q, rad/s.
    pub qubit_frequency: f64,
    /// Qubit-resonator coupling c_{q,r}, rad/s.
    pub qubit_coupling: f64,
    pub model: Model,
}

impl ReadoutChain {
    pub fn new(
        filter: CoupledModeNetwork,
        resonator_frequency: f64,
        resonator_stage: usize,
        resonator_coupling: ResonatorCoupling,
        qubit_frequency: f64,
        qubit_coupling: f64,
        model: Model,
    ) -> Result<Self> {
        if resonator_stage >= filter.num_modes() {
            return Err(Error::Domain(format!(
                "resonator stage {resonator_stage} out of range ({} modes)",
                filter.num_modes()
            )));
        }
        if !resonator_frequency.is_finite() || resonator_frequency <= 0.0 {
            return Err(Error::Domain("resonator frequency must be positive".into()));
        }
        if !qubit_frequency.is_finite() || qubit_frequency <= 0.0 {
            return Err(Error::Domain("qubit frequency must be positive".into()));
        }
        if !qubit_coupling.is_finite() {
            return Err(Error::Domain("qubit coupling must be finite".into()));
        }
        match resonator_coupling {
            ResonatorCoupling::Direct(c) if !c.is_finite() => {
                return Err(Error::Domain("resonator coupling must be finite".into()))
            }
            ResonatorCoupling::Calibrated(k) if !(k > 0.0) || !k.is_finite() => {
                return Err(Error::Domain(
                    "calibration target kappa_r must be positive".into(),
                ))
            }
            _ => {}
        }
        Ok(ReadoutChain {
            filter,
            resonator_frequency,
            resonator_stage,
            resonator_coupling,
            qubit_frequency,
            qubit_coupling,
            model,
        })
    }

    /// The resonator-filter coupling rate, calibrating against the filter
    /// LDOS when a target kappa_r was requested.
    pub fn resolve_coupling(&self) -> Result<f64> {
        match self.resonator_coupling {
            ResonatorCoupling::Direct(c) => Ok(c),
            ResonatorCoupling::Calibrated(kappa_r) => calibrate_coupling(
                &self.filter,
                self.resonator_stage,
                self.resonator_frequency,
                kappa_r,
            ),
        }
    }

    /// Build the (N+2)-mode network with the qubit at the given frequency.
    /// The resonator is mode N, the qubit mode N+1.
    pub fn assemble(&self, qubit_frequency: f64) -> Result<CoupledModeNetwork> {
        let c_jr = self.resolve_coupling()?;
        let with_res = self.filter.attach_mode(
            self.resonator_frequency,
            self.resonator_stage,
            c_jr,
            ModeRole::ReadoutResonator,
        )?;
        let res_index = with_res.num_modes() - 1;
        with_res.attach_mode(qubit_frequency, res_index, self.qubit_coupling, ModeRole::Qubit)
    }
}

/// Unfiltered Purcell limit T1 = Delta^2 / (kappa_r c^2).
pub fn bare_purcell_t1(detuning: f64, kappa_r: f64, coupling: f64) -> Result<f64> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::Domain(
            "bare Purcell formula is invalid on resonance (detuning = 0)".into(),
        ));
    }
    if !(kappa_r > 0.0) || !kappa_r.is_finite() {
        return Err(Error::Domain("kappa_r must be positive".into()));
    }
    if !(coupling > 0.0) || !coupling.is_finite() {
        return Err(Error::Domain("qubit-resonator coupling must be positive".into()));
    }
    Ok(detuning * detuning / (kappa_r * coupling * coupling))
}

/// Purcell-limited T1 of the chain's qubit at its configured frequency.
pub fn qubit_t1(chain: &ReadoutChain) -> Result<f64> {
    qubit_t1_at(chain, chain.qubit_frequency)
}

/// Purcell-limited T1 with the qubit frequency overridden.
pub fn qubit_t1_at(chain: &ReadoutChain, qubit_frequency: f64) -> Result<f64> {
    let net = chain.assemble(qubit_frequency)?;
    let q = net.num_modes() - 1;
    let rate = match chain.model {
        Model::Rwa => rwa_qubit_rate(&net, q)?,
        Model::Full => full_qubit_rate(&net, q)?,
    };
    let kappa_scale = net
        .external_decay()
        .iter()
        .fold(0.0f64, |acc, &k| acc.max(k));
    if rate < ZERO_RATE_REL * kappa_scale {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / rate)
    }
}

/// Select the eigenvalue whose (unit) eigenvector carries the most qubit
/// weight; error near anticrossings where the assignment is ambiguous.
fn select_by_weight(weighted: &[(f64, C64)]) -> Result<C64> {
    let mut best = (f64::NEG_INFINITY, C64::new(0.0, 0.0));
    let mut second = f64::NEG_INFINITY;
    for &(w, lam) in weighted {
        if w > best.0 {
            second = best.0;
            best = (w, lam);
        } else if w > second {
            second = w;
        }
    }
    if weighted.len() > 1 && (best.0 - second).abs() < HYBRIDIZATION_GAP {
        return Err(Error::Hybridization {
            first: best.0,
            second,
        });
    }
    Ok(best.1)
}

/// Energy decay rate 2|Im w| of the qubit-dominated eigenvalue of H_eff.
fn rwa_qubit_rate(net: &CoupledModeNetwork, qubit: usize) -> Result<f64> {
    let h = net.h_eff();
    let eigs = linalg::eigenvalues_complex(&h)?;
    let weighted: Vec<(f64, C64)> = eigs
        .iter()
        .map(|&lam| {
            let v = linalg::inverse_iterate(&h, lam);
            (v[qubit].norm_sqr(), lam)
        })
        .collect();
    let lam = select_by_weight(&weighted)?;
    Ok(2.0 * lam.im.abs())
}

/// Energy decay rate 2|Re lambda| of the qubit-dominated eigenvalue of the
/// linearized second-order (non-RWA) equations of motion
/// x_m'' + kappa_m x_m' + w_m^2 x_m + sum_n 2 c_mn sqrt(w_m w_n) x_n = 0.
///
/// The first-order form uses the scaled state (y1, y2) = (diag(w) x, x'),
/// which keeps all blocks of the companion matrix at comparable magnitude
/// (order w rather than w^2) for numerical balance:
/// y1' = diag(w) y2, y2' = -(diag(w) + 2 c_mn sqrt(w_m/w_n)) y1
///       - diag(kappa) y2.
fn full_qubit_rate(net: &CoupledModeNetwork, qubit: usize) -> Result<f64> {
    let m = net.num_modes();
    let w = net.mode_frequencies();
    let c = net.coupling();
    let kappa = net.external_decay();
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for j in 0..m {
        a[(j, j + m)] = w[j];
        for k in 0..m {
            a[(j + m, k)] = if j == k {
                -w[j]
            } else {
                -2.0 * c[(j, k)] * (w[j] / w[k]).sqrt()
            };
        }
        a[(j + m, j + m)] = -kappa[j];
    }
    let eigs = linalg::eigenvalues_real(&a)?;
    let kept: Vec<C64> = eigs.into_iter().filter(|e| e.im > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::Eigen("no oscillatory eigenvalues found".into()));
    }
    let ac = a.map(|x| C64::new(x, 0.0));
    let weighted: Vec<(f64, C64)> = kept
        .iter()
        .map(|&lam| {
            let v = linalg::inverse_iterate(&ac, lam);
            (v[qubit].norm_sqr() + v[qubit + m].norm_sqr(), lam)
        })
        .collect();
    let lam = select_by_weight(&weighted)?;
    Ok(2.0 * lam.re.abs())
}

/// One point of a T1-versus-frequency sweep. `t1` is `None` where the
/// qubit hybridizes with a filter mode and no single-mode T1 exists.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub qubit_frequency: f64,
    /// Detuning omega_q - omega_r, rad/s.
    pub detuning: f64,
    pub t1: Option<f64>,
}

/// T1 at each qubit frequency; hybridization points become gaps, every
/// other failure aborts the sweep.
pub fn t1_sweep(chain: &ReadoutChain, qubit_frequencies: &[f64]) -> Result<Vec<SweepPoint>> {
    qubit_frequencies
        .iter()
        .map(|&wq| {
            let t1 = match qubit_t1_at(chain, wq) {
                Ok(t1) => Some(t1),
                Err(Error::Hybridization { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepPoint {
                qubit_frequency: wq,
                detuning: wq - chain.resonator_frequency,
                t1,
            })
        })
        .collect()
}

/// Result of a log-log power-law fit T1 = a |Delta|^b.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS residual of the log-domain fit.
    pub residual: f64,
    /// Detuning-magnitude window actually used, rad/s.
    pub window: (f64, f64),
}

/// Least-squares power law through (detuning, T1) points with |detuning|
/// inside `window` (rad/s). Points with infinite or non-positive T1 are
/// excluded; the remainder must number at least 5 and share one detuning
/// sign.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<ScalingFit> {
    if !(window.0 > 0.0) || !(window.1 > window.0) {
        return Err(Error::Domain("window must satisfy 0 < low < high".into()));
    }
    let selected: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, t1)| {
            let mag = d.abs();
            mag >= window.0 && mag <= window.1 && t1.is_finite() && *t1 > 0.0
        })
        .copied()
        .collect();
    if selected.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs >= 5 usable points in window, found {}",
            selected.len()
        )));
    }
    if selected.iter().any(|(d, _)| d.signum() != selected[0].0.signum()) {
        return Err(Error::Domain(
            "detunings in the fit window must share one sign".into(),
        ));
    }
    let m = selected.len() as f64;
    let sx: f64 = selected.iter().map(|(d, _)| d.abs().ln()).sum();
    let sy: f64 = selected.iter().map(|(_, t)| t.ln()).sum();
    let sxx: f64 = selected.iter().map(|(d, _)| d.abs().ln().powi(2)).sum();
    let sxy: f64 = selected.iter().map(|(d, t)| d.abs().ln() * t.ln()).sum();
    let denom = m * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::InsufficientData("degenerate detuning axis".into()));
    }
    let b = (m * sxy - sx * sy) / denom;
    let ln_a = (sy - b * sx) / m;
    let residual = (selected
        .iter()
        .map(|(d, t)| {
            let r = t.ln() - (ln_a + b * d.abs().ln());
            r * r
        })
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(ScalingFit {
        prefactor: ln_a.exp(),
        exponent: b,
        residual,
        window,
    })
}

/// Total T1 with an intrinsic (non-Purcell) channel: rates add,
/// 1/T1 = 1/T1_purcell + 1/T1_intrinsic. Infinities are absorbing on
/// either side.
pub fn combine_intrinsic(t1_purcell: f64, t1_intrinsic: f64) -> f64 {
    if t1_purcell.is_infinite() {
        return t1_intrinsic;
    }
    if t1_intrinsic.is_infinite() {
        return t1_purcell;
    }
    1.0 / (1.0 / t1_purcell + 1.0 / t1_intrinsic)
}

/// Default detuning grid for scaling fits: |Delta|/2pi from 0.4 to 1.0 GHz,
/// 60 log-spaced points, qubit below the resonator. Returned in ascending
/// detuning order (most negative first).
pub fn default_detuning_grid() -> Vec<f64> {
    let grid = crate::spectrum::log_grid(
        std::f64::consts::TAU * 0.4e9,
        std::f64::consts::TAU * 1.0e9,
        60,
    );
    grid.iter().rev().map(|&d| -d).collect()
}

/// Middle filter stage for resonator attachment, 0-based: stage
/// ceil(N/2) (1-based); for even N the tie between the two central stages
/// goes to the one with smaller LDOS at the qubit frequency (less leakage),
/// and to the lower index when those are equal.
pub fn middle_stage(filter: &CoupledModeNetwork, qubit_frequency: f64) -> Result<usize> {
    let n = filter.num_modes();
    let a = n.div_ceil(2) - 1; // 0-based ceil(N/2)
    if n % 2 == 1 {
        return Ok(a);
    }
    let b = a + 1;
    let rho_a = ldos_at(filter, a, qubit_frequency)?;
    let rho_b = ldos_at(filter, b, qubit_frequency)?;
    // equal up to rounding (symmetric filters) counts as a tie -> lower index
    if rho_b < rho_a * (1.0 - 1e-9) {
        Ok(b)
    } else {
        Ok(a)
    }
}

/// Default attachment stage: first stage for reflective (IL > 0) filters,
/// middle stage for symmetric 0 dB filters.
pub fn default_resonator_stage(
    filter: &CoupledModeNetwork,
    insertion_loss_db: f64,
    qubit_frequency: f64,
) -> Result<usize> {
    if insertion_loss_db > 0.0 {
        Ok(0)
    } else {
        middle_stage(filter, qubit_frequency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_filter_network;
    use crate::prototype::synth_maximally_flat;
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    fn fig3_chain(order: usize, il_db: f64, model: Model) -> ReadoutChain {
        let proto = synth_maximally_flat(order, il_db).unwrap();
        let filter = build_filter_network(&proto, TAU * 6e9, TAU * 600e6).unwrap();
        let stage = default_resonator_stage(&filter, il_db, TAU * 5e9).unwrap();
        ReadoutChain::new(
            filter,
            TAU * 6e9,
            stage,
            ResonatorCoupling::Calibrated(TAU * 15e6),
            TAU * 5e9,
            TAU * 100e6,
            model,
        )
        .unwrap()
    }

    #[test]
    fn bare_purcell_point() {
        let t1 = bare_purcell_t1(-TAU * 1e9, TAU * 15e6, TAU * 100e6).unwrap();
        assert_relative_eq!(t1, 1.06103e-6, max_relative = 1e-4);
        // quadratic in detuning, inverse in kappa
        let t1_2d = bare_purcell_t1(-TAU * 2e9, TAU * 15e6, TAU * 100e6).unwrap();
        assert_relative_eq!(t1_2d, 4.0 * t1, max_relative = 1e-12);
        let t1_2k = bare_purcell_t1(-TAU * 1e9, TAU * 30e6, TAU * 100e6).unwrap();
        assert_relative_eq!(t1_2k, t1 / 2.0, max_relative = 1e-12);
        assert!(bare_purcell_t1(0.0, TAU * 15e6, TAU * 100e6).is_err());
    }

    #[test]
    fn frozen_fifty_db_point() {
        // N=6, 50 dB, qubit 1 GHz below: pinned against an independent
        // implementation of the same model
        let full = qubit_t1(&fig3_chain(6, 50.0, Model::Full)).unwrap();
        assert_relative_eq!(full, 0.5527624522, max_relative = 1e-4);
        let rwa = qubit_t1(&fig3_chain(6, 50.0, Model::Rwa)).unwrap();
        assert_relative_eq!(rwa, 1.9115622448, max_relative = 1e-4);
    }

    #[test]
    fn decoupled_qubit_lives_forever() {
        for model in [Model::Rwa, Model::Full] {
            let mut chain = fig3_chain(2, 20.0, model);
            chain.qubit_coupling = 0.0;
            assert_eq!(qubit_t1(&chain).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn models_agree_at_small_detuning() {
        // counter-rotating corrections are negligible up to 200 MHz detuning
        let full = fig3_chain(6, 20.0, Model::Full);
        let rwa = fig3_chain(6, 20.0, Model::Rwa);
        for detuning_mhz in [100.0, 200.0] {
            let wq = TAU * (6e9 - detuning_mhz * 1e6);
            let a = qubit_t1_at(&full, wq).unwrap();
            let b = qubit_t1_at(&rwa, wq).unwrap();
            assert!((a / b - 1.0).abs() < 0.1, "full {a} vs rwa {b} at {detuning_mhz} MHz");
        }
    }

    #[test]
    fn weak_coupling_matches_golden_rule() {
        // qubit decay vs golden rule on the resonator-mode LDOS of the
        // filter+resonator network
        let chain = fig3_chain(6, 20.0, Model::Full);
        let c_jr = chain.resolve_coupling().unwrap();
        let with_res = chain
            .filter
            .attach_mode(
                chain.resonator_frequency,
                chain.resonator_stage,
                c_jr,
                ModeRole::ReadoutResonator,
            )
            .unwrap();
        let res_index = with_res.num_modes() - 1;
        let rho_eff = crate::ldos::ldos_at(&with_res, res_index, chain.qubit_frequency).unwrap();
        let golden = 1.0 / (TAU * chain.qubit_coupling.powi(2) * rho_eff);
        let t1 = qubit_t1(&chain).unwrap();
        assert!((t1 / golden - 1.0).abs() < 0.15, "t1 {t1} vs golden {golden}");
    }

    #[test]
    fn sweep_marks_hybridization_gaps() {
        let chain = fig3_chain(6, 20.0, Model::Full);
        // sweep straight through the passband: points inside must either
        // hybridize (None) or produce finite tiny T1; outside, finite large
        let grid: Vec<f64> = (0..21).map(|k| TAU * (5.0e9 + 0.1e9 * k as f64)).collect();
        let points = t1_sweep(&chain, &grid).unwrap();
        assert_eq!(points.len(), 21);
        assert!(points.iter().any(|p| p.t1.is_none()), "expected gaps in passband");
        let far = points[0].t1.expect("1 GHz detuning resolves cleanly");
        assert!(far.is_finite() && far > 0.0);
        assert!(t1_sweep(&chain, &[]).unwrap().is_empty());
    }

    #[test]
    fn power_law_fit_exact() {
        let pts: Vec<(f64, f64)> = (1..=40)
            .map(|k| {
                let d = -(TAU * 0.3e9) * 1.05f64.powi(k);
                (d, 3.0 * d.abs().powi(6))
            })
            .collect();
        let window = (TAU * 0.4e9, TAU * 1.0e9);
        let fit = fit_power_law(&pts, window).unwrap();
        assert_relative_eq!(fit.exponent, 6.0, max_relative = 1e-9);
        assert_relative_eq!(fit.prefactor, 3.0, max_relative = 1e-6);
        assert!(fit.residual < 1e-9);
        assert!(fit_power_law(&pts[..4], window).is_err());
        let mixed: Vec<(f64, f64)> = pts.iter().map(|&(d, t)| (-d, t)).chain(pts.iter().copied()).collect();
        assert!(fit_power_law(&mixed, window).is_err());
    }

    #[test]
    fn combine_intrinsic_cases() {
        assert_eq!(combine_intrinsic(f64::INFINITY, 20e-6), 20e-6);
        assert_eq!(combine_intrinsic(20e-6, f64::INFINITY), 20e-6);
        assert_relative_eq!(combine_intrinsic(20e-6, 20e-6), 10e-6, max_relative = 1e-12);
        assert_eq!(combine_intrinsic(f64::INFINITY, f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn middle_stage_selection() {
        let wq = TAU * 5e9;
        let want = [0usize, 0, 1, 1, 2, 2];
        for n in 1..=6 {
            let proto = synth_maximally_flat(n, 0.0).unwrap();
            let filter = build_filter_network(&proto, TAU * 6e9, TAU * 600e6).unwrap();
            assert_eq!(middle_stage(&filter, wq).unwrap(), want[n - 1], "N={n}");
            assert_eq!(default_resonator_stage(&filter, 0.0, wq).unwrap(), want[n - 1]);
            assert_eq!(default_resonator_stage(&filter, 20.0, wq).unwrap(), 0);
        }
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_detuning_grid();
        assert_eq!(grid.len(), 60);
        assert!(grid.iter().all(|&d| d < 0.0));
        assert_relative_eq!(grid[0], -TAU * 1.0e9, max_relative = 1e-12);
        assert_relative_eq!(grid[59], -TAU * 0.4e9, max_relative = 1e-12);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }
}
