//! Coupled-mode network: modes, couplings, decay channels, and ports.
//!
//! The network is the input-output model dS/dt = M a with
//! M_jk = -(i w_j + kappa_j/2) delta_jk - i c_jk. All rates are angular
//! (rad/s). Ports tag which decay channels are observable in scattering and
//! emission calculations; every lossy mode must expose its decay through
//! ports so the model stays lossless in the input-output sense.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::prototype::{coupling_rates, PrototypeCoefficients};

type C64 = Complex<f64>;

/// What a mode represents physically; used for reporting and selection
/// rules, not dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRole {
    FilterStage,
    ReadoutResonator,
    Qubit,
}

/// An external coupling channel attached to one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    /// Index of the mode this port drains.
    pub mode: usize,
    /// Human-readable channel name ("input", "output", ...).
    pub label: String,
    /// Decay rate through this port, rad/s. Ports on the same mode sum to
    /// that mode's total external decay.
    pub rate: f64,
}

/// A generic linear network of coupled lossy modes.
#[derive(Debug, Clone)]
pub struct CoupledModeNetwork {
    mode_frequencies: Vec<f64>,
    coupling: DMatrix<f64>,
    external_decay: Vec<f64>,
    ports: Vec<Port>,
    mode_roles: Vec<ModeRole>,
}

impl CoupledModeNetwork {
    /// Validating constructor.
    ///
    /// Requirements: coupling matrix square of matching size, symmetric with
    /// zero diagonal; decay rates non-negative; every port references an
    /// existing mode with positive rate; per-mode port rates sum to that
    /// mode's external decay (a lossy mode without ports would silently
    /// break energy accounting).
    pub fn new(
        mode_frequencies: Vec<f64>,
        coupling: DMatrix<f64>,
        external_decay: Vec<f64>,
        ports: Vec<Port>,
        mode_roles: Vec<ModeRole>,
    ) -> Result<Self> {
        let n = mode_frequencies.len();
        if n == 0 {
            return Err(Error::Domain("network needs at least one mode".into()));
        }
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::Domain(format!(
                "coupling matrix must be {n}x{n}, got {}x{}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if external_decay.len() != n || mode_roles.len() != n {
            return Err(Error::Domain("per-mode vectors must match mode count".into()));
        }
        if mode_frequencies.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Domain("mode frequencies must be positive and finite".into()));
        }
        if external_decay.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::Domain("decay rates must be >= 0 and finite".into()));
        }
        for j in 0..n {
            if coupling[(j, j)] != 0.0 {
                return Err(Error::Domain(format!("coupling diagonal must be zero (mode {j})")));
            }
            for k in 0..j {
                if coupling[(j, k)] != coupling[(k, j)] {
                    return Err(Error::Domain(format!(
                        "coupling matrix must be symmetric (({j},{k}) vs ({k},{j}))"
                    )));
                }
            }
        }
        let mut port_sum = vec![0.0; n];
        for p in &ports {
            if p.mode >= n {
                return Err(Error::Domain(format!(
                    "port '{}' references mode {} of {n}",
                    p.label, p.mode
                )));
            }
            if !(p.rate > 0.0) || !p.rate.is_finite() {
                return Err(Error::Domain(format!(
                    "port '{}' needs a positive finite rate",
                    p.label
                )));
            }
            port_sum[p.mode] += p.rate;
        }
        for j in 0..n {
            let err = (port_sum[j] - external_decay[j]).abs();
            if err > 1e-9 * external_decay[j].max(1.0) {
                return Err(Error::Domain(format!(
                    "port rates on mode {j} sum to {} but its external decay is {}",
                    port_sum[j], external_decay[j]
                )));
            }
        }
        Ok(CoupledModeNetwork {
            mode_frequencies,
            coupling,
            external_decay,
            ports,
            mode_roles,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.mode_frequencies.len()
    }

    pub fn mode_frequencies(&self) -> &[f64] {
        &self.mode_frequencies
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn external_decay(&self) -> &[f64] {
        &self.external_decay
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn mode_roles(&self) -> &[ModeRole] {
        &self.mode_roles
    }

    /// Index of the first mode with the given role.
    pub fn mode_with_role(&self, role: ModeRole) -> Option<usize> {
        self.mode_roles.iter().position(|&r| r == role)
    }

    /// Effective non-Hermitian Hamiltonian
    /// H_jk = w_j delta_jk + c_jk - (i/2) kappa_j delta_jk.
    pub fn h_eff(&self) -> DMatrix<C64> {
        let n = self.num_modes();
        DMatrix::from_fn(n, n, |j, k| {
            let mut h = C64::new(self.coupling[(j, k)], 0.0);
            if j == k {
                h += C64::new(self.mode_frequencies[j], -0.5 * self.external_decay[j]);
            }
            h
        })
    }

    /// Dynamical matrix M = -iH_eff, so that da/dt = M a.
    pub fn dynamical_matrix(&self) -> DMatrix<C64> {
        self.h_eff().map(|h| C64::new(0.0, -1.0) * h)
    }

    /// Return a copy with one extra mode coupled to `target` with strength
    /// `coupling` (rad/s). The new mode is lossless and portless; add decay
    /// by attaching further structure or use it as a probe.
    pub fn attach_mode(&self, frequency: f64, target: usize, coupling: f64, role: ModeRole) -> Result<Self> {
        if target >= self.num_modes() {
            return Err(Error::Domain(format!(
                "attach target {target} out of range ({} modes)",
                self.num_modes()
            )));
        }
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(Error::Domain("attached mode frequency must be positive".into()));
        }
        if !coupling.is_finite() {
            return Err(Error::Domain("attached coupling must be finite".into()));
        }
        let n = self.num_modes();
        let mut freqs = self.mode_frequencies.clone();
        freqs.push(frequency);
        let mut cmat = DMatrix::zeros(n + 1, n + 1);
        cmat.view_mut((0, 0), (n, n)).copy_from(&self.coupling);
        cmat[(n, target)] = coupling;
        cmat[(target, n)] = coupling;
        let mut decay = self.external_decay.clone();
        decay.push(0.0);
        let mut roles = self.mode_roles.clone();
        roles.push(role);
        CoupledModeNetwork::new(freqs, cmat, decay, self.ports.clone(), roles)
    }
}

/// Assemble the bandpass filter network for a prototype centered at
/// `center` (rad/s) with bandwidth `bandwidth` (rad/s). All stages sit at
/// the center frequency; stage 1 carries the input port, stage N the
/// output port.
pub fn build_filter_network(
    proto: &PrototypeCoefficients,
    center: f64,
    bandwidth: f64,
) -> Result<CoupledModeNetwork> {
    if !center.is_finite() || center <= 0.0 {
        return Err(Error::Domain("center frequency must be positive".into()));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Domain("bandwidth must be positive".into()));
    }
    if center <= bandwidth / 2.0 {
        return Err(Error::Domain("center frequency must exceed half the bandwidth".into()));
    }
    let n = proto.order();
    let rates = coupling_rates(proto, bandwidth)?;
    let mut cmat = DMatrix::zeros(n, n);
    for (j, &c) in rates.couplings.iter().enumerate() {
        cmat[(j, j + 1)] = c;
        cmat[(j + 1, j)] = c;
    }
    let mut decay = vec![0.0; n];
    decay[0] += rates.kappa_in;
    decay[n - 1] += rates.kappa_out;
    let mut ports = vec![Port {
        mode: 0,
        label: "input".into(),
        rate: rates.kappa_in,
    }];
    // N = 1: one stage carries both ports
    ports.push(Port {
        mode: n - 1,
        label: "output".into(),
        rate: rates.kappa_out,
    });
    CoupledModeNetwork::new(
        vec![center; n],
        cmat,
        decay,
        ports,
        vec![ModeRole::FilterStage; n],
    )
}

/// Convert a loaded quality factor to a decay rate: kappa = omega / Q.
/// An infinite Q gives zero decay.
pub fn kappa_from_q(omega: f64, q: f64) -> Result<f64> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::Domain("frequency must be positive and finite".into()));
    }
    if q.is_nan() || q <= 0.0 {
        return Err(Error::Domain("quality factor must be positive".into()));
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    Ok(omega / q)
}
