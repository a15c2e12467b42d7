//! Frequency- and time-sampled result containers.

use crate::error::{Error, Result};
use crate::network::Port;

/// Values sampled on a frequency grid (rad/s).
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    frequencies: Vec<f64>,
    values: Vec<T>,
}

impl<T> Spectrum<T> {
    pub fn new(frequencies: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::Domain(format!(
                "grid/value length mismatch: {} vs {}",
                frequencies.len(),
                values.len()
            )));
        }
        if frequencies.is_empty() {
            return Err(Error::Domain("empty frequency grid".into()));
        }
        Ok(Spectrum { frequencies, values })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.frequencies.iter().copied().zip(self.values.iter())
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<T>) {
        (self.frequencies, self.values)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Spectrum<U> {
        Spectrum {
            frequencies: self.frequencies.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Uniform linear grid over [start, stop], inclusive, n >= 2 points.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least 2 points");
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Logarithmic grid over [start, stop], inclusive; both ends must be
/// positive.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least 2 points");
    assert!(start > 0.0 && stop > 0.0, "log grid needs positive endpoints");
    let (l0, l1) = (start.ln(), stop.ln());
    let step = (l1 - l0) / (n - 1) as f64;
    (0..n).map(|i| (l0 + step * i as f64).exp()).collect()
}

/// Time-domain decay of the network: per-mode energies and cumulative
/// per-port emitted energies on a shared uniform time grid.
#[derive(Debug, Clone)]
pub struct DecayRecord {
    /// Sample times, s.
    pub times: Vec<f64>,
    /// energies[j][k] = |a_j(t_k)|^2 for mode j.
    pub energies: Vec<Vec<f64>>,
    /// emissions[p][k] = cumulative energy emitted through port p by t_k.
    pub emissions: Vec<Vec<f64>>,
    /// Port metadata in the same order as `emissions`.
    pub ports: Vec<Port>,
}

impl DecayRecord {
    /// Total energy left in the network at sample k.
    pub fn total_energy(&self, k: usize) -> f64 {
        self.energies.iter().map(|e| e[k]).sum()
    }

    /// Total energy emitted through all ports by sample k.
    pub fn total_emitted(&self, k: usize) -> f64 {
        self.emissions.iter().map(|e| e[k]).sum()
    }

    /// Cumulative emission trace for the port with the given label.
    pub fn emission_for_label(&self, label: &str) -> Option<&[f64]> {
        self.ports
            .iter()
            .position(|p| p.label == label)
            .map(|i| self.emissions[i].as_slice())
    }
}
