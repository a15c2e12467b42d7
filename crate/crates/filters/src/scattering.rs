//! Frequency-domain scattering from the coupled-mode model.
//!
//! With input-output boundary conditions, the port-basis scattering matrix
//! at drive frequency w is S(w) = I + K (i w I + M)^{-1} K^T, where
//! M = -iH_eff is the dynamical matrix and K_{p,j} = sqrt(rate_p) when port
//! p drains mode j. Propagation sign conventions make |S| unitary for a
//! lossless network (all decay exposed through ports).

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::network::CoupledModeNetwork;
use crate::spectrum::Spectrum;

type C64 = Complex<f64>;

/// Port-to-port scattering matrices over a frequency grid (rad/s).
///
/// Each value is a P x P matrix in the order of `net.ports()`. Fails with a
/// singular-resolvent error if a grid point lands exactly on a lossless
/// collective mode.
pub fn s_parameters(net: &CoupledModeNetwork, grid: &[f64]) -> Result<Spectrum<DMatrix<C64>>> {
    let n = net.num_modes();
    let ports = net.ports();
    let p = ports.len();
    if p == 0 {
        return Err(Error::Domain("network has no ports".into()));
    }
    let m = net.dynamical_matrix();
    // K^T as columns: column p holds sqrt(rate_p) at the port's mode row
    let mut kt = DMatrix::<C64>::zeros(n, p);
    for (pi, port) in ports.iter().enumerate() {
        kt[(port.mode, pi)] = C64::new(port.rate.sqrt(), 0.0);
    }

    let mut values = Vec::with_capacity(grid.len());
    for &w in grid {
        let mut a = m.clone();
        for j in 0..n {
            a[(j, j)] += C64::new(0.0, w);
        }
        let lu = a.lu();
        let x = lu
            .solve(&kt)
            .ok_or(Error::SingularResolvent { omega: w })?;
        let mut s = &kt.transpose() * &x;
        for d in 0..p {
            s[(d, d)] += C64::new(1.0, 0.0);
        }
        values.push(s);
    }
    Spectrum::new(grid.to_vec(), values)
}

/// Convenience: |S_out,in|^2 transmission between two labeled ports across
/// a grid.
pub fn transmission(
    net: &CoupledModeNetwork,
    from_label: &str,
    to_label: &str,
    grid: &[f64],
) -> Result<Spectrum<f64>> {
    let from = port_index(net, from_label)?;
    let to = port_index(net, to_label)?;
    let s = s_parameters(net, grid)?;
    Ok(s.map(|m| m[(to, from)].norm_sqr()))
}

fn port_index(net: &CoupledModeNetwork, label: &str) -> Result<usize> {
    net.ports()
        .iter()
        .position(|p| p.label == label)
        .ok_or_else(|| Error::Domain(format!("no port labeled '{label}'")))
}
