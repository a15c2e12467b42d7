//! Transmission-line realization of the bandpass filter.
//!
//! The filter is built from one kind of hardware: sections of a single
//! transmission line of characteristic impedance z0, with short-circuited
//! shunt stubs at the junctions acting as admittance inverters. A prototype
//! maps to N+1 inverter strengths Z0*J_n, which set the stub angles phi_n
//! and the connecting-line angles theta_n at the center frequency; angles
//! scale linearly with frequency (non-dispersive line). The exact ABCD
//! cascade then gives the response at any frequency, including the
//! harmonic passbands that the narrowband coupled-mode picture cannot see.

use nalgebra::{Complex, Matrix2};

use crate::error::{Error, Result};
use crate::prototype::PrototypeCoefficients;
use crate::spectrum::Spectrum;

type C64 = Complex<f64>;

/// Stub electrical lengths this close to a multiple of pi are treated as
/// exact shorts (the tan singularity) and flagged.
const TAN_EPS: f64 = 1e-12;

/// A realized filter: all geometry in electrical angles at the center
/// frequency.
///
/// `realize` guarantees the invariants (inverters in (0,1), stub angles in
/// (0, pi/2), section angles in (0, pi), and the round-trip identity
/// theta_n = pi - arctan(Z0J_n) - arctan(Z0J_{n+1})); hand-built values are
/// the caller's responsibility.
#[derive(Debug, Clone, PartialEq)]
pub struct TLineRealization {
    /// Reference characteristic impedance, ohms.
    pub z0: f64,
    /// Center frequency omega_0, rad/s; angles are measured here.
    pub center: f64,
    /// Dimensionless inverter values Z0*J_n, n = 1..N+1.
    pub inverter_values: Vec<f64>,
    /// Shunt stub electrical angles phi_n at omega_0, n = 1..N+1.
    pub stub_lengths: Vec<f64>,
    /// Series line electrical angles theta_n at omega_0, n = 1..N.
    pub section_lengths: Vec<f64>,
}

impl TLineRealization {
    pub fn order(&self) -> usize {
        self.section_lengths.len()
    }
}

/// Map a prototype to the transmission-line realization.
///
/// Z0J_1 = sqrt(pi w / (2 g_0 g_1)) and Z0J_{N+1} likewise from g_N g_{N+1}
/// (end couplings); interior Z0J_n = (pi w / 2)/sqrt(g_{n-1} g_n), with
/// w = bandwidth/center the fractional bandwidth. Stub angles follow from
/// phi_n = arctan(Z0J_n / (1 - Z0J_n^2)) and the connecting lines absorb
/// the leftover phase: theta_n = pi - arctan(Z0J_n) - arctan(Z0J_{n+1}).
pub fn realize(
    proto: &PrototypeCoefficients,
    center: f64,
    bandwidth: f64,
    z0: f64,
) -> Result<TLineRealization> {
    if !(center > 0.0) || !center.is_finite() {
        return Err(Error::Domain("center frequency must be positive".into()));
    }
    if !(bandwidth > 0.0) || bandwidth >= center {
        return Err(Error::Domain(
            "fractional bandwidth must lie in (0, 1) for the narrowband mapping".into(),
        ));
    }
    if !(z0 > 0.0) || !z0.is_finite() {
        return Err(Error::Domain("characteristic impedance must be positive".into()));
    }
    let n = proto.order();
    let w = bandwidth / center;
    let p = proto.products();

    let mut inverters = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let j = if i == 0 || i == n {
            (std::f64::consts::PI * w / (2.0 * p[i])).sqrt()
        } else {
            std::f64::consts::PI * w / (2.0 * p[i].sqrt())
        };
        if !(j > 0.0) || j >= 1.0 {
            return Err(Error::Realization {
                index: i + 1,
                value: j,
            });
        }
        inverters.push(j);
    }

    let stubs: Vec<f64> = inverters
        .iter()
        .map(|&j| (j / (1.0 - j * j)).atan())
        .collect();
    let sections: Vec<f64> = inverters
        .windows(2)
        .map(|jj| std::f64::consts::PI - jj[0].atan() - jj[1].atan())
        .collect();

    Ok(TLineRealization {
        z0,
        center,
        inverter_values: inverters,
        stub_lengths: stubs,
        section_lengths: sections,
    })
}

/// One element of the cascade, by its electrical angle at the center
/// frequency.
#[derive(Debug, Clone, Copy)]
enum Element {
    /// Short-circuited shunt stub.
    Stub(f64),
    /// Series line section.
    Line(f64),
}

/// ABCD matrix of one element at relative frequency nu = omega/omega_0.
/// Returns the matrix and whether a tan singularity was hit (stub acting
/// as an exact short, evaluated by limit).
fn element_abcd(elem: Element, nu: f64, z0: f64) -> (Matrix2<C64>, bool) {
    match elem {
        Element::Stub(phi) => {
            let t = (phi * nu).tan();
            let degenerate = t.abs() < TAN_EPS || !t.is_finite();
            let t_safe = if degenerate {
                f64::copysign(TAN_EPS, t)
            } else {
                t
            };
            // Y = 1/(i z0 tan e) = -i/(z0 tan e)
            let y = C64::new(0.0, -1.0 / (z0 * t_safe));
            (
                Matrix2::new(
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                    y,
                    C64::new(1.0, 0.0),
                ),
                degenerate,
            )
        }
        Element::Line(theta) => {
            let e = theta * nu;
            let (s, c) = e.sin_cos();
            (
                Matrix2::new(
                    C64::new(c, 0.0),
                    C64::new(0.0, z0 * s),
                    C64::new(0.0, s / z0),
                    C64::new(c, 0.0),
                ),
                false,
            )
        }
    }
}

/// Multiply out a chain of elements at relative frequency nu.
fn cascade_abcd(elements: &[Element], nu: f64, z0: f64) -> (Matrix2<C64>, bool) {
    let mut total = Matrix2::identity();
    let mut degenerate = false;
    for &e in elements {
        let (m, d) = element_abcd(e, nu, z0);
        total *= m;
        degenerate |= d;
    }
    (total, degenerate)
}

/// Full left-to-right element chain: stub, line, stub, ..., line, stub.
fn full_chain(real: &TLineRealization) -> Vec<Element> {
    let mut elements = Vec::with_capacity(2 * real.order() + 1);
    if let Some(&phi) = real.stub_lengths.first() {
        elements.push(Element::Stub(phi));
    }
    for (i, &theta) in real.section_lengths.iter().enumerate() {
        elements.push(Element::Line(theta));
        if let Some(&phi) = real.stub_lengths.get(i + 1) {
            elements.push(Element::Stub(phi));
        }
    }
    elements
}

/// Complex two-port S-parameters at one frequency, referenced to z0.
#[derive(Debug, Clone, Copy)]
pub struct TwoPortPoint {
    pub s11: C64,
    pub s21: C64,
    pub s12: C64,
    pub s22: C64,
    /// True when a stub hit its tan singularity and was evaluated as an
    /// exact short.
    pub degenerate: bool,
}

/// Exact two-port response of the realization over a frequency grid
/// (rad/s, all positive).
pub fn abcd_sparams(real: &TLineRealization, grid: &[f64]) -> Result<Spectrum<TwoPortPoint>> {
    if grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Domain("frequency grid must be positive".into()));
    }
    let elements = full_chain(real);
    let z0 = real.z0;
    let values = grid
        .iter()
        .map(|&w| {
            let (m, degenerate) = cascade_abcd(&elements, w / real.center, z0);
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let b_n = b / z0;
            let c_n = c * z0;
            let den = a + b_n + c_n + d;
            let det = a * d - b * c;
            TwoPortPoint {
                s11: (a + b_n - c_n - d) / den,
                s21: 2.0 / den,
                s12: 2.0 * det / den,
                s22: (-a + b_n - c_n + d) / den,
                degenerate,
            }
        })
        .collect();
    Spectrum::new(grid.to_vec(), values)
}

/// Node impedance and admittance seen at a tap point.
#[derive(Debug, Clone, Copy)]
pub struct Immittance {
    pub z: C64,
    pub y: C64,
}

/// Immittance seen from a tap on line section `stage` (0-based) at
/// `fraction` of its length from the left junction: the impedances looking
/// left and right through the remaining cascade into the z0 terminations,
/// combined in parallel.
pub fn tap_immittance(
    real: &TLineRealization,
    stage: usize,
    fraction: f64,
    grid: &[f64],
) -> Result<Spectrum<Immittance>> {
    let n = real.order();
    if stage >= n {
        return Err(Error::Domain(format!(
            "tap stage {stage} out of range ({n} sections)"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(
            "tap fraction must lie strictly inside (0, 1); the endpoints are inverter junctions"
                .into(),
        ));
    }
    if grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Domain("frequency grid must be positive".into()));
    }

    let theta = real.section_lengths[stage];
    // toward the source: partial line, this stage's left stub, then the
    // earlier sections in reverse
    let mut left = vec![Element::Line(fraction * theta)];
    for m in (0..=stage).rev() {
        if let Some(&phi) = real.stub_lengths.get(m) {
            left.push(Element::Stub(phi));
        }
        if m > 0 {
            left.push(Element::Line(real.section_lengths[m - 1]));
        }
    }
    // toward the load: rest of this line, then the later sections
    let mut right = vec![Element::Line((1.0 - fraction) * theta)];
    for m in stage + 1..=n {
        if let Some(&phi) = real.stub_lengths.get(m) {
            right.push(Element::Stub(phi));
        }
        if m < n {
            right.push(Element::Line(real.section_lengths[m]));
        }
    }

    let z0c = C64::new(real.z0, 0.0);
    let values = grid
        .iter()
        .map(|&w| {
            let nu = w / real.center;
            // input impedance through a chain into z0, kept as a ratio
            // n/d to avoid intermediate infinities at resonances
            let (ml, _) = cascade_abcd(&left, nu, real.z0);
            let (mr, _) = cascade_abcd(&right, nu, real.z0);
            let (nl, dl) = (ml[(0, 0)] * z0c + ml[(0, 1)], ml[(1, 0)] * z0c + ml[(1, 1)]);
            let (nr, dr) = (mr[(0, 0)] * z0c + mr[(0, 1)], mr[(1, 0)] * z0c + mr[(1, 1)]);
            // parallel combination (n_l/d_l) || (n_r/d_r)
            let num = nl * nr;
            let den = nl * dr + nr * dl;
            Immittance {
                z: num / den,
                y: den / num,
            }
        })
        .collect();
    Spectrum::new(grid.to_vec(), values)
}

/// Which immittance a weakly coupled resonator samples at the tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Coupled through a small series capacitor: decay follows Re Z_e.
    Capacitive,
    /// Coupled through a small mutual inductance: decay follows Re Y_e.
    Inductive,
}

/// Ratio of resonator decay to qubit decay seen from one tap point:
/// (omega_r^2 X(omega_r)) / (omega_q^2 X(omega_q)) with X = Re Z_e for
/// capacitive coupling and X = Re Y_e for inductive coupling. Large values
/// mean the filter protects the qubit. A vanishing denominator (perfect
/// stopband) reports infinity.
pub fn purcell_ratio(
    real: &TLineRealization,
    stage: usize,
    fraction: f64,
    omega_r: f64,
    omega_q: f64,
    coupling_kind: CouplingKind,
) -> Result<f64> {
    if !(omega_r > 0.0) || !(omega_q > 0.0) {
        return Err(Error::Domain("frequencies must be positive".into()));
    }
    if omega_r == omega_q {
        return Ok(1.0);
    }
    let spec = tap_immittance(real, stage, fraction, &[omega_r, omega_q])?;
    let pick = |imm: &Immittance| match coupling_kind {
        CouplingKind::Capacitive => imm.z.re,
        CouplingKind::Inductive => imm.y.re,
    };
    let x_r = pick(&spec.values()[0]);
    let x_q = pick(&spec.values()[1]);
    let floor = match coupling_kind {
        CouplingKind::Capacitive => 1e-15 * real.z0,
        CouplingKind::Inductive => 1e-15 / real.z0,
    };
    if x_q.abs() < floor {
        return Ok(f64::INFINITY);
    }
    Ok(omega_r * omega_r * x_r / (omega_q * omega_q * x_q))
}
