//! Maximally-flat low-pass prototype synthesis for arbitrary insertion loss.
//!
//! A lossless bandpass filter with insertion loss IL (dB) at band center is a
//! reflective design: `|S21(0)|^2 = 10^(-IL/10)` on the normalized low-pass
//! axis, with the missing power reflected at the input port. The synthesis
//! builds the input immittance of that response and peels off the ladder
//! coefficients g_0..g_{N+1} by continued-fraction (Cauer) division. Only
//! adjacent products g_j*g_{j+1} are physical; g_0 is normalized to 1.

use crate::error::{Error, Result};

/// Insertion losses above this lose too much precision in the ladder
/// extraction (g_0*g_1 grows as 10^(IL/10)); the singly-terminated limit
/// should be approximated by 100 dB, not exceeded.
pub const MAX_INSERTION_LOSS_DB: f64 = 100.0;

/// Relative remainder threshold below which Cauer division treats a
/// polynomial coefficient as exact-cancellation rounding noise.
const REMAINDER_TOL: f64 = 1e-8;

/// Supported low-pass response shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseFamily {
    #[default]
    MaximallyFlat,
}

/// Complete description of a bandpass filter design target.
#[derive(Debug, Clone, Copy)]
pub struct FilterSpec {
    /// Filter order N (number of resonant stages).
    pub order: usize,
    /// Insertion loss at band center, dB, >= 0.
    pub insertion_loss_db: f64,
    /// Center frequency omega_0 in rad/s.
    pub center: f64,
    /// Bandwidth delta-omega in rad/s.
    pub bandwidth: f64,
    pub family: ResponseFamily,
}

impl FilterSpec {
    pub fn new(order: usize, insertion_loss_db: f64, center: f64, bandwidth: f64) -> Result<Self> {
        let spec = FilterSpec {
            order,
            insertion_loss_db,
            center,
            bandwidth,
            family: ResponseFamily::MaximallyFlat,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::Domain("filter order must be >= 1".into()));
        }
        if !self.insertion_loss_db.is_finite() || self.insertion_loss_db < 0.0 {
            return Err(Error::Domain(format!(
                "insertion loss must be finite and >= 0 dB, got {}",
                self.insertion_loss_db
            )));
        }
        if self.insertion_loss_db > MAX_INSERTION_LOSS_DB {
            return Err(Error::Domain(format!(
                "insertion loss {} dB exceeds the {} dB conditioning cap",
                self.insertion_loss_db, MAX_INSERTION_LOSS_DB
            )));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Domain("bandwidth must be positive".into()));
        }
        if !(self.center > self.bandwidth / 2.0) {
            return Err(Error::Domain(
                "center frequency must exceed half the bandwidth".into(),
            ));
        }
        Ok(())
    }

    /// Synthesize the prototype for this design.
    pub fn synthesize(&self) -> Result<PrototypeCoefficients> {
        self.validate()?;
        synth_maximally_flat(self.order, self.insertion_loss_db)
    }
}

/// Normalized ladder coefficients g_0..g_{N+1} with g_0 = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeCoefficients {
    g: Vec<f64>,
}

impl PrototypeCoefficients {
    /// Build from raw g values; enforces g_0 = 1 and positivity.
    pub fn from_g_values(g: Vec<f64>) -> Result<Self> {
        if g.len() < 3 {
            return Err(Error::Domain("need at least g_0, g_1, g_2".into()));
        }
        if (g[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("g_0 must be normalized to 1".into()));
        }
        if g.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("all g values must be positive and finite".into()));
        }
        Ok(PrototypeCoefficients { g })
    }

    /// Filter order N.
    pub fn order(&self) -> usize {
        self.g.len() - 2
    }

    /// The ladder values g_0..g_{N+1}.
    pub fn g_values(&self) -> &[f64] {
        &self.g
    }

    /// Adjacent products g_j*g_{j+1} for j = 0..N (the tabulated quantities).
    pub fn products(&self) -> Vec<f64> {
        self.g.windows(2).map(|w| w[0] * w[1]).collect()
    }
}

/// Monic Butterworth polynomial of degree n, ascending coefficients.
///
/// Built from conjugate-pair quadratics so coefficients stay real and exact
/// symmetries (b_m = b_{n-m}) survive to rounding level.
fn butterworth_poly(n: usize) -> Vec<f64> {
    let mut b = vec![1.0];
    for k in 1..=n / 2 {
        let theta = std::f64::consts::PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
        // (s^2 - 2 cos(theta) s + 1), descending
        b = poly_mul(&b, &[1.0, -2.0 * theta.cos(), 1.0]);
    }
    if n % 2 == 1 {
        b = poly_mul(&b, &[1.0, 1.0]);
    }
    b.reverse();
    b
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Synthesize g_0..g_{N+1} for a maximally-flat prototype with the given
/// insertion loss.
///
/// With K = 10^(-IL/10) and eps = sqrt(1-K), the reflection magnitude is
/// |S11(j w)|^2 = (eps^2 + w^{2N})/(1 + w^{2N}). The stable minimum-phase
/// spectral factor is S11(s) = B_eps(s)/B(s), where B is the monic
/// Butterworth polynomial and B_eps(s) = eps*B(s*eps^{-1/N}) (its roots are
/// the Butterworth roots scaled onto the circle of radius eps^{1/N}). The
/// input impedance z(s) = (B + B_eps)/(B - B_eps) then has numerator
/// coefficients b_m*(1 + eps^{(N-m)/N}) and denominator coefficients
/// b_m*(1 - eps^{(N-m)/N}); the denominator's leading term cancels exactly,
/// and Cauer division of the degree-(N, N-1) pair yields the ladder. The
/// positive sign choice makes g_1 the large value for IL > 0, i.e. the
/// weakly coupled port is the input.
pub fn synth_maximally_flat(order: usize, insertion_loss_db: f64) -> Result<PrototypeCoefficients> {
    if order < 1 {
        return Err(Error::Domain("filter order must be >= 1".into()));
    }
    if !insertion_loss_db.is_finite() || insertion_loss_db < 0.0 {
        return Err(Error::Domain(format!(
            "insertion loss must be finite and >= 0 dB, got {insertion_loss_db}"
        )));
    }
    if insertion_loss_db > MAX_INSERTION_LOSS_DB {
        return Err(Error::Domain(format!(
            "insertion loss {insertion_loss_db} dB exceeds the {MAX_INSERTION_LOSS_DB} dB cap"
        )));
    }

    let n = order;
    let k_gain = 10f64.powf(-insertion_loss_db / 10.0);
    let b = butterworth_poly(n);

    // eps^x and 1 - eps^x for x = (n-m)/n, via log1p/expm1 so the
    // denominator stays accurate when eps -> 1 (large IL).
    let mut num = vec![0.0; n + 1];
    let mut den = vec![0.0; n + 1];
    if k_gain >= 1.0 {
        // IL = 0: eps = 0, so eps^x = 0 except at x = 0.
        for m in 0..=n {
            let epsx = if m == n { 1.0 } else { 0.0 };
            num[m] = b[m] * (1.0 + epsx);
            den[m] = b[m] * (1.0 - epsx);
        }
    } else {
        let half_log = 0.5 * (-k_gain).ln_1p(); // ln(eps) = 0.5*ln(1-K)
        for m in 0..=n {
            let x = (n - m) as f64 / n as f64;
            num[m] = b[m] * (1.0 + (x * half_log).exp());
            den[m] = b[m] * (-(x * half_log).exp_m1());
        }
    }
    // leading denominator coefficient cancels exactly by construction
    debug_assert_eq!(den[n], 0.0);
    den.truncate(n);

    // Cauer continued-fraction extraction: at each step z = a*s + 1/z',
    // where a is the ratio of leading coefficients.
    let mut gs = Vec::with_capacity(n + 2);
    gs.push(1.0);
    let mut np = num;
    let mut dp = den;
    for k in 1..=n {
        let a = np[np.len() - 1] / dp[dp.len() - 1];
        let mut r = np.clone();
        for m in 1..np.len() {
            r[m] -= a * dp[m - 1];
        }
        let lead = r[r.len() - 1].abs();
        let scale = np[np.len() - 1].abs();
        if lead > 1e-6 * scale {
            return Err(Error::Synthesis { residual: lead / scale });
        }
        r.pop();
        gs.push(a);
        if k < n {
            // after subtraction the true remainder has dropped two degrees;
            // the top coefficient is cancellation noise
            let tol = REMAINDER_TOL * r.iter().fold(1e-300f64, |acc, v| acc.max(v.abs()));
            let top = r[r.len() - 1].abs();
            if top > tol {
                return Err(Error::Synthesis { residual: top });
            }
            r.pop();
            np = std::mem::take(&mut dp);
            dp = r;
        } else {
            // termination: z_level = a*s + c with c = r_0/d_0, so the load
            // resistance number is g_{N+1} = 1/c
            debug_assert!(r.len() == 1 && dp.len() == 1);
            let c = r[0] / dp[0];
            gs.push(1.0 / c);
        }
    }

    PrototypeCoefficients::from_g_values(gs)
}

/// Closed-form Butterworth coefficients (0 dB insertion loss):
/// g_k = 2 sin((2k-1) pi / 2N), g_0 = g_{N+1} = 1.
pub fn butterworth_closed_form(order: usize) -> Result<PrototypeCoefficients> {
    if order < 1 {
        return Err(Error::Domain("filter order must be >= 1".into()));
    }
    let n = order;
    let mut g = Vec::with_capacity(n + 2);
    g.push(1.0);
    for k in 1..=n {
        g.push(2.0 * (std::f64::consts::PI * (2 * k - 1) as f64 / (2 * n) as f64).sin());
    }
    g.push(1.0);
    PrototypeCoefficients::from_g_values(g)
}

/// Bandpass coupling and dissipation rates mapped from a prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRates {
    /// Nearest-neighbor couplings c_{j,j+1}, j = 1..N-1, rad/s.
    pub couplings: Vec<f64>,
    /// Input-port decay kappa_1, rad/s.
    pub kappa_in: f64,
    /// Output-port decay kappa_N, rad/s.
    pub kappa_out: f64,
}

/// Map a prototype to bandpass rates for bandwidth `bandwidth` (rad/s):
/// c_{j,j+1} = dw / (2 sqrt(g_j g_{j+1})), kappa_1 = dw/(g_0 g_1),
/// kappa_N = dw/(g_N g_{N+1}). Linear in bandwidth; bandwidth 0 gives all
/// zeros.
pub fn coupling_rates(proto: &PrototypeCoefficients, bandwidth: f64) -> Result<CouplingRates> {
    if !(bandwidth >= 0.0) {
        return Err(Error::Domain("bandwidth must be >= 0".into()));
    }
    let g = proto.g_values();
    let n = proto.order();
    let couplings = (1..n)
        .map(|j| bandwidth / (2.0 * (g[j] * g[j + 1]).sqrt()))
        .collect();
    Ok(CouplingRates {
        couplings,
        kappa_in: bandwidth / (g[0] * g[1]),
        kappa_out: bandwidth / (g[n] * g[n + 1]),
    })
}

/// Transducer power gain |S21|^2 of the synthesized low-pass ladder at
/// normalized frequency `omega`, with unit source resistance.
///
/// Used as the reconstruction oracle: a correct synthesis satisfies
/// |S21(0)|^2 = 10^(-IL/10) and |S21(1)|^2 = half that. The ladder is
/// driven series-element-first; the load is g_{N+1} for even N and
/// 1/g_{N+1} for odd N (the continued fraction alternates impedance and
/// admittance levels).
pub fn transducer_gain(proto: &PrototypeCoefficients, omega: f64) -> f64 {
    use num_complex::Complex64 as C64;
    let g = proto.g_values();
    let n = proto.order();
    let r_load = if n % 2 == 1 { 1.0 / g[n + 1] } else { g[n + 1] };
    let (mut a, mut b_, mut c, mut d) = (
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    );
    for k in 1..=n {
        if k % 2 == 1 {
            let z = C64::new(0.0, omega * g[k]);
            b_ += a * z;
            d += c * z;
        } else {
            let y = C64::new(0.0, omega * g[k]);
            a += b_ * y;
            c += d * y;
        }
    }
    let s21 = 2.0 * r_load.sqrt() / (a * r_load + b_ + c * r_load + d);
    s21.norm_sqr()
}
