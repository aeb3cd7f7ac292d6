//! Closed-form radial profiles and their exact operator values.
//!
//! For a radial function `u(x) = U(|x - x0|)` away from its center, the
//! gradient is `U'(r) x_hat` and `<x_hat, D2u x_hat> = U''(r)`, so
//!
//! ```text
//!     L u = |U'|^(2-g) (U'' + q_r U')
//! ```
//!
//! in every dimension, where `q_r` is the radial component of the drift.
//! These profiles give ground truth for the discretization that is derived
//! by hand calculus, independent of any lattice.

use std::fmt;

/// One-dimensional radial profile `U(r)`; `r >= 0` unless noted.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialProfile {
    /// `r^alpha`. Singular derivatives at `r = 0` for `alpha < 2`.
    Power { alpha: f64 },
    /// `exp(-a r) - exp(-a r0)`: zero at `r = r0`.
    Exponential { a: f64, r0: f64 },
    /// `exp(-k r^2) - exp(-k r_outer^2)`: zero at `r = r_outer`. Smooth even
    /// extension through `r = 0`.
    Gaussian { k: f64, r_outer: f64 },
    /// `exp(-1 / (1 - (eps r)^2))` on `r < 1/eps`, zero outside: a smooth
    /// compactly supported bump of height `1/e`.
    Bump { eps: f64 },
    /// `1 / (1 + r^2)`: positive, bounded, decaying like `r^-2`.
    RationalDecay,
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Power { alpha } => r.powf(alpha),
            RadialProfile::Exponential { a, r0 } => (-a * r).exp() - (-a * r0).exp(),
            RadialProfile::Gaussian { k, r_outer } => {
                (-k * r * r).exp() - (-k * r_outer * r_outer).exp()
            }
            RadialProfile::Bump { eps } => {
                let s = 1.0 - (eps * r) * (eps * r);
                if s > 0.0 {
                    (-1.0 / s).exp()
                } else {
                    0.0
                }
            }
            RadialProfile::RationalDecay => 1.0 / (1.0 + r * r),
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Power { alpha } => alpha * r.powf(alpha - 1.0),
            RadialProfile::Exponential { a, .. } => -a * (-a * r).exp(),
            RadialProfile::Gaussian { k, .. } => -2.0 * k * r * (-k * r * r).exp(),
            RadialProfile::Bump { eps } => {
                let e2 = eps * eps;
                let s = 1.0 - e2 * r * r;
                if s > 0.0 {
                    (-1.0 / s).exp() * (-2.0 * e2 * r / (s * s))
                } else {
                    0.0
                }
            }
            RadialProfile::RationalDecay => {
                let w = 1.0 + r * r;
                -2.0 * r / (w * w)
            }
        }
    }

    pub fn d2(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Power { alpha } => alpha * (alpha - 1.0) * r.powf(alpha - 2.0),
            RadialProfile::Exponential { a, .. } => a * a * (-a * r).exp(),
            RadialProfile::Gaussian { k, .. } => {
                (4.0 * k * k * r * r - 2.0 * k) * (-k * r * r).exp()
            }
            RadialProfile::Bump { eps } => {
                let e2 = eps * eps;
                let s = 1.0 - e2 * r * r;
                if s > 0.0 {
                    let s2 = s * s;
                    (-1.0 / s).exp()
                        * (4.0 * e2 * e2 * r * r / (s2 * s2)
                            - 2.0 * e2 / s2
                            - 8.0 * e2 * e2 * r * r / (s2 * s))
                } else {
                    0.0
                }
            }
            RadialProfile::RationalDecay => {
                let w = 1.0 + r * r;
                (6.0 * r * r - 2.0) / (w * w * w)
            }
        }
    }
}

/// `L u = |du|^(2-g) (ddu + q_r du)` for a radial function with the given
/// one-dimensional derivatives. At a critical point (`du = 0`) this is `ddu`
/// for `g = 2` and zero for `g < 2`, matching the operator's degeneracy.
pub fn l_radial(gamma: f64, du: f64, ddu: f64, drift_radial: f64) -> f64 {
    du.abs().powf(2.0 - gamma) * (ddu + drift_radial * du)
}

/// A profile evaluated at one radius together with its exact operator value.
#[derive(Clone, Copy, Debug)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
    pub l_value: f64,
}

/// Evaluates `profile` and `L` at each radius, with radial drift `q_r(r)`.
pub fn evaluate(
    profile: &RadialProfile,
    gamma: f64,
    drift_radial: impl Fn(f64) -> f64,
    radii: &[f64],
) -> Vec<RadialSample> {
    radii
        .iter()
        .map(|&r| {
            let u = profile.value(r);
            let du = profile.d1(r);
            let ddu = profile.d2(r);
            RadialSample {
                r,
                u,
                du,
                ddu,
                l_value: l_radial(gamma, du, ddu, drift_radial(r)),
            }
        })
        .collect()
}

/// Outcome of checking a pointwise margin over a family of samples. The
/// check passes when every margin is nonnegative.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub checked: usize,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_radius: f64,
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} points, worst margin {:.3e} at r = {:.6})",
            if self.pass { "PASS" } else { "FAIL" },
            self.checked,
            self.worst_margin,
            self.worst_radius
        )
    }
}

/// Applies `margin` to each sample; the certificate holds when the smallest
/// margin is nonnegative.
pub fn certify(samples: &[RadialSample], margin: impl Fn(&RadialSample) -> f64) -> CertificateReport {
    let mut worst = f64::INFINITY;
    let mut at = f64::NAN;
    for s in samples {
        let m = margin(s);
        if m < worst {
            worst = m;
            at = s.r;
        }
    }
    CertificateReport {
        checked: samples.len(),
        pass: samples.is_empty() || worst >= 0.0,
        worst_margin: worst,
        worst_radius: at,
    }
}

/// Drift profile `q(x) = 4 x / (1 + |x|^2)`, radial component `4 r / (1 + r^2)`.
/// Paired with [`RadialProfile::RationalDecay`] at `g = 0` it satisfies
/// `L u = -8 r^2 / (1 + r^2)^6 <= 0`, a bounded positive supersolution that
/// rules out Liouville-type rigidity once `sup (q . x)_+` reaches 4.
pub fn sharpness_drift(r: f64) -> f64 {
    4.0 * r / (1.0 + r * r)
}

/// Exact residual of the sharpness pair above.
pub fn sharpness_residual(r: f64) -> f64 {
    let w = 1.0 + r * r;
    -8.0 * r * r / (w * w * w * w * w * w)
}
