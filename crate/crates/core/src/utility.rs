//! Utility families over two-good bundles and sampling checks of their shape.
//!
//! Every utility is evaluated as `u(own, other)`: `own` is the quantity of the
//! actor's own item type it holds, `other` the quantity of the counterpart's
//! item type. Buyers own X and sellers own Y, so a buyer evaluates `u(x, y)`
//! and a seller `u(y, x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityError {
    #[error("parameter out of range: {family} {name} = {value} (expected {expected})")]
    ParameterOutOfRange {
        family: &'static str,
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("utility evaluated at negative bundle ({own}, {other})")]
    NegativeBundle { own: f64, other: f64 },
}

/// Anything that can be evaluated as a two-good utility.
///
/// Implemented by [`UtilitySpec`]; tests implement it for deliberately
/// invalid functions to exercise [`verify_properties`].
pub trait Utility {
    fn value(&self, own: f64, other: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> Utility for F {
    fn value(&self, own: f64, other: f64) -> f64 {
        self(own, other)
    }
}

/// The admitted parametric utility families.
///
/// - `AdditivePower`: `own^alpha + c * other^beta`, `0 < alpha, beta < 1`, `c > 0`
/// - `ShiftedCobbDouglas`: `(own + a)^theta * (other + b)^(1 - theta)`, `a, b > 0`, `0 < theta < 1`
/// - `Ces`: `(w * own^rho + (1 - w) * other^rho)^(1 / rho)`, `0 < rho < 1`, `0 < w < 1`
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    AdditivePower { alpha: f64, beta: f64, c: f64 },
    ShiftedCobbDouglas { a: f64, b: f64, theta: f64 },
    Ces { rho: f64, w: f64 },
}

fn open_unit(family: &'static str, name: &'static str, value: f64) -> Result<(), UtilityError> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(UtilityError::ParameterOutOfRange {
            family,
            name,
            value,
            expected: "0 < value < 1",
        })
    }
}

fn positive(family: &'static str, name: &'static str, value: f64) -> Result<(), UtilityError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(UtilityError::ParameterOutOfRange {
            family,
            name,
            value,
            expected: "value > 0",
        })
    }
}

impl UtilitySpec {
    /// `sqrt(own) + sqrt(other)`, the workhorse of the test fixtures.
    pub const SQRT_ADDITIVE: UtilitySpec = UtilitySpec::AdditivePower {
        alpha: 0.5,
        beta: 0.5,
        c: 1.0,
    };

    pub fn additive_power(alpha: f64, beta: f64, c: f64) -> Result<Self, UtilityError> {
        let spec = UtilitySpec::AdditivePower { alpha, beta, c };
        spec.validate().map(|_| spec)
    }

    pub fn shifted_cobb_douglas(a: f64, b: f64, theta: f64) -> Result<Self, UtilityError> {
        let spec = UtilitySpec::ShiftedCobbDouglas { a, b, theta };
        spec.validate().map(|_| spec)
    }

    pub fn ces(rho: f64, w: f64) -> Result<Self, UtilityError> {
        let spec = UtilitySpec::Ces { rho, w };
        spec.validate().map(|_| spec)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            UtilitySpec::AdditivePower { .. } => "additive_power",
            UtilitySpec::ShiftedCobbDouglas { .. } => "shifted_cobb_douglas",
            UtilitySpec::Ces { .. } => "ces",
        }
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        let family = self.family_name();
        match *self {
            UtilitySpec::AdditivePower { alpha, beta, c } => {
                open_unit(family, "alpha", alpha)?;
                open_unit(family, "beta", beta)?;
                positive(family, "c", c)
            }
            UtilitySpec::ShiftedCobbDouglas { a, b, theta } => {
                positive(family, "a", a)?;
                positive(family, "b", b)?;
                open_unit(family, "theta", theta)
            }
            UtilitySpec::Ces { rho, w } => {
                open_unit(family, "rho", rho)?;
                open_unit(family, "w", w)
            }
        }
    }
}

impl Utility for UtilitySpec {
    #[inline]
    fn value(&self, own: f64, other: f64) -> f64 {
        debug_assert!(own >= 0.0 && other >= 0.0, "negative bundle ({own}, {other})");
        match *self {
            UtilitySpec::AdditivePower { alpha, beta, c } => own.powf(alpha) + c * other.powf(beta),
            UtilitySpec::ShiftedCobbDouglas { a, b, theta } => {
                (own + a).powf(theta) * (other + b).powf(1.0 - theta)
            }
            UtilitySpec::Ces { rho, w } => {
                let inner = w * own.powf(rho) + (1.0 - w) * other.powf(rho);
                if inner == 0.0 {
                    0.0
                } else {
                    inner.powf(1.0 / rho)
                }
            }
        }
    }
}

/// Checked evaluation of `spec` at `(own, other)`.
pub fn eval_utility(spec: &UtilitySpec, own: f64, other: f64) -> Result<f64, UtilityError> {
    if !(own >= 0.0 && other >= 0.0) {
        return Err(UtilityError::NegativeBundle { own, other });
    }
    Ok(spec.value(own, other))
}

/// Payoffs of the two endpoints of an exchange opportunity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffVector {
    pub v_i: f64,
    pub v_j: f64,
}

impl PayoffVector {
    pub fn new(v_i: f64, v_j: f64) -> Self {
        PayoffVector { v_i, v_j }
    }
}

/// Axis-aligned sampling box in `(own, other)` space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub own: (f64, f64),
    pub other: (f64, f64),
}

impl SampleBox {
    pub const UNIT: SampleBox = SampleBox {
        own: (0.0, 1.0),
        other: (0.0, 1.0),
    };

    fn diameter(&self) -> f64 {
        (self.own.1 - self.own.0).hypot(self.other.1 - self.other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    StrongMonotonicity,
    StrictQuasiConcavity,
    Continuity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyViolation {
    pub kind: PropertyKind,
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub value_p: f64,
    pub value_q: f64,
    /// Value at the midpoint for quasi-concavity findings, the lower-bundle
    /// value for monotonicity ones.
    pub witness: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub samples: usize,
    pub level_pairs: usize,
    pub violations: Vec<PropertyViolation>,
}

impl PropertyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: PropertyKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

const PROPERTY_REL_TOL: f64 = 1e-12;

/// Samples `n_samples` points in `bbox` and looks for evidence against
/// strong monotonicity, strict quasi-concavity and continuity.
///
/// Quasi-concavity is probed on level pairs: for a sampled point `p` a second
/// point `q` with `u(q) = u(p)` is located by bisection in the `other`
/// coordinate, and the midpoint must be strictly better than both.
pub fn verify_properties<U: Utility + ?Sized>(
    utility: &U,
    bbox: SampleBox,
    n_samples: usize,
    seed: u64,
) -> PropertyReport {
    let n_samples = n_samples.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        samples: n_samples,
        ..PropertyReport::default()
    };
    let scale_of = |v: f64| PROPERTY_REL_TOL * v.abs().max(1.0);
    let min_separation = 0.05 * bbox.diameter();

    for _ in 0..n_samples {
        let p = (
            rng.gen_range(bbox.own.0..=bbox.own.1),
            rng.gen_range(bbox.other.0..=bbox.other.1),
        );
        let up = utility.value(p.0, p.1);

        // Strong monotonicity: lowering either coordinate strictly lowers u.
        for axis in 0..2 {
            let lo = if axis == 0 { bbox.own.0 } else { bbox.other.0 };
            let cur = if axis == 0 { p.0 } else { p.1 };
            if cur - lo <= 1e-9 {
                continue;
            }
            let lowered = rng.gen_range(lo..cur);
            let q = if axis == 0 { (lowered, p.1) } else { (p.0, lowered) };
            let uq = utility.value(q.0, q.1);
            // Negated so that NaN counts as a violation.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(up > uq) {
                report.violations.push(PropertyViolation {
                    kind: PropertyKind::StrongMonotonicity,
                    p,
                    q,
                    value_p: up,
                    value_q: uq,
                    witness: uq,
                });
            }
        }

        // Continuity: a step of 1e-9 box diameters moves u by a vanishing amount.
        let h = 1e-9 * bbox.diameter().max(f64::MIN_POSITIVE);
        let stepped = (p.0 + h, p.1 + h);
        let us = utility.value(stepped.0, stepped.1);
        if !us.is_finite() || (us - up).abs() > 1e-3 * up.abs().max(1.0) {
            report.violations.push(PropertyViolation {
                kind: PropertyKind::Continuity,
                p,
                q: stepped,
                value_p: up,
                value_q: us,
                witness: us - up,
            });
        }

        // Strict quasi-concavity on a level pair.
        let qx = rng.gen_range(bbox.own.0..=bbox.own.1);
        if (qx - p.0).abs() < min_separation {
            continue;
        }
        let Some(qy) = level_point(utility, qx, up, bbox) else {
            continue;
        };
        let q = (qx, qy);
        let uq = utility.value(q.0, q.1);
        report.level_pairs += 1;
        let mid = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
        let um = utility.value(mid.0, mid.1);
        let floor = up.min(uq);
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(um > floor + scale_of(floor)) {
            report.violations.push(PropertyViolation {
                kind: PropertyKind::StrictQuasiConcavity,
                p,
                q,
                value_p: up,
                value_q: uq,
                witness: um,
            });
        }
    }
    report
}

/// Finds `y` in the box with `u(x, y) = level`, if one exists.
fn level_point<U: Utility + ?Sized>(utility: &U, x: f64, level: f64, bbox: SampleBox) -> Option<f64> {
    let (mut lo, mut hi) = bbox.other;
    if utility.value(x, lo) > level || utility.value(x, hi) < level {
        return None;
    }
    for _ in 0..200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if utility.value(x, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}
