//! Sharpenable activations.
//!
//! Both kinds interpolate between a differentiable unit at sharpness 0 and a
//! binary step at 0.5 when sharpness reaches 1. The interpolation steepens
//! the function about 0.5 with slope factor 1/(1-s), which keeps the
//! gradient closed-form. At s = 1 the backward pass substitutes the s = 0.999
//! surrogate slope so that already-sharpened layers still pass gradient.

use serde::{Deserialize, Serialize};

use super::WhetstoneError;

/// Sharpness used for the backward pass once a unit is fully binary.
const STRAIGHT_THROUGH_S: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivationKind {
    /// Bounded rectified linear unit: identity clamped to [0,1] at s = 0.
    BoundedRelu,
    /// Logistic unit centred at 0.5.
    Sigmoid,
}

fn check_sharpness(s: f64) -> Result<(), WhetstoneError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(WhetstoneError::InvalidSharpness(s))
    }
}

/// Output is always in [0,1]; at s = 1 it is exactly 0 or 1.
pub fn activation_forward(kind: ActivationKind, s: f64, x: f64) -> Result<f64, WhetstoneError> {
    check_sharpness(s)?;
    Ok(forward_unchecked(kind, s, x))
}

pub(crate) fn forward_unchecked(kind: ActivationKind, s: f64, x: f64) -> f64 {
    if s >= 1.0 {
        return if x >= 0.5 { 1.0 } else { 0.0 };
    }
    match kind {
        ActivationKind::BoundedRelu => (0.5 + (x - 0.5) / (1.0 - s)).clamp(0.0, 1.0),
        ActivationKind::Sigmoid => logistic((x - 0.5) / (1.0 - s)),
    }
}

/// dy/dx of the s < 1 form; at s = 1 the s = 0.999 surrogate slope.
pub fn activation_backward(kind: ActivationKind, s: f64, x: f64) -> Result<f64, WhetstoneError> {
    check_sharpness(s)?;
    Ok(backward_unchecked(kind, s, x))
}

pub(crate) fn backward_unchecked(kind: ActivationKind, s: f64, x: f64) -> f64 {
    let s = if s >= 1.0 { STRAIGHT_THROUGH_S } else { s };
    match kind {
        ActivationKind::BoundedRelu => {
            let pre = 0.5 + (x - 0.5) / (1.0 - s);
            if pre > 0.0 && pre < 1.0 {
                1.0 / (1.0 - s)
            } else {
                0.0
            }
        }
        ActivationKind::Sigmoid => {
            let y = logistic((x - 0.5) / (1.0 - s));
            y * (1.0 - y) / (1.0 - s)
        }
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn brelu_at_zero_sharpness_is_identity_clamp() {
        assert_relative_eq!(
            activation_forward(ActivationKind::BoundedRelu, 0.0, 0.3).unwrap(),
            0.3
        );
        assert_eq!(activation_forward(ActivationKind::BoundedRelu, 0.0, -0.2).unwrap(), 0.0);
        assert_eq!(activation_forward(ActivationKind::BoundedRelu, 0.0, 1.7).unwrap(), 1.0);
    }

    #[test]
    fn full_sharpness_is_a_step_at_half() {
        for kind in [ActivationKind::BoundedRelu, ActivationKind::Sigmoid] {
            assert_eq!(activation_forward(kind, 1.0, 0.6).unwrap(), 1.0);
            assert_eq!(activation_forward(kind, 1.0, 0.4).unwrap(), 0.0);
            assert_eq!(activation_forward(kind, 1.0, 0.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn brelu_half_sharpness_direct_formula() {
        // 0.5 + 0.1/0.5 = 0.7
        assert_relative_eq!(
            activation_forward(ActivationKind::BoundedRelu, 0.5, 0.6).unwrap(),
            0.7
        );
    }

    #[test]
    fn sharpness_out_of_range_is_rejected() {
        for s in [-0.1, 1.1, f64::NAN] {
            assert!(activation_forward(ActivationKind::BoundedRelu, s, 0.5).is_err());
            assert!(activation_backward(ActivationKind::Sigmoid, s, 0.5).is_err());
        }
    }

    #[test]
    fn outputs_stay_in_unit_interval_and_binarize_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = rng.random_range(-2.0..3.0);
            let s = rng.random_range(0.0..=1.0);
            for kind in [ActivationKind::BoundedRelu, ActivationKind::Sigmoid] {
                let y = activation_forward(kind, s, x).unwrap();
                assert!((0.0..=1.0).contains(&y));
                let y1 = activation_forward(kind, 1.0, x).unwrap();
                assert!(y1 == 0.0 || y1 == 1.0);
            }
        }
    }

    #[test]
    fn forward_is_monotone_in_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let s = rng.random_range(0.0..=1.0);
            let a = rng.random_range(-1.0..2.0);
            let b = rng.random_range(-1.0..2.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for kind in [ActivationKind::BoundedRelu, ActivationKind::Sigmoid] {
                let ya = activation_forward(kind, s, lo).unwrap();
                let yb = activation_forward(kind, s, hi).unwrap();
                assert!(ya <= yb, "kind {kind:?} s {s} x {lo}->{hi} gave {ya} > {yb}");
            }
        }
    }

    #[test]
    fn backward_matches_central_difference_away_from_kinks() {
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let x: f64 = rng.random_range(-0.5..1.5);
            for s in [0.0, 0.5, 0.9] {
                for kind in [ActivationKind::BoundedRelu, ActivationKind::Sigmoid] {
                    if kind == ActivationKind::BoundedRelu {
                        // Skip points near the clamp kinks.
                        let pre = 0.5 + (x - 0.5) / (1.0 - s);
                        if pre.min(1.0 - pre).abs() < 1e-3 {
                            continue;
                        }
                    }
                    let up = activation_forward(kind, s, x + h).unwrap();
                    let down = activation_forward(kind, s, x - h).unwrap();
                    let fd = (up - down) / (2.0 * h);
                    let analytic = activation_backward(kind, s, x).unwrap();
                    let denom = fd.abs().max(analytic.abs()).max(1e-6);
                    assert!(
                        (fd - analytic).abs() / denom < 1e-4,
                        "kind {kind:?} s {s} x {x}: fd {fd} vs {analytic}"
                    );
                }
            }
        }
    }

    #[test]
    fn binary_backward_uses_surrogate_slope() {
        let g = activation_backward(ActivationKind::BoundedRelu, 1.0, 0.5).unwrap();
        assert_relative_eq!(g, 1000.0, max_relative = 1e-12);
        assert_eq!(activation_backward(ActivationKind::BoundedRelu, 1.0, 0.6).unwrap(), 0.0);
    }
}
