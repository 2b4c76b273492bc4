//! The five curve shapes and the two-dimensional recursion blocks they
//! induce.

use nalgebra::DMatrix;

use super::{CurveFamily, CurveParams};
use crate::error::{Error, Result};

/// Evaluate `g(theta, t)`:
///
/// | family      | g(theta, t)                      |
/// |-------------|----------------------------------|
/// | linear      | `t`                              |
/// | exponential | `exp(-rho t)`                    |
/// | logistic    | `1 / (1 + phi exp(-rho t))`      |
/// | gompertz    | `exp(-phi exp(-rho t))`          |
/// | richards    | `(1 + phi exp(-rho t))^(-1/nu)`  |
pub fn eval_g(family: CurveFamily, params: &CurveParams, t: f64) -> Result<f64> {
    params.validate(family)?;
    let CurveParams { phi, rho, nu } = *params;
    let g = match family {
        CurveFamily::Linear => t,
        CurveFamily::Exponential => (-rho * t).exp(),
        CurveFamily::Logistic => 1.0 / (1.0 + phi * (-rho * t).exp()),
        CurveFamily::Gompertz => (-phi * (-rho * t).exp()).exp(),
        CurveFamily::Richards => (1.0 + phi * (-rho * t).exp()).powf(-1.0 / nu),
    };
    if !g.is_finite() {
        return Err(Error::NonFiniteCurve { family: family.name(), t });
    }
    Ok(g)
}

/// Transition matrix of the `[f(t); scale]` recursion:
/// `[[1, g(t_next) - g(t)], [0, 1]]`.
pub fn transition(family: CurveFamily, params: &CurveParams, t: f64, t_next: f64) -> Result<DMatrix<f64>> {
    if t_next < t {
        return Err(Error::InvalidParams(format!("t_next {t_next} precedes t {t}")));
    }
    let dg = eval_g(family, params, t_next)? - eval_g(family, params, t)?;
    Ok(DMatrix::from_row_slice(2, 2, &[1.0, dg, 0.0, 1.0]))
}

/// Simplified process-noise covariance of the semiparametric recursion,
/// with `delta = |g(theta, t_next) - g(theta, t)|`:
///
/// ```text
/// sigma2_eta * [ delta^3/3  delta^2/2 ]
///              [ delta^2/2  delta     ]
/// ```
///
/// This is the integrated-noise covariance in the transformed time
/// `g(theta, t)`; it is exact for the linear family, where the resulting
/// smoother is the cubic smoothing spline.
pub fn process_noise(
    family: CurveFamily,
    params: &CurveParams,
    sigma2_eta: f64,
    t: f64,
    t_next: f64,
) -> Result<DMatrix<f64>> {
    if sigma2_eta.is_nan() || sigma2_eta < 0.0 {
        return Err(Error::InvalidParams(format!("sigma2_eta must be non-negative, got {sigma2_eta}")));
    }
    let delta = (eval_g(family, params, t_next)? - eval_g(family, params, t)?).abs();
    Ok(noise_block(sigma2_eta, delta))
}

pub(crate) fn noise_block(sigma2_eta: f64, delta: f64) -> DMatrix<f64> {
    let d2 = delta * delta;
    let d3 = d2 * delta;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            sigma2_eta * d3 / 3.0,
            sigma2_eta * d2 / 2.0,
            sigma2_eta * d2 / 2.0,
            sigma2_eta * delta,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(phi: f64, rho: f64, nu: f64) -> CurveParams {
        CurveParams { phi, rho, nu }
    }

    #[test]
    fn logistic_at_zero_is_one_over_one_plus_phi() {
        let g = eval_g(CurveFamily::Logistic, &p(1.398, 0.104, 1.0), 0.0).unwrap();
        assert_abs_diff_eq!(g, 0.417014, epsilon = 1e-6);
    }

    #[test]
    fn gompertz_direct_value() {
        let g = eval_g(CurveFamily::Gompertz, &p(1.0, std::f64::consts::LN_2, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(g, (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(g, 0.606531, epsilon = 1e-6);
    }

    #[test]
    fn richards_with_unit_nu_is_logistic() {
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            // splitmix64
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) as f64) / (u64::MAX as f64)
        };
        for _ in 0..20 {
            let phi = 0.1 + 3.0 * next();
            let rho = 0.05 + 1.0 * next();
            let t = 40.0 * next();
            let r = eval_g(CurveFamily::Richards, &p(phi, rho, 1.0), t).unwrap();
            let l = eval_g(CurveFamily::Logistic, &p(phi, rho, 1.0), t).unwrap();
            assert!((r - l).abs() <= 1e-12, "phi={phi} rho={rho} t={t}: {r} vs {l}");
        }
    }

    #[test]
    fn linear_transition_is_unit_shear() {
        let t = transition(CurveFamily::Linear, &p(1.0, 1.0, 1.0), 3.0, 4.0).unwrap();
        assert_eq!(t, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn gompertz_transition_value() {
        let t = transition(CurveFamily::Gompertz, &p(1.0, std::f64::consts::LN_2, 1.0), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(t[(0, 1)], 0.238651, epsilon = 1e-6);
    }

    #[test]
    fn transition_composes_by_telescoping() {
        let params = p(2.0, 0.3, 0.7);
        for family in CurveFamily::ALL {
            let (a, b, c) = (0.5, 2.25, 7.0);
            let t_ab = transition(family, &params, a, b).unwrap();
            let t_bc = transition(family, &params, b, c).unwrap();
            let t_ac = transition(family, &params, a, c).unwrap();
            let composed = &t_bc * &t_ab;
            assert!((&composed - &t_ac).amax() <= 1e-14, "{family}");
        }
    }

    #[test]
    fn process_noise_unit_delta() {
        let q = noise_block(2.0, 1.0);
        let expect = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0, 1.0, 2.0]);
        assert!((&q - &expect).amax() < 1e-15);
    }

    #[test]
    fn process_noise_zero_scaling_vanishes() {
        let q = process_noise(CurveFamily::Logistic, &p(1.0, 0.2, 1.0), 0.0, 0.0, 1.0).unwrap();
        assert_eq!(q.amax(), 0.0);
    }

    #[test]
    fn process_noise_splits_across_intermediate_point_for_increasing_g() {
        // For increasing g the delta is additive in transformed time, so
        // Q(t,c) = T(b,c) Q(t,b) T(b,c)' + Q(b,c) holds exactly.
        let params = p(1.7, 0.21, 0.9);
        for family in [
            CurveFamily::Linear,
            CurveFamily::Logistic,
            CurveFamily::Gompertz,
            CurveFamily::Richards,
        ] {
            let (a, b, c) = (1.0, 2.5, 6.0);
            let s2 = 1.3;
            let q_ac = process_noise(family, &params, s2, a, c).unwrap();
            let q_ab = process_noise(family, &params, s2, a, b).unwrap();
            let q_bc = process_noise(family, &params, s2, b, c).unwrap();
            let t_bc = transition(family, &params, b, c).unwrap();
            let split = &t_bc * q_ab * t_bc.transpose() + q_bc;
            let rel = (&split - &q_ac).amax() / q_ac.amax().max(1e-300);
            assert!(rel <= 1e-12, "{family}: rel err {rel}");
        }
    }

    #[test]
    fn eval_g_rejects_bad_params() {
        assert!(eval_g(CurveFamily::Logistic, &p(-1.0, 0.5, 1.0), 0.0).is_err());
        assert!(eval_g(CurveFamily::Exponential, &p(1.0, 0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn eval_g_flags_overflow() {
        // Huge positive exponent: exp overflows to infinity.
        let r = eval_g(CurveFamily::Exponential, &p(1.0, 1e3, 1.0), -1e3);
        assert!(matches!(r, Err(Error::NonFiniteCurve { .. })));
    }
}
