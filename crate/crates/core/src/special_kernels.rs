//! Modified Bessel functions of the second kind, the radial solutions
//! `L_a(r) = r^{1-a/2} K_{|a/2-1|}(r)`, and the heat/resolvent envelopes built
//! from them.

use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::quad;

const TRAPEZOID_STEP: f64 = 1.0 / 16.0;

/// `K_ν(r) = ∫_0^∞ e^{-r cosh t} cosh(νt) dt`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("K_nu needs r > 0, got {r}"));
    }
    let nu = nu.abs();
    // factor e^{-r} out so the integrand starts at 1
    let scaled = quad::trapezoid_half_line(|t| (-r * (t.cosh() - 1.0)).exp() * (nu * t).cosh(), TRAPEZOID_STEP);
    Ok(scaled * (-r).exp())
}

/// `L_a(r) = r^{1-a/2} K_{|a/2-1|}(r)`, a solution of `f'' + (a-1)/r f' = f`.
pub fn l_a(a: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("L_a needs r > 0, got {r}"));
    }
    Ok(r.powf(1.0 - a / 2.0) * bessel_k(a / 2.0 - 1.0, r)?)
}

/// Exact constant in `∫_0^∞ e^{-tk²} t^{-a/2} e^{-r²/4t} dt = C_a k^{a-2} L_a(kr)`.
pub fn laplace_constant(a: f64) -> f64 {
    2f64.powf(a / 2.0)
}

/// `∫_0^∞ e^{-βt - γ/t} t^{-a/2} dt` by quadrature in `log t`, split at
/// `t = √(γ/β)` (or `t = γ` when `β = 0`).
pub fn heat_time_integral(a: f64, beta: f64, gamma_: f64) -> Result<f64> {
    if !(gamma_ > 0.0) || beta < 0.0 {
        return domain(format!("need gamma > 0 and beta >= 0, got ({gamma_}, {beta})"));
    }
    if beta == 0.0 && a <= 2.0 {
        return Err(Error::Divergent {
            what: "time integral at t = ∞".into(),
            exponent: 1.0 - a / 2.0,
            sign: crate::error::DivergenceSign::Positive,
        });
    }
    let g = |t: f64| (-beta * t - gamma_ / t).exp() * t.powf(-a / 2.0);
    let split = if beta > 0.0 { (gamma_ / beta).sqrt() } else { gamma_ };
    let near = quad::integrate_log_to_inf(|w| g(1.0 / w) / (w * w), 1.0 / split);
    let far = quad::integrate_log_to_inf(g, split);
    Ok(near + far)
}

/// Closed form of [`heat_time_integral`]:
/// `2^{a/2} k^{a-2} L_a(2k√γ)` with `β = k²`, or `Γ(a/2-1) γ^{1-a/2}` at `k = 0`.
pub fn heat_time_closed_form(a: f64, k: f64, gamma_: f64) -> Result<f64> {
    if k == 0.0 {
        if a <= 2.0 {
            return domain(format!("k = 0 needs a > 2, got {a}"));
        }
        return Ok(gamma(a / 2.0 - 1.0) * gamma_.powf(1.0 - a / 2.0));
    }
    Ok(laplace_constant(a) * k.powf(a - 2.0) * l_a(a, 2.0 * k * gamma_.sqrt())?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    pub lhs: f64,
    /// `k^{a-2} L_a(kr)`.
    pub rhs: f64,
    /// Estimated constant `lhs / rhs`.
    pub c_a: f64,
}

pub fn laplace_identity_check(a: f64, k: f64, r: f64) -> Result<LaplaceCheck> {
    if a < 1.0 {
        return domain(format!("a must be >= 1, got {a}"));
    }
    if !(k > 0.0) || !(r > 0.0) {
        return domain(format!("need k, r > 0, got ({k}, {r})"));
    }
    let lhs = heat_time_integral(a, k * k, r * r / 4.0)?;
    let rhs = k.powf(a - 2.0) * l_a(a, k * r)?;
    Ok(LaplaceCheck { lhs, rhs, c_a: lhs / rhs })
}

/// Resolvent envelope parameters on a pair of ends `(n_i, N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventQuery {
    pub n_i: u32,
    pub big_n: u32,
    pub k: f64,
    pub r: f64,
    pub c: f64,
}

impl ResolventQuery {
    pub fn new(n_i: u32, big_n: u32, k: f64, r: f64, c: f64) -> Result<Self> {
        if n_i < 3 || big_n < n_i {
            return domain(format!("need 3 <= n_i <= N, got ({n_i}, {big_n})"));
        }
        if !(k >= 0.0) || !(r > 0.0) || !(c > 0.0) {
            return domain(format!("need k >= 0, r > 0, c > 0, got ({k}, {r}, {c})"));
        }
        Ok(Self { n_i, big_n, k, r, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventValue {
    pub closed_form: f64,
    pub quadrature: f64,
}

/// `∫_0^∞ e^{-k²t}(t^{-n_i/2} + t^{-N/2}) e^{-r²/(ct)} dt` both ways.
pub fn resolvent_bound_eval(q: &ResolventQuery) -> Result<ResolventValue> {
    let gamma_ = q.r * q.r / q.c;
    let mut closed = 0.0;
    let mut quadrature = 0.0;
    for a in [q.n_i as f64, q.big_n as f64] {
        closed += heat_time_closed_form(a, q.k, gamma_)?;
        quadrature += heat_time_integral(a, q.k * q.k, gamma_)?;
    }
    Ok(ResolventValue { closed_form: closed, quadrature })
}

/// `(t^{-n_i/2} + t^{-N/2}) exp(-r²/(ct))`.
pub fn heat_product_envelope(n_i: u32, big_n: u32, r: f64, t: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) || !(c > 0.0) {
        return domain(format!("need t > 0 and c > 0, got ({t}, {c})"));
    }
    Ok((t.powf(-(n_i as f64) / 2.0) + t.powf(-(big_n as f64) / 2.0)) * (-r * r / (c * t)).exp())
}

/// Fitted envelope `C_low r^{2-a} e^{-r} ≤ L_a(r) ≤ C_high r^{2-a} e^{-cr}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub c: f64,
    pub c_low: f64,
    pub c_high: f64,
}

/// Least squares slope of `ys` against `xs`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Rate `c` from a log-scale least squares fit of `r^{a-2} L_a(r)` against
/// `e^{-cr}`, clamped to `(0, 1]`; constants from the extreme ratios.
pub fn fit_l_a_envelope(a: f64, radii: &[f64]) -> Result<EnvelopeFit> {
    if radii.len() < 2 {
        return domain("envelope fit needs at least two radii");
    }
    let h: Vec<f64> = radii
        .iter()
        .map(|&r| Ok(l_a(a, r)? * r.powf(a - 2.0)))
        .collect::<Result<_>>()?;
    let logs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let c = (-ls_slope(radii, &logs)).clamp(f64::MIN_POSITIVE, 1.0);
    let c_low = radii.iter().zip(&h).map(|(r, h)| h * r.exp()).fold(f64::INFINITY, f64::min);
    let c_high = radii.iter().zip(&h).map(|(r, h)| h * (c * r).exp()).fold(0.0, f64::max);
    Ok(EnvelopeFit { c, c_low, c_high })
}

/// Fitted `value ≈ (r^{2-N} + r^{2-n_i}) e^{-c̃ k r}` with the ratio range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichFit {
    pub c_tilde: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn fit_resolvent_sandwich(n_i: u32, big_n: u32, k: f64, c: f64, radii: &[f64]) -> Result<SandwichFit> {
    if radii.len() < 2 || !(k > 0.0) {
        return domain("sandwich fit needs k > 0 and at least two radii");
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in radii {
        let v = resolvent_bound_eval(&ResolventQuery::new(n_i, big_n, k, r, c)?)?.closed_form;
        let base = r.powf(2.0 - big_n as f64) + r.powf(2.0 - n_i as f64);
        xs.push(k * r);
        ys.push((v / base).ln());
    }
    let c_tilde = -ls_slope(&xs, &ys);
    let ratios: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (y + c_tilde * x).exp()).collect();
    Ok(SandwichFit {
        c_tilde,
        lower: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        upper: ratios.iter().copied().fold(0.0, f64::max),
    })
}

/// Largest relative residual of `L_a'' + (a-1)/r L_a' - L_a` under central
/// differences with step `h` at the given radii.
pub fn ode_residual(a: f64, h: f64, radii: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &r in radii {
        let (m, c, p) = (l_a(a, r - h)?, l_a(a, r)?, l_a(a, r + h)?);
        let d2 = (p - 2.0 * c + m) / (h * h);
        let d1 = (p - m) / (2.0 * h);
        worst = worst.max(((d2 + (a - 1.0) / r * d1 - c) / c).abs());
    }
    Ok(worst)
}

/// Ball volume profile `min(r^N, r^{n_i})` of an end.
pub fn volume_model(n_i: u32, big_n: u32, r: f64) -> f64 {
    r.powi(big_n as i32).min(r.powi(n_i as i32))
}

/// `d log f / d log r` by a symmetric difference with ratio `e^h`.
pub fn log_log_slope<F: Fn(f64) -> f64>(f: F, r: f64, h: f64) -> f64 {
    let (lo, hi) = (r * (-h).exp(), r * h.exp());
    (f(hi).ln() - f(lo).ln()) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn k_half(r: f64) -> f64 {
        (PI / (2.0 * r)).sqrt() * (-r).exp()
    }

    #[test]
    fn bessel_half_order_closed_form() {
        for r in [0.01, 0.3, 1.0, 7.0, 50.0] {
            assert_relative_eq!(bessel_k(0.5, r).unwrap(), k_half(r), max_relative = 1e-12);
        }
    }

    #[test]
    fn bessel_reference_values() {
        assert_relative_eq!(bessel_k(0.0, 1.0).unwrap(), 0.421_024_438_240_708_3, max_relative = 1e-12);
        assert_relative_eq!(bessel_k(1.0, 1.0).unwrap(), 0.601_907_230_197_234_6, max_relative = 1e-12);
        // K_{3/2}(r) = K_{1/2}(r) (1 + 1/r)
        assert_relative_eq!(bessel_k(1.5, 0.02).unwrap(), k_half(0.02) * 51.0, max_relative = 1e-10);
        assert!(bessel_k(0.0, 0.0).is_err());
    }

    #[test]
    fn bessel_large_argument() {
        let r = 50.0;
        for nu in [0.0, 1.0, 2.5] {
            let ratio = bessel_k(nu, r).unwrap() * (2.0 * r / PI).sqrt() * r.exp();
            let mu = 4.0 * nu * nu;
            let series = 1.0 + (mu - 1.0) / (8.0 * r) + (mu - 1.0) * (mu - 9.0) / (128.0 * r * r);
            assert_relative_eq!(ratio, series, max_relative = 1e-5);
        }
    }

    #[test]
    fn l_a_special_cases() {
        assert_eq!(l_a(2.0, 1.3).unwrap(), bessel_k(0.0, 1.3).unwrap());
        assert_relative_eq!(l_a(3.0, 2.0).unwrap(), (PI / 2.0).sqrt() / 2.0 * (-2f64).exp(), max_relative = 1e-12);
        assert!(l_a(3.0, -1.0).is_err());
    }

    #[test]
    fn laplace_identity_three() {
        let (k, r) = (0.7, 1.9);
        let c = laplace_identity_check(3.0, k, r).unwrap();
        assert_relative_eq!(c.lhs, 2.0 * PI.sqrt() / r * (-k * r).exp(), max_relative = 1e-9);
        assert_relative_eq!(c.c_a, 2.0 * 2f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn laplace_scaling() {
        let (a, k, r, lambda) = (4.0, 0.5, 2.0, 1.7);
        let base = laplace_identity_check(a, k, r).unwrap().lhs;
        let scaled = laplace_identity_check(a, lambda * k, r / lambda).unwrap().lhs;
        assert_relative_eq!(scaled, lambda.powf(a - 2.0) * base, max_relative = 1e-9);
    }

    #[test]
    fn resolvent_both_paths() {
        for (ni, n, k, r) in [(3, 5, 0.1, 0.5), (3, 3, 1.0, 2.0), (4, 6, 0.0, 1.5), (3, 4, 0.3, 20.0)] {
            let v = resolvent_bound_eval(&ResolventQuery::new(ni, n, k, r, 4.0).unwrap()).unwrap();
            assert_relative_eq!(v.closed_form, v.quadrature, max_relative = 1e-8);
        }
    }

    #[test]
    fn resolvent_equal_dimensions_collapse() {
        let q = ResolventQuery::new(3, 3, 0.4, 1.1, 2.0).unwrap();
        let v = resolvent_bound_eval(&q).unwrap().closed_form;
        let single = heat_time_closed_form(3.0, 0.4, 1.1 * 1.1 / 2.0).unwrap();
        assert_relative_eq!(v, 2.0 * single, max_relative = 1e-15);
    }

    #[test]
    fn heat_envelope_basics() {
        assert_eq!(heat_product_envelope(3, 5, 0.0, 1.0, 4.0).unwrap(), 2.0);
        let a = heat_product_envelope(3, 5, 1.0, 0.5, 2.0).unwrap();
        let b = heat_product_envelope(3, 5, 1.0, 0.5, 3.0).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn envelope_fit_holds_on_finer_grid() {
        for a in [3.0, 4.0, 5.0] {
            let radii: Vec<f64> = (0..=39).map(|i| 1.0 + i as f64).collect();
            let fit = fit_l_a_envelope(a, &radii).unwrap();
            assert!(fit.c > 0.0 && fit.c <= 1.0 && fit.c_low <= fit.c_high);
            for &r in &radii {
                let l = l_a(a, r).unwrap();
                let base = r.powf(2.0 - a);
                assert!(fit.c_low * base * (-r).exp() <= l * (1.0 + 1e-12));
                assert!(l <= fit.c_high * base * (-fit.c * r).exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ode_residual_is_second_order() {
        let radii: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let e: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&h| ode_residual(4.0, h, &radii).unwrap()).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "{e:?}");
        }
    }

    #[test]
    fn resolvent_small_r_slope() {
        let v = |r: f64| {
            resolvent_bound_eval(&ResolventQuery::new(3, 5, 0.1, r, 4.0).unwrap())
                .unwrap()
                .closed_form
        };
        assert!((log_log_slope(v, 1e-3, 0.05) + 3.0).abs() < 0.05);
    }

    #[test]
    fn volume_slopes() {
        let v = |r| volume_model(3, 5, r);
        assert!((log_log_slope(v, 0.1, 0.01) - 5.0).abs() < 0.05);
        assert!((log_log_slope(v, 10.0, 0.01) - 3.0).abs() < 0.05);
    }
}
