//! Normal and Student-t distribution primitives.
//!
//! The regularized incomplete beta function and log-gamma come from `statrs`,
//! the complementary error function from `libm`; the t cdf/quantile are assembled here
//! so that both tails stay accurate and the quantile is polished against the
//! cdf it must invert.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::{beta, erf, gamma};

const NEWTON_MAX_ITER: usize = 60;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cdf.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal quantile for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    let guess = -SQRT_2 * erf::erfc_inv(2.0 * p);
    polish(guess, p, normal_cdf, normal_pdf)
}

/// Student-t density with `dof` degrees of freedom (any real `dof > 0`).
pub fn student_t_pdf(t: f64, dof: f64) -> f64 {
    let log_norm = gamma::ln_gamma(0.5 * (dof + 1.0))
        - gamma::ln_gamma(0.5 * dof)
        - 0.5 * (dof * PI).ln();
    (log_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
}

/// Student-t cdf via the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    if t2 < dof {
        // Near the centre: I_{t²/(ν+t²)}(1/2, ν/2) is small and well conditioned.
        let x = t2 / (dof + t2);
        let central = 0.5 * beta::beta_reg(0.5, 0.5 * dof, x);
        if t >= 0.0 {
            0.5 + central
        } else {
            0.5 - central
        }
    } else {
        let x = dof / (dof + t2);
        let tail = 0.5 * beta::beta_reg(0.5 * dof, 0.5, x);
        if t >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

/// Student-t quantile for `p` in (0, 1).
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    if p > 0.5 {
        return -student_t_quantile(1.0 - p, dof);
    }
    if p == 0.5 {
        return 0.0;
    }
    let x = beta::inv_beta_reg(0.5 * dof, 0.5, 2.0 * p);
    let guess = if x > 0.0 && x < 1.0 {
        -(dof * (1.0 - x) / x).sqrt()
    } else {
        // inv_beta_reg saturated; fall back to the normal approximation
        normal_quantile(p)
    };
    polish(
        guess,
        p,
        |t| student_t_cdf(t, dof),
        |t| student_t_pdf(t, dof),
    )
}

/// E|T| for a Student-t with `dof > 1` degrees of freedom.
pub fn student_t_abs_mean(dof: f64) -> f64 {
    let log_ratio = gamma::ln_gamma(0.5 * (dof + 1.0)) - gamma::ln_gamma(0.5 * dof);
    2.0 * dof.sqrt() * log_ratio.exp() / (PI.sqrt() * (dof - 1.0))
}

/// Safeguarded Newton refinement of `x` so that `cdf(x) == p`.
fn polish(mut x: f64, p: f64, cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64) -> f64 {
    // Bracket tracked so a wild Newton step can fall back to bisection.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut best = (x, f64::INFINITY);
    for _ in 0..NEWTON_MAX_ITER {
        let err = cdf(x) - p;
        if err.abs() < best.1 {
            best = (x, err.abs());
        }
        if err == 0.0 {
            return x;
        }
        if err > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let density = pdf(x);
        let mut next = if density > 0.0 { x - err / density } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + (lo.abs() + 1.0),
                (false, true) => hi - (hi.abs() + 1.0),
                (false, false) => break,
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    let err = (cdf(x) - p).abs();
    if err <= best.1 {
        x
    } else {
        best.0
    }
}
