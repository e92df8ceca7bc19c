//! Digamma, trigamma and the inverse digamma used by the Gamma
//! hyperparameter updates.

pub use statrs::function::gamma::ln_gamma;

/// Digamma `psi(x)` for `x > 0`: upward recurrence to `x >= 10`, then the
/// asymptotic series. NaN outside the domain.
pub fn digamma(mut x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * 691.0 / 32760.0)))));
    acc + x.ln() - 0.5 / x - series
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = 1.0 / x
        + 0.5 * r
        + (1.0 / x)
            * r
            * (1.0 / 6.0
                - r * (1.0 / 30.0
                    - r * (1.0 / 42.0
                        - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    acc + series
}

const DIGAMMA_AT_ONE: f64 = -0.577_215_664_901_532_9;

/// Inverse of the digamma function: the `x > 0` with `psi(x) = y`.
///
/// Newton iterations from Minka's starting point
/// (`exp(y) + 1/2` above `y = -2.22`, `-1/(y - psi(1))` below), which
/// converge in a handful of steps over the whole real line.
pub fn inv_digamma(y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    let mut x = if y >= -2.22 {
        y.exp() + 0.5
    } else {
        -1.0 / (y - DIGAMMA_AT_ONE)
    };
    for _ in 0..100 {
        let step = (digamma(x) - y) / trigamma(x);
        let mut next = x - step;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        let done = (next - x).abs() <= 1e-15 * next.max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    x
}
