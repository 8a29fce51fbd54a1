//! Real gamma function.
//!
//! Lanczos approximation with g = 7 and nine coefficients (the set published
//! with the GNU Scientific Library and reproduced in Press et al.), combined
//! with the reflection formula below 1/2. Relative error is below 1e-13 on
//! the positive axis up to about 12 and at non-integer negative arguments
//! away from the poles.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// The gamma function for real arguments.
///
/// Returns NaN at the poles (zero and the negative integers).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    // Exact factorials keep integer arguments bit-exact.
    if x == x.floor() && x <= 171.0 {
        return (1..x as u64).fold(1.0, |acc, n| acc * n as f64);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * w.powf(z + 0.5) * (-w).exp() * series
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn integers_are_factorials() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(2.0), 1.0);
        assert_eq!(gamma(3.0), 2.0);
        assert_eq!(gamma(6.0), 120.0);
        assert_eq!(gamma(12.0), 39_916_800.0);
    }

    #[test]
    fn half_integers() {
        let sqrt_pi = PI.sqrt();
        assert!(rel(gamma(0.5), sqrt_pi) < 1e-13);
        assert!(rel(gamma(1.5), sqrt_pi / 2.0) < 1e-13);
        assert!(rel(gamma(2.5), 0.75 * sqrt_pi) < 1e-13);
        assert!(rel(gamma(11.5), 11_899_423.083_962_25) < 1e-13);
        assert!(rel(gamma(-0.5), -2.0 * sqrt_pi) < 1e-13);
        assert!(rel(gamma(-1.5), 4.0 * sqrt_pi / 3.0) < 1e-13);
    }

    #[test]
    fn reference_values() {
        // Values from a 30-digit evaluation.
        assert!(rel(gamma(0.1), 9.513_507_698_668_732) < 1e-13);
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_8) < 1e-13);
        assert!(rel(gamma(4.2), 7.756_689_535_793_177_6) < 1e-13);
        assert!(rel(gamma(9.75), 207_358.599_890_248_68) < 1e-12);
    }

    #[test]
    fn recurrence_holds() {
        let mut x = 0.05;
        while x < 11.0 {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "x = {x}");
            x += 0.173;
        }
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-3.0).is_nan());
    }
}
