use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Complete elliptic integrals of the first and second kind, `(K(m), E(m))`,
/// with parameter `m = k²`:
///
/// `K(m) = ∫_0^{π/2} (1 − m sin²θ)^{-1/2} dθ`,
/// `E(m) = ∫_0^{π/2} (1 − m sin²θ)^{1/2} dθ`.
///
/// Evaluated by the arithmetic-geometric mean. `K(1)` is `+∞`.
pub fn complete_elliptic(m: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&m) || m.is_nan() {
        return Err(Error::Domain(format!("elliptic parameter m = {m} not in [0, 1]")));
    }
    if m == 1.0 {
        return Ok((f64::INFINITY, 1.0));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow2 *= 2.0;
        sum += pow2 * c * c;
        a = an;
        b = bn;
    }
    let k = FRAC_PI_2 / a;
    Ok((k, k * (1.0 - sum)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn endpoints() {
        let (k, e) = complete_elliptic(0.0).unwrap();
        assert!((k - PI / 2.0).abs() < 1e-15);
        assert!((e - PI / 2.0).abs() < 1e-15);
        let (k, e) = complete_elliptic(1.0).unwrap();
        assert!(k.is_infinite());
        assert_eq!(e, 1.0);
    }

    #[test]
    fn half_matches_quadrature() {
        let m = 0.5;
        let (k, e) = complete_elliptic(m).unwrap();
        let kq = simpson(|t| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 2000);
        let eq = simpson(|t| (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 2000);
        assert!((k - kq).abs() < 1e-8 * kq, "{k} {kq}");
        assert!((e - eq).abs() < 1e-8 * eq, "{e} {eq}");
    }

    #[test]
    fn legendre_relation() {
        // E K' + E' K − K K' = π/2
        for &m in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let (k, e) = complete_elliptic(m).unwrap();
            let (k1, e1) = complete_elliptic(1.0 - m).unwrap();
            let lhs = e * k1 + e1 * k - k * k1;
            assert!((lhs - PI / 2.0).abs() < 1e-12, "m={m}: {lhs}");
        }
    }

    #[test]
    fn rejects_outside_domain() {
        assert!(matches!(complete_elliptic(-0.1), Err(Error::Domain(_))));
        assert!(matches!(complete_elliptic(1.5), Err(Error::Domain(_))));
        assert!(complete_elliptic(f64::NAN).is_err());
    }
}
