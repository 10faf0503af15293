//! Real dilogarithm.

use core::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("li2 is evaluated on [-1, 1], got {0}")]
    Dilog(f64),
}

const PI2_6: f64 = PI * PI / 6.0;

fn li2_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = 0.0f64;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        sum += term / (k * k);
        k += 1.0;
        term *= x;
        if k > 200.0 {
            break;
        }
    }
    sum
}

/// `Li₂(x) = Σ_{k≥1} xᵏ/k²` for `-1 ≤ x ≤ 1`.
pub fn li2(x: f64) -> Result<f64, DomainError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(DomainError::Dilog(x));
    }
    Ok(if x == 1.0 {
        PI2_6
    } else if x == 0.0 {
        0.0
    } else if x.abs() <= 0.5 {
        li2_series(x)
    } else if x > 0.5 {
        PI2_6 - libm::log(x) * libm::log1p(-x) - li2_series(1.0 - x)
    } else {
        let l = libm::log1p(-x);
        -li2_series(x / (x - 1.0)) - 0.5 * l * l
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let ln2 = core::f64::consts::LN_2;
        let cases = [
            (1.0, PI * PI / 6.0),
            (-1.0, -PI * PI / 12.0),
            (0.5, PI * PI / 12.0 - 0.5 * ln2 * ln2),
            (0.0, 0.0),
        ];
        for (x, want) in cases {
            assert!((li2(x).unwrap() - want).abs() < 1e-15, "Li2({x})");
        }
        // Li2 at the inverse golden ratio
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let want = PI * PI / 10.0 - libm::log(golden).powi(2);
        assert!((li2(golden).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn continuity_across_branches() {
        for x in [0.5, -0.5] {
            let a = li2(x - 1e-12).unwrap();
            let b = li2(x + 1e-12).unwrap();
            assert!((a - b).abs() < 1e-10, "jump at {x}");
        }
    }

    #[test]
    fn reflection_matches_slow_series() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.5..1.0);
            let mut slow = 0.0;
            let mut p = 1.0;
            for k in 1..=1_000_000u32 {
                p *= x;
                let k = f64::from(k);
                slow += p / (k * k);
            }
            assert!((slow - li2(x).unwrap()).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn rejects_outside_real_domain() {
        assert!(li2(1.0 + 1e-9).is_err());
        assert!(li2(-1.5).is_err());
        assert!(li2(f64::NAN).is_err());
    }
}
