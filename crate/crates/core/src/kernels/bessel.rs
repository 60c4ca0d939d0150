//! Bessel functions of orders 0 and 1 for real arguments.

/// Modified Bessel function `I₀`.
pub fn i0(x: f64) -> f64 {
    modified_series(x, 0)
}

/// Modified Bessel function `I₁`.
pub fn i1(x: f64) -> f64 {
    modified_series(x, 1)
}

/// `I₁(x)/x`, continuous at zero with value 1/2.
pub fn i1_over_x(x: f64) -> f64 {
    // Σ (x/2)^{2k} / (2 k! (k+1)!)
    let q = 0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k as f64 * (k + 1) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn modified_series(x: f64, order: u32) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k as f64 * (k + order as usize) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind `J₀`.
pub fn j0(x: f64) -> f64 {
    j01(x).0
}

/// Bessel function of the first kind `J₁`.
pub fn j1(x: f64) -> f64 {
    j01(x).1
}

/// `J₁(x)/x`, continuous at zero with value 1/2.
pub fn j1_over_x(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let q = 0.25 * x * x;
        let mut term = 0.5;
        let mut sum = term;
        for k in 1..60 {
            term *= -q / (k as f64 * (k + 1) as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        j1(x) / x
    }
}

fn j01(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    if ax < 1.0 {
        let q = -0.25 * ax * ax;
        let (mut t0, mut t1) = (1.0, 0.5 * ax);
        let (mut s0, mut s1) = (t0, t1);
        for k in 1..40 {
            let k = k as f64;
            t0 *= q / (k * k);
            t1 *= q / (k * (k + 1.0));
            s0 += t0;
            s1 += t1;
        }
        return (s0, sign * s1);
    }
    // Miller's backward recurrence normalised with J₀ + 2ΣJ₂ₖ = 1.
    let start = 2 * ((ax as usize + 40 + (10.0 * ax.sqrt()) as usize) / 2);
    let (mut next, mut cur) = (0.0, 1e-300);
    let (mut norm, mut first) = (0.0, 0.0);
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            first *= 1e-250;
        }
        let order = k - 1;
        if order == 1 {
            first = cur;
        } else if order >= 2 && order % 2 == 0 {
            norm += 2.0 * cur;
        }
    }
    norm += cur;
    (cur / norm, sign * first / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.special.
    const POINTS: [f64; 9] = [0.0, 0.5, 1.0, 2.5, 3.2, 7.3, 12.0, 17.7, 25.0];
    const I0: [f64; 9] = [
        1.0,
        1.0634833707413234,
        1.2660658777520082,
        3.289839144050123,
        5.747207187180551,
        222.65879987301187,
        18948.92534929631,
        4646169.649304992,
        5774560606.4663105,
    ];
    const I1: [f64; 9] = [
        0.0,
        0.25789430539089636,
        0.5651591039924851,
        2.5167162452886984,
        4.734253894709621,
        206.79167004622553,
        18141.348781638833,
        4512952.879101102,
        5657865129.878702,
    ];
    const J0: [f64; 9] = [
        1.0,
        0.938469807240813,
        0.7651976865579665,
        -0.04838377646819804,
        -0.32018816965712305,
        0.2882169476350144,
        0.04768931079683335,
        -0.06878039938213436,
        0.09626678327595801,
    ];
    const J1: [f64; 9] = [
        0.0,
        0.24226845767487387,
        0.44005058574493355,
        0.497094102464274,
        0.2613432487805047,
        0.08257043049325785,
        -0.2234471044906276,
        -0.17870961961843013,
        -0.1253502495802898,
    ];

    #[test]
    fn modified_match_reference() {
        for (k, &x) in POINTS.iter().enumerate() {
            assert!((i0(x) - I0[k]).abs() <= 1e-13 * I0[k].abs().max(1.0), "i0({x})");
            assert!((i1(x) - I1[k]).abs() <= 1e-13 * I1[k].abs().max(1.0), "i1({x})");
        }
    }

    #[test]
    fn regular_match_reference() {
        for (k, &x) in POINTS.iter().enumerate() {
            assert!((j0(x) - J0[k]).abs() <= 1e-12, "j0({x}) = {} vs {}", j0(x), J0[k]);
            assert!((j1(x) - J1[k]).abs() <= 1e-12, "j1({x}) = {} vs {}", j1(x), J1[k]);
        }
    }

    #[test]
    fn ratios_are_continuous() {
        assert_eq!(i1_over_x(0.0), 0.5);
        assert_eq!(j1_over_x(0.0), 0.5);
        for &x in &[1e-6, 0.3, 0.999, 1.0, 4.0] {
            assert!((i1_over_x(x) - i1(x) / x).abs() < 1e-13);
            assert!((j1_over_x(x) - j1(x) / x).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetry() {
        assert_eq!(j1(-2.5), -j1(2.5));
        assert_eq!(j0(-2.5), j0(2.5));
    }
}
