//! Finite-level fat Cantor sets and Salem singular staircases.

use crate::error::{domain, Result};

/// Level-`k` approximation `E_k ⊂ [0,1]` of a fat Cantor set of measure `m`.
///
/// Stage `n` removes an open middle gap of length `(1−m)·2^{1−2n}` from each of
/// the `2^{n−1}` surviving intervals, so `|E_k| = m + (1−m)·2^{−k}` and the
/// sets decrease to a Cantor set of measure `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FatCantor {
    pub measure: f64,
    pub levels: u32,
    /// Closed intervals of `E_k` in increasing order.
    pub intervals: Vec<(f64, f64)>,
}

impl FatCantor {
    pub fn new(measure: f64, levels: u32) -> Result<Self> {
        if !(measure > 0.0 && measure < 1.0) {
            return domain(format!("cantor measure fraction must lie in (0,1), got {measure}"));
        }
        if levels == 0 || levels > 24 {
            return domain(format!("cantor levels must lie in 1..=24, got {levels}"));
        }
        let mut intervals = vec![(0.0, 1.0)];
        for n in 1..=levels {
            let gap = (1.0 - measure) * 2f64.powi(1 - 2 * n as i32);
            let mut next = Vec::with_capacity(2 * intervals.len());
            for &(a, b) in &intervals {
                let mid = 0.5 * (a + b);
                next.push((a, mid - 0.5 * gap));
                next.push((mid + 0.5 * gap, b));
            }
            intervals = next;
        }
        Ok(Self { measure, levels, intervals })
    }

    /// Lebesgue measure of `E_k`.
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Closed-form value `m + (1−m)·2^{−k}`.
    pub fn expected_length(&self) -> f64 {
        self.measure + (1.0 - self.measure) * 2f64.powi(-(self.levels as i32))
    }

    /// The gaps of `E_k` inside `[0,1]`, in increasing order.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    /// Index of the interval containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|&(_, b)| b < x);
        (i < self.intervals.len() && self.intervals[i].0 <= x).then_some(i)
    }

    /// `|E_k ∩ [0, x]|`.
    pub fn measure_below(&self, x: f64) -> f64 {
        let i = self.intervals.partition_point(|&(_, b)| b <= x);
        let full: f64 = self.intervals[..i].iter().map(|(a, b)| b - a).sum();
        match self.intervals.get(i) {
            Some(&(a, _)) if a < x => full + (x - a),
            _ => full,
        }
    }
}

/// Salem's singular function with parameter `p ∈ (0,1)`, `p ≠ 1/2`: strictly
/// increasing and continuous on `[0,1]` with derivative zero almost everywhere.
/// At `p = 1/2` it is the identity.
pub fn salem(p: f64, t: f64) -> f64 {
    let mut x = t.clamp(0.0, 1.0);
    if x >= 1.0 {
        return 1.0;
    }
    let mut lo = 0.0;
    let mut scale = 1.0;
    for _ in 0..60 {
        x *= 2.0;
        if x >= 1.0 {
            lo += scale * p;
            scale *= 1.0 - p;
            x -= 1.0;
        } else {
            scale *= p;
        }
        if scale < 1e-18 {
            break;
        }
    }
    lo + scale * x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fat_cantor_measure_matches_closed_form() {
        for &(m, k) in &[(0.5, 1u32), (0.5, 10), (0.25, 6), (0.9, 12)] {
            let e = FatCantor::new(m, k).unwrap();
            assert_eq!(e.intervals.len(), 1 << k);
            assert!((e.total_length() - e.expected_length()).abs() < 1e-12);
            for w in e.intervals.windows(2) {
                assert!(w[0].1 < w[1].0);
            }
        }
    }

    #[test]
    fn fat_cantor_levels_are_nested() {
        let a = FatCantor::new(0.5, 4).unwrap();
        let b = FatCantor::new(0.5, 5).unwrap();
        for &(x, y) in &b.intervals {
            let i = a.locate(0.5 * (x + y)).unwrap();
            assert!(a.intervals[i].0 <= x + 1e-15 && y <= a.intervals[i].1 + 1e-15);
        }
    }

    #[test]
    fn measure_below_is_consistent() {
        let e = FatCantor::new(0.5, 6).unwrap();
        assert!((e.measure_below(1.0) - e.total_length()).abs() < 1e-12);
        assert_eq!(e.measure_below(0.0), 0.0);
        let g = e.gaps()[0];
        assert!((e.measure_below(g.1) - e.measure_below(g.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_cantor_parameters() {
        assert!(FatCantor::new(0.0, 3).is_err());
        assert!(FatCantor::new(1.0, 3).is_err());
        assert!(FatCantor::new(0.5, 0).is_err());
    }

    #[test]
    fn salem_is_monotone_with_fixed_endpoints() {
        assert_eq!(salem(0.3, 0.0), 0.0);
        assert_eq!(salem(0.3, 1.0), 1.0);
        assert!((salem(0.3, 0.5) - 0.3).abs() < 1e-15);
        assert!((salem(0.5, 0.123) - 0.123).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..=4096 {
            let v = salem(0.3, i as f64 / 4096.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn salem_difference_quotients_vanish_at_random_points() {
        // a.e. derivative is zero: at dyadic scale 2^-30 the typical slope is (2·sqrt(p(1-p)))^30.
        let x = 0.377_123_456;
        let h = 2f64.powi(-30);
        let q = (salem(0.3, x + h) - salem(0.3, x)) / h;
        assert!(q < 0.1, "slope {q}");
    }
}
