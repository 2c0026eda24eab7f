//! Closed interval arithmetic with outward rounding by one ulp per
//! operation. Pessimistic but sound for the small Krawczyk systems this
//! crate solves (n <= 4 unknowns).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn from_mid_rad(mid: f64, rad: f64) -> Self {
        debug_assert!(rad >= 0.0);
        Interval {
            lo: (mid - rad).next_down(),
            hi: (mid + rad).next_up(),
        }
    }

    pub fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    /// max |x| over the interval.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Strict inclusion in the interior of `outer`.
    pub fn inside_interior(self, outer: Interval) -> bool {
        outer.lo < self.lo && self.hi < outer.hi
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn add(self, other: Interval) -> Interval {
        Interval {
            lo: (self.lo + other.lo).next_down(),
            hi: (self.hi + other.hi).next_up(),
        }
    }

    pub fn sub(self, other: Interval) -> Interval {
        Interval {
            lo: (self.lo - other.hi).next_down(),
            hi: (self.hi - other.lo).next_up(),
        }
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(self, other: Interval) -> Interval {
        let cands = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in cands {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn scale(self, s: f64) -> Interval {
        let (a, b) = (self.lo * s, self.hi * s);
        if s >= 0.0 {
            Interval {
                lo: a.next_down(),
                hi: b.next_up(),
            }
        } else {
            Interval {
                lo: b.next_down(),
                hi: a.next_up(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_encloses() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let s = a.add(b);
        assert!(s.lo <= -2.0 && s.hi >= 2.5);
        let p = a.mul(b);
        assert!(p.lo <= -6.0 && p.hi >= 1.0);
        let d = a.sub(b);
        assert!(d.lo <= 0.5 && d.hi >= 5.0);
    }

    #[test]
    fn outward_rounding() {
        let x = Interval::point(0.1);
        let y = Interval::point(0.2);
        let s = x.add(y);
        assert!(s.lo < 0.1 + 0.2 && 0.1 + 0.2 < s.hi);
        assert!(s.contains(0.3));
    }

    #[test]
    fn containment_helpers() {
        let outer = Interval::new(-1.0, 1.0);
        assert!(Interval::new(-0.5, 0.5).inside_interior(outer));
        assert!(!Interval::new(-1.0, 0.5).inside_interior(outer));
        assert!(Interval::new(-0.1, 0.2).contains_zero());
        assert_eq!(
            Interval::new(0.0, 2.0).intersect(Interval::new(1.0, 3.0)),
            Some(Interval::new(1.0, 2.0))
        );
        assert_eq!(Interval::new(0.0, 1.0).intersect(Interval::new(2.0, 3.0)), None);
    }
}
