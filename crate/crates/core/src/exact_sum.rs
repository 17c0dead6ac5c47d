//! Correctly rounded floating-point summation (Shewchuk's partials), so that
//! a sum does not depend on the order of its terms.

#[derive(Debug, Clone, Default)]
pub(crate) struct ExactSum {
    /// Nonoverlapping partials in increasing magnitude; their exact sum is
    /// the exact sum of everything added so far.
    partials: Vec<f64>,
}

impl ExactSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Adds a finite term.
    pub(crate) fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Adds `k * x` without rounding the product.
    pub(crate) fn add_product(&mut self, k: u64, x: f64) {
        let k = k as f64;
        let p = k * x;
        self.add(p);
        self.add(k.mul_add(x, -p));
    }

    /// The exact sum rounded to nearest, ties to even.
    pub(crate) fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(&top) = p.last() else {
            return 0.0;
        };
        let mut n = p.len() - 1;
        let (mut hi, mut lo) = (top, 0.0);
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // half-way case: the remaining partials decide the rounding direction
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}
