//! Finite-horizon value iteration for the certain, unbounded diagnostic agent.
//!
//! With a static state and symmetric accuracy `a`, every reachable belief from a start
//! belief `b` is fixed by the net count `k` of positive minus negative results:
//! `P(diseased) = b r^k / (b r^k + 1 - b)` with `r = a / (1 - a)`.

pub struct ClassicalDiag {
    pub accuracy: f64,
    pub monitor_cost: f64,
    pub correct: f64,
    pub incorrect: f64,
    pub discount: f64,
    pub horizon: usize,
}

impl ClassicalDiag {
    fn declare_value(&self, p: f64) -> f64 {
        let diseased = p * self.correct + (1.0 - p) * self.incorrect;
        let healthy = p * self.incorrect + (1.0 - p) * self.correct;
        diseased.max(healthy)
    }

    /// Optimal value at a start belief with `p = P(diseased)`. At the horizon the
    /// agent must declare.
    pub fn value(&self, p: f64) -> f64 {
        let h = self.horizon as i64;
        let r = self.accuracy / (1.0 - self.accuracy);
        let belief = |k: i64| {
            let num = p * r.powi(k as i32);
            let den = num + (1.0 - p);
            if den == 0.0 { p } else { num / den }
        };
        let index = |k: i64| (k + h) as usize;
        let mut v: Vec<f64> = (-h..=h).map(|k| self.declare_value(belief(k))).collect();
        for steps_left in 1..=h {
            let mut next = v.clone();
            for k in -(h - steps_left)..=(h - steps_left) {
                let q = belief(k);
                let p_pos = q * self.accuracy + (1.0 - q) * (1.0 - self.accuracy);
                let cont = p_pos * v[index(k + 1)] + (1.0 - p_pos) * v[index(k - 1)];
                let monitor = self.monitor_cost + self.discount * cont;
                next[index(k)] = monitor.max(self.declare_value(q));
            }
            v = next;
        }
        v[index(0)]
    }
}

impl Default for ClassicalDiag {
    fn default() -> Self {
        Self {
            accuracy: 0.7,
            monitor_cost: -1.0,
            correct: 10.0,
            incorrect: -36.0,
            discount: 0.95,
            horizon: 200,
        }
    }
}
