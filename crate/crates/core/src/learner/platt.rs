//! Sigmoid fit `P(y=1|f) = 1 / (1 + exp(A f + B))` by regularized maximum
//! likelihood (Platt's targets, Newton's method with backtracking after
//! Lin, Lin and Weng).

use serde::{Deserialize, Serialize};

/// Largest slope accepted; anything flatter is pinned here so the
/// probability stays strictly increasing in the decision value.
pub const MAX_SLOPE: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub a: f64,
    pub b: f64,
    /// Constant class-prior probability; decision values carried no signal.
    #[serde(default)]
    pub degenerate: bool,
}

impl Sigmoid {
    pub fn probability(&self, decision: f64) -> f64 {
        let f = self.a * decision + self.b;
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }

    /// Decision value mapped to probability 0.5.
    pub fn midpoint(&self) -> f64 {
        -self.b / self.a
    }
}

fn targets(labels: &[bool]) -> (Vec<f64>, f64, f64) {
    let pos = labels.iter().filter(|l| **l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let t = labels.iter().map(|&l| if l { hi } else { lo }).collect();
    (t, pos, neg)
}

fn objective(dec: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    dec.iter()
        .zip(t)
        .map(|(&f, &ti)| {
            let z = f * a + b;
            if z >= 0.0 {
                ti * z + (-z).exp().ln_1p()
            } else {
                (ti - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// `(p, 1 - p)` at `z = A f + B` without overflow.
fn probs(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = z.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

/// Fits the sigmoid. Returns the class prior as a constant when all decision
/// values coincide.
pub fn fit(dec: &[f64], labels: &[bool]) -> Sigmoid {
    let (t, pos, neg) = targets(labels);
    if dec.windows(2).all(|w| w[0] == w[1]) {
        return Sigmoid { a: 0.0, b: ((neg + 1.0) / (pos + 1.0)).ln(), degenerate: true };
    }
    let (a, b) = newton_ab(dec, &t, pos, neg);
    if a <= MAX_SLOPE {
        return Sigmoid { a, b, degenerate: false };
    }
    Sigmoid { a: MAX_SLOPE, b: newton_b(dec, &t, MAX_SLOPE, b), degenerate: false }
}

fn newton_ab(dec: &[f64], t: &[f64], pos: f64, neg: f64) -> (f64, f64) {
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    let mut a = 0.0;
    let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
    let mut fval = objective(dec, t, a, b);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(t) {
            let (p, q) = probs(f * a + b);
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(dec, t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    (a, b)
}

/// One-dimensional Newton on `B` with the slope held fixed.
fn newton_b(dec: &[f64], t: &[f64], a: f64, mut b: f64) -> f64 {
    let mut fval = objective(dec, t, a, b);
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 1e-12);
        for (&f, &ti) in dec.iter().zip(t) {
            let (p, q) = probs(f * a + b);
            g += ti - p;
            h += p * q;
        }
        if g.abs() < 1e-5 {
            break;
        }
        let db = -g / h;
        let mut step = 1.0;
        while step >= 1e-10 {
            let nb = b + step * db;
            let nf = objective(dec, t, a, nb);
            if nf < fval + 1e-4 * step * g * db {
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separated_scores_give_extreme_probabilities() {
        let dec: Vec<f64> =
            (0..50).map(|i| if i < 25 { -3.0 - i as f64 * 0.1 } else { 3.0 + i as f64 * 0.1 }).collect();
        let labels: Vec<bool> = (0..50).map(|i| i >= 25).collect();
        let s = fit(&dec, &labels);
        assert!(s.a < 0.0);
        assert!(s.probability(8.0) > 0.95);
        assert!(s.probability(-8.0) < 0.05);
        let mut prev = 0.0;
        for k in -100..=100 {
            let p = s.probability(k as f64 * 0.1);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn midpoint_has_probability_half() {
        let s = Sigmoid { a: -2.0, b: 0.7, degenerate: false };
        assert!((s.probability(s.midpoint()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_scores_fall_back_to_prior() {
        let labels = [true, false, false, false];
        let s = fit(&[0.3; 4], &labels);
        assert!(s.degenerate);
        // regularized prior (1 + 1) / (4 + 2)
        assert!((s.probability(123.0) - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn anti_correlated_scores_keep_a_negative_slope() {
        let dec: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let labels: Vec<bool> = (0..40).map(|i| i < 10).collect();
        let s = fit(&dec, &labels);
        assert_eq!(s.a, MAX_SLOPE);
        assert!(s.probability(1.0) < s.probability(2.0));
    }

    #[test]
    fn random_labels_concentrate_near_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dec: Vec<f64> = (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<bool> = (0..1000).map(|_| rng.gen_bool(0.2)).collect();
        let prior = labels.iter().filter(|l| **l).count() as f64 / 1000.0;
        let s = fit(&dec, &labels);
        let mean: f64 = dec.iter().map(|d| s.probability(*d)).sum::<f64>() / 1000.0;
        assert!((mean - prior).abs() < 0.01, "mean {mean} prior {prior}");
        assert!(dec.iter().all(|d| (s.probability(*d) - prior).abs() < 0.1));
    }
}
