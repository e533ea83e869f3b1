//! Sparse Bernoulli selection.
//!
//! Picking each of `n` positions independently with probability `p` is done
//! by drawing geometric gaps between selected positions, so the cost scales
//! with the number of selections instead of `n`.

use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bernoulli {
    p: f64,
    ln_q: f64,
}

impl Bernoulli {
    pub(crate) fn new(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            p,
            ln_q: (1.0 - p).ln(),
        }
    }

    /// Failures before the next success.
    #[inline]
    pub(crate) fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.p >= 1.0 {
            0
        } else if self.p <= 0.0 {
            usize::MAX
        } else {
            let u = 1.0 - rng.gen::<f64>();
            (u.ln() / self.ln_q) as usize
        }
    }

    /// Calls `f` for every selected index in `0..n`, ascending.
    #[inline]
    pub(crate) fn for_each<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, mut f: impl FnMut(usize)) {
        if self.p <= 0.0 {
            return;
        }
        let mut i = self.gap(rng);
        while i < n {
            f(i);
            i = i.saturating_add(1).saturating_add(self.gap(rng));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn selection_frequency_matches_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [0.01, 0.2, 0.5, 0.93] {
            let b = Bernoulli::new(p);
            let n = 64;
            let mut counts = vec![0u32; n];
            let reps = 40_000;
            for _ in 0..reps {
                b.for_each(n, &mut rng, |i| counts[i] += 1);
            }
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            for &c in &counts {
                let f = c as f64 / reps as f64;
                assert!((f - p).abs() < 5.0 * se + 1e-9, "p={p} f={f}");
            }
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut hits = Vec::new();
        Bernoulli::new(1.0).for_each(5, &mut rng, |i| hits.push(i));
        assert_eq!(hits, vec![0, 1, 2, 3, 4]);
        hits.clear();
        Bernoulli::new(0.0).for_each(5, &mut rng, |i| hits.push(i));
        assert!(hits.is_empty());
    }
}
