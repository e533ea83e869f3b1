//! Fixtures shared by the benchmarks in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmprune::bn::builtin_toy;
use tmprune::tm::{LiteralVector, TmConfig, TmModel};
use tmprune::train::fit_epoch;

/// `n` toy-network samples as (features, target) pairs.
pub fn toy_samples(n: usize, seed: u64) -> (Vec<LiteralVector>, Vec<bool>) {
    let net = builtin_toy();
    let t = net.target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![false; net.len()];
    (0..n)
        .map(|_| {
            net.sample_into(&mut rng, &mut values);
            let bits: Vec<u8> = values.iter().enumerate().filter(|&(i, _)| i != t).map(|(_, &b)| u8::from(b)).collect();
            (LiteralVector::from_bits(&bits), values[t])
        })
        .unzip()
}

/// Model with the best toy configuration after a short warm-up, so clauses
/// carry realistic include sets.
pub fn warm_toy_model(clauses: usize) -> TmModel {
    let config = TmConfig {
        num_clauses: clauses,
        threshold: 17.33,
        specificity: 66.81,
        ta_state_bits: 6,
        weighted: true,
        ..TmConfig::default()
    };
    let mut model = TmModel::new(config, 8).expect("valid config");
    let (xs, ys) = toy_samples(2000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        fit_epoch(&mut model, &xs, &ys, None, &mut rng).expect("dimensions match");
    }
    model
}
