//! Fixtures shared by the criterion benchmarks in `benches/`.

use odm_core::experiment::{build_cipher_task, CipherSpec, CipherTask};
use odm_core::LinearClassifier;

/// Cipher task with `chars` training symbols at the default noise level.
pub fn cipher_fixture(chars: usize) -> CipherTask {
    let spec = CipherSpec { train_chars: chars, test_chars: 1_000, ood_chars: 5_000, ..CipherSpec::default() };
    build_cipher_task(&spec).expect("fixture spec is valid")
}

/// A model with small deterministic weights, away from the uniform start.
pub fn perturbed_model(task: &CipherTask) -> LinearClassifier {
    let (c, d) = (task.spec.classes(), task.spec.dim);
    let w = (0..c * d).map(|i| 0.1 * ((i * 7919 % 101) as f64 / 101.0 - 0.5)).collect();
    LinearClassifier::from_weights(c, d, 10.0, w).expect("shape matches")
}
