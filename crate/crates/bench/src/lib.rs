//! Shared fixtures for the benchmarks.

use iacn_core::{generate, EventLog, Matrix, RandomSynth, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic log at the default desk scale, time-normalised.
pub fn desk_log(events: usize, seed: u64) -> EventLog {
    let spec = RandomSynth {
        events,
        ..RandomSynth::default()
    };
    let (log, _) =
        generate(&SynthConfig::random(&spec, seed).expect("valid synth config")).expect("generate");
    log.normalize_time().expect("normalise")
}

/// `rows` uniform random points in `cols` dimensions.
pub fn random_points(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
}
