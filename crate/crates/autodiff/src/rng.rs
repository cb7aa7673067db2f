//! Deterministic per-stage random streams fanned out from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Independent stream keyed by (master seed, stream label).
pub fn stream(master_seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed.wrapping_mul(0x9e3779b97f4a7c15) ^ fnv1a(label))
}

/// Stream additionally keyed by an index (sample number, run number).
pub fn indexed_stream(master_seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        master_seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(index.wrapping_mul(0xd1342543de82ef95))
            ^ fnv1a(label),
    )
}

/// Standard normal draw via Box-Muller.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
