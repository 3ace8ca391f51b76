//! Deterministic fixtures shared by the benchmarks.

use lig_core::{InfluenceGame, JointActionDataset};

/// Ring of players each pulled toward both neighbours with unit weight.
pub fn ring_game(n: usize) -> InfluenceGame {
    let mut g = InfluenceGame::zeros(n);
    for i in 0..n {
        for j in [(i + 1) % n, (i + n - 1) % n] {
            if j != i {
                g.set_weight(i, j, 1.0).unwrap();
            }
        }
    }
    g
}

/// `m` joint actions from a fixed integer hash, so every run sees the same data.
pub fn hashed_dataset(n: usize, m: usize, salt: u64) -> JointActionDataset {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let samples = (0..m as u64)
        .map(|l| {
            let mut z = l.wrapping_add(salt).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            (z ^ (z >> 31)) & mask
        })
        .collect();
    JointActionDataset::from_indices(n, samples).unwrap()
}
