//! Fixed inputs shared by the benchmarks.

use metapool_core::statkit::derive_stream;
use metapool_core::{preset_variant, simulate_meta_dataset, MetaDataset, PresetVariant};

/// One simulated meta-analysis from a benchmark setting, seeded by `(setting, m)`.
pub fn fixture(setting: u32, m: usize) -> MetaDataset {
    let settings = preset_variant(setting, PresetVariant::Reported).expect("valid setting");
    let mut rng = derive_stream(2024, &[setting as u64, m as u64]);
    simulate_meta_dataset(&settings, m, &mut rng).expect("simulation").0
}
