//! Ranks metadata features by gain ratio on a synthetic corpus.

use patchleak::features::infogain::rank_features;
use patchleak::synthgen::{generate, SynthConfig};

fn main() {
    let corpus = generate(&SynthConfig { days: 120, ..SynthConfig::default() }).unwrap();
    println!("{} patches, {} security", corpus.patches().len(), corpus.security_count());
    for s in rank_features(&corpus) {
        let t = s.threshold.map(|t| format!("split at {t:.1}")).unwrap_or_default();
        println!("{:14} gain {:.5}  gain ratio {:.5}  {t}", s.feature.name(), s.gain, s.gain_ratio);
    }
}
