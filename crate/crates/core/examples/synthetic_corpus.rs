//! Generates a corpus with chosen leak strengths and writes it to disk.

use patchleak::corpus::load_corpus;
use patchleak::synthgen::{generate_to_dir, LeakStrengths, SynthConfig};

fn main() {
    let dir =
        std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("patchleak-corpus").display().to_string());
    let cfg = SynthConfig {
        seed: 3,
        days: 62,
        leaks: LeakStrengths { author: 0.8, ..LeakStrengths::none() },
        ..SynthConfig::default()
    };
    let corpus = generate_to_dir(&cfg, &dir).unwrap();
    assert_eq!(load_corpus(&dir).unwrap(), corpus);
    println!("{} patches, {} security, written to {dir}", corpus.patches().len(), corpus.security_count());
    for seg in corpus.timeline().segments() {
        println!("release segment {} .. {} ({} days)", seg.start, seg.end, seg.len_days());
    }
    let first = &corpus.patches()[0];
    println!("first patch: {} by {} touching {:?}", first.patch_id, first.author, first.files);
}
