//! Generate a small synthetic demo corpus and seed set.
//!
//! Usage: cargo run --example make_fixture -- <dir> [clusters] [seed]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use k2qgen::fixture::{build, write_questions_jsonl, write_seed_tsv, FixtureConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo".into()));
    let clusters: usize = args
        .next()
        .map(|s| s.parse().expect("clusters must be a number"))
        .unwrap_or(200);
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be a number"))
        .unwrap_or(7);

    let cfg = FixtureConfig {
        clusters,
        seed,
        ..FixtureConfig::default()
    };
    let fixture = build(&cfg).expect("fixture generation");
    std::fs::create_dir_all(&dir).expect("create output dir");

    let q_path = dir.join("questions.jsonl");
    let s_path = dir.join("seed.tsv");
    write_questions_jsonl(
        &fixture,
        BufWriter::new(File::create(&q_path).expect("create questions file")),
    )
    .expect("write questions");
    write_seed_tsv(
        &fixture,
        BufWriter::new(File::create(&s_path).expect("create seed file")),
    )
    .expect("write seed pairs");

    eprintln!(
        "wrote {} questions in {} clusters to {} and {} seed pairs to {}",
        fixture.corpus.len(),
        clusters,
        q_path.display(),
        fixture.seed_pairs.len(),
        s_path.display()
    );
}
