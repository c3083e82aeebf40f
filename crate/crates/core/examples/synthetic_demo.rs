//! Trains on synthetic faces, evaluates on a fresh noisy set and prints the
//! summary table plus one full classification.
//!
//!     cargo run --release -p eigenexpr --example synthetic_demo [sigma]

use eigenexpr::synth::SyntheticDataset;
use eigenexpr::{classify, evaluate_samples, render, train_images, SplitMode};

fn main() -> eigenexpr::Result<()> {
    let sigma = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let train = SyntheticDataset::new(sigma, 1).generate(10)?;
    let test = SyntheticDataset::new(sigma, 2).generate(10)?;
    let model = train_images(&train)?;

    let first = &test[0];
    println!(
        "{}",
        render::classification(&classify(&first.image, &first.crops, &model)?)
    );
    println!("{}", evaluate_samples(&model, &test, SplitMode::Disjoint).render());
    Ok(())
}
