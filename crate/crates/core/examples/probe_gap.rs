//! Logistic probe accuracies on the planted task for several lambda values.
use mufasa::data::{fit_probe, generate, DatasetSpec, ProbeInput};

fn main() {
    for lambda in [0.0, 0.5, 1.0] {
        let ds = generate(&DatasetSpec { lambda, num_examples: 5000, ..Default::default() }).unwrap();
        let mut line = format!("lambda {lambda:.1}:");
        for which in [ProbeInput::Categorical, ProbeInput::Continuous, ProbeInput::Notes, ProbeInput::Joint] {
            let r = fit_probe(&ds, which, 0);
            line += &format!("  {which:?} {:.3}/{:.3}", r.train_accuracy, r.validation_accuracy);
        }
        println!("{line}");
    }
}
