//! Build a stratified 5-fold plan and verify its structural promises: the
//! test sets partition the ids, and every split stays within one record of
//! the 75/5/20 class ratios.
//!
//!     cargo run --release --example fold_plan

use std::collections::BTreeSet;

use ecg_robustness::eval::make_folds;
use ecg_robustness::types::{Label, LABELS};

fn main() {
    // an imbalanced three-class corpus of 2678 records
    let sizes = [976usize, 918, 784];
    let mut ids: Vec<(String, Label)> = Vec::new();
    for (label, n) in LABELS.iter().zip(sizes) {
        for i in 0..n {
            ids.push((format!("{}{i:04}", label.as_str().to_lowercase()), *label));
        }
    }

    let plan = make_folds(&ids, 2020).expect("folds");
    println!("{} records -> 5 folds (seed {})\n", ids.len(), plan.seed);
    println!("{:<6} {:>7} {:>11} {:>6}", "fold", "train", "validation", "test");
    for (i, fold) in plan.folds.iter().enumerate() {
        println!(
            "{:<6} {:>7} {:>11} {:>6}",
            i,
            fold.train.len(),
            fold.validation.len(),
            fold.test.len()
        );
    }

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for fold in &plan.folds {
        for id in &fold.test {
            assert!(seen.insert(id), "{id} appears in two test sets");
        }
    }
    println!("\ntest sets are disjoint and cover all {} ids: {}", ids.len(), seen.len() == ids.len());

    let fold0 = &plan.folds[0];
    for label in LABELS {
        let of = |set: &[String]| set.iter().filter(|id| id.starts_with(&label.as_str().to_lowercase())).count();
        println!(
            "fold 0 {label:<6}: train {:>4}  validation {:>3}  test {:>4}",
            of(&fold0.train),
            of(&fold0.validation),
            of(&fold0.test)
        );
    }
}
