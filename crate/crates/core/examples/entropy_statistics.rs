// Compare first-pass entropy between correct and incorrect answers.

use entropy_rag::stats::compare_groups;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let correct: Vec<f64> = Normal::new(1.7, 0.9).unwrap().sample_iter(&mut rng).take(250).collect();
    let incorrect: Vec<f64> = Normal::new(2.2, 0.9).unwrap().sample_iter(&mut rng).take(250).collect();

    let s = compare_groups(&correct, &incorrect).expect("two groups of at least 2");
    println!("mean entropy correct {:.3}, incorrect {:.3}", s.mean_correct, s.mean_incorrect);
    println!("Welch t = {:.3} on {:.1} df, p = {:.2e}", s.t_statistic, s.degrees_of_freedom, s.p_value);
    println!("Cohen's d = {:.3}, 95% CI for the gap ({:.3}, {:.3})", s.cohens_d, s.ci95.0, s.ci95.1);
}
