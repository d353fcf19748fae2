//! Alternating optimisation on synthetic data, compared with random grouping.

use gmk::data::{generate, SyntheticSpec};
use gmk::learning::{train, train_random_assignment_baseline};
use gmk::types::ModelConfig;

fn main() -> gmk::Result<()> {
    let data = generate(&SyntheticSpec { num_identities: 64, seed: 2, ..SyntheticSpec::default() })?;
    let cfg = ModelConfig { code_len: 32, sparsity: 8, groups: 8, seed: 2, ..ModelConfig::default() };

    let model = train(&data.enrolled, &cfg)?;
    println!("iter  embedding   within  between  total      reassigned");
    for (i, (o, r)) in model.objective_trace.iter().zip(&model.reassigned_trace).enumerate() {
        println!(
            "{:>4}  {:>9.3}  {:>7}  {:>7}  {:>9.3}  {r}",
            i + 1,
            o.embedding_cost,
            o.within_trace,
            o.between_trace,
            o.total
        );
    }
    println!("group sizes: {:?}", model.assignment.sizes());

    let baseline = train_random_assignment_baseline(&data.enrolled, &cfg, 8)?;
    let last = |m: &gmk::learning::Model| m.objective_trace.last().map(|o| o.total).unwrap_or(f64::NAN);
    println!("final objective: learned {:.3}, random assignment {:.3}", last(&model), last(&baseline));
    Ok(())
}
