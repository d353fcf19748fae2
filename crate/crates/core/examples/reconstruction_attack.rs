//! Reconstruction of enrolled signatures and queries from their codes.

use gmk::data::{generate, SyntheticSpec};
use gmk::eval::{security_report, QuerySet};
use gmk::learning::train;
use gmk::types::ModelConfig;

fn main() -> gmk::Result<()> {
    let data = generate(&SyntheticSpec { num_identities: 64, seed: 5, ..SyntheticSpec::default() })?;
    println!("m   beta    mse_security  mse_privacy");
    for m in [1, 4, 8, 16] {
        let cfg = ModelConfig { code_len: 32, sparsity: 8, groups: 64 / m, seed: 5, ..ModelConfig::default() };
        let model = train(&data.enrolled, &cfg)?;
        let r = security_report(&data.enrolled, &QuerySet::from_dataset(&data, &model)?, &model)?;
        println!("{m:<3} {:.4}  {:.6}      {:.6}", r.beta, r.mse_security, r.mse_privacy);
    }
    Ok(())
}
