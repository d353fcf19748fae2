//! Open-set identification and DIR for several group sizes.

use gmk::data::{generate, SyntheticSpec};
use gmk::eval::{identification_report, QuerySet, TARGET_PFP};
use gmk::learning::train;
use gmk::types::ModelConfig;

fn main() -> gmk::Result<()> {
    let data = generate(&SyntheticSpec { num_identities: 64, noise_sigma: 0.05, seed: 4, ..SyntheticSpec::default() })?;
    println!("m   tau  pfp    pfn    p_eps  DIR");
    for m in [2, 8, 32] {
        let cfg = ModelConfig { code_len: 32, sparsity: 8, groups: 64 / m, seed: 4, ..ModelConfig::default() };
        let model = train(&data.enrolled, &cfg)?;
        let r = identification_report(&model, &QuerySet::from_dataset(&data, &model)?, TARGET_PFP)?;
        println!(
            "{m:<3} {:>3}  {:.3}  {:.3}  {:.3}  {:.3}",
            r.tau, r.pfp, r.pfn, r.p_epsilon, r.dir
        );
    }
    Ok(())
}
