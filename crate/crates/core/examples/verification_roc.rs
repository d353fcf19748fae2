//! Group membership verification: ROC over the integer threshold.

use gmk::data::{generate, SyntheticSpec};
use gmk::eval::{pfn_at_pfp, verification_sweep, QuerySet, TARGET_PFP};
use gmk::learning::train;
use gmk::types::ModelConfig;

fn main() -> gmk::Result<()> {
    let data = generate(&SyntheticSpec { num_identities: 64, noise_sigma: 0.05, seed: 3, ..SyntheticSpec::default() })?;
    let model = train(
        &data.enrolled,
        &ModelConfig { code_len: 32, sparsity: 8, groups: 16, seed: 3, ..ModelConfig::default() },
    )?;
    let queries = QuerySet::from_dataset(&data, &model)?;
    let roc = verification_sweep(&model, &queries, 3)?;
    println!("tau   pfp     pfn");
    for p in roc.points() {
        println!("{:>3}  {:.3}  {:.3}", p.tau, p.pfp, p.pfn);
    }
    let op = roc.operating_point(TARGET_PFP);
    println!("P_fn at P_fp <= {TARGET_PFP}: {:.3} (tau {})", pfn_at_pfp(&roc, TARGET_PFP), op.tau);
    Ok(())
}
