//! Synthetic dataset generation and CSV round trip.

use gmk::data::{generate, load_dataset, save_dataset, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec { num_identities: 10, dim: 16, seed: 7, ..SyntheticSpec::default() };
    let data = generate(&spec)?;
    let dir = std::env::temp_dir().join("gmk-dataset-example");
    save_dataset(&dir, &data)?;
    let back = load_dataset(&dir)?;
    println!(
        "{}: {} enrolled, {} genuine, {} impostors, d={}",
        dir.display(),
        back.enrolled.len(),
        back.genuine.len(),
        back.impostors.len(),
        back.enrolled.dim()
    );
    println!("round trip exact: {}", back == data);
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        println!("  {} ({} bytes)", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }
    Ok(())
}
