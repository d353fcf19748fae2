//! Sparse ternary embedding of a signature and the distance/correlation identity.

use gmk::ternary::{correlation, embed, squared_distance, ternarize};
use gmk::types::ProjectionMatrix;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> gmk::Result<()> {
    let code = ternarize(&[0.3, -0.9, 0.0, 0.5, -0.1], 2)?;
    println!("T_2([0.3, -0.9, 0, 0.5, -0.1]) = {:?}", code.symbols());

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let w = ProjectionMatrix::random(8, 6, &mut rng)?;
    let x = DVector::from_vec(vec![1.0, 0.5, -0.2, 0.0, 0.3, -0.7, 0.1, 0.4]).normalize();
    let y = DVector::from_vec(vec![-0.2, 0.9, 0.4, -0.6, 0.1, 0.3, -0.5, 0.2]).normalize();
    let p = embed(&w, &x, 2)?;
    let q = embed(&w, &y, 2)?;
    let (c, d) = (correlation(&p, &q)?, squared_distance(&p, &q)?);
    println!("p = {:?}\nq = {:?}", p.symbols(), q.symbols());
    // with S nonzeros each: d = 2S - 2c
    println!("correlation {c}, squared distance {d} (2S - 2c = {})", 4 - 2 * c);
    Ok(())
}
