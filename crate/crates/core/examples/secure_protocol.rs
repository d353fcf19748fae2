//! Two-party membership test over encrypted codes.

use gmk::learning::CodeMatrix;
use gmk::protocol::{run_protocol_with_keys, ProtocolKeys, SecurityParams};
use gmk::ternary::{squared_distance, ternarize, TernaryCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_code(rng: &mut ChaCha20Rng) -> gmk::Result<TernaryCode> {
    let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ternarize(&v, 4)
}

fn main() -> gmk::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let params = SecurityParams::default();
    let keys = ProtocolKeys::generate(&params, &mut rng)?;
    let reps = CodeMatrix::new((0..4).map(|_| random_code(&mut rng)).collect::<gmk::Result<_>>()?)?;

    for (label, p) in [("member", reps.column(2).clone()), ("stranger", random_code(&mut rng)?)] {
        let dists: Vec<i64> = reps.columns().iter().map(|r| squared_distance(&p, r)).collect::<gmk::Result<_>>()?;
        let tau = 4;
        let run = run_protocol_with_keys(&p, &reps, tau, &keys, &params, &mut rng)?;
        println!("{label}: distances {dists:?}, tau {tau}, accept {}", run.decision.accept);
        for m in &run.transcript.messages {
            println!("  round {} from {:?}: {} payloads", m.round, m.sender, m.payloads.len());
        }
        println!("  values seen by the client: {:?}", run.revealed());
    }
    Ok(())
}
