//! Seeded random instance generation and oracle cross-checking — the same
//! scheme the acceptance suite runs at larger scale.
//!
//! Every analysis in this crate has an independent brute-force oracle that
//! explores runs within explicit bounds and reports whether it was
//! truncated. On instances where the oracle is conclusive, analysis and
//! oracle must agree exactly; truncated instances only yield one-sided
//! checks and are skipped here.
//!
//! Run with: `cargo run --example random_crosscheck`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqcp::bruteforce::{eager_reach_bruteforce, Bounds};
use rqcp::eager::eager_state_reach;
use rqcp::gen::random_nonconverging_rqcp;

fn main() {
    let bounds = Bounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut conclusive = 0usize;
    let mut truncated = 0usize;
    let mut vectors_checked = 0usize;
    for _ in 0..40 {
        let sys = random_nonconverging_rqcp(&mut rng);
        let oracle = eager_reach_bruteforce(&sys, &bounds);
        if oracle.truncated {
            // One-sided: whatever the oracle saw must be reachable.
            for vector in oracle.control_vectors() {
                assert_eq!(eager_state_reach(&sys, &vector), Ok(true));
                vectors_checked += 1;
            }
            truncated += 1;
            continue;
        }
        // Conclusive: exact agreement on every control vector.
        let reachable = oracle.control_vectors();
        let all: Vec<Vec<_>> = cartesian(&sys);
        for vector in all {
            let expected = reachable.contains(&vector);
            assert_eq!(eager_state_reach(&sys, &vector), Ok(expected));
            vectors_checked += 1;
        }
        conclusive += 1;
    }
    println!(
        "40 random non-converging systems: {conclusive} conclusive, {truncated} truncated, \
         {vectors_checked} control vectors cross-checked, 0 disagreements"
    );
}

/// All control vectors of the system.
fn cartesian(sys: &rqcp::model::Rqcp) -> Vec<Vec<rqcp::model::StateId>> {
    let mut out = vec![Vec::new()];
    for pd in &sys.pushdowns {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..pd.state_count()).map(move |z| {
                    let mut v = prefix.clone();
                    v.push(rqcp::model::StateId(z));
                    v
                })
            })
            .collect();
    }
    out
}
