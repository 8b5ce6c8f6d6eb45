//! Compares analytic gradients with central finite differences for every
//! network in the system.

use flatparse::models::{NetId, ERROR_NET_HIDDEN};
use flatparse::neural::{gradient_check, init_network, GradientSample};

fn main() -> flatparse::Result<()> {
    for (i, id) in NetId::ALL.into_iter().enumerate() {
        let hidden = match id {
            NetId::WordError | NetId::PhraseError => ERROR_NET_HIDDEN,
            _ => 14,
        };
        let spec = id.spec(hidden);
        let net = init_network(spec, i as u64)?;
        let ramp = |n: usize| (0..n).map(|k| (k % 7) as f64 / 7.0).collect::<Vec<_>>();
        let sample = GradientSample {
            input: ramp(spec.n_input),
            context: ramp(spec.n_context()),
            target: ramp(spec.n_output),
        };
        let err = gradient_check(&net, &sample, 1e-5)?;
        println!("{:<14} {:>3} weights  max relative error {err:.2e}", id.name(), spec.weight_count());
    }
    Ok(())
}
