//! The numeric pieces of the training loop on toy inputs.
//!
//!     cargo run --example training_math

use extractbench::training::{
    adapt_kl, batch_scale_rewards, gae_advantages, grpo_clip_loss, lora_apply, mask_labels, simulate_kl,
    warmup_lr, KlControllerState, LoraFactors, Trajectory, IGNORE_INDEX,
};
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = LoraFactors {
        base: array![[1.0, 0.0], [0.0, 1.0]],
        down: array![[0.1], [0.2]],
        up: array![[1.0, -1.0]],
        alpha: 32.0,
        rank: 1,
    };
    println!("adapted weight:\n{}", lora_apply(&f)?);

    for t in [0, 250, 500, 1000] {
        println!("lr at step {t}: {:e}", warmup_lr(t, 500, 1e-4));
    }

    println!("labels: {:?}", mask_labels(&[11, 12, 13, 14, 15], 3, IGNORE_INDEX)?);

    let traj = Trajectory::new(vec![0.0, 0.0, 1.0], vec![0.2, 0.4, 0.7, 0.0], 0.95);
    println!("advantages: {:?}", gae_advantages(&traj)?);

    let scaled = batch_scale_rewards(&[0.2, 0.5, 0.9, 0.4])?;
    println!("group-scaled rewards: {scaled:?}");
    println!("clipped loss: {:.4}", grpo_clip_loss(&[0.9, 1.3, 1.05, 0.7], &scaled, 0.2)?);

    let s = KlControllerState::default();
    println!("beta after D=1.0: {}", adapt_kl(s, 1.0).beta);
    println!("beta after D=4.0: {}", adapt_kl(s, 4.0).beta);
    let trace = simulate_kl(s, |beta| 2.5 * beta, 50);
    let last = trace.last().expect("at least one step");
    println!("D = 2.5 beta: in band after {} step(s) at beta {:.4}", last.step, last.beta);
    Ok(())
}
