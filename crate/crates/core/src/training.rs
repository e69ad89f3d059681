//! Fine-tuning and policy-optimization formulas as pure functions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label value excluded from the loss.
pub const IGNORE_INDEX: i64 = -100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainingError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("batch needs at least 2 rewards, got {0}")]
    DegenerateBatch(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoraFactors {
    /// Frozen weights, `d × k`.
    pub base: Array2<f64>,
    /// `B`, `d × r`.
    pub down: Array2<f64>,
    /// `A`, `r × k`.
    pub up: Array2<f64>,
    pub alpha: f64,
    pub rank: usize,
}

/// `W₀ + (α / r) · B · A`.
pub fn lora_apply(f: &LoraFactors) -> Result<Array2<f64>, TrainingError> {
    let (d, k) = f.base.dim();
    if f.rank == 0 {
        return Err(TrainingError::ShapeMismatch("rank must be at least 1".into()));
    }
    if f.down.dim() != (d, f.rank) || f.up.dim() != (f.rank, k) {
        return Err(TrainingError::ShapeMismatch(format!(
            "base {d}x{k}, rank {}: got B {:?} and A {:?}",
            f.rank,
            f.down.dim(),
            f.up.dim()
        )));
    }
    let scale = f.alpha / f.rank as f64;
    Ok(&f.base + &(f.down.dot(&f.up) * scale))
}

/// Linear warmup to `eta_max` over `t_warmup` steps, then constant.
pub fn warmup_lr(t: u64, t_warmup: u64, eta_max: f64) -> f64 {
    if t_warmup == 0 || t >= t_warmup {
        eta_max
    } else {
        t as f64 / t_warmup as f64 * eta_max
    }
}

/// Positions before `assistant_start` become `ignore`; the rest keep their ids.
pub fn mask_labels(token_ids: &[i64], assistant_start: usize, ignore: i64) -> Result<Vec<i64>, TrainingError> {
    if assistant_start > token_ids.len() {
        return Err(TrainingError::IndexOutOfRange {
            index: assistant_start,
            len: token_ids.len(),
        });
    }
    Ok(token_ids
        .iter()
        .enumerate()
        .map(|(i, &t)| if i < assistant_start { ignore } else { t })
        .collect())
}

/// `m_model + m_gradients / √n + m_activations · L / n`.
pub fn checkpoint_memory_estimate(
    m_model: f64,
    m_gradients: f64,
    m_activations: f64,
    layers: usize,
    checkpoints: usize,
) -> Result<f64, TrainingError> {
    if layers == 0 || checkpoints == 0 {
        return Err(TrainingError::InvalidArgument("layers and checkpoints must be at least 1".into()));
    }
    let n = checkpoints as f64;
    Ok(m_model + m_gradients / n.sqrt() + m_activations * layers as f64 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rewards: Vec<f64>,
    /// `V(s_0) … V(s_T)`, including the bootstrap value.
    pub values: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

impl Trajectory {
    /// γ = 1, the single-episode default.
    pub fn new(rewards: Vec<f64>, values: Vec<f64>, lambda: f64) -> Self {
        Trajectory {
            rewards,
            values,
            gamma: 1.0,
            lambda,
        }
    }

    fn validate(&self) -> Result<(), TrainingError> {
        if self.values.len() != self.rewards.len() + 1 {
            return Err(TrainingError::LengthMismatch {
                left: self.values.len(),
                right: self.rewards.len() + 1,
            });
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(TrainingError::InvalidArgument(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `Â_t = δ_t + γλ Â_{t+1}` with `δ_t = r_t + γ V_{t+1} − V_t`.
pub fn gae_advantages(traj: &Trajectory) -> Result<Vec<f64>, TrainingError> {
    traj.validate()?;
    let decay = traj.gamma * traj.lambda;
    let mut out = vec![0.0; traj.rewards.len()];
    let mut running = 0.0;
    for t in (0..traj.rewards.len()).rev() {
        let delta = traj.rewards[t] + traj.gamma * traj.values[t + 1] - traj.values[t];
        running = delta + decay * running;
        out[t] = running;
    }
    Ok(out)
}

/// Mean of `min(r·Â, clip(r, 1−ε, 1+ε)·Â)`. This is the objective to
/// maximize; negate it for a descent loss.
pub fn grpo_clip_loss(ratios: &[f64], advantages: &[f64], epsilon: f64) -> Result<f64, TrainingError> {
    if ratios.len() != advantages.len() {
        return Err(TrainingError::LengthMismatch {
            left: ratios.len(),
            right: advantages.len(),
        });
    }
    if epsilon <= 0.0 {
        return Err(TrainingError::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    if ratios.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| (r * a).min(r.clamp(1.0 - epsilon, 1.0 + epsilon) * a))
        .sum();
    Ok(sum / ratios.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlControllerState {
    pub beta: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub up_factor: f64,
    pub down_factor: f64,
}

impl Default for KlControllerState {
    fn default() -> Self {
        KlControllerState::new(0.05)
    }
}

impl KlControllerState {
    pub fn new(beta: f64) -> Self {
        KlControllerState {
            beta,
            lower_bound: 1.5,
            upper_bound: 3.5,
            up_factor: 1.5,
            down_factor: 0.5,
        }
    }

    pub fn in_band(&self, observed: f64) -> bool {
        (self.lower_bound..=self.upper_bound).contains(&observed)
    }
}

/// β × up_factor below the band, β × down_factor above it.
pub fn adapt_kl(state: KlControllerState, observed_dkl: f64) -> KlControllerState {
    let beta = if observed_dkl < state.lower_bound {
        state.beta * state.up_factor
    } else if observed_dkl > state.upper_bound {
        state.beta * state.down_factor
    } else {
        state.beta
    };
    KlControllerState { beta, ..state }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlStep {
    pub step: usize,
    pub beta: f64,
    pub observed_dkl: f64,
    pub in_band: bool,
}

/// Runs the controller against a plant mapping β to observed KL, recording
/// each step until the observation lands in the band or `max_steps` pass.
pub fn simulate_kl(
    mut state: KlControllerState,
    plant: impl Fn(f64) -> f64,
    max_steps: usize,
) -> Vec<KlStep> {
    let mut trace = Vec::new();
    for step in 0..=max_steps {
        let observed_dkl = plant(state.beta);
        let in_band = state.in_band(observed_dkl);
        trace.push(KlStep {
            step,
            beta: state.beta,
            observed_dkl,
            in_band,
        });
        if in_band || step == max_steps {
            break;
        }
        state = adapt_kl(state, observed_dkl);
    }
    trace
}

/// `D = k / β`: observed KL falls as the penalty grows.
pub fn inverse_plant(k: f64) -> impl Fn(f64) -> f64 {
    move |beta| k / beta
}

/// `(r − mean) / max(std, 1e-8)` with the population standard deviation.
pub fn batch_scale_rewards(rewards: &[f64]) -> Result<Vec<f64>, TrainingError> {
    if rewards.len() < 2 {
        return Err(TrainingError::DegenerateBatch(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn naive_mul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let (n, m) = a.dim();
        let p = b.ncols();
        let mut out = Array2::zeros((n, p));
        for i in 0..n {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..m {
                    s += a[[i, k]] * b[[k, j]];
                }
                out[[i, j]] = s;
            }
        }
        out
    }

    fn direct_gae(t: &Trajectory) -> Vec<f64> {
        let n = t.rewards.len();
        (0..n)
            .map(|start| {
                (start..n)
                    .map(|i| {
                        let delta = t.rewards[i] + t.gamma * t.values[i + 1] - t.values[i];
                        (t.gamma * t.lambda).powi((i - start) as i32) * delta
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn lora_examples() {
        let base = array![[1.0, 2.0], [3.0, 4.0]];
        let zero = LoraFactors {
            base: base.clone(),
            down: Array2::zeros((2, 1)),
            up: array![[5.0, 6.0]],
            alpha: 32.0,
            rank: 1,
        };
        assert_eq!(lora_apply(&zero).unwrap(), base);

        let down = Array2::from_elem((2, 16), 0.1);
        let up = Array2::from_elem((16, 2), 0.2);
        let f = LoraFactors {
            base: base.clone(),
            down: down.clone(),
            up: up.clone(),
            alpha: 32.0,
            rank: 16,
        };
        let expected = &base + &(naive_mul(&down, &up) * 2.0);
        let got = lora_apply(&f).unwrap();
        assert!(got.iter().zip(expected.iter()).all(|(a, b)| (a - b).abs() < 1e-12));

        let bad = LoraFactors { rank: 2, ..f };
        assert!(matches!(lora_apply(&bad), Err(TrainingError::ShapeMismatch(_))));
    }

    #[test]
    fn warmup_examples() {
        assert_eq!(warmup_lr(0, 100, 1e-4), 0.0);
        assert_eq!(warmup_lr(100, 100, 1e-4), 1e-4);
        assert_eq!(warmup_lr(50, 100, 1e-4), 5e-5);
        assert_eq!(warmup_lr(500, 100, 1e-4), 1e-4);
    }

    #[test]
    fn masking() {
        assert_eq!(mask_labels(&[5, 6, 7, 8], 2, IGNORE_INDEX).unwrap(), vec![-100, -100, 7, 8]);
        assert_eq!(mask_labels(&[5, 6], 0, IGNORE_INDEX).unwrap(), vec![5, 6]);
        assert_eq!(mask_labels(&[5, 6], 2, IGNORE_INDEX).unwrap(), vec![-100, -100]);
        assert!(matches!(mask_labels(&[5], 2, IGNORE_INDEX), Err(TrainingError::IndexOutOfRange { .. })));
    }

    #[test]
    fn checkpoint_memory() {
        assert_eq!(checkpoint_memory_estimate(10.0, 8.0, 2.0, 4, 1).unwrap(), 26.0);
        let with_four = checkpoint_memory_estimate(0.0, 8.0, 0.0, 4, 4).unwrap();
        assert_eq!(with_four, 4.0);
        let mut last = f64::INFINITY;
        for n in 1..50 {
            let m = checkpoint_memory_estimate(10.0, 8.0, 2.0, 28, n).unwrap();
            assert!(m < last);
            last = m;
        }
    }

    #[test]
    fn gae_examples() {
        let single = Trajectory {
            rewards: vec![1.0],
            values: vec![0.5, 2.0],
            gamma: 0.9,
            lambda: 0.95,
        };
        assert!((gae_advantages(&single).unwrap()[0] - (1.0 + 0.9 * 2.0 - 0.5)).abs() < 1e-15);
        let t = Trajectory {
            rewards: vec![1.0, 0.0, 2.0],
            values: vec![0.1, 0.2, 0.3, 0.4],
            gamma: 0.0,
            lambda: 0.0,
        };
        assert_eq!(gae_advantages(&t).unwrap(), vec![0.9, -0.2, 1.7]);
        let bad = Trajectory {
            values: vec![0.0],
            ..t
        };
        assert!(gae_advantages(&bad).is_err());
    }

    #[test]
    fn clip_examples() {
        assert_eq!(grpo_clip_loss(&[1.0, 1.0], &[2.0, -1.0], 0.2).unwrap(), 0.5);
        assert!((grpo_clip_loss(&[1.5], &[2.0], 0.2).unwrap() - 2.4).abs() < 1e-12);
        assert!((grpo_clip_loss(&[0.5], &[-1.0], 0.2).unwrap() + 0.8).abs() < 1e-12);
        assert!(matches!(grpo_clip_loss(&[1.0], &[], 0.2), Err(TrainingError::LengthMismatch { .. })));
    }

    #[test]
    fn kl_branches() {
        let s = KlControllerState::new(0.05);
        assert_eq!(adapt_kl(s, 1.0).beta, 0.05 * 1.5);
        assert_eq!(adapt_kl(s, 2.0).beta, 0.05);
        assert_eq!(adapt_kl(s, 4.0).beta, 0.025);
    }

    #[test]
    fn kl_loop_converges_when_kl_rises_with_beta() {
        for i in 0..=20 {
            let start = 0.1 + (10.0 - 0.1) * i as f64 / 20.0;
            let trace = simulate_kl(KlControllerState::new(start), |beta| 2.5 * beta, 50);
            assert!(trace.last().unwrap().in_band, "start {start}");
        }
    }

    #[test]
    fn kl_loop_diverges_when_kl_falls_with_beta() {
        let trace = simulate_kl(KlControllerState::new(10.0), inverse_plant(2.5), 50);
        assert!(!trace.last().unwrap().in_band);
        assert!(trace.last().unwrap().observed_dkl < 1e-6);
    }

    #[test]
    fn batch_scaling() {
        assert_eq!(batch_scale_rewards(&[0.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(batch_scale_rewards(&[3.0, 3.0, 3.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(batch_scale_rewards(&[1.0]), Err(TrainingError::DegenerateBatch(1))));
    }

    proptest! {
        #[test]
        fn lora_matches_naive(d in 1usize..9, k in 1usize..9, r in 1usize..9, seed in proptest::collection::vec(-1.0f64..1.0, 200)) {
            let mut it = seed.iter().cycle().copied();
            let base = Array2::from_shape_fn((d, k), |_| it.next().unwrap());
            let down = Array2::from_shape_fn((d, r), |_| it.next().unwrap());
            let up = Array2::from_shape_fn((r, k), |_| it.next().unwrap());
            let f = LoraFactors { base: base.clone(), down: down.clone(), up: up.clone(), alpha: 32.0, rank: r };
            let expected = &base + &(naive_mul(&down, &up) * (32.0 / r as f64));
            let got = lora_apply(&f).unwrap();
            for (a, b) in got.iter().zip(expected.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn warmup_monotone(a in 0u64..500, b in 0u64..500, w in 1u64..300) {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(warmup_lr(lo, w, 1e-4) <= warmup_lr(hi, w, 1e-4));
        }

        #[test]
        fn gae_matches_direct_sum(
            rewards in proptest::collection::vec(-5.0f64..5.0, 1..=10),
            values in proptest::collection::vec(-5.0f64..5.0, 11),
            gamma in 0.0f64..=1.0,
            lambda in 0.0f64..=1.0,
        ) {
            let t = Trajectory { values: values[..=rewards.len()].to_vec(), rewards, gamma, lambda };
            let fast = gae_advantages(&t).unwrap();
            for (a, b) in fast.iter().zip(direct_gae(&t)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn clip_permutation_invariant(pairs in proptest::collection::vec((0.0f64..3.0, -3.0f64..3.0), 1..20), rot in 0usize..20) {
            let (r, a): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut rotated = pairs.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            rotated.reverse();
            let (r2, a2): (Vec<f64>, Vec<f64>) = rotated.into_iter().unzip();
            let x = grpo_clip_loss(&r, &a, 0.2).unwrap();
            let y = grpo_clip_loss(&r2, &a2, 0.2).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
        }

        #[test]
        fn kl_fixed_point_inside_band(beta in 1e-3f64..10.0, d in 1.5f64..=3.5) {
            let s = KlControllerState::new(beta);
            prop_assert_eq!(adapt_kl(adapt_kl(s, d), d), s);
        }

        #[test]
        fn batch_scaled_moments(rewards in proptest::collection::vec(-10.0f64..10.0, 2..50)) {
            let out = batch_scale_rewards(&rewards).unwrap();
            let n = out.len() as f64;
            let mean = out.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-12);
            let spread = rewards.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(r))
                - rewards.iter().fold(f64::INFINITY, |m, &r| m.min(r));
            if spread > 1e-6 {
                let std = (out.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!((std - 1.0).abs() < 1e-9);
            }
        }
    }
}
