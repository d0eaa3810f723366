use crate::augment::{sample_views, AugmentConfig, InvalidProbability};
use crate::diffmath::{MathError, Tape};
use crate::encoder::{forward, init_params, EncoderConfig, EncoderError, EncoderParams};
use crate::graph::{normalize_adjacency, Graph};
use crate::objective::{total_loss, LossBreakdown, LossConfig, LossError, PairSets};
use crate::rng::{keyed_rng, Purpose};

use super::adam::{step, AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Augment(#[from] InvalidProbability),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    /// Loss of each epoch, evaluated before that epoch's update.
    pub history: Vec<LossBreakdown>,
}

/// Trains the encoder for `adam_cfg.epochs` epochs.
///
/// `seed` keys both the weight initialization and the per-epoch augmentation
/// streams; `augment_cfg.seed` is ignored. Pair sets for the loss come from
/// the original graph, not from the views.
pub fn train(
    graph: &Graph,
    encoder_cfg: &EncoderConfig,
    augment_cfg: &AugmentConfig,
    loss_cfg: &LossConfig,
    adam_cfg: &AdamConfig,
    seed: u64,
) -> Result<TrainOutcome, TrainError> {
    encoder_cfg.validate()?;
    augment_cfg.validate()?;
    loss_cfg.validate()?;
    adam_cfg.validate().map_err(TrainError::InvalidConfig)?;

    let mut init_rng = keyed_rng(seed, 0, 0, Purpose::Init);
    let mut params = init_params(encoder_cfg, graph.num_features(), &mut init_rng)?;
    let mut state = AdamState::new(&params.weights);
    let augment = AugmentConfig {
        seed,
        ..*augment_cfg
    };
    let pairs = PairSets::new(graph.adjacency());
    let mut history = Vec::with_capacity(adam_cfg.epochs);

    for epoch in 0..adam_cfg.epochs {
        let (v1, v2) = sample_views(graph, &augment, epoch as u64)?;
        let (a1, a2) = (normalize_adjacency(&v1.adjacency), normalize_adjacency(&v2.adjacency));

        let mut tape = Tape::new();
        let weights = params.register(&mut tape);
        let z1 = forward(&mut tape, &weights, &a1, &v1.features)?;
        let z2 = forward(&mut tape, &weights, &a2, &v2.features)?;
        let (loss, breakdown) = total_loss(&mut tape, z1, z2, &pairs, loss_cfg)?;
        if !breakdown.total.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        log::debug!(
            "epoch {epoch}: total {:.6} (ali {:.6}, nei {:.6}, spa {:.6})",
            breakdown.total,
            breakdown.l_ali,
            breakdown.l_nei,
            breakdown.l_spa
        );
        history.push(breakdown);

        let mut grads = tape.backward(loss)?;
        let grads: Vec<_> = weights
            .iter()
            .map(|w| grads.take(*w).expect("leaf gradient"))
            .collect();
        step(&mut params.weights, &grads, &mut state, adam_cfg)?;
    }
    Ok(TrainOutcome { params, history })
}
