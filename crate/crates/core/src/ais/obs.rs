use crate::error::{Error, Result};
use crate::model::PomdpModel;

/// Model whose observation kernel is the pushforward of the original through `q_obs`.
///
/// The compressed alphabet is `0..=max(q_obs)`.
pub fn compress_observations(model: &PomdpModel, q_obs: &[usize]) -> Result<PomdpModel> {
    if q_obs.len() != model.n_observations {
        return Err(Error::DimensionMismatch {
            field: "q_obs".into(),
            expected: model.n_observations,
            got: q_obs.len(),
        });
    }
    let n_hat = q_obs.iter().max().map(|m| m + 1).unwrap_or(0);
    let observation = model
        .observation
        .iter()
        .map(|per_a| {
            per_a
                .iter()
                .map(|row| {
                    let mut out = vec![0.0; n_hat];
                    for (y, &p) in row.iter().enumerate() {
                        out[q_obs[y]] += p;
                    }
                    out
                })
                .collect()
        })
        .collect();
    let mut out = model.clone();
    out.n_observations = n_hat;
    out.observation = observation;
    if let Some(labels) = &mut out.labels {
        labels.observations.clear();
    }
    out.validate()?;
    Ok(out)
}

/// `q2 ∘ q1`.
pub(crate) fn compose_maps(q1: &[usize], q2: &[usize]) -> Result<Vec<usize>> {
    q1.iter()
        .map(|&y| {
            q2.get(y).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("observation map has no entry for symbol {y}"))
            })
        })
        .collect()
}
