use super::{add_scaled, SparseDist};
use crate::error::{Error, Result};

/// `P̂(ẑ'|ẑ,a) = Σ_y 1{update(ẑ,a,y) = ẑ'} ν̂^y(y|ẑ,a)`.
///
/// `update_map[ẑ][a][y]` may be `None` only where `ν̂^y` puts no mass.
pub fn compose_kernel_from_obs_predictor(
    update_map: &[Vec<Vec<Option<usize>>>],
    obs_predictor: &[Vec<Vec<f64>>],
) -> Result<Vec<Vec<SparseDist>>> {
    if update_map.len() != obs_predictor.len() {
        return Err(Error::DimensionMismatch {
            field: "obs_predictor".into(),
            expected: update_map.len(),
            got: obs_predictor.len(),
        });
    }
    let mut out = Vec::with_capacity(update_map.len());
    for (z, (upd_z, obs_z)) in update_map.iter().zip(obs_predictor).enumerate() {
        if upd_z.len() != obs_z.len() {
            return Err(Error::DimensionMismatch {
                field: format!("obs_predictor[{z}]"),
                expected: upd_z.len(),
                got: obs_z.len(),
            });
        }
        let mut rows = Vec::with_capacity(upd_z.len());
        for (a, (upd, nu)) in upd_z.iter().zip(obs_z).enumerate() {
            if upd.len() != nu.len() {
                return Err(Error::DimensionMismatch {
                    field: format!("obs_predictor[{z}][{a}]"),
                    expected: upd.len(),
                    got: nu.len(),
                });
            }
            let mut row: SparseDist = Vec::new();
            for (y, (&next, &p)) in upd.iter().zip(nu).enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let next = next.ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "update map undefined at ({z},{a},{y}) where the predictor has mass {p}"
                    ))
                })?;
                add_scaled(&mut row, &[(next, p)], 1.0);
            }
            row.sort_by_key(|e| e.0);
            rows.push(row);
        }
        out.push(rows);
    }
    Ok(out)
}
