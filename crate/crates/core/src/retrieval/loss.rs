use crate::error::{Error, Result};
use crate::field::{ComplexField, IntensityMap};

/// Target intensity rescaled to unit sum, ready for repeated comparisons.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub values: Vec<f64>,
}

impl Target {
    pub fn new(map: &IntensityMap) -> Result<Self> {
        Ok(Self {
            values: map.unit_sum()?.values,
        })
    }

    /// `Σ |t - |u|²/Σ|u|²|`; 2 when `u` is zero.
    pub fn l1(&self, field: &[num_complex::Complex64]) -> f64 {
        let total: f64 = field.iter().map(|v| v.norm_sqr()).sum();
        if total <= 0.0 {
            return 2.0;
        }
        let inv = 1.0 / total;
        self.values
            .iter()
            .zip(field)
            .map(|(t, u)| (t - u.norm_sqr() * inv).abs())
            .sum()
    }
}

/// L1 mismatch between one candidate field and one target intensity, both
/// rescaled to unit sum. Lies in `[0, 2]`.
pub fn plane_loss(candidate: &ComplexField, target: &IntensityMap) -> Result<f64> {
    candidate.grid.check_same(&target.grid)?;
    Ok(Target::new(target)?.l1(&candidate.values))
}

/// Sum of [`plane_loss`] over the two planes.
///
/// For normalized inputs this is `Σ_planes Σ |I - |u|²|·pitch²`.
pub fn two_plane_loss(
    candidates: (&ComplexField, &ComplexField),
    targets: (&IntensityMap, &IntensityMap),
) -> Result<f64> {
    if candidates.0.grid != candidates.1.grid {
        return Err(Error::GridMismatch("candidate planes differ".into()));
    }
    Ok(plane_loss(candidates.0, targets.0)? + plane_loss(candidates.1, targets.1)?)
}
