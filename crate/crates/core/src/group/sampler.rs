use std::f64::consts::TAU;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{GroupElement, GroupError, RotationAxis};

/// A sampling law over group elements.
#[derive(Clone, Debug)]
pub enum SamplerSpec {
    /// Uniform over a fixed, nonempty list (duplicates weight an element).
    UniformOver(Vec<GroupElement>),
    /// Uniform angle on `[0, 2pi)` about an axis or in a plane.
    HaarCircle(RotationAxis),
    /// Uniform rotation, from a normalised Gaussian quaternion.
    HaarSO3,
    /// Angle `N(0, std^2)` about a fixed axis or plane.
    GaussianAngle { about: RotationAxis, std: f64 },
    /// `exp(A)` with `A` a traceless matrix of iid `N(0, scale^2)` entries.
    SpecialLinearGaussian { scale: f64 },
    /// `sum_k z_k b_k` with iid `z_k ~ N(0, std^2)`.
    GaussianTranslation { basis: Vec<Vec<f64>>, std: f64 },
    PointMass(GroupElement),
    /// Picks one component uniformly, then samples from it.
    Mixture(Vec<SamplerSpec>),
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            Self::UniformOver(v) if v.is_empty() => {
                Err(GroupError::InvalidSampler("uniform sampler over an empty list".into()))
            }
            Self::GaussianAngle { std, .. } if !(*std > 0.0 && std.is_finite()) => {
                Err(GroupError::InvalidSampler("gaussian-angle std must be positive".into()))
            }
            Self::SpecialLinearGaussian { scale } if !(*scale > 0.0 && scale.is_finite()) => {
                Err(GroupError::InvalidSampler("scale must be positive".into()))
            }
            Self::GaussianTranslation { basis, std } => {
                if basis.is_empty() || !(*std > 0.0) {
                    return Err(GroupError::InvalidSampler("translation sampler needs a basis and std > 0".into()));
                }
                let d = basis[0].len();
                if basis.iter().any(|b| b.len() != d) {
                    return Err(GroupError::InvalidSampler("ragged translation basis".into()));
                }
                Ok(())
            }
            Self::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(GroupError::InvalidSampler("empty mixture".into()));
                }
                parts.iter().try_for_each(Self::validate)
            }
            _ => Ok(()),
        }
    }

    /// Draws one element. The spec must be valid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match self {
            Self::UniformOver(v) => v[rng.random_range(0..v.len())].clone(),
            Self::HaarCircle(about) => about.rotation(rng.random::<f64>() * TAU),
            Self::HaarSO3 => {
                let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let uq = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
                GroupElement::RotationMatrix(uq.to_rotation_matrix().into_inner())
            }
            Self::GaussianAngle { about, std } => {
                let angle = Normal::new(0.0, *std).expect("validated std").sample(rng);
                about.rotation(angle)
            }
            Self::SpecialLinearGaussian { scale } => {
                let mut a = Matrix3::from_fn(|_, _| scale * rng.sample::<f64, _>(StandardNormal));
                let tr = a.trace() / 3.0;
                for i in 0..3 {
                    a[(i, i)] -= tr;
                }
                let m = a.exp();
                let det = m.determinant();
                GroupElement::SpecialLinear(m / det.cbrt())
            }
            Self::GaussianTranslation { basis, std } => {
                let mut v = vec![0.0; basis[0].len()];
                for b in basis {
                    let z: f64 = std * rng.sample::<f64, _>(StandardNormal);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi += z * bi;
                    }
                }
                GroupElement::Translation(v)
            }
            Self::PointMass(g) => g.clone(),
            Self::Mixture(parts) => parts[rng.random_range(0..parts.len())].sample(rng),
        }
    }
}
