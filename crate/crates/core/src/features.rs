use crate::error::{Error, Result};
use crate::imaging::{region_to_matrix, GrayImage, RegionKind};
use crate::matrix::{covariance, eigen_symmetric, top_k, EigenPair, Vector};

/// Number of dominant eigenvectors kept per region.
pub const BASIS_SIZE: usize = 5;

/// Eigenvalues at or below this fraction of the covariance trace count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Variances below this are rounding residue (pixel values lie in `[0, 1]`).
const VARIANCE_FLOOR: f64 = 1e-18;

const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// The five dominant eigenpairs of one region image's column covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBasis {
    region: RegionKind,
    pairs: Vec<EigenPair>,
}

impl EigenBasis {
    /// Validates and wraps `pairs`; used when loading stored bases.
    pub fn new(region: RegionKind, pairs: Vec<EigenPair>) -> Result<Self> {
        let fail = |msg: String| Err(Error::shape(format!("{region} basis: {msg}")));
        if pairs.len() != BASIS_SIZE {
            return fail(format!("expected {BASIS_SIZE} eigenpairs, got {}", pairs.len()));
        }
        let (_, cols) = region.canonical_dims();
        for (k, p) in pairs.iter().enumerate() {
            if p.vector.len() != cols {
                return fail(format!(
                    "eigenvector {} has length {}, expected {cols}",
                    k + 1,
                    p.vector.len()
                ));
            }
            if !p.value.is_finite() || p.value < -RANK_TOLERANCE {
                return fail(format!("eigenvalue {} = {} is negative", k + 1, p.value));
            }
            if (p.vector.norm() - 1.0).abs() > ORTHONORMAL_TOLERANCE {
                return fail(format!("eigenvector {} is not unit length", k + 1));
            }
        }
        for k in 1..pairs.len() {
            if pairs[k].value > pairs[k - 1].value {
                return fail("eigenvalues are not in descending order".into());
            }
            for j in 0..k {
                if pairs[j].vector.dot(&pairs[k].vector).abs() > ORTHONORMAL_TOLERANCE {
                    return fail(format!("eigenvectors {} and {} are not orthogonal", j + 1, k + 1));
                }
            }
        }
        Ok(EigenBasis { region, pairs })
    }

    pub fn region(&self) -> RegionKind {
        self.region
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn vector(&self, k: usize) -> &Vector {
        &self.pairs[k].vector
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Extracts the basis of a region image already resized to `kind`'s canonical size.
pub fn extract_basis(region_img: &GrayImage, kind: RegionKind) -> Result<EigenBasis> {
    let expected = kind.canonical_dims();
    if region_img.dims() != expected {
        return Err(Error::shape(format!(
            "{kind} image is {:?}, expected {expected:?}",
            region_img.dims()
        )));
    }
    let cov = covariance(&region_to_matrix(region_img))?;
    let floor = (RANK_TOLERANCE * cov.trace()).max(VARIANCE_FLOOR);
    let all = eigen_symmetric(&cov)?;
    let positive = all.iter().filter(|p| p.value > floor).count();
    if positive < BASIS_SIZE {
        return Err(Error::DegenerateRank {
            region: kind,
            expression: None,
            positive,
            required: BASIS_SIZE,
        });
    }
    Ok(EigenBasis {
        region: kind,
        pairs: top_k(&all, BASIS_SIZE)?,
    })
}
