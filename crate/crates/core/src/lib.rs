//! Facial expression recognition from regional covariance eigenvectors.
//!
//! A face image is reduced to five canonical region images (both eyes, nose,
//! lip, and nose with lip). Each region's column covariance is
//! eigendecomposed and its five dominant eigenvectors are compared, index by
//! index, against reference eigenvectors stored for each of six
//! expressions. Every comparison votes for the nearest expression and the
//! expression with the most of the 25 votes is the result.
//!
//! ```no_run
//! use std::path::Path;
//! use eigenexpr::{classify, load_gray, load_model, CropSet};
//!
//! let model = load_model(Path::new("model.json"))?;
//! let image = load_gray(Path::new("face.png"))?;
//! let crops = CropSet::load(Path::new("face.crops.json"))?;
//! let result = classify(&image, &crops, &model)?;
//! println!("{}", result.decided);
//! # Ok::<(), eigenexpr::Error>(())
//! ```

pub mod classifier;
pub mod decode;
mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod matrix;
pub mod model;
pub mod render;
pub mod synth;

pub use classifier::{
    aggregate, aggregate_regions, classify, classify_regions, euclidean_distance, load_replay_dir, region_ed_matrix,
    region_votes, replay, ClassificationResult, EdMatrix, VoteTable,
};
pub use decode::{load_gray, parse_text_image, to_text_image};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_samples, EvalReport, SplitMode};
pub use features::{extract_basis, EigenBasis, BASIS_SIZE};
pub use imaging::{crop, region_to_matrix, resize, to_grayscale, GrayImage, Rect, RegionKind, RegionSpec};
pub use matrix::{center, column_mean, covariance, eigen_symmetric, top_k, EigenPair, Matrix, Vector};
pub use model::{
    load_model, save_model, train, train_images, CropSet, Expression, ExpressionModel, LabeledImage, ManifestEntry,
    TrainingManifest, MODEL_FORMAT,
};
