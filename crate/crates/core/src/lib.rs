//! Iris location in periocular images.
//!
//! Two classical detectors that each return one square box per image:
//!
//! - [`daugman`]: integro-differential circle search, box from the circle;
//! - [`hogsvm`]: HOG descriptors scored by a linear SVM over a multi-scale
//!   sliding window.
//!
//! [`eval`] scores boxes at pixel level (recall, precision, accuracy, IoU),
//! [`dataset`] reads and writes annotation and detection files, [`synth`]
//! renders synthetic eyes with exact ground truth and [`bench`] runs whole
//! experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bbox;
pub mod bench;
pub mod daugman;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hogsvm;
pub mod image;
pub mod synth;

pub use bbox::BBox;
pub use error::{Error, Result};
pub use image::GrayImage;
