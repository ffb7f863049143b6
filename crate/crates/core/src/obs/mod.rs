//! Observations: object lists and their prompt serialization, a grayscale
//! renderer, the frame-to-objects extraction pipeline, and DQN-style frame
//! preprocessing.

mod extract;
mod frame;
mod objects;
mod preprocess;

pub use extract::{components, extract, Component};
pub use frame::{crop, render, to_grayscale, CropRect, Frame, PixelPalette};
pub use objects::{
    format_objects, objects, objects_from_json, objects_to_json, parse_objects, Category,
    GameObject,
};
pub use preprocess::{downsample, preprocess, OUT_SIZE, STACK};

#[derive(Debug, thiserror::Error)]
pub enum ObsError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("palette error: {0}")]
    Palette(String),
}
