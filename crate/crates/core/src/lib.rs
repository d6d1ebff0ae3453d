//! Unexpected-engagement analytics for social media posts.
//!
//! Each post's like, retweet and comment counts are compared against a
//! conditional-quantile baseline predicted from the other two counts; the
//! resulting quotients are then regressed on content and author features.

pub mod corpus;
pub mod design;
pub mod error;
pub mod linalg;
pub mod linmod;
pub mod quantreg;
pub mod stats;
pub mod synth;
pub mod textfeat;
pub mod topics;
pub mod unexpect;

pub use error::{Error, Result};
