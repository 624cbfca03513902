pub mod alpha;
pub mod error;
pub mod mvn;
pub mod normal;
pub mod oracle;
pub mod quad;
pub mod trial;

pub use error::{Error, Result};
