pub mod estimator;
pub mod fit;
pub mod logo;
pub mod optimize;
pub mod pilot;
pub mod simulate;
