//! Hardware-distortion-aware precoding for integrated sensing and
//! communication: closed-form SCNR and SINR metrics under transmit/receive
//! distortion and clutter, the SCA precoder design and power-allocation QP,
//! and a Monte Carlo experiment harness with CSV output.

pub mod array;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod precoding;
pub mod scene;
