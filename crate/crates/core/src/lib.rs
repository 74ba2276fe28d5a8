pub mod conversion;
pub mod curve;
pub mod error;
pub mod mechanisms;
pub mod orders;
pub mod filter;
pub mod odometer;
pub mod oracle;
pub mod harness;
