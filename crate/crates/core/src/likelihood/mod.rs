pub mod bvn;
pub mod marginal;
pub mod normal;
pub mod oracle;
pub mod quad;
pub mod orthant;
