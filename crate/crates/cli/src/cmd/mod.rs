pub mod eval;
pub mod export;
pub mod extract;
pub mod synth;
pub mod train;
