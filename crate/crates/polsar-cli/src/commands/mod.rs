pub mod dataset;
pub mod decompose;
pub mod evaluate;
pub mod fuse_demo;
pub mod mvd;
pub mod synth;
