#![allow(dead_code)]

pub mod gf_oracle;
