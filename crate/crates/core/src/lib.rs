// index loops mirror the tensor notation; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod geometry;
pub mod jet;
pub mod foliation;
pub mod warp;
pub mod formulas;
pub mod scenario;
pub mod harness;
pub mod cli;
