// NaN must fail the positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod codec;
pub mod compress;
pub mod replay;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod tunnel;
