pub mod detect;
pub mod report;
pub mod simulate;
pub mod train;
pub mod tune;
