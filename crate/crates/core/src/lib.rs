pub mod formula;
pub mod kripke;
pub mod plfcheck;
pub mod quantum;
pub mod scenario;
