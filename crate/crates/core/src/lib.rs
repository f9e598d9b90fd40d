pub mod error;
pub mod hermitian;
pub mod hmat;
pub mod instances;
pub mod lowerbound;
pub mod rng;
pub mod chebyshev;
pub mod ledger;
pub mod osp;
pub mod qube;
pub mod backend;
pub mod trace;
pub mod qsmin;
pub mod qcount;
pub mod gapfinder;
pub mod report;
pub mod validate;
pub mod cli;
