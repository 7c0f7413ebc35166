pub mod cpmaps;
pub mod ergodic;
pub mod error;
pub mod fit;
pub mod io;
pub mod matcore;
pub mod mps;
pub mod pmetric;
pub mod process;
pub mod rng;
pub mod runner;
pub mod table;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/metric.md")]
    pub mod metric {}
    #[doc = include_str!("../../../book/src/limits.md")]
    pub mod limits {}
    #[doc = include_str!("../../../book/src/mps.md")]
    pub mod mps {}
    #[doc = include_str!("../../../book/src/runner.md")]
    pub mod runner {}
}
