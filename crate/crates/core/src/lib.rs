pub mod scalar;
pub mod series;
pub mod linalg;
pub mod partition;
pub mod blowup;
pub mod germ;
pub mod lifting;
pub mod dynamics;
pub mod normalform;
pub mod mapspec;

/// Chapters of the book, compiled as doc-tests.
pub mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/charts.md")]
    pub mod charts {}
    #[doc = include_str!("../../../book/src/series.md")]
    pub mod series {}
    #[doc = include_str!("../../../book/src/lifting.md")]
    pub mod lifting {}
    #[doc = include_str!("../../../book/src/directions.md")]
    pub mod directions {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    pub mod orbits {}
    #[doc = include_str!("../../../book/src/normalform.md")]
    pub mod normalform {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
