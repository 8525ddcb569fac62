pub mod evaluate;
pub mod generate;
pub mod recognize;
pub mod tune;
