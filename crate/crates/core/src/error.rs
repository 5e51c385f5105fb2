use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol {symbol} is not in the alphabet of size {alphabet_size}")]
    InvalidSymbol { symbol: usize, alphabet_size: usize },

    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("word enumeration needs {words} words, budget is {budget}")]
    BudgetExceeded { words: u128, budget: u128 },

    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("estimate table is empty")]
    EmptyTable,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
