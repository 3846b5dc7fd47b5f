use thiserror::Error;

use crate::bv::BvError;
use crate::graphs::GraphError;
use crate::integrate::IntegrationError;
use crate::sdr::SdrError;
use crate::series::SeriesError;
use crate::space::SpaceError;
use crate::transfer::TransferError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Bv(#[from] BvError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Sdr(#[from] SdrError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
