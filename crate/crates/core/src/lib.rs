//! Restricted normalised-quadratic profit model of irrigated farm supply and
//! input demand, with estimation, response analysis and shock simulation.

pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod industry;
pub mod netput;
pub mod output;
pub mod panel;
pub mod params;
pub mod prices;
pub mod response;
pub mod shock;
pub mod validator;

pub use error::{Error, Result, RowError};
pub use industry::{IndustryId, IndustrySpec, NetputRole, NUMERAIRE};
pub use netput::{Exogenous, NetputVector};
pub use panel::{FarmPanel, FarmRecord, PanelSchema};
pub use params::ParameterSet;
pub use prices::PriceVector;
