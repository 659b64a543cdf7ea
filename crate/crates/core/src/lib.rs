//! Grid-based dynamic root keys and concealed-identity authentication for
//! LTE/SAE, with an EPS-AKA baseline, a simulated network for attack runs,
//! and exact evaluation of the grid security formulas.

pub mod analysis;
pub mod cgrid;
pub mod imsi_crypto;
pub mod key_hierarchy;
pub mod keygen;
pub mod prf;
pub mod protocol;
pub mod simnet;
pub mod wire;

pub use cgrid::{CGrid, Cell, ColumnWidths, GridError};
pub use imsi_crypto::{CryptoError, ElGamalParams, Imsi, ImsiCiphertext, SecretKey};
pub use key_hierarchy::{AuthVector, Key256, KeyHierarchyError, KeyTree, Snid};
pub use keygen::{KeySequence, KeygenError, LteKey};
pub use protocol::{Outcome, Protocol, ProtocolMessage, RejectReason, SessionResult};
pub use simnet::{Scenario, SimNet};
