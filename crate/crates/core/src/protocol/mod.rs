//! UE, MME and HSS actors for the concealed-identity exchange and the
//! plaintext-identity baseline, plus the session driver.
//!
//! Each actor is a state machine advanced by `step(message, now)`, which
//! returns the messages to put on the wire. Anything arriving out of order
//! is answered with `AuthReject(ProtocolViolation)` and ends the session.

mod hss;
mod message;
mod mme;
mod provision;
mod session;
mod ue;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use hss::{Hss, HssConfig, SubscriberRecord};
pub use message::{Body, Entity, NetworkType, ProtocolMessage, Tag, HEADER_LEN};
pub use mme::{Mme, MmeConfig, MmePhase};
pub use provision::{
    provision_subscriber, Credentials, ProvisionConfig, SubscriberState, SubscriberStateError,
};
pub use session::{deliver_pending, run_eps_aka, run_ipg_aka, run_session, Outcome, SessionResult};
pub use ue::{Ue, UeConfig, UePhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Concealed identity, epoch root keys.
    IpgAka,
    /// Plaintext identity, static root key.
    EpsAka,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::IpgAka => "ipg",
            Protocol::EpsAka => "eps",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ipg" | "ipg-aka" | "ipgaka" => Ok(Protocol::IpgAka),
            "eps" | "eps-aka" | "epsaka" => Ok(Protocol::EpsAka),
            other => Err(format!("unknown protocol {other:?}")),
        }
    }
}

/// Why a session ended without authentication.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    #[error("SignatureInvalid")]
    SignatureInvalid,
    #[error("StaleTimestamp")]
    StaleTimestamp,
    #[error("UnknownImsi")]
    UnknownImsi,
    #[error("SnidRejected")]
    SnidRejected,
    #[error("MacFailure")]
    MacFailure,
    #[error("SqnOutOfRange")]
    SqnOutOfRange,
    #[error("ResMismatch")]
    ResMismatch,
    #[error("ProtocolViolation")]
    ProtocolViolation,
    #[error("DeliveryFailure")]
    DeliveryFailure,
}

impl RejectReason {
    pub const ALL: [RejectReason; 9] = [
        RejectReason::SignatureInvalid,
        RejectReason::StaleTimestamp,
        RejectReason::UnknownImsi,
        RejectReason::SnidRejected,
        RejectReason::MacFailure,
        RejectReason::SqnOutOfRange,
        RejectReason::ResMismatch,
        RejectReason::ProtocolViolation,
        RejectReason::DeliveryFailure,
    ];

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&r| r == self).unwrap() as u8 + 1
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(usize::from(c).checked_sub(1)?).copied()
    }
}

/// Work done by an actor, for load metering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub modexp: u64,
    pub key_derivations: u64,
    pub av_builds: u64,
    pub signatures: u64,
    pub signature_checks: u64,
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.modexp += o.modexp;
        self.key_derivations += o.key_derivations;
        self.av_builds += o.av_builds;
        self.signatures += o.signatures;
        self.signature_checks += o.signature_checks;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reason_codes_round_trip() {
        for r in RejectReason::ALL {
            assert_eq!(RejectReason::from_code(r.code()), Some(r));
        }
        assert_eq!(RejectReason::from_code(0), None);
        assert_eq!(RejectReason::from_code(200), None);
    }

    #[test]
    fn protocol_names() {
        assert_eq!("ipg".parse::<Protocol>().unwrap(), Protocol::IpgAka);
        assert_eq!("EPS".parse::<Protocol>().unwrap(), Protocol::EpsAka);
        assert!("x".parse::<Protocol>().is_err());
        assert_eq!(Protocol::IpgAka.to_string(), "ipg");
    }
}
