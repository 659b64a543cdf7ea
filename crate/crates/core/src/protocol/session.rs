use std::time::{Duration, Instant};

use super::{Entity, Hss, Mme, MmePhase, Protocol, ProtocolMessage, RejectReason, Ue, UePhase};
use crate::key_hierarchy::{derive_key_tree, Key256, KeyTree};
use crate::simnet::{SimNet, TraceEntry};

/// Upper bound on deliveries per session; guards against message loops
/// set up by taps.
const MAX_EVENTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Authenticated,
    Rejected(RejectReason),
}

#[derive(Debug, Clone)]
pub struct SessionResult {
    pub outcome: Outcome,
    /// Every message that entered the channel during the session.
    pub trace: Vec<TraceEntry>,
    /// Established on success, from the MME's K_ASME.
    pub key_tree: Option<KeyTree>,
    pub ue_k_asme: Option<Key256>,
    pub mme_k_asme: Option<Key256>,
    pub wall: Duration,
    pub logical_time: u64,
}

impl SessionResult {
    pub fn authenticated(&self) -> bool {
        self.outcome == Outcome::Authenticated
    }

    pub fn message_count(&self) -> usize {
        self.trace.len()
    }

    pub fn wire_bytes(&self) -> usize {
        self.trace.iter().map(|t| t.bytes.len()).sum()
    }
}

fn emit(net: &mut SimNet, msgs: Vec<ProtocolMessage>) {
    for m in msgs {
        let bytes = m.encode().expect("actors emit encodable messages");
        // Every protocol endpoint is registered by construction.
        let _ = net.send(m.src, m.dst, bytes);
    }
}

/// Delivers queued events to the actors until the network is idle.
/// Returns the MME's first terminal phase, if any.
pub(crate) fn pump(ue: &mut Ue, mme: &mut Mme, hss: &mut Hss, net: &mut SimNet) -> Option<MmePhase> {
    let mut terminal = None;
    let mut events = 0;
    while let Some(d) = net.tick() {
        events += 1;
        if events > MAX_EVENTS {
            break;
        }
        let now = d.time;
        let started = Instant::now();
        let out = match ProtocolMessage::decode(&d.bytes) {
            Ok(msg) => match d.dst {
                Entity::Ue => ue.step(&msg, now),
                Entity::Mme => mme.step(&msg, now),
                Entity::Hss => hss.step(&msg, now),
                Entity::Attacker => Vec::new(),
            },
            Err(_) => match d.dst {
                Entity::Ue => ue.on_malformed(),
                Entity::Mme => mme.on_malformed(),
                Entity::Hss => hss.on_malformed(),
                Entity::Attacker => Vec::new(),
            },
        };
        net.charge(d.dst, started.elapsed());
        emit(net, out);
        if terminal.is_none() && mme.phase().is_terminal() {
            terminal = Some(mme.phase());
        }
    }
    terminal
}

/// Delivers whatever is already queued, such as injected traffic, outside
/// of a session.
pub fn deliver_pending(ue: &mut Ue, mme: &mut Mme, hss: &mut Hss, net: &mut SimNet) {
    pump(ue, mme, hss, net);
}

/// Runs one attach of `ue` against `mme` and `hss` over `net`. Which
/// exchange runs is decided by how the actors are configured.
pub fn run_session(ue: &mut Ue, mme: &mut Mme, hss: &mut Hss, net: &mut SimNet) -> SessionResult {
    let trace_start = net.trace().len();
    let t0 = net.now();
    let wall = Instant::now();

    mme.begin_session();
    let started = Instant::now();
    let first = ue.start();
    net.charge(Entity::Ue, started.elapsed());
    emit(net, first);
    let terminal = pump(ue, mme, hss, net);

    let outcome = match terminal {
        Some(MmePhase::Authenticated) => Outcome::Authenticated,
        Some(MmePhase::Rejected(r)) => Outcome::Rejected(r),
        _ => match ue.phase() {
            UePhase::Failed(r) => Outcome::Rejected(r),
            _ => Outcome::Rejected(RejectReason::DeliveryFailure),
        },
    };
    let mme_k_asme = mme.k_asme();
    let key_tree = match outcome {
        Outcome::Authenticated => {
            // Off-wire bookkeeping: both ends move to the next key epoch.
            ue.confirm_success();
            if let Some(imsi) = mme.imsi().cloned() {
                hss.confirm_success(&imsi);
            }
            mme_k_asme.map(|k| derive_key_tree(k, 0))
        }
        Outcome::Rejected(_) => None,
    };
    SessionResult {
        outcome,
        trace: net.trace()[trace_start..].to_vec(),
        key_tree,
        ue_k_asme: ue.k_asme(),
        mme_k_asme,
        wall: wall.elapsed(),
        logical_time: net.now() - t0,
    }
}

pub fn run_ipg_aka(ue: &mut Ue, mme: &mut Mme, hss: &mut Hss, net: &mut SimNet) -> SessionResult {
    assert_eq!(ue.protocol(), Protocol::IpgAka);
    assert_eq!(mme.config().protocol, Protocol::IpgAka);
    run_session(ue, mme, hss, net)
}

pub fn run_eps_aka(ue: &mut Ue, mme: &mut Mme, hss: &mut Hss, net: &mut SimNet) -> SessionResult {
    assert_eq!(ue.protocol(), Protocol::EpsAka);
    assert_eq!(mme.config().protocol, Protocol::EpsAka);
    run_session(ue, mme, hss, net)
}
