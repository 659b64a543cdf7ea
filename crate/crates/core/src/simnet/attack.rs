//! The attack catalogue, each run against a fresh testbed.

use std::cell::RefCell;
use std::fmt;
use std::fmt::Write as _;
use std::rc::Rc;
use std::str::FromStr;

use super::{render_trace, AttackerTap, LinkKind, MitmAction, TapMode, Testbed, TestbedConfig, TestbedError, TraceEntry};
use crate::imsi_crypto::DEFAULT_FRESHNESS_WINDOW;
use crate::protocol::{Body, Credentials, Entity, Outcome, Protocol, ProtocolMessage, Tag, Ue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    EavesdropImsi,
    ReplayIdentityRequest,
    ReplayAuthRequest,
    MitmRewriteAv,
    ImpersonateWithStaleKey,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::EavesdropImsi,
        Scenario::ReplayIdentityRequest,
        Scenario::ReplayAuthRequest,
        Scenario::MitmRewriteAv,
        Scenario::ImpersonateWithStaleKey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::EavesdropImsi => "EavesdropImsi",
            Scenario::ReplayIdentityRequest => "ReplayIdentityRequest",
            Scenario::ReplayAuthRequest => "ReplayAuthRequest",
            Scenario::MitmRewriteAv => "MitmRewriteAv",
            Scenario::ImpersonateWithStaleKey => "ImpersonateWithStaleKey",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("UnknownScenario: {0}")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownScenario(s.to_owned()))
    }
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub scenario: Scenario,
    pub protocol: Protocol,
    pub succeeded: bool,
    /// Outcome of each session the scenario ran, in order.
    pub outcomes: Vec<Outcome>,
    pub summary: String,
    pub evidence: Vec<TraceEntry>,
}

impl AttackReport {
    pub fn render(&self) -> String {
        let mut out = format!(
            "scenario={} protocol={} succeeded={}\n",
            self.scenario, self.protocol, self.succeeded
        );
        let outcomes: Vec<String> = self
            .outcomes
            .iter()
            .map(|o| match o {
                Outcome::Authenticated => "Authenticated".to_string(),
                Outcome::Rejected(r) => format!("Rejected({r})"),
            })
            .collect();
        let _ = writeln!(out, "outcomes={}", outcomes.join(","));
        let _ = writeln!(out, "summary={}", self.summary);
        out.push_str("evidence:\n");
        out.push_str(&render_trace(&self.evidence));
        out
    }
}

fn is(tag: Tag, src: Entity) -> impl Fn(&TraceEntry) -> bool {
    move |t| t.tag() == Some(tag) && t.src == src
}

fn outcome_text(o: Outcome) -> String {
    match o {
        Outcome::Authenticated => "Authenticated".into(),
        Outcome::Rejected(r) => format!("Rejected({r})"),
    }
}

/// Runs `scenario` against a testbed seeded with `seed`. `succeeded`
/// means the attacker reached its goal.
pub fn run_attack_scenario(scenario: Scenario, protocol: Protocol, seed: u64) -> Result<AttackReport, TestbedError> {
    run_attack_with(scenario, TestbedConfig::new(protocol, seed))
}

pub fn run_attack_with(scenario: Scenario, cfg: TestbedConfig) -> Result<AttackReport, TestbedError> {
    let mut tb = Testbed::new(cfg)?;
    let protocol = cfg.protocol;
    let digits = tb.imsi(0).digits().as_bytes().to_vec();
    let report = |succeeded, outcomes, summary: String, evidence| AttackReport {
        scenario,
        protocol,
        succeeded,
        outcomes,
        summary,
        evidence,
    };

    Ok(match scenario {
        Scenario::EavesdropImsi => {
            let tap = tb.net.install_tap(AttackerTap::new(TapMode::Eavesdrop, Some(LinkKind::Air)));
            let r = tb.run(0);
            let hits: Vec<TraceEntry> = r.trace.iter().filter(|t| t.link == LinkKind::Air && t.contains(&digits)).cloned().collect();
            let captured = tb.net.tap(tap).captured.len();
            let recovered = !tb.net.tap(tap).matching(&digits).is_empty();
            report(
                recovered,
                vec![r.outcome],
                format!("{captured} air messages captured, {} carry the identity in clear", hits.len()),
                if hits.is_empty() { r.trace } else { hits },
            )
        }

        Scenario::ReplayIdentityRequest => match protocol {
            Protocol::IpgAka => {
                let tap = tb.net.install_tap(AttackerTap::new(TapMode::Eavesdrop, Some(LinkKind::Air)));
                let first = tb.run(0);
                let old = tb
                    .net
                    .tap(tap)
                    .captured
                    .iter()
                    .find(|c| Tag::peek(&c.bytes) == Some(Tag::IdentityRequest))
                    .map(|c| c.bytes.clone());
                let Some(old) = old else {
                    return Ok(report(false, vec![first.outcome], "no identity request observed".into(), first.trace));
                };
                tb.idle(4 * DEFAULT_FRESHNESS_WINDOW);
                let swap = old.clone();
                tb.net.install_tap(AttackerTap::new(
                    TapMode::Mitm(Box::new(move |o| {
                        if o.src == Entity::Mme && Tag::peek(o.bytes) == Some(Tag::IdentityRequest) {
                            MitmAction::Rewrite(swap.clone())
                        } else {
                            MitmAction::Forward
                        }
                    })),
                    Some(LinkKind::Air),
                ));
                let second = tb.run(0);
                let answered = second.trace.iter().any(is(Tag::IdentityResponse, Entity::Ue));
                report(
                    answered || second.authenticated(),
                    vec![first.outcome, second.outcome],
                    format!("replayed identity request in a later session: {}", outcome_text(second.outcome)),
                    second.trace,
                )
            }
            Protocol::EpsAka => {
                let first = tb.run(0);
                let tap = tb.net.install_tap(AttackerTap::new(TapMode::Eavesdrop, Some(LinkKind::Air)));
                let crafted = ProtocolMessage::new(Entity::Mme, Entity::Ue, Body::PlainIdentityRequest)
                    .encode()
                    .expect("encodable");
                let start = tb.net.trace().len();
                let at = tb.net.now() + 4 * DEFAULT_FRESHNESS_WINDOW;
                let _ = tb.net.inject(at, Entity::Mme, Entity::Ue, crafted);
                crate::protocol::deliver_pending(&mut tb.ues[0], &mut tb.mme, &mut tb.hss, &mut tb.net);
                let leaked = !tb.net.tap(tap).matching(&digits).is_empty();
                report(
                    leaked,
                    vec![first.outcome],
                    "unauthenticated identity request answered with the identity in clear".into(),
                    tb.net.trace()[start..].to_vec(),
                )
            }
        },

        Scenario::ReplayAuthRequest => {
            let captured: Rc<RefCell<Option<Vec<u8>>>> = Rc::default();
            let armed = Rc::new(RefCell::new(true));
            let (cap, arm) = (captured.clone(), armed.clone());
            tb.net.install_tap(AttackerTap::new(
                TapMode::Mitm(Box::new(move |o| {
                    if !*arm.borrow() {
                        return MitmAction::Forward;
                    }
                    match Tag::peek(o.bytes) {
                        Some(Tag::UserAuthRequest) if o.src == Entity::Mme => {
                            *cap.borrow_mut() = Some(o.bytes.to_vec());
                            MitmAction::Forward
                        }
                        // Suppress the answer so the session never completes.
                        Some(Tag::UserAuthResponse) if o.src == Entity::Ue => MitmAction::Drop,
                        _ => MitmAction::Forward,
                    }
                })),
                Some(LinkKind::Air),
            ));
            let first = tb.run(0);
            *armed.borrow_mut() = false;
            let Some(old) = captured.borrow().clone() else {
                return Ok(report(false, vec![first.outcome], "no challenge observed".into(), first.trace));
            };
            tb.idle(10);
            tb.net.install_tap(AttackerTap::new(
                TapMode::Mitm(Box::new(move |o| {
                    if o.src == Entity::Mme && Tag::peek(o.bytes) == Some(Tag::UserAuthRequest) {
                        MitmAction::Rewrite(old.clone())
                    } else {
                        MitmAction::Forward
                    }
                })),
                Some(LinkKind::Air),
            ));
            let second = tb.run(0);
            let accepted = second.trace.iter().any(is(Tag::UserAuthResponse, Entity::Ue));
            report(
                accepted || second.authenticated(),
                vec![first.outcome, second.outcome],
                format!("captured challenge replayed in the next session: {}", outcome_text(second.outcome)),
                second.trace,
            )
        }

        Scenario::MitmRewriteAv => {
            tb.net.install_tap(AttackerTap::new(
                TapMode::Mitm(Box::new(|o| {
                    if o.src == Entity::Mme && Tag::peek(o.bytes) == Some(Tag::UserAuthRequest) {
                        let mut b = o.bytes.to_vec();
                        // First RAND byte follows the 7-byte envelope.
                        b[crate::protocol::HEADER_LEN] ^= 0xff;
                        MitmAction::Rewrite(b)
                    } else {
                        MitmAction::Forward
                    }
                })),
                Some(LinkKind::Air),
            ));
            let r = tb.run(0);
            let wrong_keys = r.authenticated() && r.ue_k_asme != r.mme_k_asme;
            let accepted = r.trace.iter().any(is(Tag::UserAuthResponse, Entity::Ue));
            report(
                wrong_keys || accepted,
                vec![r.outcome],
                format!("challenge rewritten in flight: {}", outcome_text(r.outcome)),
                r.trace,
            )
        }

        Scenario::ImpersonateWithStaleKey => {
            let stale = tb.ues[0].state().credentials.current_key().expect("provisioned key");
            let honest = tb.run(0);
            let mut state = tb.ues[0].state().clone();
            state.credentials = Credentials::Static(stale);
            let ue_cfg = Testbed::ue_config(protocol, &tb.authority, cfg.seed ^ 0x5a5a, false);
            let mut attacker = Ue::new(ue_cfg, state);
            tb.idle(10);
            let r = tb.run_with(&mut attacker);
            report(
                r.authenticated(),
                vec![honest.outcome, r.outcome],
                format!("attacker holding the previous session's root key: {}", outcome_text(r.outcome)),
                r.trace,
            )
        }
    })
}
