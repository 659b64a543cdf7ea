use std::fmt;

use super::LinkKind;
use crate::protocol::{Entity, Tag};

/// What a tap saw, before scheduling.
#[derive(Debug, Clone, Copy)]
pub struct Observed<'a> {
    pub time: u64,
    pub src: Entity,
    pub dst: Entity,
    pub link: LinkKind,
    pub bytes: &'a [u8],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MitmAction {
    Forward,
    Drop,
    Rewrite(Vec<u8>),
}

pub type RewriteRule = Box<dyn FnMut(&Observed) -> MitmAction>;

pub enum TapMode {
    /// Record only.
    Eavesdrop,
    /// Record messages with `tag` and deliver a copy again `delay` later.
    Replay { tag: Tag, delay: u64 },
    /// Place crafted bytes on the wire once, at install time.
    Inject { at: u64, src: Entity, dst: Entity, bytes: Vec<u8> },
    /// Decide per message whether to forward, drop or rewrite.
    Mitm(RewriteRule),
}

impl fmt::Debug for TapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TapMode::Eavesdrop => f.write_str("Eavesdrop"),
            TapMode::Replay { tag, delay } => write!(f, "Replay({tag:?}, {delay})"),
            TapMode::Inject { at, src, dst, .. } => write!(f, "Inject({at}, {src}→{dst})"),
            TapMode::Mitm(_) => f.write_str("Mitm(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Captured {
    pub time: u64,
    pub src: Entity,
    pub dst: Entity,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapId(pub(super) usize);

#[derive(Debug)]
pub struct AttackerTap {
    pub mode: TapMode,
    /// Restricts the tap to one link kind; `None` sees everything.
    pub link: Option<LinkKind>,
    pub captured: Vec<Captured>,
}

impl AttackerTap {
    pub fn new(mode: TapMode, link: Option<LinkKind>) -> Self {
        Self { mode, link, captured: Vec::new() }
    }

    pub(super) fn observe(&mut self, obs: &Observed) -> MitmAction {
        let record = |captured: &mut Vec<Captured>| {
            captured.push(Captured { time: obs.time, src: obs.src, dst: obs.dst, bytes: obs.bytes.to_vec() })
        };
        match &mut self.mode {
            TapMode::Eavesdrop => {
                record(&mut self.captured);
                MitmAction::Forward
            }
            TapMode::Replay { tag, .. } => {
                if Tag::peek(obs.bytes) == Some(*tag) {
                    record(&mut self.captured);
                }
                MitmAction::Forward
            }
            TapMode::Inject { .. } => MitmAction::Forward,
            TapMode::Mitm(rule) => {
                let action = rule(obs);
                if action != MitmAction::Forward {
                    record(&mut self.captured);
                }
                action
            }
        }
    }

    /// Captured messages that contain `needle`.
    pub fn matching(&self, needle: &[u8]) -> Vec<&Captured> {
        self.captured
            .iter()
            .filter(|c| !needle.is_empty() && c.bytes.windows(needle.len()).any(|w| w == needle))
            .collect()
    }
}
