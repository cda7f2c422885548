use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use agx_core::{ElementId, Store};

use crate::message::{BusMessage, ChangeSet, Corr, Payload};

/// What a module declares when it joins the bus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDescriptor {
    pub name: String,
    /// Section the module stores its knowledge in. Either a fresh name, which
    /// the module then owns, or a shared section listing it for access.
    pub section: String,
    /// Fragment kinds the module wants broadcast; `None` takes everything.
    /// Broadcasts that carry no fragment always pass.
    pub subscriptions: Option<BTreeSet<String>>,
}

impl ModuleDescriptor {
    pub fn new(name: &str, section: &str) -> Self {
        ModuleDescriptor {
            name: name.to_string(),
            section: section.to_string(),
            subscriptions: None,
        }
    }

    pub fn subscribe<I, S>(mut self, kinds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.subscriptions = Some(kinds.into_iter().map(Into::into).collect());
        self
    }

    pub fn accepts(&self, payload: &Payload) -> bool {
        match (&self.subscriptions, payload.fragment()) {
            (Some(kinds), Some(f)) => kinds.contains(&f.kind),
            _ => true,
        }
    }

    /// Filter as written in transcripts.
    pub fn filter_ref(&self) -> String {
        match &self.subscriptions {
            None => "all".into(),
            Some(kinds) => {
                let list: Vec<&str> = kinds.iter().map(String::as_str).collect();
                format!("kinds:{}", list.join(","))
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModuleHandle(pub usize);

/// Deferred effect requested by a handler. The bus performs them in order
/// once the handler returns.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Publish(Payload),
    Request {
        corr: Corr,
        query: String,
        target: Option<String>,
        timeout: u64,
    },
    Respond {
        corr: Corr,
        payload: Payload,
    },
    Propose {
        corr: Corr,
        section: String,
        changes: ChangeSet,
    },
    WriteSection(ChangeSet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SectionOwner {
    Module(String),
    Shared { access: BTreeSet<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub owner: SectionOwner,
    /// Metavertex holding the section's content in the bus store.
    pub vertex: ElementId,
}

/// A handler's view of the bus.
pub struct Ctx<'a> {
    pub(crate) me: &'a str,
    pub(crate) tick: u64,
    pub(crate) store: &'a Store,
    pub(crate) sections: &'a BTreeMap<String, Section>,
    pub(crate) next_corr: &'a mut Corr,
    pub(crate) actions: Vec<Action>,
}

impl<'a> Ctx<'a> {
    pub fn me(&self) -> &str {
        self.me
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Read access to all section content.
    pub fn store(&self) -> &Store {
        self.store
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    fn corr(&mut self) -> Corr {
        *self.next_corr += 1;
        *self.next_corr
    }

    pub fn publish(&mut self, payload: Payload) {
        self.actions.push(Action::Publish(payload));
    }

    pub fn request(&mut self, query: &str, target: Option<&str>, timeout: u64) -> Corr {
        let corr = self.corr();
        self.actions.push(Action::Request {
            corr,
            query: query.to_string(),
            target: target.map(str::to_string),
            timeout,
        });
        corr
    }

    pub fn respond(&mut self, corr: Corr, payload: Payload) {
        self.actions.push(Action::Respond { corr, payload });
    }

    pub fn propose(&mut self, section: &str, changes: ChangeSet) -> Corr {
        let corr = self.corr();
        self.actions.push(Action::Propose {
            corr,
            section: section.to_string(),
            changes,
        });
        corr
    }

    /// Writes to the module's own section.
    pub fn write_section(&mut self, changes: ChangeSet) {
        self.actions.push(Action::WriteSection(changes));
    }
}

/// Handlers run to completion per delivery and must be deterministic given
/// the module's state and the message.
#[allow(unused_variables)]
pub trait BusModule: Any {
    fn on_tick(&mut self, ctx: &mut Ctx) {}

    fn on_broadcast(&mut self, ctx: &mut Ctx, msg: &BusMessage) {}

    fn on_request(&mut self, ctx: &mut Ctx, msg: &BusMessage) {}

    fn on_response(&mut self, ctx: &mut Ctx, msg: &BusMessage) {}

    fn on_timeout(&mut self, ctx: &mut Ctx, corr: Corr) {}

    /// Votes on a proposed change to a shared section.
    fn on_consent_poll(&mut self, ctx: &mut Ctx, msg: &BusMessage) -> bool {
        true
    }

    fn on_commit(&mut self, ctx: &mut Ctx, msg: &BusMessage) {}

    fn on_abort(&mut self, ctx: &mut Ctx, msg: &BusMessage) {}
}

/// A module that ignores everything and approves every poll.
#[derive(Clone, Debug, Default)]
pub struct Passive;

impl BusModule for Passive {}
