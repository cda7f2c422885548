use std::any::Any;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use agx_core::id::is_valid_token;
use agx_core::{ElementId, ElementKind, EqualityMode, Store, StoreError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::message::{BusMessage, Change, ChangeSet, Corr, MessageKind, Payload};
use crate::module::{Action, BusModule, Ctx, ModuleDescriptor, ModuleHandle, Section, SectionOwner};
use crate::transcript::{self, Record, Transcript, BUS, PUBLISHED};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BusError {
    #[error("module {0:?} is already registered")]
    DuplicateModule(String),
    #[error("section {0:?} is owned by another module")]
    SectionConflict(String),
    #[error("invalid module handle {0}")]
    InvalidHandle(usize),
    #[error("no module named {0:?}")]
    UnknownTarget(String),
    #[error("no open request with correlation id {0}")]
    UnknownCorrelation(Corr),
    #[error("module {module:?} is not on the access list of {section:?}")]
    NotOnAccessList { module: String, section: String },
    #[error("no section named {0:?}")]
    NoSuchSection(String),
    #[error("module {module:?} does not own section {section:?}")]
    NotOwner { module: String, section: String },
    #[error("invalid name {0:?}")]
    InvalidName(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type BusResult<T> = Result<T, BusError>;

/// Order in which publisher queues are served within a tick.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Registration order, the bus itself last.
    Deterministic,
    /// A fresh permutation per tick drawn from a seeded generator.
    Randomized { seed: u64 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Committed,
    Aborted,
}

struct Slot {
    desc: ModuleDescriptor,
    module: Box<dyn BusModule>,
}

struct Queued {
    msg: BusMessage,
    recipients: Vec<usize>,
}

struct Pending {
    requester: usize,
    deadline: u64,
    resolved: bool,
}

struct Round {
    section: String,
    changes: ChangeSet,
    voters: BTreeSet<usize>,
    approvals: BTreeSet<usize>,
    deadline: u64,
    outcome: Option<Outcome>,
}

/// In-process knowledge bus. All section content lives in one store, one
/// metavertex per section.
pub struct Bus {
    mode: Mode,
    rng: Option<ChaCha8Rng>,
    store: Store,
    modules: Vec<Slot>,
    names: BTreeMap<String, usize>,
    sections: BTreeMap<String, Section>,
    queues: Vec<VecDeque<Queued>>,
    bus_queue: VecDeque<Queued>,
    tick: u64,
    seq: u64,
    next_corr: Corr,
    requests: BTreeMap<Corr, Pending>,
    rounds: BTreeMap<Corr, Round>,
    consent_timeout: u64,
    transcript: Transcript,
    diagnostics: Vec<String>,
}

impl std::fmt::Debug for Bus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bus")
            .field("mode", &self.mode)
            .field("tick", &self.tick)
            .field("modules", &self.names.keys().collect::<Vec<_>>())
            .field("records", &self.transcript.len())
            .finish_non_exhaustive()
    }
}

/// Token of the metavertex holding a section.
pub fn section_token(name: &str) -> String {
    format!("section-{name}")
}

impl Bus {
    pub fn new(mode: Mode) -> Self {
        Bus {
            mode,
            rng: match mode {
                Mode::Deterministic => None,
                Mode::Randomized { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
            store: Store::new(),
            modules: Vec::new(),
            names: BTreeMap::new(),
            sections: BTreeMap::new(),
            queues: Vec::new(),
            bus_queue: VecDeque::new(),
            tick: 0,
            seq: 0,
            next_corr: 0,
            requests: BTreeMap::new(),
            rounds: BTreeMap::new(),
            consent_timeout: 8,
            transcript: Transcript::default(),
            diagnostics: Vec::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Ticks a consent round may stay undecided before it aborts.
    pub fn set_consent_timeout(&mut self, ticks: u64) {
        self.consent_timeout = ticks;
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Failed handler actions, in order.
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    /// ByValue canonical form of a section's content.
    pub fn section_form(&self, name: &str) -> BusResult<String> {
        let s = self
            .sections
            .get(name)
            .ok_or_else(|| BusError::NoSuchSection(name.to_string()))?;
        Ok(self.store.canonical_form(s.vertex, EqualityMode::ByValue)?)
    }

    pub fn handle(&self, name: &str) -> Option<ModuleHandle> {
        self.names.get(name).copied().map(ModuleHandle)
    }

    pub fn descriptor(&self, h: ModuleHandle) -> BusResult<&ModuleDescriptor> {
        self.slot(h).map(|s| &s.desc)
    }

    /// The module behind `h`, if it has type `T`.
    pub fn module<T: BusModule>(&self, h: ModuleHandle) -> Option<&T> {
        let m: &dyn Any = self.modules.get(h.0)?.module.as_ref();
        m.downcast_ref()
    }

    pub fn round_outcome(&self, corr: Corr) -> Option<Outcome> {
        self.rounds.get(&corr).and_then(|r| r.outcome)
    }

    pub fn request_resolved(&self, corr: Corr) -> Option<bool> {
        self.requests.get(&corr).map(|p| p.resolved)
    }

    /// No queued messages, open requests or undecided rounds.
    pub fn is_idle(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
            && self.bus_queue.is_empty()
            && self.requests.values().all(|p| p.resolved)
            && self.rounds.values().all(|r| r.outcome.is_some())
    }

    fn slot(&self, h: ModuleHandle) -> BusResult<&Slot> {
        self.modules.get(h.0).ok_or(BusError::InvalidHandle(h.0))
    }

    fn check_name(name: &str) -> BusResult<()> {
        if !is_valid_token(name) || name == BUS || !is_valid_token(&section_token(name)) {
            return Err(BusError::InvalidName(name.to_string()));
        }
        Ok(())
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn record(
        &mut self,
        seq: u64,
        from: &str,
        to: &str,
        kind: &str,
        corr: Option<Corr>,
        payload_ref: Option<String>,
    ) {
        self.transcript.records.push(Record {
            seq,
            tick: self.tick,
            from: from.to_string(),
            to: to.to_string(),
            kind: kind.to_string(),
            corr,
            payload_ref,
        });
    }

    fn create_section(&mut self, name: &str, owner: SectionOwner) -> BusResult<()> {
        let vertex = self
            .store
            .create_element(ElementKind::MetaVertex, Some(&section_token(name)))?;
        self.sections.insert(
            name.to_string(),
            Section {
                name: name.to_string(),
                owner,
                vertex,
            },
        );
        Ok(())
    }

    /// Declares a section writable only through unanimous consent of the
    /// modules in `access`.
    pub fn declare_shared<I, S>(&mut self, name: &str, access: I) -> BusResult<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::check_name(name)?;
        if self.sections.contains_key(name) {
            return Err(BusError::SectionConflict(name.to_string()));
        }
        let access: BTreeSet<String> = access.into_iter().map(Into::into).collect();
        let list: Vec<&str> = access.iter().map(String::as_str).collect();
        let payload_ref = format!("access:{}", list.join(","));
        self.create_section(name, SectionOwner::Shared { access })?;
        let seq = self.next_seq();
        self.record(seq, BUS, name, transcript::DECLARE_SHARED, None, Some(payload_ref));
        Ok(())
    }

    pub fn register(
        &mut self,
        desc: ModuleDescriptor,
        module: Box<dyn BusModule>,
    ) -> BusResult<ModuleHandle> {
        Self::check_name(&desc.name)?;
        Self::check_name(&desc.section)?;
        if self.names.contains_key(&desc.name) {
            return Err(BusError::DuplicateModule(desc.name));
        }
        match self.sections.get(&desc.section).map(|s| &s.owner) {
            None => self.create_section(&desc.section, SectionOwner::Module(desc.name.clone()))?,
            Some(SectionOwner::Shared { access }) if access.contains(&desc.name) => {}
            Some(_) => return Err(BusError::SectionConflict(desc.section)),
        }
        let i = self.modules.len();
        self.names.insert(desc.name.clone(), i);
        self.queues.push(VecDeque::new());
        let seq = self.next_seq();
        self.record(
            seq,
            &desc.name,
            &desc.section,
            transcript::REGISTER,
            None,
            Some(desc.filter_ref()),
        );
        self.modules.push(Slot { desc, module });
        Ok(ModuleHandle(i))
    }

    fn enqueue(
        &mut self,
        publisher: Option<usize>,
        kind: MessageKind,
        corr: Option<Corr>,
        payload: Payload,
        section: Option<String>,
        recipients: Vec<usize>,
    ) {
        let seq = self.next_seq();
        let from = publisher.map_or(BUS.to_string(), |i| self.modules[i].desc.name.clone());
        let names: Vec<&str> = recipients
            .iter()
            .map(|&r| self.modules[r].desc.name.as_str())
            .collect();
        let to = format!("{PUBLISHED}{}", names.join(","));
        let payload_ref = payload.reference();
        self.record(seq, &from, &to, kind.name(), corr, Some(payload_ref));
        let q = Queued {
            msg: BusMessage {
                seq,
                from,
                kind,
                corr,
                payload,
                section,
            },
            recipients,
        };
        match publisher {
            Some(i) => self.queues[i].push_back(q),
            None => self.bus_queue.push_back(q),
        }
    }

    /// Broadcasts `payload` to every module whose filter accepts it,
    /// the publisher included.
    pub fn publish(&mut self, h: ModuleHandle, payload: Payload) -> BusResult<()> {
        self.slot(h)?;
        self.perform(h.0, Action::Publish(payload))
    }

    /// Sends a query to `target`, or to every other module. The request
    /// resolves on the first Response delivered by the end of tick
    /// `now + timeout`; otherwise the requester gets a Timeout then.
    pub fn request(
        &mut self,
        h: ModuleHandle,
        query: &str,
        target: Option<&str>,
        timeout: u64,
    ) -> BusResult<Corr> {
        self.slot(h)?;
        self.next_corr += 1;
        let corr = self.next_corr;
        self.perform(
            h.0,
            Action::Request {
                corr,
                query: query.to_string(),
                target: target.map(str::to_string),
                timeout,
            },
        )?;
        Ok(corr)
    }

    pub fn respond(&mut self, h: ModuleHandle, corr: Corr, payload: Payload) -> BusResult<()> {
        self.slot(h)?;
        self.perform(h.0, Action::Respond { corr, payload })
    }

    /// Opens a consent round on a shared section. The outcome is known once
    /// every poll recipient has voted, a vote rejects, or the round times out.
    pub fn propose_shared_change(
        &mut self,
        h: ModuleHandle,
        section: &str,
        changes: ChangeSet,
    ) -> BusResult<Corr> {
        self.slot(h)?;
        self.next_corr += 1;
        let corr = self.next_corr;
        self.perform(
            h.0,
            Action::Propose {
                corr,
                section: section.to_string(),
                changes,
            },
        )?;
        Ok(corr)
    }

    /// Writes to the section `h` owns.
    pub fn write_section(&mut self, h: ModuleHandle, changes: ChangeSet) -> BusResult<()> {
        self.slot(h)?;
        self.perform(h.0, Action::WriteSection(changes))
    }

    fn perform(&mut self, i: usize, action: Action) -> BusResult<()> {
        let me = self.modules[i].desc.name.clone();
        match action {
            Action::Publish(payload) => {
                let recipients = (0..self.modules.len())
                    .filter(|&r| self.modules[r].desc.accepts(&payload))
                    .collect();
                self.enqueue(Some(i), MessageKind::Broadcast, None, payload, None, recipients);
            }
            Action::Request {
                corr,
                query,
                target,
                timeout,
            } => {
                let recipients = match target {
                    Some(t) => vec![*self.names.get(&t).ok_or(BusError::UnknownTarget(t))?],
                    None => (0..self.modules.len()).filter(|&r| r != i).collect(),
                };
                self.requests.insert(
                    corr,
                    Pending {
                        requester: i,
                        deadline: self.tick + timeout,
                        resolved: false,
                    },
                );
                self.enqueue(
                    Some(i),
                    MessageKind::Request,
                    Some(corr),
                    Payload::Query(query),
                    None,
                    recipients,
                );
            }
            Action::Respond { corr, payload } => {
                let requester = self
                    .requests
                    .get(&corr)
                    .ok_or(BusError::UnknownCorrelation(corr))?
                    .requester;
                self.enqueue(
                    Some(i),
                    MessageKind::Response,
                    Some(corr),
                    payload,
                    None,
                    vec![requester],
                );
            }
            Action::Propose {
                corr,
                section,
                changes,
            } => {
                let s = self
                    .sections
                    .get(&section)
                    .ok_or_else(|| BusError::NoSuchSection(section.clone()))?;
                let voters: BTreeSet<usize> = match &s.owner {
                    SectionOwner::Shared { access } if access.contains(&me) => access
                        .iter()
                        .filter_map(|n| self.names.get(n).copied())
                        .collect(),
                    _ => {
                        return Err(BusError::NotOnAccessList {
                            module: me,
                            section,
                        })
                    }
                };
                self.rounds.insert(
                    corr,
                    Round {
                        section: section.clone(),
                        changes: changes.clone(),
                        voters: voters.clone(),
                        approvals: BTreeSet::new(),
                        deadline: self.tick + self.consent_timeout,
                        outcome: None,
                    },
                );
                self.enqueue(
                    Some(i),
                    MessageKind::ConsentPoll,
                    Some(corr),
                    Payload::Changes(changes),
                    Some(section),
                    voters.into_iter().collect(),
                );
            }
            Action::WriteSection(changes) => {
                let section = self.modules[i].desc.section.clone();
                let s = &self.sections[&section];
                if s.owner != SectionOwner::Module(me.clone()) {
                    return Err(BusError::NotOwner {
                        module: me,
                        section,
                    });
                }
                let vertex = s.vertex;
                self.apply_changes(vertex, &changes)?;
                let seq = self.next_seq();
                let r = Payload::Changes(changes).reference();
                self.record(seq, &me, &section, transcript::SECTION_WRITE, None, Some(r));
            }
        }
        Ok(())
    }

    /// Applies all of `changes` or none of them.
    fn apply_changes(&mut self, vertex: ElementId, changes: &ChangeSet) -> BusResult<()> {
        let mut scratch = self.store.clone();
        for c in changes {
            match c {
                Change::SetAttribute { name, value } => {
                    scratch.set_attribute(vertex, name, value.clone())?;
                }
                Change::AddFragment { fragment } => {
                    let v = scratch.create_element(ElementKind::Vertex, None)?;
                    scratch.attach_fragment(v, fragment.clone())?;
                    scratch.add_member(vertex, v)?;
                }
            }
        }
        self.store = scratch;
        Ok(())
    }

    /// Runs a handler of module `i` and performs the actions it queued.
    fn invoke<R>(&mut self, i: usize, f: impl FnOnce(&mut dyn BusModule, &mut Ctx) -> R) -> R {
        let Slot { desc, module } = &mut self.modules[i];
        let mut ctx = Ctx {
            me: &desc.name,
            tick: self.tick,
            store: &self.store,
            sections: &self.sections,
            next_corr: &mut self.next_corr,
            actions: Vec::new(),
        };
        let out = f(module.as_mut(), &mut ctx);
        let actions = ctx.actions;
        for a in actions {
            if let Err(e) = self.perform(i, a) {
                let name = &self.modules[i].desc.name;
                self.diagnostics
                    .push(format!("tick {}: {name}: {e}", self.tick));
            }
        }
        out
    }

    /// Advances one tick: every module's `on_tick`, then delivery of the
    /// head of each publisher queue, then expiry of requests and rounds.
    /// Returns the records the tick produced.
    pub fn step(&mut self) -> Vec<Record> {
        self.tick += 1;
        let start = self.transcript.len();
        for i in 0..self.modules.len() {
            self.invoke(i, |m, ctx| m.on_tick(ctx));
        }
        let mut order: Vec<Option<usize>> = (0..self.modules.len()).map(Some).collect();
        order.push(None);
        if let Some(rng) = self.rng.as_mut() {
            order.shuffle(rng);
        }
        let heads: Vec<Queued> = order
            .into_iter()
            .filter_map(|p| match p {
                Some(i) => self.queues[i].pop_front(),
                None => self.bus_queue.pop_front(),
            })
            .collect();
        for q in heads {
            for &r in &q.recipients {
                self.deliver(r, &q.msg);
            }
        }
        self.expire();
        self.transcript.records[start..].to_vec()
    }

    /// Runs exactly `ticks` ticks.
    pub fn run(&mut self, ticks: u64) -> &Transcript {
        for _ in 0..ticks {
            self.step();
        }
        &self.transcript
    }

    /// Steps until the bus is idle or `max_ticks` have passed.
    pub fn run_until_idle(&mut self, max_ticks: u64) -> &Transcript {
        for _ in 0..max_ticks {
            if self.is_idle() {
                break;
            }
            self.step();
        }
        &self.transcript
    }

    fn deliver(&mut self, r: usize, msg: &BusMessage) {
        let to = self.modules[r].desc.name.clone();
        let payload_ref = Some(msg.payload.reference());
        if msg.kind == MessageKind::Response {
            let corr = msg.corr.expect("responses carry a correlation id");
            let pending = self.requests.get_mut(&corr).expect("checked at publish");
            if pending.resolved {
                self.record(
                    msg.seq,
                    &msg.from,
                    &to,
                    transcript::DROPPED,
                    msg.corr,
                    Some("DuplicateResponse".into()),
                );
                self.diagnostics.push(format!(
                    "tick {}: dropped response {} from {} for corr {corr}",
                    self.tick, msg.seq, msg.from
                ));
                return;
            }
            pending.resolved = true;
        }
        self.record(msg.seq, &msg.from, &to, msg.kind.name(), msg.corr, payload_ref);
        match msg.kind {
            MessageKind::Broadcast => self.invoke(r, |m, ctx| m.on_broadcast(ctx, msg)),
            MessageKind::Request => self.invoke(r, |m, ctx| m.on_request(ctx, msg)),
            MessageKind::Response => self.invoke(r, |m, ctx| m.on_response(ctx, msg)),
            MessageKind::Commit => self.invoke(r, |m, ctx| m.on_commit(ctx, msg)),
            MessageKind::Abort => self.invoke(r, |m, ctx| m.on_abort(ctx, msg)),
            MessageKind::ConsentVote => {}
            MessageKind::ConsentPoll => {
                let approve = self.invoke(r, |m, ctx| m.on_consent_poll(ctx, msg));
                let seq = self.next_seq();
                let vote = if approve { "approve" } else { "reject" };
                self.record(
                    seq,
                    &to,
                    BUS,
                    MessageKind::ConsentVote.name(),
                    msg.corr,
                    Some(vote.into()),
                );
                self.tally(msg.corr.expect("polls carry a correlation id"), r, approve);
            }
        }
    }

    fn tally(&mut self, corr: Corr, voter: usize, approve: bool) {
        let round = self.rounds.get_mut(&corr).expect("polls open a round");
        if round.outcome.is_some() {
            return;
        }
        if !approve {
            self.decide(corr, Outcome::Aborted);
            return;
        }
        round.approvals.insert(voter);
        if round.approvals == round.voters {
            self.decide(corr, Outcome::Committed);
        }
    }

    fn decide(&mut self, corr: Corr, mut outcome: Outcome) {
        let round = &self.rounds[&corr];
        let (section, changes) = (round.section.clone(), round.changes.clone());
        let voters: Vec<usize> = round.voters.iter().copied().collect();
        if outcome == Outcome::Committed {
            let vertex = self.sections[&section].vertex;
            match self.apply_changes(vertex, &changes) {
                Ok(()) => {
                    let seq = self.next_seq();
                    let r = Payload::Changes(changes.clone()).reference();
                    self.record(seq, BUS, &section, transcript::SECTION_WRITE, Some(corr), Some(r));
                }
                Err(e) => {
                    self.diagnostics
                        .push(format!("tick {}: round {corr} not applied: {e}", self.tick));
                    outcome = Outcome::Aborted;
                }
            }
        }
        self.rounds.get_mut(&corr).expect("round exists").outcome = Some(outcome);
        let (kind, payload) = match outcome {
            Outcome::Committed => (MessageKind::Commit, Payload::Changes(changes)),
            Outcome::Aborted => (MessageKind::Abort, Payload::Empty),
        };
        self.enqueue(None, kind, Some(corr), payload, Some(section), voters);
    }

    fn expire(&mut self) {
        let now = self.tick;
        let late: Vec<(Corr, usize)> = self
            .requests
            .iter()
            .filter(|(_, p)| !p.resolved && p.deadline <= now)
            .map(|(&c, p)| (c, p.requester))
            .collect();
        for (corr, requester) in late {
            self.requests.get_mut(&corr).expect("listed").resolved = true;
            let seq = self.next_seq();
            let to = self.modules[requester].desc.name.clone();
            self.record(seq, BUS, &to, transcript::TIMEOUT, Some(corr), None);
            self.invoke(requester, |m, ctx| m.on_timeout(ctx, corr));
        }
        let stale: Vec<Corr> = self
            .rounds
            .iter()
            .filter(|(_, r)| r.outcome.is_none() && r.deadline <= now)
            .map(|(&c, _)| c)
            .collect();
        for corr in stale {
            self.decide(corr, Outcome::Aborted);
        }
    }
}
