//! Stub module with the four minimal-consciousness capabilities: it knows
//! its own state, tracks what it observes, answers questions about itself
//! and broadcasts its state whenever that state is written down.

use agx_core::{KnowledgeFragment, Value};

use crate::message::{BusMessage, Change, Payload};
use crate::module::{BusModule, Ctx};

/// Query text the demo module answers with its state.
pub const STATE_QUERY: &str = "state";

/// Fragment kind of the state it publishes.
pub const STATE_KIND: &str = "frame";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemoModule {
    /// Status broadcast period in ticks.
    pub period: u64,
    /// Foreign broadcasts observed between section writes.
    pub write_every: u64,
    pub observed: u64,
    pub writes: u64,
    pub answered: u64,
    pub statuses: u64,
    /// One line per action taken, in order.
    pub log: Vec<String>,
}

impl DemoModule {
    pub fn new(period: u64, write_every: u64) -> Self {
        DemoModule {
            period: period.max(1),
            write_every: write_every.max(1),
            observed: 0,
            writes: 0,
            answered: 0,
            statuses: 0,
            log: Vec::new(),
        }
    }

    pub fn state(&self, name: &str) -> KnowledgeFragment {
        let body = serde_json::json!({
            "module": name,
            "observed": self.observed,
            "writes": self.writes,
            "answered": self.answered,
            "statuses": self.statuses,
        });
        KnowledgeFragment::new(STATE_KIND, "application/json", body.to_string())
    }

    fn broadcast_state(&mut self, ctx: &mut Ctx, why: &str) {
        let frag = self.state(ctx.me());
        self.log.push(format!("{} broadcast-state {why}", ctx.tick()));
        ctx.publish(Payload::Fragment(frag));
    }
}

impl BusModule for DemoModule {
    fn on_tick(&mut self, ctx: &mut Ctx) {
        if ctx.tick().is_multiple_of(self.period) {
            self.statuses += 1;
            self.broadcast_state(ctx, "status");
        }
    }

    fn on_broadcast(&mut self, ctx: &mut Ctx, msg: &BusMessage) {
        if msg.from == ctx.me() {
            return;
        }
        self.observed += 1;
        self.log
            .push(format!("{} observe {} {}", ctx.tick(), msg.from, msg.seq));
        if self.observed.is_multiple_of(self.write_every) {
            self.writes += 1;
            ctx.write_section(vec![Change::SetAttribute {
                name: "observed".into(),
                value: Value::Int(self.observed as i64),
            }]);
            self.log.push(format!("{} write observed={}", ctx.tick(), self.observed));
            self.broadcast_state(ctx, "self-inform");
        }
    }

    fn on_request(&mut self, ctx: &mut Ctx, msg: &BusMessage) {
        if msg.payload != Payload::Query(STATE_QUERY.into()) {
            return;
        }
        let corr = msg.corr.expect("requests carry a correlation id");
        self.answered += 1;
        self.log
            .push(format!("{} answer {} corr={corr}", ctx.tick(), msg.from));
        let frag = self.state(ctx.me());
        ctx.respond(corr, Payload::Fragment(frag));
    }
}
