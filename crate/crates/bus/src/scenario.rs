//! Randomly generated bus workloads driven by scripted modules.

use std::collections::BTreeMap;

use agx_core::{KnowledgeFragment, Value};
use rand::Rng;

use crate::bus::{Bus, BusResult, Mode};
use crate::demo::{DemoModule, STATE_QUERY};
use crate::message::{BusMessage, Change, Payload};
use crate::module::{BusModule, Ctx, ModuleDescriptor};
use crate::transcript::{self, Transcript, BUS};

/// Fragment kinds scripted modules publish and subscribe to.
pub const KINDS: [&str; 3] = ["text", "image", "table"];

/// Name of the shared section every scenario declares.
pub const SHARED: &str = "common";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Planned {
    Broadcast { kind: String },
    Request { target: Option<String>, timeout: u64 },
    Propose,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptSpec {
    pub name: String,
    pub subscriptions: Option<Vec<String>>,
    pub plan: BTreeMap<u64, Vec<Planned>>,
    pub responds: bool,
    /// Rejects polls whose correlation id is a multiple of this.
    pub reject_modulus: Option<u64>,
}

/// A module that follows a fixed plan and reacts by fixed rules.
#[derive(Clone, Debug)]
pub struct Scripted {
    spec: ScriptSpec,
    counter: u64,
}

impl Scripted {
    pub fn new(spec: ScriptSpec) -> Self {
        Scripted { spec, counter: 0 }
    }

    fn fragment(&mut self, kind: &str, me: &str) -> KnowledgeFragment {
        self.counter += 1;
        KnowledgeFragment::new(kind, "text/plain", format!("{me} #{}", self.counter))
    }
}

impl BusModule for Scripted {
    fn on_tick(&mut self, ctx: &mut Ctx) {
        let Some(plan) = self.spec.plan.get(&ctx.tick()).cloned() else {
            return;
        };
        let me = ctx.me().to_string();
        for p in plan {
            match p {
                Planned::Broadcast { kind } => {
                    let f = self.fragment(&kind, &me);
                    ctx.publish(Payload::Fragment(f));
                }
                Planned::Request { target, timeout } => {
                    ctx.request(STATE_QUERY, target.as_deref(), timeout);
                }
                Planned::Propose => {
                    self.counter += 1;
                    let change = Change::SetAttribute {
                        name: format!("by-{me}"),
                        value: Value::Int(self.counter as i64),
                    };
                    ctx.propose(SHARED, vec![change]);
                }
                Planned::Write => {
                    self.counter += 1;
                    ctx.write_section(vec![Change::SetAttribute {
                        name: "counter".into(),
                        value: Value::Int(self.counter as i64),
                    }]);
                }
            }
        }
    }

    fn on_request(&mut self, ctx: &mut Ctx, msg: &BusMessage) {
        if self.spec.responds {
            let me = ctx.me().to_string();
            let f = self.fragment("text", &me);
            ctx.respond(msg.corr.expect("requests carry a correlation id"), Payload::Fragment(f));
        }
    }

    fn on_consent_poll(&mut self, _ctx: &mut Ctx, msg: &BusMessage) -> bool {
        let corr = msg.corr.unwrap_or(0);
        !self.spec.reject_modulus.is_some_and(|m| corr.is_multiple_of(m))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub modules: Vec<ScriptSpec>,
    /// Modules with access to the shared section.
    pub access: Vec<String>,
    /// Ticks during which plans fire.
    pub horizon: u64,
    /// Adds a demo module named `demo` with this status period and write
    /// period.
    pub demo: Option<(u64, u64)>,
}

impl Scenario {
    /// Between 2 and `max_modules` scripted modules with about `actions`
    /// planned actions in total.
    pub fn random(rng: &mut impl Rng, max_modules: usize, actions: usize) -> Self {
        let n = rng.gen_range(2..=max_modules.max(2));
        let horizon = rng.gen_range(5..=30);
        Self::generate(rng, n, actions, horizon)
    }

    /// Exactly `n` scripted modules (at least one) with `actions` planned
    /// actions spread over ticks `1..=horizon`.
    pub fn generate(rng: &mut impl Rng, n: usize, actions: usize, horizon: u64) -> Self {
        let n = n.max(1);
        let horizon = horizon.max(1);
        let names: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let mut modules: Vec<ScriptSpec> = names
            .iter()
            .map(|name| ScriptSpec {
                name: name.clone(),
                subscriptions: rng.gen_bool(0.4).then(|| {
                    KINDS
                        .iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .map(|k| k.to_string())
                        .collect()
                }),
                plan: BTreeMap::new(),
                responds: false,
                reject_modulus: rng.gen_bool(0.3).then(|| rng.gen_range(2..=4)),
            })
            .collect();
        // At most three responders, which bounds the fan-in of untargeted requests.
        for _ in 0..3 {
            let i = rng.gen_range(0..n);
            modules[i].responds = true;
        }
        let access: Vec<String> = names.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        for _ in 0..actions {
            let i = rng.gen_range(0..n);
            let tick = rng.gen_range(1..=horizon);
            let planned = match rng.gen_range(0..10) {
                0..=4 => Planned::Broadcast {
                    kind: KINDS[rng.gen_range(0..KINDS.len())].to_string(),
                },
                5..=6 => Planned::Request {
                    target: rng
                        .gen_bool(0.5)
                        .then(|| names[rng.gen_range(0..n)].clone()),
                    timeout: rng.gen_range(1..=6),
                },
                7..=8 if access.contains(&names[i]) => Planned::Propose,
                _ => Planned::Write,
            };
            modules[i].plan.entry(tick).or_default().push(planned);
        }
        Scenario {
            modules,
            access,
            horizon,
            demo: None,
        }
    }

    /// Like [`Self::random`], plus a demo module that receives state
    /// requests and broadcasts.
    pub fn random_with_demo(rng: &mut impl Rng, max_modules: usize, actions: usize) -> Self {
        let s = Self::random(rng, max_modules, actions);
        s.with_demo(rng)
    }

    /// Adds the demo module and a few state requests addressed to it.
    pub fn with_demo(mut self, rng: &mut impl Rng) -> Self {
        let s = &mut self;
        s.demo = Some((rng.gen_range(2..=6), rng.gen_range(1..=3)));
        for _ in 0..rng.gen_range(3..=10) {
            let i = rng.gen_range(0..s.modules.len());
            let tick = rng.gen_range(1..=s.horizon);
            s.modules[i].plan.entry(tick).or_default().push(Planned::Request {
                target: Some("demo".into()),
                timeout: 4,
            });
        }
        self
    }

    pub fn build(&self, mode: Mode) -> BusResult<Bus> {
        let mut bus = Bus::new(mode);
        bus.declare_shared(SHARED, self.access.iter().cloned())?;
        for spec in &self.modules {
            let mut d = ModuleDescriptor::new(&spec.name, &format!("own-{}", spec.name));
            if let Some(s) = &spec.subscriptions {
                d = d.subscribe(s.iter().cloned());
            }
            bus.register(d, Box::new(Scripted::new(spec.clone())))?;
        }
        if let Some((period, every)) = self.demo {
            bus.register(
                ModuleDescriptor::new("demo", "own-demo"),
                Box::new(DemoModule::new(period, every)),
            )?;
        }
        Ok(bus)
    }
}

/// Outcome of running a scenario to quiescence.
#[derive(Debug)]
pub struct Run {
    pub bus: Bus,
    /// Ticks in which the shared section changed without a committed round
    /// writing it in that same tick.
    pub unexplained_changes: Vec<u64>,
    /// Ticks in which a committed write left the section unchanged.
    pub silent_commits: Vec<u64>,
}

impl Run {
    pub fn transcript(&self) -> &Transcript {
        self.bus.transcript()
    }
}

/// Runs the plan horizon and then until idle, snapshotting the shared
/// section around every tick.
pub fn run_scenario(s: &Scenario, mode: Mode) -> BusResult<Run> {
    let mut bus = s.build(mode)?;
    let mut unexplained = Vec::new();
    let mut silent = Vec::new();
    let mut before = bus.section_form(SHARED)?;
    let limit = s.horizon + 200;
    while bus.tick() < limit && (bus.tick() < s.horizon || !bus.is_idle()) {
        let records = bus.step();
        let after = bus.section_form(SHARED)?;
        let committed = records
            .iter()
            .any(|r| r.kind == transcript::SECTION_WRITE && r.to == SHARED && r.from == BUS);
        if after != before && !committed {
            unexplained.push(bus.tick());
        }
        if after == before && committed {
            silent.push(bus.tick());
        }
        before = after;
    }
    Ok(Run {
        bus,
        unexplained_changes: unexplained,
        silent_commits: silent,
    })
}
