use agx_bus::demo::DemoModule;
use agx_bus::scenario::{run_scenario, Scenario};
use agx_bus::transcript::SECTION_WRITE;
use agx_bus::{audit, audit_self_informing, Mode};
use rand::Rng;

use super::gen;
use crate::{ensure, Outcome};

const RUNS: usize = 50;

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0012);
    let (mut writes, mut answered, mut requests) = (0, 0, 0);
    for n in 0..RUNS {
        let actions = rng.gen_range(10..=40);
        let s = Scenario::random_with_demo(&mut rng, 6, actions);
        let mode = if n % 2 == 0 {
            Mode::Deterministic
        } else {
            Mode::Randomized { seed: rng.gen() }
        };
        let run = run_scenario(&s, mode).map_err(|e| format!("run {n}: {e}"))?;
        let t = run.transcript();
        let rep = audit(t, true);
        ensure!(rep.is_clean(), "run {n}: {}", rep.violations.join("; "));
        let problems = audit_self_informing(t, "demo");
        ensure!(problems.is_empty(), "run {n}: {}", problems.join("; "));

        let w = t
            .records
            .iter()
            .filter(|r| r.kind == SECTION_WRITE && r.from == "demo")
            .count();
        let q = t
            .records
            .iter()
            .filter(|r| r.kind == "Request" && r.to == "demo")
            .count();
        let handle = run.bus.handle("demo").ok_or("demo module missing")?;
        let m: &DemoModule = run.bus.module(handle).ok_or("demo module has another type")?;
        ensure!(m.writes as usize == w, "run {n}: module counted {} writes, transcript {w}", m.writes);
        writes += w;
        requests += q;
        answered += m.answered as usize;
    }
    ensure!(writes > 0 && requests > 0, "demo never wrote or was never asked");
    Ok(format!(
        "{RUNS} runs, {writes} section writes each followed by a state broadcast, \
         {answered}/{requests} state requests answered"
    ))
}
