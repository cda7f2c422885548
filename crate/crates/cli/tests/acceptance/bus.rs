use agx_bus::scenario::{run_scenario, Scenario};
use agx_bus::{audit, AuditReport, Mode};
use rand::Rng;

use super::gen;
use crate::{ensure, Outcome};

const SCENARIOS: u64 = 100;
const MAX_MODULES: usize = 8;
const MAX_MESSAGES: usize = 200;

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0009);
    let mut total = AuditReport::default();
    let mut polls = 0;
    let mut broadcasts = 0;
    let mut most = 0;
    for n in 0..SCENARIOS {
        let actions = rng.gen_range(10..=50);
        let s = Scenario::random(&mut rng, MAX_MODULES, actions);
        ensure!(s.modules.len() <= MAX_MODULES, "scenario {n}: {} modules", s.modules.len());
        let seed = rng.gen();
        for mode in [Mode::Deterministic, Mode::Randomized { seed }] {
            let run = run_scenario(&s, mode).map_err(|e| format!("scenario {n}: {e}"))?;
            let t = run.transcript();
            ensure!(run.bus.is_idle(), "scenario {n} {mode:?}: did not quiesce");
            let rep = audit(t, true);
            ensure!(
                rep.is_clean(),
                "scenario {n} {mode:?}: {}",
                rep.violations.join("; ")
            );
            ensure!(
                rep.publishes <= MAX_MESSAGES,
                "scenario {n} {mode:?}: {} messages",
                rep.publishes
            );
            ensure!(
                run.unexplained_changes.is_empty() && run.silent_commits.is_empty(),
                "scenario {n} {mode:?}: shared section changed outside a commit at ticks {:?}",
                run.unexplained_changes
            );
            let again = run_scenario(&s, mode).map_err(|e| format!("scenario {n}: {e}"))?;
            ensure!(
                again.transcript().to_jsonl() == t.to_jsonl(),
                "scenario {n} {mode:?}: rerun produced a different transcript"
            );
            most = most.max(rep.publishes);
            polls += t.records.iter().filter(|r| r.is_publish() && r.kind == "ConsentPoll").count();
            broadcasts += t.records.iter().filter(|r| r.is_publish() && r.kind == "Broadcast").count();
            total.requests += rep.requests;
            total.responses += rep.responses;
            total.timeouts += rep.timeouts;
            total.commits += rep.commits;
            total.aborts += rep.aborts;
        }
    }
    ensure!(
        broadcasts > 0 && total.requests > 0 && polls > 0,
        "workload lacks a message class"
    );
    ensure!(
        total.responses > 0 && total.timeouts > 0 && total.commits > 0 && total.aborts > 0,
        "some outcome never occurred: {total:?}"
    );
    Ok(format!(
        "{SCENARIOS} scenarios x 2 modes, at most {most} messages; {broadcasts} broadcasts, \
         {} requests ({} answered, {} timed out), {polls} consent rounds ({} committed, {} aborted)",
        total.requests, total.responses, total.timeouts, total.commits, total.aborts
    ))
}
