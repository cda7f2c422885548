//! Transcript accounting. Everything here works from the transcript alone:
//! registrations and shared-section declarations are recorded in it, so the
//! expected recipients of each message can be recomputed independently of
//! the bus.

use std::collections::{BTreeMap, BTreeSet};

use crate::demo::{STATE_KIND, STATE_QUERY};
use crate::message::Payload;
use crate::transcript::{self, Record, Transcript, BUS};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub violations: Vec<String>,
    pub publishes: usize,
    pub deliveries: usize,
    pub requests: usize,
    pub responses: usize,
    pub timeouts: usize,
    pub commits: usize,
    pub aborts: usize,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Module {
    /// Transcript position of the registration.
    at: usize,
    filter: Option<BTreeSet<String>>,
}

fn fragment_kind(payload_ref: Option<&str>) -> Option<&str> {
    payload_ref?.strip_prefix("fragment/")?.split(':').next()
}

/// Checks delivery, ordering, request and consent guarantees. With
/// `complete`, every request and consent round must also have finished.
pub fn audit(t: &Transcript, complete: bool) -> AuditReport {
    let mut rep = AuditReport::default();
    let recs = &t.records;
    let mut v = Vec::new();

    let mut modules: BTreeMap<&str, Module> = BTreeMap::new();
    let mut shared: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (at, r) in recs.iter().enumerate() {
        match r.kind.as_str() {
            transcript::REGISTER => {
                let filter = match r.payload_ref.as_deref() {
                    Some("all") | None => None,
                    Some(f) => Some(
                        f.trim_start_matches("kinds:")
                            .split(',')
                            .filter(|k| !k.is_empty())
                            .map(str::to_string)
                            .collect(),
                    ),
                };
                modules.insert(&r.from, Module { at, filter });
                if !shared.contains_key(r.to.as_str()) {
                    owner.insert(&r.to, &r.from);
                }
            }
            transcript::DECLARE_SHARED => {
                let list = r
                    .payload_ref
                    .as_deref()
                    .and_then(|p| p.strip_prefix("access:"))
                    .unwrap_or("");
                shared.insert(&r.to, list.split(',').filter(|s| !s.is_empty()).collect());
            }
            _ => {}
        }
    }
    let registered_before = |at: usize| -> Vec<&str> {
        modules
            .iter()
            .filter(|(_, m)| m.at < at)
            .map(|(n, _)| *n)
            .collect()
    };

    // Publish records by seq, and every other record grouped by seq.
    let mut published: BTreeMap<u64, (usize, &Record)> = BTreeMap::new();
    let mut by_seq: BTreeMap<u64, Vec<(usize, &Record)>> = BTreeMap::new();
    for (at, r) in recs.iter().enumerate() {
        if r.is_publish() {
            rep.publishes += 1;
            if published.insert(r.seq, (at, r)).is_some() {
                v.push(format!("seq {} published twice", r.seq));
            }
        } else if r.is_delivery() || r.kind == transcript::DROPPED {
            by_seq.entry(r.seq).or_default().push((at, r));
        }
    }

    let mut requests: BTreeMap<u64, &Record> = BTreeMap::new();
    let mut polls: BTreeMap<u64, &Record> = BTreeMap::new();
    for (&seq, &(at, p)) in &published {
        let list = p.recipients();
        let set: BTreeSet<&str> = list.iter().copied().collect();
        if set.len() != list.len() {
            v.push(format!("seq {seq}: duplicate recipient"));
        }
        let live = registered_before(at);
        for n in &set {
            if !live.contains(n) {
                v.push(format!("seq {seq}: recipient {n} not registered"));
            }
        }
        match p.kind.as_str() {
            "Broadcast" => {
                let kind = fragment_kind(p.payload_ref.as_deref());
                let expected: BTreeSet<&str> = live
                    .iter()
                    .copied()
                    .filter(|n| match (&modules[n].filter, kind) {
                        (Some(f), Some(k)) => f.contains(k),
                        _ => true,
                    })
                    .collect();
                if expected != set {
                    v.push(format!("seq {seq}: broadcast recipients {set:?} != {expected:?}"));
                }
            }
            "Request" => {
                rep.requests += 1;
                let others: BTreeSet<&str> =
                    live.iter().copied().filter(|n| *n != p.from).collect();
                if set != others && set.len() != 1 {
                    v.push(format!("seq {seq}: request recipients {set:?}"));
                }
                if let Some(c) = p.corr {
                    requests.insert(c, p);
                }
            }
            "Response" => {
                let req = p.corr.and_then(|c| requests.get(&c));
                match req {
                    Some(req) if list == [req.from.as_str()] => {}
                    _ => v.push(format!("seq {seq}: response matches no prior request")),
                }
            }
            "ConsentPoll" => {
                if let Some(c) = p.corr {
                    polls.insert(c, p);
                }
            }
            "Commit" | "Abort" => {
                let poll = p.corr.and_then(|c| polls.get(&c));
                match poll {
                    Some(poll) if p.from == BUS && poll.recipients() == list => {}
                    _ => v.push(format!("seq {seq}: {} without matching poll", p.kind)),
                }
                if p.kind == "Commit" {
                    rep.commits += 1;
                } else {
                    rep.aborts += 1;
                }
            }
            _ => {}
        }
        // Exactly once, and only after the publish record.
        let got = by_seq.get(&seq).map(Vec::as_slice).unwrap_or(&[]);
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for &(dat, d) in got {
            *seen.entry(d.to.as_str()).or_default() += 1;
            if dat < at {
                v.push(format!("seq {seq}: delivered before it was published"));
            }
            let ok = d.kind == p.kind || (p.kind == "Response" && d.kind == transcript::DROPPED);
            if !ok || d.from != p.from || d.corr != p.corr {
                v.push(format!("seq {seq}: delivery record disagrees with publish"));
            }
        }
        for (n, c) in &seen {
            if *c != 1 || !set.contains(n) {
                v.push(format!("seq {seq}: {n} received it {c} times"));
            }
        }
        if complete {
            for n in &set {
                if !seen.contains_key(n) {
                    v.push(format!("seq {seq}: never delivered to {n}"));
                }
            }
        }
    }
    for (&seq, list) in &by_seq {
        let timeout = list.iter().all(|(_, r)| r.kind == transcript::TIMEOUT);
        if !timeout && !published.contains_key(&seq) {
            v.push(format!("seq {seq}: delivered but never published"));
        }
    }

    // Per-publisher FIFO.
    let mut last: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for r in recs {
        if (r.is_delivery() && r.kind != transcript::TIMEOUT) || r.kind == transcript::DROPPED {
            rep.deliveries += 1;
            let key = (r.from.as_str(), r.to.as_str());
            if let Some(&prev) = last.get(&key) {
                if prev >= r.seq {
                    v.push(format!("{} -> {}: seq {} after {prev}", r.from, r.to, r.seq));
                }
            }
            last.insert(key, r.seq);
        }
    }

    // Each request resolves at most once, exactly once when complete.
    let mut resolved: BTreeMap<u64, usize> = BTreeMap::new();
    for r in recs {
        let kind = r.kind.as_str();
        let resolving = (kind == "Response" && r.is_delivery()) || kind == transcript::TIMEOUT;
        if !resolving {
            continue;
        }
        match r.corr.and_then(|c| requests.get(&c).map(|q| (c, q))) {
            Some((c, q)) if q.from == r.to => *resolved.entry(c).or_default() += 1,
            _ => v.push(format!("{kind} to {} matches no request", r.to)),
        }
        if kind == "Response" {
            rep.responses += 1;
        } else {
            rep.timeouts += 1;
        }
    }
    for &c in requests.keys() {
        match resolved.get(&c).copied().unwrap_or(0) {
            1 => {}
            0 if !complete => {}
            n => v.push(format!("request {c} resolved {n} times")),
        }
    }

    // Consent: shared sections change only under a unanimous round, and the
    // write is followed by that round's Commit.
    let mut votes: BTreeMap<u64, Vec<(&str, bool)>> = BTreeMap::new();
    let mut commits: BTreeSet<u64> = BTreeSet::new();
    for (at, r) in recs.iter().enumerate() {
        match r.kind.as_str() {
            "ConsentVote" => {
                if let Some(c) = r.corr {
                    votes
                        .entry(c)
                        .or_default()
                        .push((&r.from, r.payload_ref.as_deref() == Some("approve")));
                }
            }
            transcript::SECTION_WRITE => {
                let section = r.to.as_str();
                if let Some(access) = shared.get(section) {
                    let Some(c) = r.corr.filter(|_| r.from == BUS) else {
                        v.push(format!("shared section {section} written outside a round"));
                        continue;
                    };
                    let Some(poll) = polls.get(&c) else {
                        v.push(format!("round {c} wrote {section} without a poll"));
                        continue;
                    };
                    let voters: BTreeSet<&str> = poll.recipients().into_iter().collect();
                    let approvals: BTreeSet<&str> = votes
                        .get(&c)
                        .map(|vs| vs.iter().filter(|(_, a)| *a).map(|(n, _)| *n).collect())
                        .unwrap_or_default();
                    let rejected = votes.get(&c).is_some_and(|vs| vs.iter().any(|(_, a)| !a));
                    if rejected || approvals != voters || !voters.iter().all(|n| access.contains(n)) {
                        v.push(format!("round {c} wrote {section} without unanimous approval"));
                    }
                    let next_commit = recs[at + 1..]
                        .iter()
                        .find(|x| x.is_publish() && x.corr == Some(c));
                    if next_commit.map(|x| x.kind.as_str()) != Some("Commit") {
                        v.push(format!("round {c}: write not followed by Commit"));
                    }
                    commits.insert(c);
                } else if owner.get(section) != Some(&r.from.as_str()) {
                    v.push(format!("{} wrote section {section} it does not own", r.from));
                }
            }
            _ => {}
        }
    }
    for (&c, poll) in &polls {
        let decided: Vec<&str> = recs
            .iter()
            .filter(|x| x.is_publish() && x.corr == Some(c) && x.kind != "ConsentPoll")
            .map(|x| x.kind.as_str())
            .collect();
        match decided.as_slice() {
            ["Commit"] if commits.contains(&c) => {}
            ["Abort"] if !commits.contains(&c) => {}
            [] if !complete => {}
            other => v.push(format!("round {c} from {} decided as {other:?}", poll.from)),
        }
    }
    rep.violations = v;
    rep
}

/// Checks the demo module `name`: each write to its section is followed by
/// a state broadcast from it before its next inbound delivery, and each
/// state request it received got a response from it.
pub fn audit_self_informing(t: &Transcript, name: &str) -> Vec<String> {
    let recs = &t.records;
    let state_query = Payload::Query(STATE_QUERY.into()).reference();
    let mut v = Vec::new();
    for (at, r) in recs.iter().enumerate() {
        if r.kind == transcript::SECTION_WRITE && r.from == name {
            let next = recs[at + 1..].iter().find(|x| {
                (x.to == name && x.is_delivery())
                    || (x.from == name && x.is_publish() && x.kind == "Broadcast")
            });
            let informed = next.is_some_and(|x| {
                x.is_publish() && fragment_kind(x.payload_ref.as_deref()) == Some(STATE_KIND)
            });
            if !informed {
                v.push(format!("write at seq {} not followed by a state broadcast", r.seq));
            }
        }
        if r.kind == "Request" && r.to == name && r.payload_ref.as_deref() == Some(&state_query) {
            let answered = recs[at + 1..].iter().any(|x| {
                x.is_publish() && x.kind == "Response" && x.from == name && x.corr == r.corr
            });
            if !answered {
                v.push(format!("state request {:?} from {} unanswered", r.corr, r.from));
            }
        }
    }
    v
}
