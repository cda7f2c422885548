use agx_core::persist::{export_text, import_text};
use agx_core::{ElementKind, EqualityMode, Store};

use super::gen;
use crate::{ensure, Outcome};

const STORES: u64 = 1000;

fn depth(s: &Store) -> usize {
    fn below(s: &Store, id: agx_core::ElementId) -> usize {
        let e = s.get(id).unwrap();
        e.members().iter().map(|&m| 1 + below(s, m)).max().unwrap_or(0)
    }
    s.nodes().map(|e| below(s, e.id())).max().unwrap_or(0)
}

fn shape_ok(s: &Store) -> Result<(), String> {
    ensure!(s.len() <= 100, "{} elements", s.len());
    ensure!(depth(s) <= 4, "nesting depth {}", depth(s));
    let links: Vec<_> = s.nodes().filter_map(|e| e.endpoints()).collect();
    ensure!(
        links.iter().any(|l| l.from.len() + l.to.len() > 2),
        "no hyperlink"
    );
    ensure!(
        links.iter().any(|l| l
            .from
            .iter()
            .chain(&l.to)
            .any(|x| s.kind(*x).is_ok_and(|k| k.is_link()))),
        "no link between links"
    );
    Ok(())
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0001);
    let mut elements = 0;
    for case in 0..STORES {
        let s = gen::archigraph(&mut rng, 100);
        shape_ok(&s).map_err(|e| format!("store {case}: generator broke its contract: {e}"))?;
        elements += s.len();

        let first = export_text(&s).map_err(|e| format!("store {case}: export: {e}"))?;
        let back = import_text(&first).map_err(|e| format!("store {case}: import: {e}"))?;
        let second = export_text(&back).map_err(|e| format!("store {case}: re-export: {e}"))?;
        ensure!(first == second, "store {case}: export differs after import");

        // Element-wise: pair elements by canonical order, compare forms.
        let left = s.canonical_order().map_err(|e| e.to_string())?;
        let right = back.canonical_order().map_err(|e| e.to_string())?;
        ensure!(
            left.len() == right.len(),
            "store {case}: {} elements became {}",
            left.len(),
            right.len()
        );
        for (a, b) in left.iter().zip(&right) {
            let fa = s.canonical_form(*a, EqualityMode::ByValue).unwrap();
            let fb = back.canonical_form(*b, EqualityMode::ByValue).unwrap();
            ensure!(fa == fb, "store {case}: element {a} imported as {fb}, was {fa}");
            ensure!(
                s.token_of(*a) == back.token_of(*b),
                "store {case}: token of {a} changed"
            );
        }
        let attrs = |st: &Store| st.elements().filter(|e| e.kind() == ElementKind::Attribute).count();
        ensure!(attrs(&s) == attrs(&back), "store {case}: attribute count changed");
        ensure!(
            s.rules().count() == back.rules().count()
                && s.predicates().count() == back.predicates().count(),
            "store {case}: rules or predicates lost"
        );
    }
    Ok(format!("{STORES} stores, {elements} elements"))
}
