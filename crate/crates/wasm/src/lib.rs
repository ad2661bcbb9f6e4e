//! Browser bindings: generate a host, search it for a Hamilton cycle and
//! re-check a certificate. Every export takes and returns strings; results
//! are JSON objects with either the payload or an `"error"` key.

use loosecycle::{
    build_ak, extremal_construction, find_generic_hamilton, find_loose_hamilton, Certificate, KGraph, Outcome,
    SearchBudget,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Node budget for searches started from the page.
pub const DEMO_NODES: u64 = 2_000_000;

/// Graph text for `family` in `extremal`, `complete`, `random`, `ak`.
pub fn generate_graph(family: &str, k: usize, n: usize, p: f64, seed: u64) -> Result<String, String> {
    let g = match family {
        "extremal" => extremal_construction(n, k).map_err(|e| e.to_string())?.graph,
        "complete" => KGraph::complete(n, k).map_err(|e| e.to_string())?,
        "random" => {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} outside [0, 1]"));
            }
            KGraph::random(n, k, p, seed).map_err(|e| e.to_string())?
        }
        "ak" => build_ak(k).map_err(|e| e.to_string())?.graph,
        other => return Err(format!("unknown family {other:?}")),
    };
    Ok(g.to_text())
}

/// Searches for a loose (`what = "loose"`) or generic Hamilton cycle.
pub fn find_cycle(graph_text: &str, what: &str) -> Result<Value, String> {
    let g = KGraph::parse_text(graph_text).map_err(|e| e.to_string())?;
    let budget = SearchBudget::nodes(DEMO_NODES);
    let outcome = match what {
        "loose" => map_outcome(find_loose_hamilton(&g, &budget), |c| Certificate::loose_cycle(&c))?,
        "generic" => map_outcome(find_generic_hamilton(&g, &budget), |c| Certificate::generic_cycle(&c))?,
        other => return Err(format!("unknown cycle type {other:?}")),
    };
    Ok(match outcome {
        Outcome::Found(cert) => json!({"result": "found", "certificate": cert}),
        Outcome::None => json!({"result": "none"}),
        Outcome::BudgetExhausted => json!({"result": "budget_exhausted", "nodes": DEMO_NODES}),
    })
}

fn map_outcome<T, E: ToString>(
    r: Result<Outcome<T>, E>,
    cert: impl Fn(T) -> Certificate,
) -> Result<Outcome<Certificate>, String> {
    Ok(match r.map_err(|e| e.to_string())? {
        Outcome::Found(x) => Outcome::Found(cert(x)),
        Outcome::None => Outcome::None,
        Outcome::BudgetExhausted => Outcome::BudgetExhausted,
    })
}

/// Re-checks a certificate against the graph.
pub fn check_certificate(graph_text: &str, cert_json: &str, hamilton: bool) -> Result<Value, String> {
    let g = KGraph::parse_text(graph_text).map_err(|e| e.to_string())?;
    let cert: Certificate = serde_json::from_str(cert_json).map_err(|e| format!("certificate: {e}"))?;
    Ok(match cert.check(&g, hamilton) {
        Ok(()) => json!({"valid": true}),
        Err(v) => json!({"valid": false, "message": v.to_string(), "violation": v}),
    })
}

fn to_js(r: Result<Value, String>) -> String {
    let v = r.unwrap_or_else(|e| json!({"error": e}));
    serde_json::to_string_pretty(&v).expect("value serializes")
}

#[wasm_bindgen]
pub fn generate(family: &str, k: usize, n: usize, p: f64, seed: u64) -> String {
    to_js(generate_graph(family, k, n, p, seed).map(|text| json!({"graph": text})))
}

#[wasm_bindgen]
pub fn find(graph_text: &str, what: &str) -> String {
    to_js(find_cycle(graph_text, what))
}

#[wasm_bindgen]
pub fn check(graph_text: &str, cert_json: &str, hamilton: bool) -> String {
    to_js(check_certificate(graph_text, cert_json, hamilton))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_complete_graph_has_checkable_cycle() {
        let text = generate_graph("complete", 3, 9, 0.0, 0).unwrap();
        let found = find_cycle(&text, "loose").unwrap();
        assert_eq!(found["result"], "found");
        let cert = found["certificate"].to_string();
        assert_eq!(check_certificate(&text, &cert, true).unwrap()["valid"], true);
    }

    #[test]
    fn extremal_graph_has_none() {
        let text = generate_graph("extremal", 3, 9, 0.0, 0).unwrap();
        assert_eq!(find_cycle(&text, "generic").unwrap()["result"], "none");
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let text = "5 3\n0 1 2\n2 3 4\n";
        let bad = r#"{"kind":"loose_path","order":[0,1,3,2,4],"edges":[[0,1,2],[2,3,4]],"exceptional_pair":null}"#;
        let v = check_certificate(text, bad, false).unwrap();
        assert_eq!(v["valid"], false);
        assert!(v["message"].is_string());
    }

    #[test]
    fn errors_become_json() {
        let out: Value = serde_json::from_str(&generate("torus", 3, 9, 0.5, 1)).unwrap();
        assert!(out["error"].as_str().unwrap().contains("torus"));
        let out: Value = serde_json::from_str(&find("not a graph", "loose")).unwrap();
        assert!(out["error"].is_string());
        let out: Value = serde_json::from_str(&check("5 3\n0 1 2\n", "{", true)).unwrap();
        assert!(out["error"].as_str().unwrap().starts_with("certificate"));
    }
}
