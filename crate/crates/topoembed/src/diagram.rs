//! Persistence diagrams as JSON and Betti curves as CSV.
//!
//! JSON has no infinity, so an essential bar is written with
//! `"death": null`.

use serde::{Deserialize, Serialize};
use topoembed_core::{Bar, BettiCurve, PersistenceDiagram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BarJson {
    dim: usize,
    birth: f64,
    death: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DiagramJson {
    bars: Vec<BarJson>,
    threshold: f64,
}

pub fn diagram_to_json(d: &PersistenceDiagram) -> serde_json::Value {
    let doc = DiagramJson {
        bars: d
            .bars
            .iter()
            .map(|b| BarJson {
                dim: b.dim,
                birth: b.birth,
                death: b.death.is_finite().then_some(b.death),
            })
            .collect(),
        threshold: d.threshold,
    };
    serde_json::to_value(doc).expect("diagram serializes")
}

pub fn diagram_from_json(text: &str) -> serde_json::Result<PersistenceDiagram> {
    let doc: DiagramJson = serde_json::from_str(text)?;
    Ok(PersistenceDiagram {
        bars: doc
            .bars
            .into_iter()
            .map(|b| Bar {
                dim: b.dim,
                birth: b.birth,
                death: b.death.unwrap_or(f64::INFINITY),
            })
            .collect(),
        threshold: doc.threshold,
    })
}

/// Long format: `dim,t,count`, one line per grid point.
pub fn betti_to_csv(curves: &[BettiCurve]) -> String {
    let mut out = String::from("dim,t,count\n");
    for c in curves {
        for (t, k) in c.grid.iter().zip(&c.counts) {
            out.push_str(&format!("{},{t},{k}\n", c.dim));
        }
    }
    out
}

/// Inverse of [`betti_to_csv`]; curves come back in order of first appearance.
pub fn betti_from_csv(text: &str) -> Result<Vec<BettiCurve>, String> {
    let mut curves: Vec<BettiCurve> = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let [dim, t, count] = f[..] else {
            return Err(format!("line {}: expected 3 fields", k + 1));
        };
        let bad = |what: &str| format!("line {}: bad {what}", k + 1);
        let dim: usize = dim.parse().map_err(|_| bad("dim"))?;
        let t: f64 = t.parse().map_err(|_| bad("t"))?;
        let count: u32 = count.parse().map_err(|_| bad("count"))?;
        match curves.iter_mut().find(|c| c.dim == dim) {
            Some(c) => {
                c.grid.push(t);
                c.counts.push(count);
            }
            None => curves.push(BettiCurve {
                dim,
                grid: vec![t],
                counts: vec![count],
            }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_essential_bar() {
        let d = PersistenceDiagram {
            bars: vec![
                Bar { dim: 0, birth: 0.0, death: 1.2 },
                Bar { dim: 0, birth: 0.0, death: f64::INFINITY },
                Bar { dim: 1, birth: 1.0, death: 2f64.sqrt() },
            ],
            threshold: 1.5,
        };
        let v = diagram_to_json(&d);
        assert_eq!(v["bars"][0]["death"], 1.2);
        assert!(v["bars"][1]["death"].is_null());
        assert_eq!(v["threshold"], 1.5);
        assert_eq!(diagram_from_json(&v.to_string()).unwrap(), d);
    }

    #[test]
    fn betti_csv_round_trip() {
        let curves = vec![
            BettiCurve { dim: 0, grid: vec![0.0, 0.5, 1.0], counts: vec![3, 2, 1] },
            BettiCurve { dim: 1, grid: vec![0.0, 0.25], counts: vec![0, 1] },
        ];
        let text = betti_to_csv(&curves);
        assert!(text.starts_with("dim,t,count\n0,0,3\n"));
        assert_eq!(betti_from_csv(&text).unwrap(), curves);
        assert!(betti_from_csv("dim,t,count\n0,x,1\n").is_err());
    }
}
