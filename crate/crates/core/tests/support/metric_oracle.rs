//! High-precision metric values computed offline, stored as decimal strings.

use std::collections::BTreeMap;
use std::path::Path;

use litrag::store::Metric;
use serde::Deserialize;

#[derive(Deserialize)]
pub struct Oracle {
    pub scale: f64,
    pub pairs: Vec<Pair>,
}

#[derive(Deserialize)]
pub struct Pair {
    pub x: Vec<i32>,
    pub y: Vec<i32>,
    pub euclidean: String,
    pub manhattan: String,
    pub chebyshev: String,
    pub cosine: String,
    pub inner_product: String,
    pub minkowski: BTreeMap<String, String>,
}

pub fn oracle(fixtures: &Path) -> Oracle {
    let raw = std::fs::read_to_string(fixtures.join("metrics_oracle.json")).unwrap();
    serde_json::from_str(&raw).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Every metric on every oracle pair; returns the worst relative error.
pub fn check_oracle(fixtures: &Path) -> Result<f64, String> {
    let o = oracle(fixtures);
    if o.pairs.len() != 1000 {
        return Err(format!("{} oracle pairs", o.pairs.len()));
    }
    let mut worst = 0.0f64;
    for (i, p) in o.pairs.iter().enumerate() {
        let x: Vec<f32> = p.x.iter().map(|&k| k as f32 / o.scale as f32).collect();
        let y: Vec<f32> = p.y.iter().map(|&k| k as f32 / o.scale as f32).collect();
        let mut cases = vec![
            (Metric::Euclidean, &p.euclidean),
            (Metric::Manhattan, &p.manhattan),
            (Metric::Chebyshev, &p.chebyshev),
            (Metric::Cosine, &p.cosine),
            (Metric::InnerProduct, &p.inner_product),
        ];
        for (pv, v) in &p.minkowski {
            cases.push((Metric::minkowski(pv.parse().unwrap()).unwrap(), v));
        }
        for (m, want) in cases {
            let want: f64 = want.parse().unwrap();
            let got = m.eval(&x, &y).map_err(|e| format!("pair {i} {m:?}: {e}"))?;
            let e = rel_err(got, want);
            if e > 1e-9 {
                return Err(format!("pair {i} {m:?}: got {got}, want {want}, rel {e:e}"));
            }
            worst = worst.max(e);
        }
    }
    Ok(worst)
}
