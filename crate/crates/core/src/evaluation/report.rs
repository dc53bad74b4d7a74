use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMetrics {
    pub id: String,
    pub iou: f64,
    pub ce: f64,
}

/// Per-sample IoU and cross-entropy with their means.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub threshold: f32,
    pub samples: Vec<SampleMetrics>,
    pub mean_iou: f64,
    pub mean_ce: f64,
}

impl MetricReport {
    pub fn new(threshold: f32, samples: Vec<SampleMetrics>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("metric report needs at least one sample"));
        }
        let k = samples.len() as f64;
        let mean_iou = samples.iter().map(|s| s.iou).sum::<f64>() / k;
        let mean_ce = samples.iter().map(|s| s.ce).sum::<f64>() / k;
        Ok(Self { threshold, samples, mean_iou, mean_ce })
    }

    /// `id<TAB>iou<TAB>ce` per sample, then `MEAN<TAB>iou<TAB>ce`.
    pub fn encode(&self) -> String {
        let mut s = String::new();
        for m in &self.samples {
            let _ = writeln!(s, "{}\t{}\t{}", m.id, m.iou, m.ce);
        }
        let _ = writeln!(s, "MEAN\t{}\t{}", self.mean_iou, self.mean_ce);
        s
    }

    pub fn decode(text: &str, threshold: f32) -> Result<Self> {
        let mut samples = Vec::new();
        let mut mean = None;
        for (i, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::format("metric report", format!("line {}: {line:?}", i + 1));
            let [id, iou, ce] = f[..] else { return Err(bad()) };
            let (iou, ce): (f64, f64) = (iou.parse().map_err(|_| bad())?, ce.parse().map_err(|_| bad())?);
            if id == "MEAN" {
                mean = Some((iou, ce));
            } else {
                samples.push(SampleMetrics { id: id.to_string(), iou, ce });
            }
        }
        let (mean_iou, mean_ce) = mean.ok_or_else(|| Error::format("metric report", "missing MEAN line"))?;
        Ok(Self { threshold, samples, mean_iou, mean_ce })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_and_round_trip() {
        let r = MetricReport::new(
            0.5,
            vec![
                SampleMetrics { id: "00000".into(), iou: 0.5, ce: 0.1 },
                SampleMetrics { id: "00001".into(), iou: 0.25, ce: 0.3 },
            ],
        )
        .unwrap();
        assert_eq!(r.mean_iou, 0.375);
        assert!((r.mean_ce - 0.2).abs() < 1e-12);
        let text = r.encode();
        assert_eq!(text.lines().last().unwrap(), format!("MEAN\t0.375\t{}", r.mean_ce));
        assert_eq!(MetricReport::decode(&text, 0.5).unwrap(), r);
        assert!(MetricReport::new(0.5, vec![]).is_err());
    }
}
