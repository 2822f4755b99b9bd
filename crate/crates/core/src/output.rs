//! Trajectory files and run manifests.
//!
//! CSV trajectories start with one `# {json}` metadata line followed by the
//! header `time,neuron,decision`. JSONL trajectories hold one
//! `{"t":…,"i":…,"a":0|1}` object per line and carry no metadata.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalikow_sat::ResidualMode;
use crate::model::ModelKind;
use crate::oracle::ForwardRun;
use crate::perfect::SpikeSample;

pub const CSV_HEADER: [&str; 3] = ["time", "neuron", "decision"];

/// One decided jump: time, external neuron id and whether it was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub i: u32,
    pub a: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Perfect,
    Gillespie,
    Ogata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub source: Source,
    pub seed: u64,
    pub model_kind: ModelKind,
    /// Start and end of the covered time range.
    pub window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ResidualMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sites: Option<usize>,
    #[serde(default)]
    pub clamp_events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    /// SHA-256 of the network configuration file, hex encoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_hash: Option<String>,
    /// External ids of all neurons in the network.
    #[serde(default)]
    pub neurons: Vec<u32>,
}

/// A trajectory as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: Option<TrajectoryMeta>,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn from_sample(sample: &SpikeSample, network_hash: Option<String>) -> Self {
        let meta = TrajectoryMeta {
            source: Source::Perfect,
            seed: sample.seed,
            model_kind: sample.model_kind,
            window: sample.window,
            mode: Some(sample.mode),
            max_generations: None,
            max_sites: None,
            clamp_events: sample.clamp_events,
            tail_tolerance: sample.tail_tolerance,
            burn_in: None,
            network_hash,
            neurons: Vec::new(),
        };
        let records =
            sample.records.iter().map(|r| TrajectoryRecord { t: r.time, i: r.neuron, a: r.accepted as u8 }).collect();
        Self { meta: Some(meta), records }
    }

    /// Forward runs list accepted spikes only, shifted to start at `meta.window[0]`.
    pub fn from_run(run: &ForwardRun, meta: TrajectoryMeta) -> Self {
        let a = meta.window[0];
        let records = run.events.iter().map(|e| TrajectoryRecord { t: a + e.time, i: e.neuron, a: 1 }).collect();
        Self { meta: Some(meta), records }
    }

    /// Accepted spikes as a forward run on `[0, window end - window start)`.
    pub fn to_run(&self) -> Result<ForwardRun> {
        let meta = self.meta.as_ref().ok_or_else(|| Error::Config("trajectory has no metadata".into()))?;
        let [a, b] = meta.window;
        let events = self
            .records
            .iter()
            .filter(|r| r.a == 1)
            .map(|r| crate::oracle::Event { time: r.t - a, neuron: r.i })
            .collect();
        Ok(ForwardRun { horizon: b - a, burn_in: meta.burn_in.unwrap_or(0.0), events })
    }

    /// Accepted spike count of `id` divided by the window length.
    pub fn rate(&self, id: u32) -> Option<f64> {
        let [a, b] = self.meta.as_ref()?.window;
        let n = self.records.iter().filter(|r| r.a == 1 && r.i == id).count();
        (b > a).then(|| n as f64 / (b - a))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        if let Some(meta) = &self.meta {
            writeln!(out, "# {}", serde_json::to_string(meta).map_err(|e| Error::Config(e.to_string()))?)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for r in &self.records {
            w.write_record([r.t.to_string(), r.i.to_string(), r.a.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        input.read_line(&mut first)?;
        let (meta, header) = match first.strip_prefix('#') {
            Some(json) => {
                let meta =
                    serde_json::from_str(json.trim()).map_err(|e| Error::Config(format!("metadata line: {e}")))?;
                let mut header = String::new();
                input.read_line(&mut header)?;
                (Some(meta), header)
            }
            None => (None, first),
        };
        if header.trim_end().split(',').ne(CSV_HEADER) {
            return Err(Error::Config(format!(
                "expected header `time,neuron,decision`, found `{}`",
                header.trim_end()
            )));
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut records = Vec::new();
        for (line, row) in reader.records().enumerate() {
            let row = row.map_err(csv_error)?;
            let bad = || Error::Config(format!("malformed trajectory row {}", line + 1));
            if row.len() != 3 {
                return Err(bad());
            }
            let a: u8 = row[2].parse().map_err(|_| bad())?;
            if a > 1 {
                return Err(bad());
            }
            records.push(TrajectoryRecord {
                t: row[0].parse().map_err(|_| bad())?,
                i: row[1].parse().map_err(|_| bad())?,
                a,
            });
        }
        Ok(Self { meta, records })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(|e| Error::Config(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
        let mut records = Vec::new();
        for (n, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: TrajectoryRecord =
                serde_json::from_str(&line).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
            if r.a > 1 {
                return Err(Error::Config(format!("line {}: decision must be 0 or 1", n + 1)));
            }
            records.push(r);
        }
        Ok(records)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Provenance of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    /// SHA-256 of the configuration file, hex encoded.
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub caps: Option<Caps>,
    pub tail_tolerance: Option<f64>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub outcome: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub max_generations: usize,
    pub max_sites: usize,
    pub back_scan_cap: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::e1;
    use crate::perfect::{perfect_sample, SamplerOptions};

    #[test]
    fn csv_round_trip_is_exact() {
        let s = perfect_sample(&e1(0.1, 1), (0.0, 5.0), 3, &SamplerOptions::default()).unwrap();
        let t = Trajectory::from_sample(&s, Some("ab".into()));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1), Some("time,neuron,decision"));
        assert_eq!(Trajectory::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let s = perfect_sample(&e1(0.1, 1), (0.0, 5.0), 4, &SamplerOptions::default()).unwrap();
        let t = Trajectory::from_sample(&s, None);
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let first = String::from_utf8(buf.clone()).unwrap().lines().next().map(str::to_owned);
        if let Some(line) = first {
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            assert_eq!(v.as_object().unwrap().len(), 3);
        }
        assert_eq!(Trajectory::read_jsonl(&buf[..]).unwrap(), t.records);
    }

    #[test]
    fn empty_window_keeps_header() {
        let s = perfect_sample(&e1(0.1, 1), (0.0, 0.0), 1, &SamplerOptions::default()).unwrap();
        let mut buf = Vec::new();
        Trajectory::from_sample(&s, None).write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(&buf[..]).unwrap();
        assert!(back.records.is_empty());
        assert_eq!(back.rate(0), None);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(Trajectory::read_csv("time,neuron\n".as_bytes()).is_err());
        assert!(Trajectory::read_csv("time,neuron,decision\n1.0,0,2\n".as_bytes()).is_err());
        assert!(Trajectory::read_jsonl("{\"t\":1,\"i\":0}\n".as_bytes()).is_err());
        let plain = Trajectory::read_csv("time,neuron,decision\n0.5,1,1\n".as_bytes()).unwrap();
        assert_eq!(plain.records, vec![TrajectoryRecord { t: 0.5, i: 1, a: 1 }]);
    }

    #[test]
    fn forward_run_round_trip() {
        let run = ForwardRun {
            horizon: 10.0,
            burn_in: 2.0,
            events: vec![crate::oracle::Event { time: 1.5, neuron: 0 }, crate::oracle::Event { time: 3.25, neuron: 1 }],
        };
        let meta = TrajectoryMeta {
            source: Source::Gillespie,
            seed: 1,
            model_kind: ModelKind::Saturation,
            window: [0.0, 10.0],
            mode: None,
            max_generations: None,
            max_sites: None,
            clamp_events: 0,
            tail_tolerance: None,
            burn_in: Some(2.0),
            network_hash: None,
            neurons: vec![0, 1],
        };
        let t = Trajectory::from_run(&run, meta);
        assert_eq!(t.to_run().unwrap(), run);
        assert_eq!(t.rate(1), Some(0.1));
    }
}
