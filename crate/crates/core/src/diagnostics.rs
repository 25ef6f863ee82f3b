//! Event logs and the data behind trajectory plots, position histograms
//! (the empirical `|psi(x)|^2`) and tunneling-probability traces.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmark::ObjectiveSpec;
use crate::error::{invalid, Result};
use crate::optimizer::{Event, EventKind, Observer};

/// Bins per dimension unless told otherwise.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub evaluation_index: u64,
    pub generation: u64,
    pub particle_index: Option<usize>,
    pub kind: EventKind,
    pub position: Vec<f64>,
    pub fitness: f64,
    pub delta_f: f64,
    pub delta_x: f64,
    pub gamma: f64,
    pub probability: Option<f64>,
    pub scale: f64,
}

/// Every event of one run, in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    lower: Vec<f64>,
    upper: Vec<f64>,
    records: Vec<Record>,
}

impl TrajectoryLog {
    pub fn new(spec: &ObjectiveSpec) -> Self {
        Self { lower: spec.lower().to_vec(), upper: spec.upper().to_vec(), records: Vec::new() }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Positions particles actually moved to (initial, accepted and
    /// mean-replaced). Rejected candidates are excluded.
    pub fn particle_positions(&self) -> impl Iterator<Item = &[f64]> {
        self.records
            .iter()
            .filter(|r| r.kind.moves_particle())
            .map(|r| r.position.as_slice())
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// Writes the log as CSV, one row per event, positions as `x0..x{n-1}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = [
            "evaluation_index",
            "generation",
            "particle_index",
            "event",
            "fitness",
            "delta_f",
            "delta_x",
            "gamma",
            "probability",
            "scale",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..self.dim()).map(|d| format!("x{d}")));
        w.write_record(&header)?;
        let opt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
        for r in &self.records {
            let mut row = vec![
                r.evaluation_index.to_string(),
                r.generation.to_string(),
                r.particle_index.map(|i| i.to_string()).unwrap_or_default(),
                r.kind.as_str().to_string(),
                opt(r.fitness),
                opt(r.delta_f),
                opt(r.delta_x),
                opt(r.gamma),
                r.probability.map(|p| p.to_string()).unwrap_or_default(),
                opt(r.scale),
            ];
            row.extend((0..self.dim()).map(|d| r.position.get(d).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Observer for TrajectoryLog {
    fn on_event(&mut self, e: &Event<'_>) {
        self.records.push(Record {
            evaluation_index: e.evaluation_index,
            generation: e.generation,
            particle_index: e.particle_index,
            kind: e.kind,
            position: e.position.to_vec(),
            fitness: e.fitness,
            delta_f: e.delta_f,
            delta_x: e.delta_x,
            gamma: e.gamma,
            probability: e.probability,
            scale: e.scale,
        });
    }
}

/// Normalized histogram of particle positions over the search box.
///
/// Up to two dimensions the histogram is a full grid (cell index
/// `i0 * bins + i1`). Above that, one marginal histogram per dimension is
/// kept (`counts[d * bins + i]`), each normalized on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveHistogram {
    pub dim: usize,
    pub bins: usize,
    pub marginal: bool,
    pub edges: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub total: u64,
}

impl WaveHistogram {
    fn width(&self, d: usize) -> f64 {
        (self.edges[d][self.bins] - self.edges[d][0]) / self.bins as f64
    }

    fn bin_of(&self, d: usize, v: f64) -> usize {
        let lo = self.edges[d][0];
        let i = ((v - lo) / self.width(d)).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.bins - 1)
        }
    }

    /// Bin indices of `point`, one per dimension.
    pub fn cell_of(&self, point: &[f64]) -> Vec<usize> {
        (0..self.dim).map(|d| self.bin_of(d, point[d])).collect()
    }

    fn cell_volume(&self) -> f64 {
        if self.marginal {
            f64::NAN
        } else {
            (0..self.dim).map(|d| self.width(d)).product()
        }
    }

    /// Bin indices of the densest cell. For marginal histograms, the densest
    /// bin of each dimension. Ties go to the lowest index.
    pub fn mode_cell(&self) -> Vec<usize> {
        let argmax = |xs: &[u64]| {
            let mut best = 0;
            for (i, &c) in xs.iter().enumerate() {
                if c > xs[best] {
                    best = i;
                }
            }
            best
        };
        if self.marginal {
            (0..self.dim).map(|d| argmax(&self.counts[d * self.bins..(d + 1) * self.bins])).collect()
        } else {
            let mut flat = argmax(&self.counts);
            let mut cell = vec![0; self.dim];
            for d in (0..self.dim).rev() {
                cell[d] = flat % self.bins;
                flat /= self.bins;
            }
            cell
        }
    }

    pub fn mode_contains(&self, point: &[f64]) -> bool {
        self.mode_cell() == self.cell_of(point)
    }

    /// Integral of the density: one value for a grid, one per dimension for marginals.
    pub fn integrals(&self) -> Vec<f64> {
        if self.marginal {
            (0..self.dim)
                .map(|d| {
                    let w = self.width(d);
                    self.density[d * self.bins..(d + 1) * self.bins].iter().map(|p| p * w).sum()
                })
                .collect()
        } else {
            let v = self.cell_volume();
            vec![self.density.iter().map(|p| p * v).sum()]
        }
    }
}

/// Histograms the particle positions of `log` with `bins` bins per dimension.
pub fn wave_modulus(log: &TrajectoryLog, bins: usize) -> Result<WaveHistogram> {
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin per dimension"));
    }
    let positions: Vec<&[f64]> = log.particle_positions().collect();
    if positions.is_empty() {
        return Err(invalid("cannot histogram an empty log"));
    }
    let dim = log.dim();
    let marginal = dim > 2;
    let edges: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let (lo, hi) = (log.lower[d], log.upper[d]);
            (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
        })
        .collect();
    let cells = if marginal { dim * bins } else { bins.pow(dim as u32) };
    let mut hist = WaveHistogram {
        dim,
        bins,
        marginal,
        edges,
        counts: vec![0; cells],
        density: vec![0.0; cells],
        total: positions.len() as u64,
    };
    for p in &positions {
        let cell = hist.cell_of(p);
        if marginal {
            for (d, i) in cell.iter().enumerate() {
                hist.counts[d * bins + i] += 1;
            }
        } else {
            let flat = cell.iter().fold(0, |acc, i| acc * bins + i);
            hist.counts[flat] += 1;
        }
    }
    let total = hist.total as f64;
    if marginal {
        for d in 0..dim {
            let w = hist.width(d);
            for i in 0..bins {
                hist.density[d * bins + i] = hist.counts[d * bins + i] as f64 / (total * w);
            }
        }
    } else {
        let v = hist.cell_volume();
        for (p, c) in hist.density.iter_mut().zip(&hist.counts) {
            *p = *c as f64 / (total * v);
        }
    }
    Ok(hist)
}

/// Tunneling probabilities of every tunneling decision, accepted or not.
pub fn transmission_trace(log: &TrajectoryLog) -> Vec<(u64, f64)> {
    log.records
        .iter()
        .filter_map(|r| r.probability.map(|p| (r.evaluation_index, p)))
        .collect()
}

/// Largest tunneling probability seen in one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTransmission {
    pub scale_index: u32,
    pub generation: u64,
    pub max_probability: f64,
}

/// Per-sweep maxima of the tunneling probability, tagged with the scale the
/// sweep ran at. Sweeps without any tunneling decision are skipped.
pub fn sweep_transmission_maxima(log: &TrajectoryLog) -> Vec<SweepTransmission> {
    let mut out: Vec<SweepTransmission> = Vec::new();
    let mut scale = 0u32;
    for r in &log.records {
        if r.kind == EventKind::ScaleHalve {
            scale += 1;
            continue;
        }
        let Some(p) = r.probability else { continue };
        match out.last_mut() {
            Some(last) if last.generation == r.generation && last.scale_index == scale => {
                last.max_probability = last.max_probability.max(p);
            }
            _ => out.push(SweepTransmission { scale_index: scale, generation: r.generation, max_probability: p }),
        }
    }
    out
}

/// Mean fitness of the last known population, the sample estimate of the
/// expected solution value under the particles' empirical distribution.
pub fn expected_solution_value(log: &TrajectoryLog) -> Result<f64> {
    let mut population: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &log.records {
        if let (true, Some(i)) = (r.kind.moves_particle(), r.particle_index) {
            population.insert(i, r.fitness);
        }
    }
    if population.is_empty() {
        return Err(invalid("cannot compute an expectation from an empty log"));
    }
    Ok(population.values().sum::<f64>() / population.len() as f64)
}

/// Rebuilds the best-so-far fitness from the log: `(evaluation_index, best)`
/// at every improvement.
pub fn replay_best(log: &TrajectoryLog) -> Vec<(u64, f64)> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for r in log.records.iter().filter(|r| r.kind.is_evaluation()) {
        if r.fitness < best {
            best = r.fitness;
            out.push((r.evaluation_index, best));
        }
    }
    out
}

#[derive(Serialize)]
struct TraceFile<'a> {
    schema_version: u32,
    algorithm: &'a str,
    function: &'a str,
    dim: usize,
    seed: u64,
    trace: Vec<(u64, f64)>,
    sweep_maxima: Vec<SweepTransmission>,
}

#[derive(Serialize)]
struct HistogramFile<'a> {
    schema_version: u32,
    algorithm: &'a str,
    function: &'a str,
    dim: usize,
    seed: u64,
    histogram: &'a WaveHistogram,
}

/// File stem shared by all diagnostics files of one run.
pub fn file_stem(algorithm: &str, function: &str, dim: usize, seed: u64) -> String {
    format!("{algorithm}_{function}_{dim}d_seed{seed}")
}

/// Writes `<stem>_events.csv`, `<stem>_histogram.json` and
/// `<stem>_transmission.json` into `dir`. Returns the written paths.
pub fn export_run(
    dir: &Path,
    algorithm: &str,
    function: &str,
    seed: u64,
    log: &TrajectoryLog,
    bins: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let dim = log.dim();
    let stem = file_stem(algorithm, function, dim, seed);
    let events = dir.join(format!("{stem}_events.csv"));
    log.write_csv(BufWriter::new(File::create(&events)?))?;
    let mut written = vec![events];

    if log.particle_positions().next().is_some() {
        let hist = wave_modulus(log, bins)?;
        let path = dir.join(format!("{stem}_histogram.json"));
        let file = HistogramFile { schema_version: 1, algorithm, function, dim, seed, histogram: &hist };
        serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &file)?;
        written.push(path);
    }

    let path = dir.join(format!("{stem}_transmission.json"));
    let file = TraceFile {
        schema_version: 1,
        algorithm,
        function,
        dim,
        seed,
        trace: transmission_trace(log),
        sweep_maxima: sweep_transmission_maxima(log),
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &file)?;
    written.push(path);
    Ok(written)
}
