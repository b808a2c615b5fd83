//! Planner timings on generated trees.

use std::fmt::Write as _;
use std::time::Instant;

use fixplan_core::{generate_tree, plan_system, GenRanges, SearchOptions, Tree};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub branching: Vec<usize>,
    pub depths: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub k: usize,
    pub depth: usize,
    pub leaves: usize,
    pub nodes: usize,
    pub median_ms: f64,
    pub runs_ms: Vec<f64>,
}

/// Least-squares line of median time against leaf count for one `k`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub k: usize,
    pub points: usize,
    pub slope_ms_per_leaf: f64,
    pub intercept_ms: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub repetitions: usize,
    /// Set when each cell is a single run.
    pub noisy: bool,
    pub cells: Vec<BenchCell>,
    pub fits: Vec<LinearFit>,
}

impl BenchReport {
    pub fn cell(&self, k: usize, depth: usize) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.k == k && c.depth == depth)
    }

    pub fn fit(&self, k: usize) -> Option<&LinearFit> {
        self.fits.iter().find(|f| f.k == k)
    }

    /// Text table of median milliseconds, one row per `k`.
    pub fn render(&self) -> String {
        let mut ks: Vec<usize> = self.cells.iter().map(|c| c.k).collect();
        ks.dedup();
        let mut depths: Vec<usize> = self.cells.iter().map(|c| c.depth).collect();
        depths.sort_unstable();
        depths.dedup();
        let mut s = String::new();
        let _ = write!(s, "{:>4}", "k");
        for d in &depths {
            let _ = write!(s, " {:>12}", format!("depth {d}"));
        }
        s.push('\n');
        for k in &ks {
            let _ = write!(s, "{k:>4}");
            for d in &depths {
                match self.cell(*k, *d) {
                    Some(c) => {
                        let _ = write!(s, " {:>12.3}", c.median_ms);
                    }
                    None => {
                        let _ = write!(s, " {:>12}", "-");
                    }
                }
            }
            s.push('\n');
        }
        let _ = writeln!(s, "median ms over {} run(s){}", self.repetitions, if self.noisy { " (noisy: single run)" } else { "" });
        for f in &self.fits {
            let _ = writeln!(
                s,
                "k={}: ms = {:.6} * leaves + {:.3}, R^2 = {:.4} over {} points",
                f.k, f.slope_ms_per_leaf, f.intercept_ms, f.r_squared, f.points
            );
        }
        s
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn linear_fit(k: usize, points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    LinearFit {
        k,
        points: points.len(),
        slope_ms_per_leaf: slope,
        intercept_ms: intercept,
        r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
    }
}

/// Generates each tree once, then times `repetitions` plannings of it
/// after one warm-up run.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, CliError> {
    let ranges = GenRanges::default();
    let mut cells = Vec::new();
    for &k in &cfg.branching {
        for &depth in &cfg.depths {
            let tree: Tree = generate_tree(k, depth, cfg.seed, &ranges);
            plan_system(&tree, &SearchOptions::default())?;
            let mut runs = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                let t = Instant::now();
                let planned = plan_system(&tree, &SearchOptions::default())?;
                runs.push(t.elapsed().as_secs_f64() * 1e3);
                std::hint::black_box(planned);
            }
            let runs_ms = runs.clone();
            cells.push(BenchCell {
                k,
                depth,
                leaves: tree.leaf_count(),
                nodes: tree.node_count(),
                median_ms: median(&mut runs),
                runs_ms,
            });
        }
    }
    let mut fits = Vec::new();
    for &k in &cfg.branching {
        let points: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.k == k)
            .map(|c| (c.leaves as f64, c.median_ms))
            .collect();
        if points.len() >= 2 {
            fits.push(linear_fit(k, &points));
        }
    }
    Ok(BenchReport {
        repetitions: cfg.repetitions,
        noisy: cfg.repetitions == 1,
        cells,
        fits,
    })
}
