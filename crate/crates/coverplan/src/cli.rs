use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coverplan_core::geometry::Point2;

use crate::commands::{cmd_corpus, cmd_plan, cmd_report, cmd_simulate, RunConfig};
use crate::error::CliError;

/// Coverage path planning for polygonal areas.
#[derive(Debug, Parser)]
#[command(name = "coverplan", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Coverage radius and sweep spacing, in meters.
    #[arg(long, global = true, default_value_t = 0.25)]
    pub radius: f64,
    /// Douglas-Peucker tolerance, in meters.
    #[arg(long, global = true, default_value_t = 0.10)]
    pub tolerance: f64,
    /// Grid resolution in meters [default: radius / 5].
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; `COVERPLAN_OUT` takes precedence.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a coverage path over a polygon.
    Plan {
        polygon: PathBuf,
        /// Start point as `x,y` [default: first vertex].
        #[arg(long, value_parser = parse_point)]
        start: Option<Point2>,
        /// Also stitch with the classic rule and sweep the vertical baseline.
        #[arg(long)]
        baseline: bool,
    },
    /// Run a plan through the simulator.
    Simulate { world: PathBuf, plan: PathBuf },
    /// Compare planners over a directory of polygon files.
    Report { corpus: PathBuf },
    /// Write a seeded random polygon corpus.
    Corpus {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        min_vertices: usize,
        #[arg(long, default_value_t = 25)]
        max_vertices: usize,
    },
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    let p = Point2::new(parse(x)?, parse(y)?);
    if !p.is_finite() {
        return Err("coordinates must be finite".into());
    }
    Ok(p)
}

impl CommonArgs {
    pub fn config(&self, env_out: Option<PathBuf>) -> RunConfig {
        RunConfig {
            coverage_radius: self.radius,
            dp_tolerance: self.tolerance,
            grid_resolution: self.resolution,
            seed: self.seed,
            output_dir: env_out.unwrap_or_else(|| self.out.clone()),
        }
    }
}

/// Runs one command and returns the lines to print on stdout.
pub fn execute(cli: &Cli, env_out: Option<PathBuf>) -> Result<Vec<String>, CliError> {
    let config = cli.common.config(env_out);
    let mut lines = Vec::new();
    match &cli.command {
        Command::Plan {
            polygon,
            start,
            baseline,
        } => {
            let planned = cmd_plan(polygon, *start, &config, *baseline)?;
            lines.push(format!(
                "cells={} waypoints={} length={:.3} turns={}",
                planned.cells.len(),
                planned.plan.waypoints.len(),
                planned.plan.total_length,
                planned.plan.turn_total
            ));
            if let Some(row) = planned.comparison() {
                lines.push("vertices,turns_baseline,turns_new,length_classic,length_new".into());
                lines.push(format!(
                    "{},{},{},{:.3},{:.3}",
                    row.vertices, row.turns_baseline, row.turns_new, row.length_classic, row.length_new
                ));
            }
        }
        Command::Simulate { world, plan } => {
            let report = cmd_simulate(world, plan, &config)?;
            let m = &report.metrics;
            lines.push(format!(
                "coverage_ratio={:.4} replan_events={} forced_replans={} distance={:.3} duration={:.1} completed={}",
                m.coverage_ratio, m.replan_events, m.forced_replans, m.distance, m.duration, m.completed
            ));
        }
        Command::Report { corpus } => {
            let rows = cmd_report(corpus, &config)?;
            lines.push("name,vertices,turns_baseline,turns_new,length_classic,length_new".into());
            for r in rows {
                lines.push(format!(
                    "{},{},{},{},{:.3},{:.3}",
                    r.name, r.vertices, r.turns_baseline, r.turns_new, r.length_classic, r.length_new
                ));
            }
        }
        Command::Corpus {
            count,
            min_vertices,
            max_vertices,
        } => {
            let paths = cmd_corpus(&config, *count, *min_vertices, *max_vertices)?;
            lines.push(format!("wrote {} polygons to {}", paths.len(), config.output_dir.display()));
        }
    }
    Ok(lines)
}
