//! The `plan`, `simulate`, `report` and `corpus` commands.

use std::path::{Path, PathBuf};

use coverplan_core::corpus::seeded_corpus;
use coverplan_core::decompose::{decompose_msa, ConvexCell};
use coverplan_core::geometry::{simplify_loop, Point2, Polygon};
use coverplan_core::sim::{SimConfig, SimReport, SimState};
use coverplan_core::stitch::{
    compare, stitch_classic, stitch_modified, stitch_uniform_direction, ComparisonRow,
    CoveragePlan,
};
use coverplan_core::sweep::{boustrophedon, SweepPath};
use serde::Serialize;

use crate::error::{planning, CliError};
use crate::io::{
    json_files, read_json, write_bytes, write_json, write_text, CellRecord, PlanFile,
    PolygonFile, ReportFile, WorldFile, SCHEMA_VERSION,
};
use crate::{pgm, svg};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub coverage_radius: f64,
    pub dp_tolerance: f64,
    /// Defaults to a fifth of the coverage radius.
    pub grid_resolution: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            coverage_radius: 0.25,
            dp_tolerance: 0.10,
            grid_resolution: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.coverage_radius) {
            return Err(CliError::Input("--radius must be positive".into()));
        }
        if !(self.dp_tolerance.is_finite() && self.dp_tolerance >= 0.0) {
            return Err(CliError::Input("--tolerance must be non-negative".into()));
        }
        if self.grid_resolution.is_some_and(|r| !positive(r)) {
            return Err(CliError::Input("--resolution must be positive".into()));
        }
        Ok(())
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Everything the planning pipeline produces for one polygon.
#[derive(Debug, Clone)]
pub struct PlannedPolygon {
    pub polygon: Polygon,
    pub start: Point2,
    pub cells: Vec<ConvexCell>,
    pub sweeps: Vec<SweepPath>,
    pub plan: CoveragePlan,
    pub classic: Option<CoveragePlan>,
    pub baseline: Option<CoveragePlan>,
}

impl PlannedPolygon {
    pub fn comparison(&self) -> Option<ComparisonRow> {
        let (classic, baseline) = (self.classic.as_ref()?, self.baseline.as_ref()?);
        Some(compare(self.polygon.len(), baseline, classic, &self.plan))
    }
}

/// Simplifies the boundary, then decomposes, sweeps and stitches it.
///
/// A start that the simplification leaves just inside the new boundary is
/// moved onto it. With `baseline` set the classic stitching and the
/// vertical-sweep baseline are produced as well.
pub fn plan_polygon(
    polygon: &Polygon,
    start: Point2,
    config: &RunConfig,
    baseline: bool,
) -> Result<PlannedPolygon, CliError> {
    config.validate()?;
    let r = config.coverage_radius;
    let simplified = simplify_loop(polygon.vertices(), config.dp_tolerance);
    let polygon = match Polygon::from_loop(simplified) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("simplified boundary rejected ({e}); planning on the input boundary");
            polygon.clone()
        }
    };
    let start = if polygon.contains(start)
        && polygon.distance_to_boundary(start) <= config.dp_tolerance
    {
        polygon.closest_boundary_point(start)
    } else {
        start
    };
    let cells = decompose_msa(&polygon, start, r).map_err(planning)?;
    let sweeps = cells
        .iter()
        .map(|c| boustrophedon(c, r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(planning)?;
    let plan = stitch_modified(&cells, &sweeps, start).map_err(planning)?;
    let (classic, baseline) = if baseline {
        (
            Some(stitch_classic(&cells, &sweeps, start).map_err(planning)?),
            Some(stitch_uniform_direction(&cells, r, start).map_err(planning)?),
        )
    } else {
        (None, None)
    };
    Ok(PlannedPolygon {
        polygon,
        start,
        cells,
        sweeps,
        plan,
        classic,
        baseline,
    })
}

fn load_polygon(path: &Path) -> Result<Polygon, CliError> {
    let file: PolygonFile = read_json(path)?;
    Polygon::from_loop(file.vertices).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        pointer: "/vertices".into(),
        message: e.to_string(),
    })
}

/// Writes `plan.json` and `plan.svg`.
pub fn cmd_plan(
    polygon_path: &Path,
    start: Option<Point2>,
    config: &RunConfig,
    baseline: bool,
) -> Result<PlannedPolygon, CliError> {
    let polygon = load_polygon(polygon_path)?;
    let start = start.unwrap_or(polygon.vertex(0));
    let planned = plan_polygon(&polygon, start, config, baseline)?;
    let file = PlanFile {
        schema: SCHEMA_VERSION,
        radius: config.coverage_radius,
        tolerance: config.dp_tolerance,
        start: planned.start,
        polygon: planned.polygon.clone(),
        cells: planned
            .cells
            .iter()
            .zip(&planned.sweeps)
            .map(|(c, s)| CellRecord {
                polygon: c.polygon.clone(),
                msa_edge: c.msa.edge_index,
                span: c.msa.span,
                sweep_count: s.sweep_count,
                turn_count: s.turn_count,
            })
            .collect(),
        plan: planned.plan.clone(),
        classic: planned.classic.clone(),
        baseline: planned.baseline.clone(),
        comparison: planned.comparison(),
    };
    write_json(&config.out("plan.json"), &file)?;
    let drawing = svg::plan_svg(
        &planned.polygon,
        &planned.cells,
        &planned.sweeps,
        &planned.plan,
        planned.classic.as_ref(),
        planned.start,
    );
    write_text(&config.out("plan.svg"), &drawing)?;
    Ok(planned)
}

#[derive(Serialize)]
struct MetricsRow {
    t: f64,
    x: f64,
    y: f64,
    theta: f64,
    coverage_ratio: f64,
    best_heading: f64,
    area_error: Option<f64>,
}

/// Writes `report.json`, `traj.svg`, `metrics.csv` and `occupancy.pgm`.
///
/// The robot's coverage radius comes from the world file; the grid
/// resolution defaults to a fifth of it.
pub fn cmd_simulate(
    world_path: &Path,
    plan_path: &Path,
    config: &RunConfig,
) -> Result<SimReport, CliError> {
    config.validate()?;
    let world = read_json::<WorldFile>(world_path)?.into_spec();
    let plan_file: PlanFile = read_json(plan_path)?;
    let r = world.robot.coverage_radius;
    if (plan_file.radius - r).abs() > 1e-12 {
        log::warn!(
            "plan was made for radius {} but the robot covers {}",
            plan_file.radius,
            r
        );
    }
    let resolution = config.grid_resolution.unwrap_or(r / 5.0);
    let sim_config = SimConfig {
        grid_resolution: Some(resolution),
        dp_tolerance: config.dp_tolerance,
        ..SimConfig::default()
    };
    let mut state = SimState::new(&world, plan_file.plan.clone(), sim_config, config.seed)
        .map_err(CliError::Core)?;
    state.run_to_end().map_err(CliError::Core)?;
    let occ = state.occ.clone();
    let report = state.finish().map_err(CliError::Core)?;

    let file = ReportFile {
        schema: SCHEMA_VERSION,
        radius: r,
        resolution,
        report,
    };
    write_json(&config.out("report.json"), &file)?;
    write_text(
        &config.out("traj.svg"),
        &svg::trajectory_svg(&world, &plan_file.plan, &file.report),
    )?;
    let rows = file.report.ticks.iter().map(|s| MetricsRow {
        t: s.t,
        x: s.x,
        y: s.y,
        theta: s.theta,
        coverage_ratio: s.coverage_ratio,
        best_heading: s.best_heading,
        area_error: s.area_error,
    });
    write_bytes(&config.out("metrics.csv"), &to_csv(rows)?)?;
    write_bytes(&config.out("occupancy.pgm"), &pgm::occupancy_pgm(&occ))?;
    Ok(file.report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub name: String,
    pub vertices: usize,
    pub turns_baseline: usize,
    pub turns_new: usize,
    pub length_classic: f64,
    pub length_new: f64,
}

/// One comparison row per polygon file in `corpus_dir`, in file-name
/// order, written to `table.csv`.
pub fn cmd_report(corpus_dir: &Path, config: &RunConfig) -> Result<Vec<TableRow>, CliError> {
    let files = json_files(corpus_dir)?;
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no polygon files in corpus",
            corpus_dir.display()
        )));
    }
    let mut rows = Vec::with_capacity(files.len());
    for path in &files {
        let polygon = load_polygon(path)?;
        let planned = plan_polygon(&polygon, polygon.vertex(0), config, true)?;
        let c = planned.comparison().expect("baseline requested");
        rows.push(TableRow {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            vertices: c.vertices,
            turns_baseline: c.turns_baseline,
            turns_new: c.turns_new,
            length_classic: c.length_classic,
            length_new: c.length_new,
        });
    }
    write_bytes(&config.out("table.csv"), &to_csv(rows.iter())?)?;
    Ok(rows)
}

/// Writes `count` seeded random polygons as `polygon_NNN.json`.
pub fn cmd_corpus(
    config: &RunConfig,
    count: usize,
    min_vertices: usize,
    max_vertices: usize,
) -> Result<Vec<PathBuf>, CliError> {
    if count == 0 || min_vertices < 3 || min_vertices > max_vertices {
        return Err(CliError::Input(
            "corpus needs count > 0 and 3 <= min <= max vertices".into(),
        ));
    }
    let mut paths = Vec::with_capacity(count);
    for (i, p) in seeded_corpus(config.seed, count, min_vertices, max_vertices)
        .iter()
        .enumerate()
    {
        let name = format!("polygon_{i:03}");
        let path = config.out(&format!("{name}.json"));
        write_json(&path, &PolygonFile::new(Some(name), p))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}
