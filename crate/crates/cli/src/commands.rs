use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use spectral_reach::bottleneck::bottleneck_report;
use spectral_reach::commute::{commute, commute_mc, CommuteMethod, DEFAULT_WALK_CAP};
use spectral_reach::export::{
    aggregate_csv, centrality_csv, curves_csv, embedding_csv, grid_csv, heatmap_ppm, matrix_csv,
    normalize_unit, shaping_summary, training_log_csv,
};
use spectral_reach::graph::pseudo_inverse;
use spectral_reach::replearn::{learn_embedding, CollectConfig, TrainConfig};
use spectral_reach::shaping::{dimension_sweep, run_experiment, QConfig, RewardKind, ShapingEmbeddings};
use spectral_reach::spectral::{distances_to, laprep, ra_laprep};
use spectral_reach::{build_graph, eig_sym, verify, Embedding, Error, MazeSpec};

use crate::input::{goal_state, load_embedding, load_map, sibling, Dim, LoadedMap};
use crate::manifest::RunManifest;
use crate::{Command, EmbedKind, MapArgs, Method};

/// Pixels per cell in heatmap rasters.
const HEATMAP_SCALE: usize = 16;

pub fn run(command: Command) -> Result<ExitCode> {
    let config = serde_json::to_value(&command)?;
    let name = config
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let mut manifest = RunManifest::new(&name, config);
    let out = match command {
        Command::Env { map, out } => env(&map, out.as_deref(), &mut manifest)?,
        Command::Embed { map, kind, d, out } => {
            let loaded = open_map(&map, &mut manifest)?;
            let e = ground_truth(&loaded.maze, kind, d)?;
            manifest.output(&out, embedding_csv(&e, loaded.maze.index().coords())?.as_bytes())?;
            println!("states={} columns={}", e.n_states(), e.coords.ncols());
            Some(out)
        }
        Command::Heatmap {
            map,
            embedding,
            kind,
            d,
            goal,
            normalize,
            out,
        } => {
            let loaded = open_map(&map, &mut manifest)?;
            let maze = &loaded.maze;
            let goal = goal_state(maze, goal)?;
            let e = match embedding {
                Some(path) => read_embedding(&path, maze, &mut manifest)?,
                None => ground_truth(maze, kind, d)?,
            };
            let dist = distances_to(&e, goal);
            let shown = if normalize { normalize_unit(&dist) } else { dist.clone() };
            manifest.output(&out, grid_csv(maze, &shown)?.as_bytes())?;
            manifest.output(&sibling(&out, "ppm"), &heatmap_ppm(maze, &dist, HEATMAP_SCALE))?;
            Some(out)
        }
        Command::Verify { suite, out } => {
            let report = verify::run(suite)?;
            for c in &report.checks {
                println!("{c}");
            }
            let failed = report.failures().count();
            println!("{} checks, {} failed", report.checks.len(), failed);
            if let Some(out) = &out {
                manifest.output(out, serde_json::to_string_pretty(&report)?.as_bytes())?;
                manifest.finish(out)?;
            }
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Learn {
            map,
            d,
            tau,
            seed,
            episodes,
            iterations,
            out,
        } => {
            let loaded = open_map(&map, &mut manifest)?;
            manifest.seeds = vec![seed];
            let collect = CollectConfig {
                episodes,
                tau,
                seed,
                ..Default::default()
            };
            let train = TrainConfig {
                d,
                iterations,
                seed,
                ..Default::default()
            };
            let run = learn_embedding(&loaded.maze, collect, train)?;
            let coords = loaded.maze.index().coords();
            manifest.output(&out, embedding_csv(&run.embedding, coords)?.as_bytes())?;
            manifest.output(&sibling(&out, "log.csv"), training_log_csv(&run.rep.log)?.as_bytes())?;
            let eig: Vec<String> = run.eigenvalues.values.iter().map(|v| format!("{v:.6}")).collect();
            println!("objective={:.6} eigenvalues={}", run.rep.final_objective, eig.join(","));
            Some(out)
        }
        Command::Shape {
            map,
            kind,
            d,
            goal,
            seeds,
            episodes,
            embedding,
            out,
        } => {
            let loaded = open_map(&map, &mut manifest)?;
            manifest.seeds = seeds.0.clone();
            shape(&loaded, &kind, &d, &goal, &seeds.0, episodes, embedding.as_deref(), &out, &mut manifest)?;
            Some(out)
        }
        Command::Bottleneck {
            map,
            kind,
            d,
            embedding,
            frac,
            invert,
            out,
        } => {
            let loaded = open_map(&map, &mut manifest)?;
            let maze = &loaded.maze;
            let e = match embedding {
                Some(path) => read_embedding(&path, maze, &mut manifest)?,
                None => ground_truth(maze, kind, d)?,
            };
            let report = bottleneck_report(&e, frac, invert)?;
            manifest.output(&out, centrality_csv(&report, maze.index().coords())?.as_bytes())?;
            let cells: Vec<String> = report
                .selected
                .iter()
                .map(|&s| {
                    let (x, y) = maze.index().coord(s);
                    format!("({x},{y})")
                })
                .collect();
            println!("selected={} {}", report.selected.len(), cells.join(" "));
            Some(out)
        }
        Command::Commute {
            map,
            method,
            start,
            goal,
            seed,
            walks,
            out,
        } => {
            let loaded = open_map(&map, &mut manifest)?;
            let maze = &loaded.maze;
            let graph = build_graph(maze);
            let pair = match (start, goal) {
                (Some(s), Some(t)) => Some((goal_state(maze, s)?, goal_state(maze, t)?)),
                (None, None) => None,
                _ => return Err(Error::InvalidConfig("--start and --goal go together".into()).into()),
            };
            match method {
                Method::Mc => {
                    let (s, t) = pair.ok_or_else(|| Error::InvalidConfig("mc needs --start and --goal".into()))?;
                    let seed = seed.ok_or_else(|| Error::InvalidConfig("mc needs --seed".into()))?;
                    manifest.seeds = vec![seed];
                    let report = commute_mc(&graph, s, t, walks, DEFAULT_WALK_CAP, seed)?;
                    println!(
                        "estimate={:.6} stderr={:.6} walks={} capped={}",
                        report.estimate, report.stderr, report.walks, report.capped
                    );
                    if let Some(out) = &out {
                        manifest.output(out, serde_json::to_string_pretty(&report)?.as_bytes())?;
                    }
                }
                Method::Solve | Method::Pinv => {
                    let m = if let Method::Solve = method {
                        commute(&graph, CommuteMethod::Solve, None)?
                    } else {
                        let basis = eig_sym(&graph.laplacian())?;
                        let pinv = pseudo_inverse(&graph, &basis)?;
                        commute(&graph, CommuteMethod::PseudoInverse, Some(&pinv))?
                    };
                    if let Some((s, t)) = pair {
                        println!("commute={:.9}", m.get(s, t));
                    }
                    if let Some(out) = &out {
                        manifest.output(out, matrix_csv(&m.n)?.as_bytes())?;
                    }
                }
            }
            out
        }
    };
    if let Some(out) = out {
        manifest.finish(&out)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn open_map(args: &MapArgs, manifest: &mut RunManifest) -> Result<LoadedMap> {
    let loaded = load_map(&args.map, args.resolution)?;
    if let Some((path, bytes)) = &loaded.source {
        manifest.input(path, bytes);
    }
    Ok(loaded)
}

fn read_embedding(path: &Path, maze: &MazeSpec, manifest: &mut RunManifest) -> Result<Embedding> {
    let (e, bytes) = load_embedding(path, maze)?;
    manifest.input(path, &bytes);
    Ok(e)
}

fn ground_truth(maze: &MazeSpec, kind: EmbedKind, d: Dim) -> Result<Embedding> {
    let graph = build_graph(maze);
    graph.require_connected()?;
    let basis = eig_sym(&graph.laplacian())?;
    let d = d.resolve(maze.n_states());
    Ok(match kind {
        EmbedKind::Lap => laprep(&basis, d)?,
        EmbedKind::Ra => ra_laprep(&basis, d)?,
    })
}

fn env(args: &MapArgs, out: Option<&Path>, manifest: &mut RunManifest) -> Result<Option<std::path::PathBuf>> {
    let loaded = open_map(args, manifest)?;
    let graph = build_graph(&loaded.maze);
    println!(
        "states={} edges={} volume={} components={}",
        graph.n_states(),
        graph.edge_count(),
        graph.volume(),
        graph.connected_components().len()
    );
    if let Some(out) = out {
        manifest.output(out, serde_json::to_string_pretty(&graph.to_export())?.as_bytes())?;
    }
    Ok(out.map(Path::to_path_buf))
}

#[allow(clippy::too_many_arguments)]
fn shape(
    loaded: &LoadedMap,
    kinds: &[RewardKind],
    dims: &[Dim],
    goal_cells: &[(usize, usize)],
    seeds: &[u64],
    episodes: usize,
    embedding: Option<&Path>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let maze = &loaded.maze;
    let n = maze.n_states();
    let goals: Vec<usize> = if goal_cells.is_empty() {
        maze.goal_candidates()
    } else {
        goal_cells.iter().map(|&c| goal_state(maze, c)).collect::<Result<_>>()?
    };
    if goals.is_empty() {
        return Err(Error::InvalidConfig("map has no G cells; pass --goal".into()).into());
    }
    let config = QConfig {
        episodes,
        ..Default::default()
    };
    if dims.len() > 1 {
        let d_values: Vec<usize> = dims.iter().map(|d| d.resolve(n)).collect();
        let points = dimension_sweep(maze, &d_values, &goals, seeds, &config)?;
        let mut csv = String::from("d,auc,stderr\n");
        for p in &points {
            csv.push_str(&format!("{},{},{}\n", p.d, p.auc, p.stderr));
            println!("d={} auc={:.4} stderr={:.4}", p.d, p.auc, p.stderr);
        }
        manifest.output(out, csv.as_bytes())?;
        manifest.output(&sibling(out, "summary.json"), serde_json::to_string_pretty(&points)?.as_bytes())?;
        return Ok(());
    }
    let d = dims[0].resolve(n);
    let needs_truth = kinds.iter().any(|k| k.needs_embedding());
    let mut embeddings = ShapingEmbeddings::default();
    if needs_truth {
        let graph = build_graph(maze);
        graph.require_connected()?;
        let basis = eig_sym(&graph.laplacian())?;
        embeddings.ra_laprep = Some(ra_laprep(&basis, d)?);
        embeddings.laprep = Some(laprep(&basis, d)?);
    }
    if let Some(path) = embedding {
        embeddings.ra_laprep = Some(read_embedding(path, maze, manifest)?);
    }
    let run = run_experiment(maze, &embeddings, kinds, &goals, seeds, &config)?;
    manifest.output(out, curves_csv(&run)?.as_bytes())?;
    manifest.output(&sibling(out, "aggregate.csv"), aggregate_csv(&run)?.as_bytes())?;
    let summary = shaping_summary(&run);
    manifest.output(&sibling(out, "summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    for (kind, s) in &summary {
        let e90 = s.episodes_to_90pct.map_or("never".to_string(), |e| e.to_string());
        println!("{kind} auc={:.4} stderr={:.4} episodes_to_90pct={e90}", s.auc, s.stderr);
    }
    Ok(())
}
