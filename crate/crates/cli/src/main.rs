use std::collections::HashMap;
use std::fs::File;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use als_core::analysis::pca_project;
use als_core::engine::{train, Hyperparams, TrainOptions};
use als_core::evaluation::{evaluate, EvalConfig};
use als_core::experiments::{run_grid, select_best, Criterion, GridSpec};
use als_core::ingest::{dataset_stats, load_split, parse_movies, parse_ratings, stratified_split, write_split, Dataset, Movie};
use als_core::model_io::{ModelMeta, SavedModel};
use als_service::api::{RatedMovie, DEFAULT_ALPHA, DEFAULT_TOP_K};
use als_service::catalog::{read_counts, summarize, write_counts};
use als_service::{recommend_raw, AppState, Catalog, LoadedModel, RecommendBody};
use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "als", version, about = "ALS matrix factorization recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse ratings, split per user and write the split directory.
    Ingest {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        movies: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model on a split directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value = "model.alsm")]
        out: PathBuf,
    },
    /// Print RMSE and ranking metrics as JSON.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 3.5)]
        threshold: f64,
        #[arg(long, default_value_t = 3000)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train and evaluate every (k, lambda, tau) cell; resumes from an existing results.csv.
    Grid {
        #[arg(long)]
        data: PathBuf,
        /// JSON grid spec; missing fields take the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Project item factors to 2-D with PCA and write movieId,title,x,y.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        movies: PathBuf,
        /// File with one exact movie title per line; all items if omitted.
        #[arg(long)]
        titles: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fold in a new user's ratings and list recommendations.
    Recommend {
        #[arg(long)]
        model: PathBuf,
        /// Comma separated movieId:rating pairs, e.g. "1:5.0,3114:5.0".
        #[arg(long, default_value = "")]
        rate: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top: usize,
        #[arg(long, default_value_t = 100)]
        min_count: u32,
        /// movies.csv for titles.
        #[arg(long)]
        movies: Option<PathBuf>,
        /// Print the same JSON the HTTP API returns.
        #[arg(long)]
        json: bool,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        movies: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { ratings, movies, out, split, seed } => ingest(&ratings, &movies, &out, split, seed),
        Command::Train { data, k, lambda, tau, epochs, seed, threads, out } => {
            let h = Hyperparams::new(k, lambda, tau, epochs, seed)?;
            train_cmd(&data, &h, threads, &out)
        }
        Command::Evaluate { model, data, k, threshold, sample, seed } => {
            let cfg = EvalConfig { k, threshold, sample_users: sample, seed };
            evaluate_cmd(&model, &data, &cfg)
        }
        Command::Grid { data, config, out, threads } => grid(&data, config.as_deref(), &out, threads),
        Command::Project { model, movies, titles, out } => project(&model, &movies, titles.as_deref(), &out),
        Command::Recommend { model, rate, alpha, top, min_count, movies, json } => {
            let body = RecommendBody { ratings: parse_rate(&rate)?, alpha, top_k: top, min_count };
            recommend_cmd(&model, movies.as_deref(), &body, json)
        }
        Command::Serve { model, movies, counts, port, host } => serve(model.as_deref(), &movies, &counts, SocketAddr::new(host, port)),
    }
}

fn ingest(ratings: &Path, movies: &Path, out: &Path, ratio: f64, seed: u64) -> Result<()> {
    let table = parse_ratings(ratings)?;
    let catalog = parse_movies(movies)?;
    let split = stratified_split(&table, ratio, seed)?;
    let meta = write_split(out, &split)?;
    let stats = dataset_stats(&table)?;
    std::fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    write_counts(&out.join("counts.csv"), &summarize(&split.train))?;
    std::fs::copy(movies, out.join("movies.csv")).with_context(|| format!("copying {}", movies.display()))?;
    eprintln!(
        "{} ratings, {} users, {} movies ({} in catalog); train {} / test {}",
        stats.n_ratings,
        stats.n_users,
        stats.n_items,
        catalog.len(),
        meta.n_train,
        meta.n_test
    );
    Ok(())
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    let (train, test, _) = load_split(dir)?;
    Ok(Dataset::from_split(&train, &test)?)
}

fn history_path(model: &Path) -> PathBuf {
    let mut name = model.file_stem().unwrap_or_default().to_os_string();
    name.push(".history.csv");
    model.with_file_name(name)
}

fn train_cmd(data_dir: &Path, h: &Hyperparams, threads: usize, out: &Path) -> Result<()> {
    let data = load_dataset(data_dir)?;
    let (params, history) = train(&data, h, TrainOptions { threads })?;
    for e in &history.epochs {
        eprintln!(
            "epoch {:>3}  objective {:.4}  train rmse {:.4}  test rmse {}  {:.2}s",
            e.epoch,
            e.objective,
            e.train_rmse,
            e.test_rmse.map_or("-".into(), |r| format!("{r:.4}")),
            e.seconds
        );
    }
    let model = SavedModel {
        params,
        meta: ModelMeta {
            hyperparams: *h,
            user_raw_ids: data.index.user_raw_ids().to_vec(),
            item_raw_ids: data.index.item_raw_ids().to_vec(),
            item_counts: data.item_counts(),
        },
    };
    model.save(out)?;
    history.save(&history_path(out))?;
    Ok(())
}

fn evaluate_cmd(model_path: &Path, data_dir: &Path, cfg: &EvalConfig) -> Result<()> {
    let model = SavedModel::load(model_path)?;
    let (train, test, _) = load_split(data_dir)?;
    let data = Dataset::with_index(model.index()?, &train, &test)?;
    let report = evaluate(&model.params, &data, cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn grid(data_dir: &Path, config: Option<&Path>, out: &Path, threads: usize) -> Result<()> {
    let spec: GridSpec = match config {
        Some(p) => serde_json::from_reader(File::open(p).with_context(|| format!("opening {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => GridSpec::default(),
    };
    let data = load_dataset(data_dir)?;
    let rows = run_grid(&spec, &data, out, TrainOptions { threads })?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", rows.len());
    }
    let best = select_best(&rows, Criterion::TestRmse)?;
    let m = best.metrics.expect("select_best only returns finished cells");
    println!(
        "best by test rmse: k={} lambda={} tau={}  test rmse {:.4}  precision {:.4}  recall {:.4}",
        best.k, best.lambda, best.tau, m.test_rmse, m.precision, m.recall
    );
    Ok(())
}

fn project(model_path: &Path, movies_path: &Path, titles: Option<&Path>, out: &Path) -> Result<()> {
    let model = SavedModel::load(model_path)?;
    let index = model.index()?;
    let movies = parse_movies(movies_path)?;
    let title_of: HashMap<u32, &str> = movies.iter().map(|m| (m.id, m.title.as_str())).collect();
    let dense: Vec<u32> = match titles {
        None => (0..index.n_items() as u32).collect(),
        Some(p) => {
            let wanted = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let by_title: HashMap<&str, &Movie> = movies.iter().map(|m| (m.title.as_str(), m)).collect();
            let mut ids = Vec::new();
            for t in wanted.lines().map(str::trim).filter(|t| !t.is_empty()) {
                let m = by_title.get(t).ok_or_else(|| anyhow!("title not in catalog: {t}"))?;
                ids.push(index.item(m.id).ok_or_else(|| anyhow!("movie has no factors in this model: {t}"))?);
            }
            ids
        }
    };
    let proj = pca_project(&model.params.item_factors, Some(&dense))?;
    let mut csv = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    csv.write_record(["movieId", "title", "x", "y"])?;
    for (&item, xy) in proj.items.iter().zip(&proj.coords) {
        let raw = index.item_raw(item);
        csv.write_record([raw.to_string(), title_of.get(&raw).copied().unwrap_or("").to_owned(), xy[0].to_string(), xy[1].to_string()])?;
    }
    csv.flush()?;
    eprintln!(
        "explained variance: {:.3}, {:.3}",
        proj.explained_variance_ratio[0], proj.explained_variance_ratio[1]
    );
    Ok(())
}

fn parse_rate(text: &str) -> Result<Vec<RatedMovie>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (id, stars) = pair.split_once(':').ok_or_else(|| anyhow!("expected movieId:rating, got {pair:?}"))?;
            Ok(RatedMovie {
                movie_id: id.trim().parse().with_context(|| format!("bad movie id in {pair:?}"))?,
                rating: stars.trim().parse().with_context(|| format!("bad rating in {pair:?}"))?,
            })
        })
        .collect()
}

fn recommend_cmd(model_path: &Path, movies: Option<&Path>, body: &RecommendBody, json: bool) -> Result<()> {
    let loaded = LoadedModel::new(SavedModel::load(model_path)?)?;
    let catalog = match movies {
        Some(p) => Catalog::new(parse_movies(p)?, &HashMap::new()),
        None => Catalog::default(),
    };
    let resp = recommend_raw(&loaded, &catalog, body)?;
    if json {
        println!("{}", serde_json::to_string(&resp)?);
        return Ok(());
    }
    println!("{:>4}  {:>8}  {:>9}  {:>10}  {:>9}  title", "rank", "movieId", "score", "popularity", "affinity");
    for (rank, item) in resp.items.iter().enumerate() {
        println!(
            "{:>4}  {:>8}  {:>9.4}  {:>10.4}  {:>9.4}  {}",
            rank + 1,
            item.movie_id,
            item.score,
            item.popularity_part,
            item.affinity_part,
            item.title
        );
    }
    Ok(())
}

fn serve(model: Option<&Path>, movies: &Path, counts: &Path, addr: SocketAddr) -> Result<()> {
    let model = model.map(|p| SavedModel::load(p).map_err(anyhow::Error::from).and_then(|m| Ok(LoadedModel::new(m)?))).transpose()?;
    let counts = read_counts(counts)?;
    let catalog = Catalog::new(parse_movies(movies)?, &counts);
    if model.is_none() {
        eprintln!("no --model given; /api/recommend and /api/model/info will answer 503");
    }
    eprintln!("listening on http://{addr}");
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(als_service::serve(AppState { model, catalog }, addr))?;
    Ok(())
}
