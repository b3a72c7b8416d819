use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;
use serde_json::{json, Value};
use sevq_core::codebook::DisentangleConfig;
use sevq_core::io::{self, FeatureFormat, TokenFormat};
use sevq_core::quantizer::{train_codec_observed, training_rows, DistortionReport};
use sevq_core::{euclidean_rvq, rng, train_codec, CodecModel, Error, FeatureMatrix, TrainConfig};

use crate::report::{csv_table, emit, to_json, CmdResult};
use crate::{CompareArgs, DecodeArgs, EncodeArgs, OutputOpts, TrainArgs, TrainOpts};

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            stages: self.stages,
            tau: self.tau,
            subset_size: self.subset_n,
            anchors_per_cluster: self.anchors_per_cluster,
            max_nodes: Some(self.max_nodes),
            seed: self.seed,
            disentangle: self.disentangle.then(|| DisentangleConfig {
                steps: self.disentangle_steps,
                ..DisentangleConfig::default()
            }),
        }
    }
}

fn load_features(path: &Path) -> CmdResult<FeatureMatrix> {
    Ok(io::load_features(path, FeatureFormat::from_path(path))?)
}

fn sibling(model: &Path, name: &str) -> PathBuf {
    model.parent().unwrap_or(Path::new("")).join(name)
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Writes the JSON report, or the CSV table when `--csv` is set.
fn finish(out: &OutputOpts, report: &Value, header: &[&str], rows: &[Vec<Value>]) -> CmdResult {
    let text = if out.csv {
        csv_table(header, rows)
    } else {
        to_json(report)
    };
    emit(&text, out.report.as_deref())
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let start = Instant::now();
    let x = load_features(&a.features)?;
    let cfg = a.train.config();
    let mut dump_error = None;
    let trained = train_codec_observed(&x, &cfg, |s, g, p| {
        if a.dump_graph && dump_error.is_none() {
            let result = io::save_edge_list(g, &sibling(&a.model, &format!("stage{s}_edges.csv")))
                .and_then(|()| {
                    io::save_partition(p, &sibling(&a.model, &format!("stage{s}_partition.json")))
                });
            dump_error = result.err();
        }
    })?;
    if let Some(e) = dump_error {
        return Err(e.into());
    }
    io::save_model(&trained.model, &a.model)?;

    let report = json!({
        "command": "train",
        "config": a,
        "input": { "rows": x.rows(), "cols": x.cols() },
        "training_rows": trained.model.metadata().training_rows,
        "codebook_sizes": trained.model.codebook_sizes(),
        "stages": trained.stats,
        "early_stop": trained.model.metadata().early_stop,
        "timing": { "total_seconds": seconds(start) },
    });
    let rows: Vec<Vec<Value>> = trained
        .stats
        .iter()
        .map(|s| {
            vec![
                json!(s.stage),
                json!(s.codebook_size),
                json!(s.training_rows),
                json!(s.edges),
                json!(s.isolated_vertices),
                json!(s.se_initial),
                json!(s.se_minimized),
                json!(s.anchors),
            ]
        })
        .collect();
    finish(
        &a.output,
        &report,
        &[
            "stage",
            "codebook_size",
            "training_rows",
            "edges",
            "isolated_vertices",
            "se_initial",
            "se_minimized",
            "anchors",
        ],
        &rows,
    )
}

pub fn encode(a: &EncodeArgs) -> CmdResult {
    let start = Instant::now();
    let model = io::load_model(&a.model)?;
    let x = load_features(&a.features)?;
    let tokens = model.encode(&x)?;
    io::save_tokens(&tokens, &a.tokens, TokenFormat::from_path(&a.tokens))?;

    let used: Vec<usize> = (0..tokens.stages())
        .map(|s| {
            let mut seen: Vec<u32> = (0..tokens.frames()).map(|t| tokens.get(t, s)).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
        .collect();
    let diagnostic = if a.diagnostic_eq4 {
        Some(model.closed_form_diagnostic(&x)?)
    } else {
        None
    };
    let mut report = json!({
        "command": "encode",
        "config": a,
        "frames": tokens.frames(),
        "stages": tokens.stages(),
        "codebook_sizes": model.codebook_sizes(),
        "tokens_used": used,
        "timing": { "total_seconds": seconds(start) },
    });
    if let Some(d) = diagnostic {
        report["closed_form_diagnostic"] = json!(d);
    }
    let rows: Vec<Vec<Value>> = model
        .codebook_sizes()
        .iter()
        .zip(&used)
        .enumerate()
        .map(|(s, (k, u))| vec![json!(s), json!(k), json!(u)])
        .collect();
    finish(
        &a.output,
        &report,
        &["stage", "codebook_size", "tokens_used"],
        &rows,
    )
}

pub fn decode(a: &DecodeArgs) -> CmdResult {
    let start = Instant::now();
    let model = io::load_model(&a.model)?;
    let tokens = io::load_tokens(&a.tokens, TokenFormat::from_path(&a.tokens))?;
    let stages = model.decode_stages(&tokens)?;
    let x_hat = stages.last().expect("at least one stage");
    io::save_features(
        x_hat,
        &a.output_features,
        FeatureFormat::from_path(&a.output_features),
    )?;

    let distortion = match &a.reference {
        Some(path) => Some(sevq_core::quantizer::staged_distortion_report(
            &load_features(path)?,
            &stages,
        )?),
        None => None,
    };
    let mut report = json!({
        "command": "decode",
        "config": a,
        "frames": tokens.frames(),
        "stages": tokens.stages(),
        "timing": { "total_seconds": seconds(start) },
    });
    let rows: Vec<Vec<Value>> = model
        .codebook_sizes()
        .iter()
        .enumerate()
        .map(|(s, k)| {
            let mse = distortion.as_ref().map(|d| d.stage_mse[s]);
            vec![json!(s), json!(k), json!(mse)]
        })
        .collect();
    if let Some(d) = distortion {
        report["distortion"] = json!(d);
    }
    finish(
        &a.output,
        &report,
        &["stage", "codebook_size", "mse"],
        &rows,
    )
}

/// Seeded 80/20 split of `0..rows`, each side in ascending order.
fn split(rows: usize, seed: u64) -> CmdResult<(Vec<usize>, Vec<usize>)> {
    let test_len = (rows / 5).max(1);
    if rows < test_len + 2 {
        return Err(
            Error::InvalidArgument(format!("need at least 3 rows to split, got {rows}")).into(),
        );
    }
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_SPLIT));
    let mut test = order[..test_len].to_vec();
    let mut train = order[test_len..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[derive(Serialize)]
struct CodecBlock {
    codebook_sizes: Vec<usize>,
    train_seconds: f64,
    #[serde(flatten)]
    distortion: DistortionReport,
}

fn evaluate(model: &CodecModel, test: &FeatureMatrix) -> CmdResult<DistortionReport> {
    Ok(model.evaluate(test)?.1)
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let start = Instant::now();
    let x = load_features(&a.features)?;
    let cfg = a.train.config();
    let (train_idx, test_idx) = split(x.rows(), cfg.seed)?;
    let train = x.select_rows(&train_idx)?;
    let test = x.select_rows(&test_idx)?;

    let t = Instant::now();
    let se = train_codec(&train, &cfg)?;
    let se_seconds = seconds(t);
    let ks = se.codebook_sizes();

    // The baseline sees exactly the rows the codec trained on.
    let t = Instant::now();
    let rows = training_rows(train.rows(), &cfg);
    let (km, _) = euclidean_rvq(&train.select_rows(&rows)?, &ks, cfg.seed)?;
    let km_seconds = seconds(t);

    let se_report = evaluate(&se, &test)?;
    let km_report = evaluate(&km, &test)?;
    let diagnostic = if a.diagnostic_eq4 {
        Some(se.closed_form_diagnostic(&test)?)
    } else {
        None
    };

    let stage_rows: Vec<Vec<Value>> = (0..ks.len())
        .map(|s| {
            vec![
                json!(s),
                json!(ks[s]),
                json!(km.codebook_sizes()[s]),
                json!(se_report.stage_mse[s]),
                json!(km_report.stage_mse[s]),
            ]
        })
        .collect();
    let stages: Vec<Value> = stage_rows
        .iter()
        .map(|r| json!({ "stage": r[0], "se_k": r[1], "kmeans_k": r[2], "se_mse": r[3], "kmeans_mse": r[4] }))
        .collect();
    let block = |model: &CodecModel, d: DistortionReport, secs: f64| CodecBlock {
        codebook_sizes: model.codebook_sizes(),
        train_seconds: secs,
        distortion: d,
    };
    let mut se_block = json!(block(&se, se_report, se_seconds));
    let mut km_block = json!(block(&km, km_report, km_seconds));
    // Timings live under "timing" so the rest of the report is reproducible.
    se_block
        .as_object_mut()
        .expect("object")
        .remove("train_seconds");
    km_block
        .as_object_mut()
        .expect("object")
        .remove("train_seconds");

    let mut report = json!({
        "command": "compare",
        "config": a,
        "split": { "train_rows": train.rows(), "test_rows": test.rows() },
        "stages": stages,
        "se": se_block,
        "kmeans_rvq": km_block,
        "timing": {
            "se_train_seconds": se_seconds,
            "kmeans_train_seconds": km_seconds,
            "total_seconds": seconds(start),
        },
    });
    if let Some(d) = diagnostic {
        report["closed_form_diagnostic"] = json!(d);
    }
    finish(
        &a.output,
        &report,
        &["stage", "se_k", "kmeans_k", "se_mse", "kmeans_mse"],
        &stage_rows,
    )
}
