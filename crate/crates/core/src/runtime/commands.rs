use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{generate_synthetic, load_corpus, save_corpus, Corpus, SynthConfig};
use crate::error::{Error, Result};
use crate::latent_map::{fit_latent_stats, map_frame, map_standardized, LatentStats};
use crate::metrics::{evaluate, DesiderataReport, MetricsConfig};
use crate::vae::{
    load_checkpoint, save_checkpoint, train, Checkpoint, TrainConfig, TrainHistory, VaeModel,
};

/// Generates a synthetic corpus and writes it to `out`.
pub fn cmd_synth(config: &SynthConfig, out: impl AsRef<Path>) -> Result<Corpus> {
    let corpus = generate_synthetic(config)?;
    save_corpus(&corpus, out)?;
    Ok(corpus)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: VaeModel,
    pub stats: LatentStats,
    pub history: TrainHistory,
    pub history_path: PathBuf,
}

/// `<checkpoint>.history.json` next to the checkpoint.
pub fn default_history_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".history.json");
    checkpoint.with_file_name(name)
}

/// Trains, fits latent stats on the same corpus and saves the checkpoint
/// and the history JSON. A diverged run still writes its history.
pub fn cmd_train(
    corpus_path: impl AsRef<Path>,
    config: &TrainConfig,
    k: f64,
    out_checkpoint: impl AsRef<Path>,
    history_path: Option<&Path>,
) -> Result<TrainOutcome> {
    let out = out_checkpoint.as_ref();
    let history_path = history_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_history_path(out));
    let corpus = load_corpus(corpus_path)?;
    let (model, history) = match train(&corpus, config) {
        Ok(r) => r,
        Err(Error::Diverged { epoch, history }) => {
            write_json(&history_path, &history)?;
            return Err(Error::Diverged { epoch, history });
        }
        Err(e) => return Err(e),
    };
    let stats = fit_latent_stats(&model, &corpus, k)?;
    save_checkpoint(&model, Some(&stats), out)?;
    write_json(&history_path, &history)?;
    Ok(TrainOutcome {
        model,
        stats,
        history,
        history_path,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn checkpoint_stats(checkpoint: &Checkpoint, k: Option<f64>) -> Result<LatentStats> {
    let stats = checkpoint.stats()?;
    match k {
        Some(k) => stats.with_k(k),
        None => Ok(stats.clone()),
    }
}

/// Writes `t,l0,…` rows. Values are printed as `f32` in shortest
/// round-trip form, so parsing a cell gives back the exact float that the
/// live loop sends over OSC.
pub fn write_latent_csv<W: Write>(out: W, rows: &[(f64, Vec<f32>)]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    let dim = rows.first().map_or(0, |r| r.1.len());
    write!(w, "t")?;
    for j in 0..dim {
        write!(w, ",l{j}")?;
    }
    writeln!(w)?;
    for (t, values) in rows {
        write!(w, "{t}")?;
        for v in values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Maps every frame of a corpus and writes the latent trajectory as CSV.
/// Returns the rows written.
pub fn cmd_map(
    checkpoint: impl AsRef<Path>,
    corpus_in: impl AsRef<Path>,
    out: impl AsRef<Path>,
    k: Option<f64>,
) -> Result<Vec<(f64, Vec<f32>)>> {
    let checkpoint = load_checkpoint(checkpoint)?;
    let stats = checkpoint_stats(&checkpoint, k)?;
    let corpus = load_corpus(corpus_in)?;
    let rows = corpus
        .frames()
        .par_iter()
        .map(|f| {
            Ok((
                f.timestamp(),
                map_frame(&checkpoint.model, &stats, f)?.to_f32(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let out = out.as_ref();
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    write_latent_csv(file, &rows).map_err(|e| Error::io(out, e))?;
    Ok(rows)
}

/// Consistency, diversity and range of the checkpoint's mapping over the
/// standardized corpus frames. With `identity_self_test` the identity map is
/// measured instead, which checks the estimators themselves.
pub fn cmd_metrics(
    checkpoint: impl AsRef<Path>,
    corpus: impl AsRef<Path>,
    config: &MetricsConfig,
    k: Option<f64>,
    identity_self_test: bool,
) -> Result<DesiderataReport> {
    let checkpoint = load_checkpoint(checkpoint)?;
    let corpus = load_corpus(corpus)?;
    let model = &checkpoint.model;
    let points = corpus
        .frames()
        .iter()
        .map(|f| model.standardization().standardize_frame(f))
        .collect::<Result<Vec<_>>>()?;
    if identity_self_test {
        return evaluate(|x: &[f64]| Ok(x.to_vec()), &points, config);
    }
    let stats = checkpoint_stats(&checkpoint, k)?;
    evaluate(
        |x: &[f64]| Ok(map_standardized(model, &stats, x)?.into_inner()),
        &points,
        config,
    )
}
