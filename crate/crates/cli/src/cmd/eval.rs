use std::path::{Path, PathBuf};

use log::info;
use motifcast_core::forecast::{naive_forecast, predict_samples, LinearBaseline};
use motifcast_core::metrics::ErrorAccumulator;
use motifcast_core::nn::read_checkpoint;
use motifcast_core::{ChannelStats, ForecasterModel, WindowSample};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::data::{self, Dataset};
use crate::output::{fail, slug, write_atomic, write_json, Classify, CmdResult, Kind};

/// One row of the metrics table; errors are in standardized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub horizon: usize,
    pub model_mse: f64,
    pub model_mae: f64,
    pub naive_mse: f64,
    pub linear_mse: f64,
}

pub const CSV_HEADER: [&str; 5] = ["horizon", "model_mse", "model_mae", "naive_mse", "linear_mse"];

/// Per-horizon errors over the first `h` steps of every forecast.
pub fn horizon_table(
    horizons: &[usize],
    truth: &[&[f64]],
    model: &[Vec<f64>],
    naive: &[Vec<f64>],
    linear: &[Vec<f64>],
) -> CmdResult<Vec<HorizonMetrics>> {
    horizons
        .iter()
        .map(|&h| {
            let (mut m, mut n, mut l) = (
                ErrorAccumulator::default(),
                ErrorAccumulator::default(),
                ErrorAccumulator::default(),
            );
            for i in 0..truth.len() {
                let t = &truth[i][..h];
                m.add(&model[i][..h], t).or_data()?;
                n.add(&naive[i][..h], t).or_data()?;
                l.add(&linear[i][..h], t).or_data()?;
            }
            Ok(HorizonMetrics {
                horizon: h,
                model_mse: m.mse(),
                model_mae: m.mae(),
                naive_mse: n.mse(),
                linear_mse: l.mse(),
            })
        })
        .collect()
}

pub fn metrics_csv(rows: &[HorizonMetrics]) -> CmdResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).or_data()?;
    for r in rows {
        w.serialize((r.horizon, r.model_mse, r.model_mae, r.naive_mse, r.linear_mse))
            .or_data()?;
    }
    w.into_inner().or_data()
}

/// A test forecast in original units, as consumed by `export`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    pub channel: String,
    /// Absolute index of the first forecast step.
    pub t_start: usize,
    pub truth: Vec<f64>,
    pub prediction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub subject: String,
    pub lookback: usize,
    pub horizon: usize,
    pub windows: Vec<PredictionTrace>,
}

pub fn run(cfg: &RunConfig, checkpoints: &[PathBuf], horizons: &[usize]) -> CmdResult<()> {
    let ds = data::load(cfg)?;
    for path in checkpoints {
        eval_one(cfg, &ds, path, horizons)?;
    }
    Ok(())
}

fn eval_one(cfg: &RunConfig, ds: &Dataset, path: &Path, horizons: &[usize]) -> CmdResult<()> {
    if !path.is_file() {
        return fail(Kind::Config, format!("checkpoint not found: {}", path.display()));
    }
    let file = std::fs::File::open(path).or_data()?;
    let ckpt = read_checkpoint(std::io::BufReader::new(file)).or_data()?;
    let model = ForecasterModel::from_checkpoint(&ckpt).or_data()?;
    let field = |key: &str| {
        ckpt.manifest
            .get(key)
            .cloned()
            .ok_or_else(|| anyhow::anyhow!("checkpoint {} has no '{key}' entry", path.display()))
    };
    let subject: String = serde_json::from_value(field("subject").or_data()?).or_data()?;
    let names: Vec<String> = serde_json::from_value(field("channel_names").or_data()?).or_data()?;
    let stats: ChannelStats = serde_json::from_value(field("stats").or_data()?).or_data()?;
    let members = ds.members_by_name(&names)?;

    let (l, h) = (model.config.lookback, model.config.horizon);
    let horizons: Vec<usize> = if horizons.is_empty() {
        vec![h]
    } else {
        horizons.to_vec()
    };
    if let Some(&bad) = horizons.iter().find(|&&x| x == 0 || x > h) {
        return fail(
            Kind::Config,
            format!("horizon {bad} outside 1..={h} covered by {}", path.display()),
        );
    }

    let test = ds.windows(&members, &stats, l, h, 1, ds.test.clone())?;
    let fit = ds.windows(&members, &stats, l, h, cfg.stride, ds.train.clone())?;
    let linear = LinearBaseline::fit(
        &fit.iter().map(|s| s.window.as_slice()).collect::<Vec<_>>(),
        &fit.iter().map(|s| s.target.as_slice()).collect::<Vec<_>>(),
    )
    .or_data()?;
    let pred = predict_samples(&model, &test, cfg.batch_size).or_data()?;
    if pred.iter().flatten().any(|v| !v.is_finite()) {
        return fail(Kind::Numeric, format!("{subject}: non-finite forecast"));
    }
    let naive: Vec<Vec<f64>> = test.iter().map(|s| naive_forecast(&s.window, h)).collect();
    let lin: Vec<Vec<f64>> = test
        .iter()
        .map(|s| linear.predict(&s.window))
        .collect::<Result<_, _>>()
        .or_data()?;
    let truth: Vec<&[f64]> = test.iter().map(|s| s.target.as_slice()).collect();
    let rows = horizon_table(&horizons, &truth, &pred, &naive, &lin)?;
    for r in &rows {
        info!(
            "{subject} H={}: model MSE {:.5} MAE {:.5} | naive {:.5} | linear {:.5}",
            r.horizon, r.model_mse, r.model_mae, r.naive_mse, r.linear_mse
        );
    }

    let out = Path::new(&cfg.out_dir);
    let name = slug(&subject);
    write_atomic(&out.join(format!("metrics_{name}.csv")), &metrics_csv(&rows)?)?;
    write_json(
        &out.join(format!("metrics_{name}.json")),
        &json!({
            "subject": subject,
            "channel_names": names,
            "units": "standardized",
            "test_windows": test.len(),
            "rows": rows,
            "run_config": cfg.to_json().or_config()?,
        }),
    )?;
    let traces = traces(&test, &pred, &members, &stats, ds, h);
    write_json(
        &out.join(format!("predictions_{name}.json")),
        &Predictions {
            subject,
            lookback: l,
            horizon: h,
            windows: traces,
        },
    )
}

/// Non-overlapping test forecasts (stride `h`), mapped back to original
/// units.
fn traces(
    test: &[WindowSample],
    pred: &[Vec<f64>],
    members: &[usize],
    stats: &ChannelStats,
    ds: &Dataset,
    h: usize,
) -> Vec<PredictionTrace> {
    let mut out = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for (s, p) in test.iter().zip(pred) {
        if let Some((c, t)) = last {
            if c == s.channel && s.t_end < t + h {
                continue;
            }
        }
        last = Some((s.channel, s.t_end));
        let j = members
            .iter()
            .position(|&m| m == s.channel)
            .expect("window of a member channel");
        out.push(PredictionTrace {
            channel: ds.names()[s.channel].clone(),
            t_start: s.t_end + 1,
            truth: stats.inverse_values(j, &s.target),
            prediction: stats.inverse_values(j, p),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_forecasts_give_zero_rows() {
        let truth = [vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 4.0]];
        let t: Vec<&[f64]> = truth.iter().map(|v| v.as_slice()).collect();
        let exact = truth.to_vec();
        let rows = horizon_table(&[1, 3], &t, &exact, &exact, &exact).unwrap();
        assert!(rows.iter().all(|r| r.model_mse == 0.0 && r.model_mae == 0.0));
        assert_eq!(rows[1].horizon, 3);
    }

    #[test]
    fn naive_is_exact_on_a_constant_series() {
        let window = [2.5; 8];
        let target = vec![2.5; 4];
        let naive = vec![naive_forecast(&window, 4)];
        let rows = horizon_table(&[4], &[&target], &naive, &naive, &naive).unwrap();
        assert_eq!(rows[0].naive_mse, 0.0);
    }

    #[test]
    fn horizon_prefixes_are_scored_separately() {
        let truth = [vec![0.0, 0.0]];
        let t: Vec<&[f64]> = truth.iter().map(|v| v.as_slice()).collect();
        let model = vec![vec![1.0, 3.0]];
        let rows = horizon_table(&[1, 2], &t, &model, &model, &model).unwrap();
        assert_eq!((rows[0].model_mse, rows[1].model_mse), (1.0, 5.0));
        assert_eq!((rows[0].model_mae, rows[1].model_mae), (1.0, 2.0));
    }

    #[test]
    fn csv_has_the_published_columns() {
        let rows = vec![HorizonMetrics {
            horizon: 96,
            model_mse: 0.5,
            model_mae: 0.25,
            naive_mse: 1.0,
            linear_mse: 0.75,
        }];
        let text = String::from_utf8(metrics_csv(&rows).unwrap()).unwrap();
        assert_eq!(
            text,
            "horizon,model_mse,model_mae,naive_mse,linear_mse\n96,0.5,0.25,1.0,0.75\n"
        );
    }
}
