use std::collections::BTreeMap;

use serde::Serialize;

use super::Table;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = A ξ^b`, fitted in log–log coordinates.
    PowerInXi,
    /// `y = A log(1/ξ)/√ξ + C`.
    LogOverSqrtXi,
    /// `y = A n^b`, fitted in log–log coordinates.
    PowerInN,
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_in_xi" => Ok(FitModel::PowerInXi),
            "log_over_sqrt_xi" => Ok(FitModel::LogOverSqrtXi),
            "power_in_n" => Ok(FitModel::PowerInN),
            _ => Err(Error::Schema(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub model: FitModel,
    pub response: String,
    /// Slope in log–log coordinates; absent for the linear model.
    pub exponent: Option<f64>,
    pub prefactor: f64,
    /// Additive constant of the linear model.
    pub intercept: Option<f64>,
    pub r_squared: f64,
    /// `(abscissa, mean response)` per distinct abscissa.
    pub points: Vec<(f64, f64)>,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Fits `model` to `(abscissa, response)` pairs, averaging responses that
/// share an abscissa first.
pub fn fit_rows(model: FitModel, response: &str, data: &[(f64, f64)]) -> Result<FitReport> {
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for &(x, y) in data {
        let e = groups.entry(x.to_bits()).or_insert((x, 0.0, 0));
        e.1 += y;
        e.2 += 1;
    }
    let mut points: Vec<(f64, f64)> = groups.values().map(|&(x, s, c)| (x, s / c as f64)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct abscissae, got {}",
            points.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = match model {
        FitModel::PowerInXi | FitModel::PowerInN => {
            if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
                return Err(Error::Fit(
                    "power-law fit needs positive abscissae and responses".into(),
                ));
            }
            points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip()
        }
        FitModel::LogOverSqrtXi => {
            if points.iter().any(|&(x, _)| x <= 0.0 || x >= 1.0) {
                return Err(Error::Fit("log(1/xi)/sqrt(xi) needs 0 < xi < 1".into()));
            }
            points.iter().map(|&(x, y)| ((1.0 / x).ln() / x.sqrt(), y)).unzip()
        }
    };
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    if !slope.is_finite() {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let report = match model {
        FitModel::LogOverSqrtXi => FitReport {
            model,
            response: response.to_owned(),
            exponent: None,
            prefactor: slope,
            intercept: Some(intercept),
            r_squared,
            points,
        },
        _ => FitReport {
            model,
            response: response.to_owned(),
            exponent: Some(slope),
            prefactor: intercept.exp(),
            intercept: None,
            r_squared,
            points,
        },
    };
    Ok(report)
}

/// Fits a sweep CSV. Rows with an error or an empty response are skipped.
pub fn fit_scaling(csv_text: &str, model: FitModel, response: &str) -> Result<FitReport> {
    let table = Table::parse(csv_text)?;
    let xcol = table.column(match model {
        FitModel::PowerInN => "n",
        _ => "xi",
    })?;
    let ycol = table.column(response)?;
    let ecol = table.has("error").then(|| table.column("error")).transpose()?;
    let mut data = Vec::new();
    for i in 0..table.rows.len() {
        if ecol.is_some_and(|c| !table.rows[i][c].is_empty()) {
            continue;
        }
        if let (Some(x), Some(y)) = (table.number(i, xcol)?, table.number(i, ycol)?) {
            data.push((x, y));
        }
    }
    fit_rows(model, response, &data)
}
