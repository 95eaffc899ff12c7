//! The computations behind each subcommand.

use raresens_core::cgf::CgfHandle;
use raresens_core::ldp::{fd_sensitivity, markov_sensitivity};
use raresens_core::sensitivity::{bennett_bound, bernstein_bound, linearized_index, sensitivity_indices};
use raresens_core::specs::{ChainSpec, ModelSpec};
use raresens_core::uq::{crude_bounds, optimal_bounds, raw_bounds};
use raresens_core::{ConcentrationParams, Error, ScoreModel};
use serde_json::{json, Value};

use crate::output::{ext, Row, Table};

fn error_record(key_name: &str, key: f64, e: &Error) -> (Row, Value) {
    (Row::Error { key, message: e.to_string() }, json!({ key_name: ext(key), "error": e.to_string() }))
}

/// `e₁` when no direction is given.
fn direction_or_default(v: Option<Vec<f64>>, dim: usize) -> Vec<f64> {
    v.unwrap_or_else(|| {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    })
}

/// Bernstein/Bennett parameters from the flags, falling back to the model.
fn concentration_params(
    model: Option<&ScoreModel>,
    v: &[f64],
    b: Option<f64>,
    sigma2: Option<f64>,
) -> Result<Option<ConcentrationParams>, Error> {
    let from_model = model.map(|m| ConcentrationParams::for_model(m, v));
    let b = match (b, &from_model) {
        (Some(b), _) => b,
        (None, Some(Ok(c))) => c.b_v,
        (None, Some(Err(Error::UnboundedScore))) | (None, None) => return Ok(None),
        (None, Some(Err(e))) => return Err(e.clone()),
    };
    let sigma2 = match (sigma2, model) {
        (Some(s), _) => s,
        (None, Some(m)) => m.fisher_quadratic(v)?,
        (None, None) => return Err(Error::InvalidInput("--b needs --sigma2 when no model is given".into())),
    };
    ConcentrationParams::new(b, sigma2).map(Some)
}

pub fn index(
    spec: &ModelSpec,
    v: Option<Vec<f64>>,
    ms: &[f64],
    b: Option<f64>,
    sigma2: Option<f64>,
) -> Result<Table, Error> {
    let model = spec.score_model()?;
    let v = direction_or_default(v, model.dim());
    let fisher = model.fisher_quadratic(&v)?;
    let conc = concentration_params(Some(&model), &v, b, sigma2)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        let r = match sensitivity_indices(&model, &v, m) {
            Ok(r) => r,
            Err(e) => {
                let (row, rec) = error_record("M", m, &e);
                rows.push(row);
                records.push(rec);
                continue;
            }
        };
        let (ber, ben) = match &conc {
            Some(c) => (bernstein_bound(c, m)?, bennett_bound(c, m)?),
            None => (f64::NAN, f64::NAN),
        };
        let lin = linearized_index(fisher, m)?;
        rows.push(Row::Values(vec![m, r.index_minus, r.index_plus, ber, ben, lin]));
        records.push(json!({
            "report": r,
            "bernstein": ext(ber),
            "bennett": ext(ben),
            "linearized": lin,
        }));
    }
    Ok(Table {
        name: "index",
        columns: vec!["M", "index_minus", "index_plus", "bernstein", "bennett", "linearized"],
        rows,
        json: json!({ "model": spec.name(), "v": v, "rows": records }),
    })
}

/// `(H(α)+M)/α` against `H'(α)` along an α grid, for each `M`.
pub fn index_curve(spec: &ModelSpec, v: Option<Vec<f64>>, ms: &[f64], alphas: &[f64]) -> Result<Table, Error> {
    let model = spec.score_model()?;
    let v = direction_or_default(v, model.dim());
    let h: CgfHandle = model.score_cgf(&v)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        for &a in alphas {
            let (hv, dh) = (h.eval(a), h.deriv1(a));
            let obj = (hv + m) / a;
            rows.push(Row::Values(vec![m, a, hv, dh, obj]));
            records.push(json!({ "M": m, "alpha": a, "cgf": ext(hv), "tilted_mean": ext(dh), "objective": ext(obj) }));
        }
    }
    Ok(Table {
        name: "index-curve",
        columns: vec!["M", "alpha", "cgf", "tilted_mean", "objective"],
        rows,
        json: json!({ "model": spec.name(), "v": v, "rows": records }),
    })
}

pub fn uq(p_spec: &ModelSpec, q_spec: &ModelSpec, ms: &[f64]) -> Result<Table, Error> {
    let (p, q) = (p_spec.distribution()?, q_spec.distribution()?);
    let (crude_lo, crude_hi) = crude_bounds(&p, &q)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        match optimal_bounds(&p, &q, m) {
            Ok(r) => {
                let trivial = if r.upper_is_trivial { 1.0 } else { 0.0 };
                rows.push(Row::Values(vec![m, r.lower, r.upper, trivial, r.alpha_minus, r.alpha_plus, r.kl_qp]));
                records.push(serde_json::to_value(r).expect("report serializes"));
            }
            Err(e) => {
                let (row, rec) = error_record("M", m, &e);
                rows.push(row);
                records.push(rec);
            }
        }
    }
    Ok(Table {
        name: "uq",
        columns: vec!["M", "lower", "upper", "upper_is_trivial", "alpha_minus", "alpha_plus", "kl_QP"],
        rows,
        json: json!({ "crude_bounds": [ext(crude_lo), ext(crude_hi)], "rows": records }),
    })
}

/// Rényi-indexed bounds on `log Q(A) − log P(A)` over an α grid.
pub fn uq_raw(p_spec: &ModelSpec, q_spec: &ModelSpec, ms: &[f64], alphas: &[f64]) -> Result<Table, Error> {
    let (p, q) = (p_spec.distribution()?, q_spec.distribution()?);
    let (crude_lo, crude_hi) = crude_bounds(&p, &q)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        for &a in alphas {
            match raw_bounds(&p, &q, m, a) {
                Ok((lo, hi)) => {
                    rows.push(Row::Values(vec![m, a, lo, hi]));
                    records.push(json!({ "M": m, "alpha": a, "lower": ext(lo), "upper": ext(hi) }));
                }
                Err(e) => {
                    let (row, rec) = error_record("M", m, &e);
                    rows.push(row);
                    records.push(rec);
                }
            }
        }
    }
    Ok(Table {
        name: "uq-raw",
        columns: vec!["M", "alpha", "lower", "upper"],
        rows,
        json: json!({ "crude_bounds": [ext(crude_lo), ext(crude_hi)], "rows": records }),
    })
}

pub fn markov(spec: &ChainSpec, v: Option<Vec<f64>>, zs: &[f64], horizon: usize, eps: f64) -> Result<Table, Error> {
    let model = spec.model()?;
    let v = match v.or_else(|| spec.direction().map(<[f64]>::to_vec)) {
        Some(v) => v,
        None => direction_or_default(None, model.score_dim().max(1)),
    };
    // exact finite differences need a parametric chain with an integer observable
    let fd = fd_sensitivity(&model, &v, horizon, zs, eps).ok();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        let point = fd.as_ref().map(|f| f[i]);
        let fd_value = point.map_or(f64::NAN, |p| p.value);
        match markov_sensitivity(&model, &v, z) {
            Ok(r) => {
                rows.push(Row::Values(vec![z, r.rate, r.index_minus, r.index_plus, fd_value]));
                records.push(json!({
                    "report": r,
                    "fd_sensitivity": ext(fd_value),
                    "z_lattice": point.map_or(Value::Null, |p| ext(p.z_lattice)),
                }));
            }
            Err(e) => {
                let (row, rec) = error_record("z", z, &e);
                rows.push(row);
                records.push(rec);
            }
        }
    }
    Ok(Table {
        name: "markov",
        columns: vec!["z", "rate", "index_minus", "index_plus", "fd_sensitivity"],
        rows,
        json: json!({ "v": v, "horizon": horizon, "epsilon": eps, "rows": records }),
    })
}

pub fn concentration(
    spec: Option<&ModelSpec>,
    v: Option<Vec<f64>>,
    ms: &[f64],
    b: Option<f64>,
    sigma2: Option<f64>,
) -> Result<Table, Error> {
    let model = spec.map(ModelSpec::score_model).transpose()?;
    let v = direction_or_default(v, model.as_ref().map_or(1, ScoreModel::dim));
    let conc = concentration_params(model.as_ref(), &v, b, sigma2)?.ok_or(Error::UnboundedScore)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &m in ms {
        let idx = match &model {
            Some(model) => match sensitivity_indices(model, &v, m) {
                Ok(r) => r.index_plus,
                Err(e) => {
                    let (row, rec) = error_record("M", m, &e);
                    rows.push(row);
                    records.push(rec);
                    continue;
                }
            },
            None => f64::NAN,
        };
        let ben = bennett_bound(&conc, m)?;
        let ber = bernstein_bound(&conc, m)?;
        let lin = linearized_index(conc.sigma2_v, m)?;
        rows.push(Row::Values(vec![m, idx, ben, ber, lin]));
        records.push(json!({ "M": m, "index_plus": ext(idx), "bennett": ben, "bernstein": ber, "linearized": lin }));
    }
    Ok(Table {
        name: "concentration",
        columns: vec!["M", "index_plus", "bennett", "bernstein", "linearized"],
        rows,
        json: json!({ "b_v": conc.b_v, "sigma2_v": conc.sigma2_v, "rows": records }),
    })
}
