use serde::Serialize;

use crate::error::{Error, Result};

/// Known quantities for [`fit_clri`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub actions: usize,
    /// Volatility assumed constant over the trajectory.
    pub v: f64,
    /// Change rate; `None` ties it to the fitted learning rate.
    pub c: Option<f64>,
}

impl FitOptions {
    pub fn new(actions: usize) -> Self {
        FitOptions {
            actions,
            v: 0.0,
            c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClriFit {
    pub r: f64,
    /// Missing when the trajectory carries no information about it.
    pub l: Option<f64>,
    pub c: Option<f64>,
    pub v: f64,
    /// Fitted line `e_{t+1} ≈ alpha + beta · e_t`.
    pub alpha: f64,
    pub beta: f64,
    /// Root-mean-square residual of the fitted line.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Least-squares fit of the expected-error recurrence to an observed error
/// trajectory.
///
/// The recurrence is affine in the current error, so the data determine an
/// intercept and a slope. With `v` and `c` supplied (or `c = l`), those pin
/// down `r` and `l`. A trajectory with no spread in its errors only
/// determines `r`; `l` is then left empty and a warning is attached.
pub fn fit_clri(observed: &[f64], options: &FitOptions) -> Result<ClriFit> {
    if observed.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 points to fit, got {}",
            observed.len()
        )));
    }
    if options.actions < 2 {
        return Err(Error::domain("need at least 2 actions"));
    }
    let inside = -super::DRIFT_TOLERANCE..=1.0 + super::DRIFT_TOLERANCE;
    if let Some(&e) = observed.iter().find(|e| !inside.contains(*e)) {
        return Err(Error::domain(format!(
            "observed error {e} is not in [0, 1]"
        )));
    }
    let a = options.actions as f64;
    let k = options.v / (a - 1.0);
    let mut warnings = Vec::new();

    let x = &observed[..observed.len() - 1];
    let y = &observed[1..];
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();

    let degenerate = sxx <= 1e-18;
    let (alpha, beta) = if degenerate {
        warnings.push(
            "underdetermined fit: the errors do not vary, so only the retention rate is estimated"
                .to_string(),
        );
        // A fixed point: alpha alone is identified once beta is taken as 0.
        (my, 0.0)
    } else {
        let beta = sxy / sxx;
        (my - beta * mx, beta)
    };
    let residual = (x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - alpha - beta * xi).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();

    let r_scale = 1.0 - k * a;
    if r_scale.abs() < 1e-12 {
        return Err(Error::Precondition(
            "volatility makes the intercept independent of the retention rate".into(),
        ));
    }
    // alpha = 1 − r + k(A·r − 1)
    let r = (1.0 - k - alpha) / r_scale;
    let (l, c) = if degenerate {
        (None, options.c)
    } else {
        match options.c {
            // beta = (r − l)(1 − kA)
            None => {
                let l = r - beta / r_scale;
                (Some(l), Some(l))
            }
            // beta = r − l + k(A(l − r) + l − c)
            Some(c) => {
                let denom = k * (a + 1.0) - 1.0;
                if denom.abs() < 1e-12 {
                    warnings.push("learning rate not identifiable at this volatility".into());
                    (None, Some(c))
                } else {
                    (Some((beta - r * r_scale + k * c) / denom), Some(c))
                }
            }
        }
    };
    for (name, value) in [("r", Some(r)), ("l", l), ("c", c)] {
        if let Some(x) = value {
            if !(-1e-9..=1.0 + 1e-9).contains(&x) {
                warnings.push(format!("estimated {name} = {x} lies outside [0, 1]"));
            }
        }
    }
    if let (Some(l), Some(c)) = (l, c) {
        if l > c + 1e-9 {
            warnings.push(format!("estimated l = {l} exceeds c = {c}"));
        }
    }
    Ok(ClriFit {
        r,
        l,
        c,
        v: options.v,
        alpha,
        beta,
        residual,
        warnings,
    })
}
