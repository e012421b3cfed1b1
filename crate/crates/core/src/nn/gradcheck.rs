use super::{Layer, Mode, Parameter, RngStream, Tensor};
use crate::error::{Error, Result};

/// A scalar function of a set of parameters with an analytic gradient.
pub trait Objective {
    fn parameters(&mut self) -> Vec<&mut Parameter>;

    /// Forward-only loss.
    fn loss(&mut self) -> Result<f64>;

    /// Loss with freshly computed gradients in every parameter's `grad`.
    fn loss_and_gradients(&mut self) -> Result<f64>;

    /// Piecewise-linear region of the last `loss` evaluation.
    fn region(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tolerance: f64,
    /// Check at most this many randomly chosen entries per parameter.
    pub max_entries_per_param: Option<usize>,
    /// Denominator floor of the relative error.
    pub abs_floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            tolerance: 1e-4,
            max_entries_per_param: None,
            abs_floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub checked: usize,
    /// Entries skipped because the perturbation crossed a ReLU/max kink.
    pub skipped: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }

    pub fn checked(&self) -> usize {
        self.params.iter().map(|p| p.checked).sum()
    }

    pub fn skipped(&self) -> usize {
        self.params.iter().map(|p| p.skipped).sum()
    }
}

/// Compare analytic gradients with central differences
/// `(L(θ + h) − L(θ − h)) / 2h`, relative error
/// `|a − n| / max(|a|, |n|, abs_floor)`.
pub fn gradient_check(obj: &mut dyn Objective, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let base = obj.loss_and_gradients()?;
    if !base.is_finite() {
        return Err(Error::Numeric(format!("gradient check: loss is {base}")));
    }
    let base_region = obj.region();
    let analytic: Vec<(String, Vec<f64>)> = obj
        .parameters()
        .iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();
    let mut pick = RngStream::new(opts.seed);
    let mut report = GradCheckReport {
        params: Vec::new(),
        max_rel_error: 0.0,
        tolerance: opts.tolerance,
    };

    for (pi, (name, grad)) in analytic.iter().enumerate() {
        let n = grad.len();
        let entries: Vec<usize> = match opts.max_entries_per_param {
            Some(k) if k < n => (0..k).map(|_| pick.below(n)).collect(),
            _ => (0..n).collect(),
        };
        let mut check = ParamCheck {
            name: name.clone(),
            checked: 0,
            skipped: 0,
            max_rel_error: 0.0,
        };
        for i in entries {
            let original = obj.parameters()[pi].value.data()[i];
            obj.parameters()[pi].value.data_mut()[i] = original + opts.step;
            let plus = obj.loss()?;
            let plus_region = obj.region();
            obj.parameters()[pi].value.data_mut()[i] = original - opts.step;
            let minus = obj.loss()?;
            let minus_region = obj.region();
            obj.parameters()[pi].value.data_mut()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(format!("gradient check: non-finite loss perturbing {name}[{i}]")));
            }
            if plus_region != base_region || minus_region != base_region {
                check.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * opts.step);
            let a = grad[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.abs_floor);
            check.max_rel_error = check.max_rel_error.max(rel);
            check.checked += 1;
        }
        report.max_rel_error = report.max_rel_error.max(check.max_rel_error);
        report.params.push(check);
    }
    Ok(report)
}

/// Checks a single layer through the probe loss `Σ probe ⊙ layer(input)`.
/// The input is treated as an extra parameter named `input`, so its gradient
/// is checked too. Every evaluation replays the same random stream.
pub struct LayerObjective<L: Layer> {
    pub layer: L,
    pub input: Parameter,
    pub probe: Tensor,
    pub mode: Mode,
    pub seed: u64,
}

impl<L: Layer> LayerObjective<L> {
    fn run(&mut self) -> Result<Tensor> {
        let mut rng = RngStream::new(self.seed);
        let out = self.layer.forward(&self.input.value, self.mode, &mut rng)?;
        out.same_shape(&self.probe, "probe")?;
        Ok(out)
    }
}

impl<L: Layer> Objective for LayerObjective<L> {
    fn parameters(&mut self) -> Vec<&mut Parameter> {
        let mut ps = vec![&mut self.input];
        ps.extend(self.layer.params_mut());
        ps
    }

    fn loss(&mut self) -> Result<f64> {
        let out = self.run()?;
        Ok(out.data().iter().zip(self.probe.data()).map(|(a, b)| a * b).sum())
    }

    fn loss_and_gradients(&mut self) -> Result<f64> {
        let loss = self.loss()?;
        for p in self.layer.params_mut() {
            p.zero_grad();
        }
        self.input.grad = self.layer.backward(&self.probe)?;
        Ok(loss)
    }

    fn region(&self) -> u64 {
        self.layer.region()
    }
}
