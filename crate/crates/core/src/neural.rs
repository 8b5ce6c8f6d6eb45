//! Feedforward and simple recurrent (Elman) networks.
//!
//! Both hidden and output layers use the logistic sigmoid. Training is online
//! gradient descent on the squared error (the generalized delta rule). For
//! recurrent networks the context layer is a copy of the previous hidden
//! activations and is treated as an ordinary, frozen input during the weight
//! update; there is no unrolling through time.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT_TAG: &str = "flatparse-net";
const FORMAT_VERSION: &str = "1";

/// Hidden-layer sizes explored when sweeping architectures.
pub const HIDDEN_SWEEP: std::ops::RangeInclusive<usize> = 7..=28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_input: usize,
    pub n_hidden: usize,
    pub n_output: usize,
    pub recurrent: bool,
}

impl NetworkSpec {
    pub fn recurrent(n_input: usize, n_hidden: usize, n_output: usize) -> Self {
        NetworkSpec {
            n_input,
            n_hidden,
            n_output,
            recurrent: true,
        }
    }

    pub fn feedforward(n_input: usize, n_hidden: usize, n_output: usize) -> Self {
        NetworkSpec {
            n_input,
            n_hidden,
            n_output,
            recurrent: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_input", self.n_input),
            ("n_hidden", self.n_hidden),
            ("n_output", self.n_output),
        ] {
            if n == 0 {
                return Err(Error::InvalidSpec(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn n_context(&self) -> usize {
        if self.recurrent {
            self.n_hidden
        } else {
            0
        }
    }

    /// Columns of the hidden weight matrix: input, context, bias.
    fn hidden_cols(&self) -> usize {
        self.n_input + self.n_context() + 1
    }

    fn output_cols(&self) -> usize {
        self.n_hidden + 1
    }

    /// Total number of weights including biases.
    pub fn weight_count(&self) -> usize {
        self.n_hidden * self.hidden_cols() + self.n_output * self.output_cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    /// `n_hidden x (n_input + n_context + 1)`, row-major, bias last.
    hidden: Vec<f64>,
    /// `n_output x (n_hidden + 1)`, row-major, bias last.
    output: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weight gradients in the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl Gradients {
    fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden.iter().chain(self.output.iter()).copied()
    }
}

/// Weights drawn uniformly from `[-0.1, 0.1]`.
pub fn init_network(spec: NetworkSpec, seed: u64) -> Result<Network> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.1..=0.1)).collect() };
    let hidden = draw(spec.n_hidden * spec.hidden_cols());
    let output = draw(spec.n_output * spec.output_cols());
    Ok(Network {
        spec,
        hidden,
        output,
    })
}

impl Network {
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Network {
            spec,
            hidden: vec![0.0; spec.n_hidden * spec.hidden_cols()],
            output: vec![0.0; spec.n_output * spec.output_cols()],
        })
    }

    /// Builds a network from explicit weight matrices (row-major, bias last).
    pub fn from_weights(spec: NetworkSpec, hidden: Vec<f64>, output: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        check_len("hidden weights", spec.n_hidden * spec.hidden_cols(), hidden.len())?;
        check_len("output weights", spec.n_output * spec.output_cols(), output.len())?;
        if hidden.iter().chain(output.iter()).any(|w| !w.is_finite()) {
            return Err(Error::InvalidSpec("non-finite weight".into()));
        }
        Ok(Network {
            spec,
            hidden,
            output,
        })
    }

    pub fn spec(&self) -> NetworkSpec {
        self.spec
    }

    pub fn weights(&self) -> (&[f64], &[f64]) {
        (&self.hidden, &self.output)
    }

    pub fn zero_context(&self) -> Vec<f64> {
        vec![0.0; self.spec.n_hidden]
    }

    /// One forward sweep. Returns `(output, hidden)`; the hidden activations
    /// are the caller's next context. Feedforward networks ignore `context`.
    pub fn forward(&self, input: &[f64], context: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("input", self.spec.n_input, input.len())?;
        if self.spec.recurrent {
            check_len("context", self.spec.n_hidden, context.len())?;
        }
        let mut hidden = vec![0.0; self.spec.n_hidden];
        let mut output = vec![0.0; self.spec.n_output];
        self.forward_into(input, context, &mut hidden, &mut output);
        Ok((output, hidden))
    }

    fn forward_into(&self, input: &[f64], context: &[f64], hidden: &mut [f64], output: &mut [f64]) {
        let spec = self.spec;
        let cols = spec.hidden_cols();
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.hidden[j * cols..(j + 1) * cols];
            let mut sum = row[cols - 1];
            for (w, x) in row[..spec.n_input].iter().zip(input) {
                sum += w * x;
            }
            if spec.recurrent {
                for (w, c) in row[spec.n_input..cols - 1].iter().zip(context) {
                    sum += w * c;
                }
            }
            *h = sigmoid(sum);
        }
        let ocols = spec.output_cols();
        for (k, o) in output.iter_mut().enumerate() {
            let row = &self.output[k * ocols..(k + 1) * ocols];
            let mut sum = row[ocols - 1];
            for (w, h) in row[..spec.n_hidden].iter().zip(hidden.iter()) {
                sum += w * h;
            }
            *o = sigmoid(sum);
        }
    }

    /// Half squared error `0.5 * sum (t - o)^2` for one pattern.
    pub fn loss(&self, input: &[f64], context: &[f64], target: &[f64]) -> Result<f64> {
        check_len("target", self.spec.n_output, target.len())?;
        let (out, _) = self.forward(input, context)?;
        Ok(0.5 * out.iter().zip(target).map(|(o, t)| (t - o) * (t - o)).sum::<f64>())
    }

    /// Analytic gradient of the half squared error for one pattern, with the
    /// context held fixed.
    pub fn gradients(&self, input: &[f64], context: &[f64], target: &[f64]) -> Result<Gradients> {
        check_len("target", self.spec.n_output, target.len())?;
        let (output, hidden) = self.forward(input, context)?;
        let mut grads = Gradients {
            hidden: vec![0.0; self.hidden.len()],
            output: vec![0.0; self.output.len()],
        };
        let mut delta_out = vec![0.0; self.spec.n_output];
        let mut delta_hidden = vec![0.0; self.spec.n_hidden];
        self.deltas(&output, &hidden, target, &mut delta_out, &mut delta_hidden);
        let spec = self.spec;
        let ocols = spec.output_cols();
        for (k, d) in delta_out.iter().enumerate() {
            let row = &mut grads.output[k * ocols..(k + 1) * ocols];
            for (g, h) in row[..spec.n_hidden].iter_mut().zip(&hidden) {
                *g = d * h;
            }
            row[ocols - 1] = *d;
        }
        let cols = spec.hidden_cols();
        for (j, d) in delta_hidden.iter().enumerate() {
            let row = &mut grads.hidden[j * cols..(j + 1) * cols];
            for (g, x) in row[..spec.n_input].iter_mut().zip(input) {
                *g = d * x;
            }
            if spec.recurrent {
                for (g, c) in row[spec.n_input..cols - 1].iter_mut().zip(context) {
                    *g = d * c;
                }
            }
            row[cols - 1] = *d;
        }
        Ok(grads)
    }

    fn deltas(
        &self,
        output: &[f64],
        hidden: &[f64],
        target: &[f64],
        delta_out: &mut [f64],
        delta_hidden: &mut [f64],
    ) {
        for ((d, o), t) in delta_out.iter_mut().zip(output).zip(target) {
            *d = (o - t) * o * (1.0 - o);
        }
        let ocols = self.spec.output_cols();
        for (j, dh) in delta_hidden.iter_mut().enumerate() {
            let mut back = 0.0;
            for (k, d) in delta_out.iter().enumerate() {
                back += d * self.output[k * ocols + j];
            }
            *dh = back * hidden[j] * (1.0 - hidden[j]);
        }
    }

    /// Forward sweep plus one in-place delta-rule step. Returns the summed
    /// squared error of the pattern before the update.
    fn train_step(&mut self, input: &[f64], context: &[f64], target: &[f64], lr: f64, buf: &mut Buffers) -> f64 {
        self.forward_into(input, context, &mut buf.hidden, &mut buf.output);
        let sse = buf
            .output
            .iter()
            .zip(target)
            .map(|(o, t)| (t - o) * (t - o))
            .sum();
        self.deltas(&buf.output, &buf.hidden, target, &mut buf.delta_out, &mut buf.delta_hidden);
        let spec = self.spec;
        let ocols = spec.output_cols();
        for (k, d) in buf.delta_out.iter().enumerate() {
            let step = lr * d;
            let row = &mut self.output[k * ocols..(k + 1) * ocols];
            for (w, h) in row[..spec.n_hidden].iter_mut().zip(&buf.hidden) {
                *w -= step * h;
            }
            row[ocols - 1] -= step;
        }
        let cols = spec.hidden_cols();
        for (j, d) in buf.delta_hidden.iter().enumerate() {
            let step = lr * d;
            let row = &mut self.hidden[j * cols..(j + 1) * cols];
            for (w, x) in row[..spec.n_input].iter_mut().zip(input) {
                *w -= step * x;
            }
            if spec.recurrent {
                for (w, c) in row[spec.n_input..cols - 1].iter_mut().zip(context) {
                    *w -= step * c;
                }
            }
            row[cols - 1] -= step;
        }
        sse
    }

    fn weight_mut(&mut self, index: usize) -> &mut f64 {
        let n = self.hidden.len();
        if index < n {
            &mut self.hidden[index]
        } else {
            &mut self.output[index - n]
        }
    }
}

struct Buffers {
    hidden: Vec<f64>,
    output: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Buffers {
    fn new(spec: NetworkSpec) -> Self {
        Buffers {
            hidden: vec![0.0; spec.n_hidden],
            output: vec![0.0; spec.n_output],
            delta_out: vec![0.0; spec.n_output],
            delta_hidden: vec![0.0; spec.n_hidden],
        }
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_units: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 3000,
            learning_rate: 0.001,
            hidden_units: 14,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::InvalidConfig("hidden units must be at least 1".into()));
        }
        Ok(())
    }

    /// Copies of this config across the hidden-unit sweep, in steps of `step`.
    pub fn hidden_sweep(&self, step: usize) -> Vec<TrainingConfig> {
        HIDDEN_SWEEP
            .step_by(step.max(1))
            .map(|h| TrainingConfig {
                hidden_units: h,
                ..*self
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Sample {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        Sample { input, target }
    }
}

/// Ordered training sequences; recurrent context resets at each sequence start.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub sequences: Vec<Vec<Sample>>,
}

impl SequenceDataset {
    pub fn new(sequences: Vec<Vec<Sample>>) -> Self {
        SequenceDataset { sequences }
    }

    /// Every pattern as its own length-1 sequence.
    pub fn from_patterns(samples: Vec<Sample>) -> Self {
        SequenceDataset {
            sequences: samples.into_iter().map(|s| vec![s]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.sequences.iter().flatten()
    }

    pub fn check(&self, spec: NetworkSpec) -> Result<()> {
        for s in self.samples() {
            check_len("sample input", spec.n_input, s.input.len())?;
            check_len("sample target", spec.n_output, s.target.len())?;
        }
        Ok(())
    }
}

/// Online delta-rule training. Returns the trained copy and the mean squared
/// error (per output unit) of every epoch.
pub fn train(net: &Network, dataset: &SequenceDataset, config: &TrainingConfig) -> Result<(Network, Vec<f64>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset.check(net.spec)?;
    let mut net = net.clone();
    let spec = net.spec;
    let mut buf = Buffers::new(spec);
    let mut context = vec![0.0; spec.n_hidden];
    let denom = (dataset.len() * spec.n_output) as f64;
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut sse = 0.0;
        for seq in &dataset.sequences {
            context.iter_mut().for_each(|c| *c = 0.0);
            for sample in seq {
                sse += net.train_step(&sample.input, &context, &sample.target, config.learning_rate, &mut buf);
                if spec.recurrent {
                    context.copy_from_slice(&buf.hidden);
                }
            }
        }
        history.push(sse / denom);
    }
    Ok((net, history))
}

/// Initializes from `config.seed` with `config.hidden_units` hidden units and trains.
pub fn fit(
    n_input: usize,
    n_output: usize,
    recurrent: bool,
    dataset: &SequenceDataset,
    config: &TrainingConfig,
) -> Result<(Network, Vec<f64>)> {
    let spec = NetworkSpec {
        n_input,
        n_hidden: config.hidden_units,
        n_output,
        recurrent,
    };
    let net = init_network(spec, config.seed)?;
    train(&net, dataset, config)
}

/// One pattern for gradient verification; the context is a fixed input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub input: Vec<f64>,
    pub context: Vec<f64>,
    pub target: Vec<f64>,
}

pub fn gradient_check(net: &Network, sample: &GradientSample, epsilon: f64) -> Result<f64> {
    gradient_check_with(net, sample, epsilon, |n, s| n.gradients(&s.input, &s.context, &s.target))
}

/// Maximum relative error between `analytic` and central finite differences
/// of the half squared error, over every weight. Pairs where both gradients
/// are below `1e-8` in magnitude count as agreeing.
pub fn gradient_check_with<F>(net: &Network, sample: &GradientSample, epsilon: f64, analytic: F) -> Result<f64>
where
    F: Fn(&Network, &GradientSample) -> Result<Gradients>,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let grads = analytic(net, sample)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in grads.iter().enumerate() {
        let original = *probe.weight_mut(i);
        *probe.weight_mut(i) = original + epsilon;
        let plus = probe.loss(&sample.input, &sample.context, &sample.target)?;
        *probe.weight_mut(i) = original - epsilon;
        let minus = probe.loss(&sample.input, &sample.context, &sample.target)?;
        *probe.weight_mut(i) = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let scale = a.abs().max(numeric.abs());
        if scale < 1e-8 {
            continue;
        }
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Collapses a plausible/implausible output pair into one value: `o1 * (1 - o2)`.
pub fn combine_two_unit_output(o1: f64, o2: f64) -> Result<f64> {
    for (index, value) in [(0, o1), (1, o2)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
    }
    Ok(o1 * (1.0 - o2))
}

impl Network {
    pub fn to_text(&self) -> String {
        let s = self.spec;
        let mut out = String::new();
        let kind = if s.recurrent { "recurrent" } else { "feedforward" };
        let _ = writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION}");
        let _ = writeln!(out, "spec {} {} {} {kind}", s.n_input, s.n_hidden, s.n_output);
        write_matrix(&mut out, "hidden", s.n_hidden, s.hidden_cols(), &self.hidden);
        write_matrix(&mut out, "output", s.n_output, s.output_cols(), &self.output);
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(n, l)| (n + 1, l))
                .ok_or_else(|| Error::parse(source, 0, format!("truncated file: missing {what}")))
        };
        let (n, header) = next("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_TAG) {
            return Err(Error::parse(source, n, "not a network file"));
        }
        match parts.next() {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(Error::Version(v.to_string())),
            None => return Err(Error::Version(String::new())),
        }
        let (n, spec_line) = next("spec")?;
        let fields: Vec<&str> = spec_line.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "spec" {
            return Err(Error::parse(source, n, "malformed field `spec`"));
        }
        let count = |i: usize, name: &str| -> Result<usize> {
            fields[i]
                .parse()
                .map_err(|_| Error::parse(source, n, format!("malformed field `{name}`")))
        };
        let recurrent = match fields[4] {
            "recurrent" => true,
            "feedforward" => false,
            _ => return Err(Error::parse(source, n, "malformed field `kind`")),
        };
        let spec = NetworkSpec {
            n_input: count(1, "n_input")?,
            n_hidden: count(2, "n_hidden")?,
            n_output: count(3, "n_output")?,
            recurrent,
        };
        spec.validate()?;
        let hidden = read_matrix(&mut next, source, "hidden", spec.n_hidden, spec.hidden_cols())?;
        let output = read_matrix(&mut next, source, "output", spec.n_output, spec.output_cols())?;
        Network::from_weights(spec, hidden, output)
    }
}

fn write_matrix(out: &mut String, name: &str, rows: usize, cols: usize, values: &[f64]) {
    let _ = writeln!(out, "{name} {rows} {cols}");
    for r in 0..rows {
        let row: Vec<String> = values[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn read_matrix<'a>(
    next: &mut impl FnMut(&str) -> Result<(usize, &'a str)>,
    source: &str,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    let (n, header) = next(name)?;
    let expected = format!("{name} {rows} {cols}");
    if header.trim() != expected {
        return Err(Error::parse(source, n, format!("malformed field `{name}`: expected `{expected}`")));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (n, line) = next(name)?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(source, n, format!("malformed value in `{name}` row {r}")))?;
        if row.len() != cols {
            return Err(Error::parse(
                source,
                n,
                format!("`{name}` row {r} has {} values, expected {cols}", row.len()),
            ));
        }
        values.extend(row);
    }
    Ok(values)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_text()).map_err(Error::file(path))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
    Network::from_text(&text, &path.display().to_string())
}
