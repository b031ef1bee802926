//! The improvement function: a `horizon × bins` table that maps
//! (position in burst, binned expected gain) to a corrected estimate of the
//! specific information gain.
//!
//! Every cell is an independent follow-the-regularized-leader learner over a
//! scalar offset. The offset is stored as the *predicted discrepancy*
//! `δ = r_ref − f`, where `r_ref` is the centre of the cell's gain bin, so
//! that the per-observation loss is `|Δr − δ| = |f − r*|` and the
//! subgradient sign is `d = sign(f − r*)`. With the quadratic regularizer
//! `δ²/η` and `η_a = β/√α_a` the minimizer after `a` updates is
//! `δ_a = η_a · Σ d / 2`, which unrolls into
//!
//! ```text
//! δ_a = √(α_{a-1}/α_a) · δ_{a-1} + β · d_a / (c · √α_a)
//! ```
//!
//! With `c = 2` this is exactly the FTRL recurrence; the default `c = 4`
//! halves every step.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Default divisor `c` in the sign term of the cell update.
pub const DEFAULT_UPDATE_COEFFICIENT: f64 = 4.0;

/// Divisor that makes the cell update coincide with plain FTRL.
pub const FTRL_COEFFICIENT: f64 = 2.0;

/// Upper clamp on τ so it stays strictly below 1/2.
pub const RANDOMIZATION_EPSILON: f64 = 1e-6;

/// Sign with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Returns the 1-based bin `k` with `r ∈ [(k−1)β/b, kβ/b)`. Gains at or
/// above the cap land in the last bin.
pub fn bin_index(r: f64, gain_cap: f64, bins: usize) -> Result<usize> {
    if !(gain_cap > 0.0) || !gain_cap.is_finite() {
        return Err(Error::domain(format!("gain cap must be positive, got {gain_cap}")));
    }
    if bins == 0 {
        return Err(Error::domain("bin count must be at least 1"));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!("gain must be non-negative, got {r}")));
    }
    if r >= gain_cap {
        return Ok(bins);
    }
    let k = (r * bins as f64 / gain_cap).floor() as usize;
    Ok(k.min(bins - 1) + 1)
}

/// Exploration level `τ = T^{-1/4}`, clamped to `0.5 − 1e-6`.
pub fn randomization_level(episode_len: i64) -> Result<f64> {
    if episode_len <= 0 {
        return Err(Error::domain(format!(
            "episode length must be positive, got {episode_len}"
        )));
    }
    let tau = (episode_len as f64).powf(-0.25);
    Ok(tau.min(0.5 - RANDOMIZATION_EPSILON))
}

/// Importance-weighted loss `|Δr − δ| / p` for executed measurements and
/// zero otherwise. `p` must respect the floor of the randomized selection.
pub fn hallucinated_loss(discrepancy: f64, offset: f64, probability: f64, executed: bool, floor: f64) -> Result<f64> {
    if !(probability >= floor) || !(probability > 0.0) || probability > 1.0 {
        return Err(Error::domain(format!(
            "path probability {probability} below floor {floor}"
        )));
    }
    if executed {
        Ok((discrepancy - offset).abs() / probability)
    } else {
        Ok(0.0)
    }
}

/// Online state of one `(position, bin)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellEstimator {
    offset: f64,
    count: u64,
    last_sign: i8,
}

impl CellEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Predicted discrepancy δ.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Number of updates α applied so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn last_sign(&self) -> i8 {
        self.last_sign
    }

    /// `η = β/√α`, undefined before the first update.
    pub fn learning_rate(&self, gain_cap: f64) -> Option<f64> {
        (self.count > 0).then(|| gain_cap / (self.count as f64).sqrt())
    }

    /// One plain FTRL step with subgradient sign `d ∈ {−1, 0, +1}`.
    pub fn ftrl_step(&mut self, d: i8, gain_cap: f64) {
        self.step(d, 1.0, gain_cap, FTRL_COEFFICIENT);
    }

    /// General step: the sign term is multiplied by `weight` and divided by
    /// `coefficient`. `weight = 1, coefficient = 2` is plain FTRL.
    pub fn step(&mut self, d: i8, weight: f64, gain_cap: f64, coefficient: f64) {
        let prev = self.count as f64;
        self.count += 1;
        let now = self.count as f64;
        let shrink = (prev / now).sqrt();
        self.offset = shrink * self.offset + gain_cap * f64::from(d) * weight / (coefficient * now.sqrt());
        self.last_sign = d;
    }

    pub(crate) fn restore(offset: f64, count: u64) -> Self {
        Self {
            offset,
            count,
            last_sign: 0,
        }
    }
}

/// Result of routing one observation into the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellUpdate {
    pub position: usize,
    /// 1-based bin index.
    pub bin: usize,
    /// Estimate in force before the update.
    pub prediction: f64,
    /// Value of the cell after the update.
    pub value: f64,
    pub sign: i8,
}

/// The `horizon × bins` improvement function with per-cell counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementFunction {
    horizon: usize,
    bins: usize,
    gain_cap: f64,
    coefficient: f64,
    cells: Vec<CellEstimator>,
}

impl ImprovementFunction {
    pub fn new(horizon: usize, bins: usize, gain_cap: f64, coefficient: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if bins == 0 {
            return Err(Error::domain("bin count must be at least 1"));
        }
        if !(gain_cap > 0.0) || !gain_cap.is_finite() {
            return Err(Error::domain(format!("gain cap must be positive, got {gain_cap}")));
        }
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(Error::domain(format!(
                "update coefficient must be positive, got {coefficient}"
            )));
        }
        Ok(Self {
            horizon,
            bins,
            gain_cap,
            coefficient,
            cells: vec![CellEstimator::default(); horizon * bins],
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn gain_cap(&self) -> f64 {
        self.gain_cap
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Bin of a gain after clamping it into `[0, β]`.
    pub fn bin_of(&self, r: f64) -> usize {
        let r = self.clamp_gain(r);
        bin_index(r, self.gain_cap, self.bins).expect("clamped gain is always in range")
    }

    pub fn clamp_gain(&self, r: f64) -> f64 {
        if r.is_nan() {
            return 0.0;
        }
        r.clamp(0.0, self.gain_cap)
    }

    /// Centre of a 1-based bin; the reference gain the cell offset is
    /// measured from.
    pub fn reference_gain(&self, bin: usize) -> f64 {
        (bin as f64 - 0.5) * self.gain_cap / self.bins as f64
    }

    fn slot(&self, position: usize, bin: usize) -> Result<usize> {
        if position >= self.horizon {
            return Err(Error::domain(format!(
                "position {position} outside 0..{}",
                self.horizon
            )));
        }
        if bin == 0 || bin > self.bins {
            return Err(Error::domain(format!("bin {bin} outside 1..={}", self.bins)));
        }
        Ok(position * self.bins + (bin - 1))
    }

    pub fn cell(&self, position: usize, bin: usize) -> Result<&CellEstimator> {
        Ok(&self.cells[self.slot(position, bin)?])
    }

    /// Stored matrix entry `f[s][bin] = r_ref − δ`.
    pub fn value(&self, position: usize, bin: usize) -> Result<f64> {
        let cell = self.cell(position, bin)?;
        Ok(self.reference_gain(bin) - cell.offset)
    }

    pub fn count(&self, position: usize, bin: usize) -> Result<u64> {
        Ok(self.cell(position, bin)?.count)
    }

    pub fn total_updates(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }

    /// Estimated specific gain for expected gain `r` at burst position `s`.
    /// Cells that were never updated act as the identity.
    pub fn query(&self, position: usize, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("gain must be non-negative, got {r}")));
        }
        let bin = self.bin_of(r);
        let cell = self.cell(position, bin)?;
        if cell.count == 0 {
            Ok(r)
        } else {
            Ok(self.reference_gain(bin) - cell.offset)
        }
    }

    /// Full-information update of the cell `r` falls into.
    pub fn update(&mut self, position: usize, r: f64, r_star: f64) -> Result<CellUpdate> {
        self.update_weighted(position, r, r_star, 1.0)
    }

    /// Update whose sign term is scaled by `weight` (importance weight for
    /// bandit feedback, already normalised into `(0, 1]`).
    pub fn update_weighted(&mut self, position: usize, r: f64, r_star: f64, weight: f64) -> Result<CellUpdate> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::domain(format!(
                "update weight must be finite and >= 0, got {weight}"
            )));
        }
        let r = self.clamp_gain(r);
        let r_star = self.clamp_gain(r_star);
        let prediction = self.query(position, r)?;
        let bin = self.bin_of(r);
        let slot = self.slot(position, bin)?;
        let d = sign(prediction - r_star) as i8;
        let (cap, coefficient) = (self.gain_cap, self.coefficient);
        // For a fresh cell the shrink factor √(0/1) drops the prior offset, so
        // the identity start needs no special case beyond the sign above.
        self.cells[slot].step(d, weight, cap, coefficient);
        Ok(CellUpdate {
            position,
            bin,
            prediction,
            value: self.reference_gain(bin) - self.cells[slot].offset,
            sign: d,
        })
    }

    /// Flat text checkpoint: a header line `horizon bins gain_cap coefficient`,
    /// then `horizon` rows of `f` values, then `horizon` rows of counts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{} {} {} {}",
            self.horizon, self.bins, self.gain_cap, self.coefficient
        )
        .unwrap();
        for s in 0..self.horizon {
            let row: Vec<String> = (1..=self.bins)
                .map(|k| format!("{}", self.value(s, k).unwrap()))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for s in 0..self.horizon {
            let row: Vec<String> = (1..=self.bins).map(|k| self.count(s, k).unwrap().to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty checkpoint"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                ln + 1,
                "header needs horizon, bins, gain cap, coefficient",
            ));
        }
        let horizon: usize = parse_field(fields[0], ln)?;
        let bins: usize = parse_field(fields[1], ln)?;
        let gain_cap: f64 = parse_field(fields[2], ln)?;
        let coefficient: f64 = parse_field(fields[3], ln)?;
        let mut f = Self::new(horizon, bins, gain_cap, coefficient)?;
        let mut values = Vec::with_capacity(horizon * bins);
        for _ in 0..horizon {
            let (ln, line) = lines.next().ok_or_else(|| Error::parse(ln + 1, "missing value row"))?;
            let row = parse_row::<f64>(line, ln, bins)?;
            values.extend(row);
        }
        let mut counts = Vec::with_capacity(horizon * bins);
        for _ in 0..horizon {
            let (ln, line) = lines.next().ok_or_else(|| Error::parse(ln + 1, "missing count row"))?;
            counts.extend(parse_row::<u64>(line, ln, bins)?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln + 1, "trailing data after counts"));
        }
        for (idx, (value, count)) in values.into_iter().zip(counts).enumerate() {
            let bin = idx % bins + 1;
            let offset = if count == 0 { 0.0 } else { f.reference_gain(bin) - value };
            f.cells[idx] = CellEstimator::restore(offset, count);
        }
        Ok(f)
    }
}

fn parse_field<T: std::str::FromStr>(token: &str, line: usize) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(line + 1, format!("bad number {token:?}")))
}

fn parse_row<T: std::str::FromStr>(line: &str, ln: usize, expected: usize) -> Result<Vec<T>> {
    let row: Vec<T> = line
        .split_whitespace()
        .map(|t| parse_field(t, ln))
        .collect::<Result<_>>()?;
    if row.len() != expected {
        return Err(Error::parse(
            ln + 1,
            format!("expected {expected} columns, found {}", row.len()),
        ));
    }
    Ok(row)
}

/// Bookkeeping for randomized path selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditContext {
    randomization_level: f64,
    candidate_count: usize,
    horizon: usize,
}

impl BanditContext {
    pub fn new(randomization_level: f64, candidate_count: usize, horizon: usize) -> Result<Self> {
        if !(randomization_level > 0.0 && randomization_level < 0.5) {
            return Err(Error::domain(format!(
                "randomization level must lie in (0, 0.5), got {randomization_level}"
            )));
        }
        if candidate_count == 0 || horizon == 0 {
            return Err(Error::domain("candidate count and horizon must be positive"));
        }
        Ok(Self {
            randomization_level,
            candidate_count,
            horizon,
        })
    }

    pub fn randomization_level(&self) -> f64 {
        self.randomization_level
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `τ · N^{−Δt}`: no measurement is executed with lower probability.
    pub fn path_probability_floor(&self) -> f64 {
        self.randomization_level / (self.candidate_count as f64).powi(self.horizon as i32)
    }

    /// Smallest probability the mixed greedy/uniform rule can assign to a
    /// candidate, `τ/N`. Importance weights are normalised by it.
    pub fn min_selection_probability(&self) -> f64 {
        self.randomization_level / self.candidate_count as f64
    }

    /// Normalised importance weight `(τ/N)/p ∈ (0, 1]`.
    pub fn importance_weight(&self, probability: f64) -> Result<f64> {
        self.check_probability(probability)?;
        Ok((self.min_selection_probability() / probability).min(1.0))
    }

    pub fn hallucinated_loss(&self, discrepancy: f64, offset: f64, probability: f64, executed: bool) -> Result<f64> {
        hallucinated_loss(
            discrepancy,
            offset,
            probability,
            executed,
            self.path_probability_floor(),
        )
    }

    fn check_probability(&self, probability: f64) -> Result<()> {
        let floor = self.path_probability_floor();
        if !(probability >= floor) || probability > 1.0 {
            return Err(Error::domain(format!(
                "path probability {probability} outside [{floor}, 1]"
            )));
        }
        Ok(())
    }
}
