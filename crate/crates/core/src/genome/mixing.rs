//! Conflict resolution when streams carrying different parameters meet.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use super::ParameterMap;
use crate::engine::{GridState, GrowthFields, TransferWeights};
use crate::error::{Error, Result};
use crate::rng::stream_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingRule {
    /// Pick a source with probability proportional to delivered matter.
    Stochastic,
    /// Softmax over `beta · A · I · V` of the contributing sources.
    Negotiation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub rule: MixingRule,
    /// Inverse temperature of the negotiation softmax.
    pub beta: f64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self { rule: MixingRule::Negotiation, beta: 1.0 }
    }
}

impl MixingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::config(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// One incoming stream at a destination cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contribution {
    pub source: usize,
    /// Matter held by the source before transport.
    pub mass: f64,
    /// Fraction of the source's matter arriving at the destination.
    pub transfer: f64,
    /// Mixing affinity `V` at the source.
    pub affinity: f64,
}

impl Contribution {
    #[inline]
    pub fn delivered(&self) -> f64 {
        self.mass * self.transfer
    }
}

/// Selection probabilities of the stochastic rule. Empty input gives an
/// empty distribution; so does input whose total delivered mass is zero.
pub fn stochastic_probabilities(contributions: &[Contribution]) -> Result<Vec<f64>> {
    if contributions.iter().any(|c| c.mass < 0.0 || c.transfer < 0.0) {
        return Err(Error::invalid("negative mass in mixing contributions"));
    }
    let total: f64 = contributions.iter().map(Contribution::delivered).sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    Ok(contributions.iter().map(|c| c.delivered() / total).collect())
}

/// Selection probabilities of the negotiation rule, restricted to the
/// contributing sources.
pub fn negotiation_probabilities(contributions: &[Contribution], beta: f64) -> Result<Vec<f64>> {
    if contributions.iter().any(|c| c.mass < 0.0 || c.transfer < 0.0) {
        return Err(Error::invalid("negative mass in mixing contributions"));
    }
    if contributions.iter().any(|c| !c.affinity.is_finite()) {
        return Err(Error::Divergence("non-finite mixing affinity".into()));
    }
    if contributions.is_empty() {
        return Ok(Vec::new());
    }
    let logits: Vec<f64> = contributions
        .iter()
        .map(|c| beta * c.delivered() * c.affinity)
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Option<usize> {
    match probabilities.len() {
        0 => None,
        1 => Some(0),
        len => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in probabilities.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Some(i);
                }
            }
            // rounding left u above the final partial sum
            Some(len - 1)
        }
    }
}

/// Index of the contribution whose parameters the destination adopts, or
/// `None` to keep the destination's previous parameters.
pub fn mixing_stochastic<R: Rng + ?Sized>(
    contributions: &[Contribution],
    rng: &mut R,
) -> Result<Option<usize>> {
    let p = stochastic_probabilities(contributions)?;
    Ok(sample_index(&p, rng))
}

pub fn mixing_negotiation<R: Rng + ?Sized>(
    contributions: &[Contribution],
    beta: f64,
    rng: &mut R,
) -> Result<Option<usize>> {
    let p = negotiation_probabilities(contributions, beta)?;
    Ok(sample_index(&p, rng))
}

/// `V(x) = Σ_i Q_i(x) · G_i(K_i * A_{c0_i})(x)`, summed over target channels.
pub fn mixing_affinity(growth: &GrowthFields, params: &ParameterMap) -> Result<Vec<f64>> {
    check_dims(growth, params)?;
    let n2 = growth.size() * growth.size();
    Ok((0..n2).map(|cell| mixing_affinity_at(growth, params, cell)).collect())
}

fn check_dims(growth: &GrowthFields, params: &ParameterMap) -> Result<()> {
    if growth.len() != params.dim() {
        return Err(Error::config(format!(
            "parameter dimension {} does not match {} kernels",
            params.dim(),
            growth.len()
        )));
    }
    Ok(())
}

#[inline]
fn mixing_affinity_at(growth: &GrowthFields, params: &ParameterMap, cell: usize) -> f64 {
    let mut acc = 0.0;
    for (q, g) in params.mixing_at(cell).iter().zip(growth.at(cell)) {
        acc += q * g;
    }
    acc
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

const MIXING_STREAM: u64 = 0x6d69_7869_6e67;

/// Resolves the parameter map after transport.
///
/// `before` is the matter distribution that was transported and `growth`
/// its growth fields, from which the negotiation rule evaluates the mixing
/// affinity `V` of each source (the stochastic rule ignores it). Each
/// destination draws from its own stream keyed by `(seed, step, cell)`.
pub fn resolve_mixing(
    previous: &ParameterMap,
    before: &GridState,
    transfer: &TransferWeights,
    growth: &GrowthFields,
    config: &MixingConfig,
    seed: u64,
    step: u64,
) -> Result<ParameterMap> {
    check_dims(growth, previous)?;
    let n = before.size();
    let n2 = n * n;
    let channels = before.channels();
    let totals = before.channel_sum();
    let mut next = previous.clone();
    let mut contributions: Vec<Contribution> = Vec::with_capacity(9);
    let wrap = |v: usize, d: isize| (v as isize + d).rem_euclid(n as isize) as usize;

    for dest in 0..n2 {
        let (x, y) = (dest % n, dest / n);
        let rows = [wrap(y, -1) * n, y * n, wrap(y, 1) * n];
        let cols = [wrap(x, -1), x, wrap(x, 1)];
        contributions.clear();
        for slot in 0..9 {
            let src = rows[slot / 3] + cols[slot % 3];
            let mass = totals[src];
            if mass <= 0.0 {
                continue;
            }
            let delivered = if channels == 1 {
                transfer.slots(0, dest)[slot] * mass
            } else {
                (0..channels)
                    .map(|c| transfer.slots(c, dest)[slot] * before.channel(c)[src])
                    .sum()
            };
            if delivered <= 0.0 {
                continue;
            }
            let transfer_fraction = if channels == 1 {
                transfer.slots(0, dest)[slot]
            } else {
                delivered / mass
            };
            contributions.push(Contribution { source: src, mass, transfer: transfer_fraction, affinity: 0.0 });
        }
        let Some(first) = contributions.first() else {
            continue;
        };
        let first = first.source;
        // Sources that all carry the same genome need no draw.
        let unanimous = contributions[1..].iter().all(|c| {
            same_bits(previous.weights_at(c.source), previous.weights_at(first))
                && same_bits(previous.mixing_at(c.source), previous.mixing_at(first))
        });
        let chosen = if unanimous {
            Some(0)
        } else {
            let mut rng = Pcg64Mcg::seed_from_u64(stream_seed(&[seed, MIXING_STREAM, step, dest as u64]));
            match config.rule {
                MixingRule::Stochastic => mixing_stochastic(&contributions, &mut rng)?,
                MixingRule::Negotiation => {
                    for c in contributions.iter_mut() {
                        c.affinity = mixing_affinity_at(growth, previous, c.source);
                    }
                    mixing_negotiation(&contributions, config.beta, &mut rng)?
                }
            }
        };
        if let Some(i) = chosen {
            let src = contributions[i].source;
            if src != dest {
                next.copy_cell(dest, previous, src);
            }
        }
    }
    Ok(next)
}
