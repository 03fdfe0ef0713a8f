//! Independent certification of divisions and assignments.
//!
//! Every value here is recomputed from the division's intervals through the
//! agents' oracles; nothing is taken from solver internals.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::cake::{check_partition, GroupAssignment, LayeredPiece, MultiDivision, PartitionFlags, Rational};
use crate::error::{Error, Result};
use crate::valuation::Instance;

/// Values of every bundle for agent `i`.
pub fn bundle_values(instance: &Instance, division: &MultiDivision, i: usize) -> Result<Vec<Rational>> {
    division.bundles().iter().map(|b| instance.evaluate(i, b)).collect()
}

/// Largest envy of one agent, with the bundle it envies most.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyWitness {
    pub agent: usize,
    pub assigned: usize,
    pub envied: usize,
    pub envy: Rational,
}

fn check_assignment(division: &MultiDivision, bundle_of: &[usize], n: usize) -> Result<()> {
    if bundle_of.len() != n {
        return Err(Error::InvalidInput(format!("assignment covers {} agents, instance has {n}", bundle_of.len())));
    }
    if let Some((i, &j)) = bundle_of.iter().enumerate().find(|(_, &j)| j >= division.len()) {
        return Err(Error::InvalidInput(format!("agent {i} assigned to bundle {j} of {}", division.len())));
    }
    Ok(())
}

/// Envy of the worst-off agent among `agents`; `None` when `agents` is empty.
pub fn max_envy_among(
    instance: &Instance,
    division: &MultiDivision,
    bundle_of: &[usize],
    agents: &[usize],
) -> Result<Option<EnvyWitness>> {
    check_assignment(division, bundle_of, instance.agent_count())?;
    if division.layer_count() != instance.layers() {
        return Err(Error::LayerMismatch { expected: instance.layers(), found: division.layer_count() });
    }
    let mut worst: Option<EnvyWitness> = None;
    for &i in agents {
        let values = bundle_values(instance, division, i)?;
        let (envied, best) = values
            .iter()
            .enumerate()
            .fold((0, &values[0]), |(bj, bv), (j, v)| if v > bv { (j, v) } else { (bj, bv) });
        let assigned = bundle_of[i];
        let envy = best - &values[assigned];
        if worst.as_ref().is_none_or(|w| envy > w.envy) {
            worst = Some(EnvyWitness { agent: i, assigned, envied, envy });
        }
    }
    Ok(worst)
}

/// `max_i (max_j v_i(A_j) − v_i(A_{π(i)}))` over all agents.
pub fn max_envy(instance: &Instance, division: &MultiDivision, bundle_of: &[usize]) -> Result<Rational> {
    let all: Vec<usize> = (0..instance.agent_count()).collect();
    Ok(max_envy_among(instance, division, bundle_of, &all)?.map(|w| w.envy).unwrap_or_else(Rational::zero))
}

/// Admissible group sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeBounds {
    /// Every group has `⌊n/q⌋` or `⌈n/q⌉` agents.
    Balanced,
    /// Group `j` has exactly `k[j]` agents.
    Exact(Vec<usize>),
}

impl SizeBounds {
    pub fn admits(&self, sizes: &[usize], n: usize) -> bool {
        match self {
            SizeBounds::Balanced => {
                let q = sizes.len();
                if q == 0 {
                    return n == 0;
                }
                let (lo, rem) = n.div_rem(&q);
                let hi = lo + usize::from(rem != 0);
                sizes.iter().all(|&s| s == lo || s == hi)
            }
            SizeBounds::Exact(k) => k.as_slice() == sizes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BirthdayReport {
    pub jstar: usize,
    pub birthday_ok: bool,
    pub worst: Option<EnvyWitness>,
    pub sizes: Vec<usize>,
    pub sizes_ok: bool,
    pub envy_ok: bool,
}

impl BirthdayReport {
    pub fn max_envy(&self) -> Rational {
        self.worst.as_ref().map(|w| w.envy.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn passed(&self) -> bool {
        self.birthday_ok && self.sizes_ok && self.envy_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyFreeReport {
    pub epsilon: Rational,
    pub partition: PartitionFlags,
    pub per_jstar: Vec<BirthdayReport>,
    pub failures: Vec<String>,
}

impl EnvyFreeReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_envy(&self) -> Rational {
        self.per_jstar.iter().map(|r| r.max_envy()).max().unwrap_or_else(Rational::zero)
    }
}

/// Checks one assignment per birthday choice: the birthday agent holds `j*`,
/// every other agent is within `epsilon` of its best bundle, and group sizes
/// meet `bounds`. The division must be complete and feasible.
pub fn check_eps_envy_free_all_birthday(
    instance: &Instance,
    division: &MultiDivision,
    assignments: &[GroupAssignment],
    epsilon: &Rational,
    bounds: &SizeBounds,
) -> Result<EnvyFreeReport> {
    let q = division.len();
    let n = instance.agent_count();
    let partition = check_partition(division, instance.layers());
    let mut failures = Vec::new();
    if !(partition.complete && partition.feasible) {
        failures.push(format!("division is not a feasible partition: {partition:?}"));
    }
    if assignments.len() != q {
        failures.push(format!("{} assignments for {q} birthday choices", assignments.len()));
    }
    let b = instance.birthday();
    let others = instance.non_birthday();
    let mut per_jstar = Vec::new();
    for (jstar, g) in assignments.iter().enumerate() {
        let birthday_ok = g.bundle_of.get(b) == Some(&jstar) && g.birthday_choice.is_none_or(|c| c == jstar);
        if !birthday_ok {
            failures.push(format!("j* = {}: birthday agent {b} holds bundle {:?}", jstar + 1, g.bundle_of.get(b).map(|j| j + 1)));
        }
        let worst = max_envy_among(instance, division, &g.bundle_of, &others)?;
        let envy_ok = worst.as_ref().is_none_or(|w| &w.envy <= epsilon);
        if let Some(w) = worst.as_ref().filter(|_| !envy_ok) {
            failures.push(format!(
                "j* = {}: agent {} envies bundle {} from bundle {} by {} > {epsilon}",
                jstar + 1,
                w.agent,
                w.envied + 1,
                w.assigned + 1,
                w.envy
            ));
        }
        let sizes = g.sizes(q);
        let sizes_ok = bounds.admits(&sizes, n);
        if !sizes_ok {
            failures.push(format!("j* = {}: group sizes {sizes:?} violate {bounds:?}", jstar + 1));
        }
        per_jstar.push(BirthdayReport { jstar, birthday_ok, worst, sizes, sizes_ok, envy_ok });
    }
    Ok(EnvyFreeReport { epsilon: epsilon.clone(), partition, per_jstar, failures })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProportionalReport {
    pub epsilon: Rational,
    /// `min_i (v_i(A_{π(i)}) − α_i / q)` and the agent attaining it.
    pub worst_slack: Rational,
    pub worst_agent: Option<usize>,
    pub sizes: Vec<usize>,
    pub sizes_balanced: bool,
    pub partition: PartitionFlags,
    pub failures: Vec<String>,
}

impl ProportionalReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `v_i(A_{π(i)}) ≥ α_i / q − epsilon` for every agent, where `α_i` is
/// the agent's value for the whole cake, plus balanced group sizes and
/// completeness of the division.
pub fn check_proportional(
    instance: &Instance,
    division: &MultiDivision,
    bundle_of: &[usize],
    q: usize,
    epsilon: &Rational,
) -> Result<ProportionalReport> {
    check_assignment(division, bundle_of, instance.agent_count())?;
    if division.len() != q {
        return Err(Error::InvalidInput(format!("division has {} bundles, expected {q}", division.len())));
    }
    let m = instance.layers();
    let whole = LayeredPiece::whole(m);
    let qr = Rational::from_integer(q.into());
    let mut failures = Vec::new();
    let mut worst_slack: Option<(Rational, usize)> = None;
    for (i, &j) in bundle_of.iter().enumerate() {
        let alpha = instance.evaluate(i, &whole)?;
        let got = instance.evaluate(i, division.bundle(j))?;
        let slack = got - alpha / &qr;
        if (&slack + epsilon).is_negative() {
            failures.push(format!("agent {i} is short of its fair share by {}", -&slack));
        }
        if worst_slack.as_ref().is_none_or(|(w, _)| &slack < w) {
            worst_slack = Some((slack, i));
        }
    }
    let sizes = GroupAssignment::new(None, bundle_of.to_vec()).sizes(q);
    let sizes_balanced = SizeBounds::Balanced.admits(&sizes, bundle_of.len());
    if !sizes_balanced {
        failures.push(format!("group sizes {sizes:?} differ by more than one"));
    }
    let partition = check_partition(division, m);
    if !partition.complete {
        failures.push("division does not cover the cake".into());
    }
    let (worst_slack, worst_agent) = match worst_slack {
        Some((s, i)) => (s, Some(i)),
        None => (Rational::zero(), None),
    };
    Ok(ProportionalReport { epsilon: epsilon.clone(), worst_slack, worst_agent, sizes, sizes_balanced, partition, failures })
}
