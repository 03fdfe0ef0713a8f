use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use layercake_core::cake::{check_partition, int, GroupAssignment, MultiDivision, Rational};
use layercake_core::chessboard::{equal_size_demo, grid_search, GridSearchResult};
use layercake_core::fptas::{self, SolveOptions, Solution};
use layercake_core::generate::{random_instance, InstanceShape};
use layercake_core::proportional::solve_proportional_with;
use layercake_core::valuation::{lipschitz_bound, Instance};
use layercake_core::verifier::{check_eps_envy_free_all_birthday, check_proportional, max_envy_among, SizeBounds};
use layercake_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::schema::{
    division_doc, division_from_doc, Certificate, InstanceDoc, PartitionDoc, RationalText, SolutionDoc, NO_BIRTHDAY,
};

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Precondition(String),
    /// The solver failed or its output did not pass verification.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition: {m}"),
            CliError::Verification(m) => write!(f, "verification: {m}"),
        }
    }
}

fn solver_error(e: Error) -> CliError {
    match e {
        Error::Invariant(_) | Error::Infeasible(_) => CliError::Verification(e.to_string()),
        _ => CliError::Precondition(e.to_string()),
    }
}

fn read_text(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Parse(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{path}: {e}")))
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, CliError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    doc.to_instance().map_err(CliError::Parse)
}

pub fn read_instance(path: &str) -> Result<Instance, CliError> {
    parse_instance(&read_text(path)?).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{path}: {m}")),
        other => other,
    })
}

pub fn read_solution(path: &str) -> Result<SolutionDoc, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Parse(format!("{path}: {e}")))
}

/// Which verifier check a solution document answers to.
pub enum Check {
    Envy(SizeBounds),
    Proportional(usize),
}

fn key_of(g: &GroupAssignment) -> String {
    g.birthday_choice.map_or_else(|| NO_BIRTHDAY.to_string(), |j| (j + 1).to_string())
}

fn text(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn texts(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(text).collect())
}

pub fn certify(
    instance: &Instance,
    division: &MultiDivision,
    assignments: &[GroupAssignment],
    check: &Check,
    epsilon: &Rational,
    oracle_calls: Option<u64>,
) -> Result<Certificate, CliError> {
    let q = division.len();
    let flags = check_partition(division, instance.layers());
    let mut max_envy_per_jstar = BTreeMap::new();
    let mut sizes = BTreeMap::new();
    for g in assignments {
        // the birthday agent chooses freely and is owed nothing
        let agents: Vec<usize> = match g.birthday_choice {
            Some(_) => instance.non_birthday(),
            None => (0..instance.agent_count()).collect(),
        };
        let envy = max_envy_among(instance, division, &g.bundle_of, &agents)
            .map_err(|e| CliError::Verification(e.to_string()))?
            .map_or_else(Rational::default, |w| w.envy);
        max_envy_per_jstar.insert(key_of(g), RationalText::of(&envy));
        sizes.insert(key_of(g), g.sizes(q));
    }
    let (failures, slack) = match check {
        Check::Envy(bounds) => {
            let report = check_eps_envy_free_all_birthday(instance, division, assignments, epsilon, bounds)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            (report.failures, None)
        }
        Check::Proportional(q) => {
            let [g] = assignments else {
                return Err(CliError::Verification("a proportional solution carries exactly one assignment".into()));
            };
            let report = check_proportional(instance, division, &g.bundle_of, *q, epsilon)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            (report.failures, Some(RationalText::of(&report.worst_slack)))
        }
    };
    Ok(Certificate {
        epsilon: RationalText::of(epsilon),
        passed: failures.is_empty(),
        max_envy_per_jstar,
        sizes,
        proportional_slack: slack,
        partition: PartitionDoc { complete: flags.complete, feasible: flags.feasible, contiguous: flags.contiguous },
        oracle_calls,
        failures,
    })
}

fn assignments_doc(assignments: &[GroupAssignment]) -> BTreeMap<String, Vec<usize>> {
    assignments.iter().map(|g| (key_of(g), g.bundle_of.iter().map(|j| j + 1).collect())).collect()
}

fn assignments_from_doc(doc: &BTreeMap<String, Vec<usize>>) -> Result<Vec<GroupAssignment>, CliError> {
    doc.iter()
        .map(|(key, bundles)| {
            let choice = if key == NO_BIRTHDAY {
                None
            } else {
                let j: usize = key.parse().map_err(|_| CliError::Parse(format!("assignments: bad key {key:?}")))?;
                if j == 0 {
                    return Err(CliError::Parse("assignments: bundles are numbered from 1".into()));
                }
                Some(j - 1)
            };
            let bundle_of = bundles
                .iter()
                .map(|&j| j.checked_sub(1).ok_or_else(|| CliError::Parse(format!("assignments[{key}]: bundle 0"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupAssignment::new(choice, bundle_of))
        })
        .collect()
}

fn fptas_doc(
    mode: &str,
    instance: &Instance,
    sol: &Solution,
    check: Check,
    groups: Option<Vec<usize>>,
) -> Result<SolutionDoc, CliError> {
    let certificate =
        certify(instance, &sol.division, &sol.assignments, &check, &sol.epsilon, Some(sol.oracle_call_count))?;
    let mut details = BTreeMap::new();
    details.insert("grid".into(), json!(sol.grid));
    details.insert("anchor_vertex".into(), json!([sol.anchor_vertex.i, sol.anchor_vertex.k]));
    details.insert("top_layer".into(), json!(sol.top_layer));
    details.insert("coloring_agents".into(), json!(sol.coloring_agents));
    Ok(SolutionDoc {
        mode: mode.into(),
        groups,
        division: division_doc(&sol.division),
        star_point: Some([RationalText::of(&sol.star_point.0), RationalText::of(&sol.star_point.1)]),
        weights: Some(sol.weights.rows().iter().map(|r| r.iter().map(RationalText::of).collect()).collect()),
        assignments: assignments_doc(&sol.assignments),
        certificate,
        details,
    })
}

pub fn solve_two_layer(instance: &Instance, epsilon: &Rational, options: &SolveOptions) -> Result<SolutionDoc, CliError> {
    let sol = fptas::solve_two_layer_with(instance, epsilon, options).map_err(solver_error)?;
    fptas_doc("two-layer", instance, &sol, Check::Envy(SizeBounds::Balanced), None)
}

pub fn solve_one_layer(
    instance: &Instance,
    epsilon: &Rational,
    groups: [usize; 3],
    options: &SolveOptions,
) -> Result<SolutionDoc, CliError> {
    let sol = fptas::solve_one_layer_with(instance, epsilon, groups, options).map_err(solver_error)?;
    fptas_doc("one-layer", instance, &sol, Check::Envy(SizeBounds::Exact(groups.to_vec())), Some(groups.to_vec()))
}

pub fn solve_proportional(
    instance: &Instance,
    q: usize,
    epsilon: &Rational,
    options: &SolveOptions,
) -> Result<SolutionDoc, CliError> {
    let sol = solve_proportional_with(instance, q, epsilon, options).map_err(solver_error)?;
    let assignments = [GroupAssignment::new(None, sol.bundle_of.clone())];
    let certificate = certify(instance, &sol.division, &assignments, &Check::Proportional(q), epsilon, None)?;
    let mut details = BTreeMap::new();
    details.insert("factors".into(), json!(sol.factors));
    details.insert("epsilon_total".into(), text(&sol.epsilon_total));
    Ok(SolutionDoc {
        mode: "proportional".into(),
        groups: None,
        division: division_doc(&sol.division),
        star_point: None,
        weights: None,
        assignments: assignments_doc(&assignments),
        certificate,
        details,
    })
}

/// Envy slack implied by a grid of resolution `r`: `6K/r`.
pub fn grid_epsilon(instance: &Instance, resolution: usize) -> Result<Rational, CliError> {
    let k = lipschitz_bound(instance).map_err(solver_error)?;
    Ok(int(6) * k / int(resolution as i64))
}

fn search_details(res: &GridSearchResult) -> BTreeMap<String, Value> {
    let mut details = BTreeMap::new();
    details.insert("placement".into(), json!(res.point.placement().rows()));
    details.insert("coords".into(), texts(res.point.coords()));
    details.insert("tolerance".into(), text(&res.tolerance));
    details.insert("popularity".into(), texts(&res.popularity));
    details.insert("balance_distance".into(), text(&res.balance_distance));
    details.insert("exact_popularity".into(), texts(&res.exact_popularity));
    details.insert("coloring_agents".into(), json!(res.coloring_agents));
    details.insert("orders_scanned".into(), json!(res.orders_scanned));
    details.insert("points_scanned".into(), json!(res.points_scanned));
    details
}

fn search_doc(
    mode: &str,
    instance: &Instance,
    division: &MultiDivision,
    res: &GridSearchResult,
    epsilon: &Rational,
    mut details: BTreeMap<String, Value>,
) -> Result<SolutionDoc, CliError> {
    let certificate = certify(instance, division, &res.assignments, &Check::Envy(SizeBounds::Balanced), epsilon, None)?;
    details.extend(search_details(res));
    Ok(SolutionDoc {
        mode: mode.into(),
        groups: None,
        division: division_doc(division),
        star_point: None,
        weights: Some(res.weights.rows().iter().map(|r| r.iter().map(RationalText::of).collect()).collect()),
        assignments: assignments_doc(&res.assignments),
        certificate,
        details,
    })
}

pub fn search_chessboard(
    instance: &Instance,
    q: usize,
    resolution: usize,
    epsilon: Option<Rational>,
) -> Result<SolutionDoc, CliError> {
    let epsilon = match epsilon {
        Some(e) => e,
        None => grid_epsilon(instance, resolution)?,
    };
    let res = grid_search(instance, q, resolution).map_err(solver_error)?;
    search_doc("chessboard", instance, &res.division, &res, &epsilon, BTreeMap::new())
}

pub fn demo_equal_size(
    instance: &Instance,
    q: usize,
    resolution: usize,
    epsilon: Option<Rational>,
) -> Result<SolutionDoc, CliError> {
    let epsilon = match epsilon {
        Some(e) => e,
        None => grid_epsilon(instance, resolution)?,
    };
    let res = equal_size_demo(instance, q, resolution).map_err(solver_error)?;
    let subintervals: Vec<Value> = res
        .subintervals
        .iter()
        .map(|ivs| Value::Array(ivs.iter().map(|iv| json!([iv.lo().to_string(), iv.hi().to_string()])).collect()))
        .collect();
    let mut details = BTreeMap::new();
    details.insert("subintervals".into(), Value::Array(subintervals));
    search_doc("equal-size", instance, &res.division, &res.search, &epsilon, details)
}

/// Re-derives the certificate of `solution` against `instance`.
pub fn verify(instance: &Instance, solution: &SolutionDoc, epsilon: Option<Rational>) -> Result<Certificate, CliError> {
    let division = division_from_doc(&solution.division).map_err(CliError::Parse)?;
    let assignments = assignments_from_doc(&solution.assignments)?;
    let epsilon = match epsilon {
        Some(e) => e,
        None => solution.certificate.epsilon.parse("certificate.epsilon").map_err(CliError::Parse)?,
    };
    let check = match solution.mode.as_str() {
        "two-layer" | "chessboard" | "equal-size" => Check::Envy(SizeBounds::Balanced),
        "one-layer" => {
            let groups = solution.groups.clone().ok_or_else(|| CliError::Parse("one-layer solution without groups".into()))?;
            Check::Envy(SizeBounds::Exact(groups))
        }
        "proportional" => Check::Proportional(division.len()),
        other => return Err(CliError::Parse(format!("unknown mode {other:?}"))),
    };
    for g in &assignments {
        if g.bundle_of.len() != instance.agent_count() {
            return Err(CliError::Precondition(format!(
                "assignment covers {} agents, instance has {}",
                g.bundle_of.len(),
                instance.agent_count()
            )));
        }
    }
    certify(instance, &division, &assignments, &check, &epsilon, solution.certificate.oracle_calls)
}

pub fn generate(shape: &InstanceShape, seed: u64) -> Result<InstanceDoc, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = random_instance(&mut rng, shape).map_err(|e| CliError::Precondition(e.to_string()))?;
    InstanceDoc::from_instance(&instance).map_err(CliError::Precondition)
}
