//! Success rate, success weighted by path length, the evaluation harness and
//! the comparison table.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::curriculum::{method_label, Method, Split, SplitSpec};
use crate::env::{generate_episode, ActionSpace, EnvConfig, Episode};
use crate::error::{Error, Result};
use crate::ppo::reward::RewardConfig;
use crate::rng::{derive_rng, Stream};

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    /// Geodesic distance from the start to the success region, in cells.
    pub shortest: u32,
    /// Executed cell translations.
    pub path: usize,
    pub length: usize,
    pub asks: usize,
}

impl EpisodeResult {
    /// `S · l / max(p, l)`, taken as `S` when both lengths are zero.
    pub fn spl_term(&self) -> f64 {
        if !self.success {
            return 0.0;
        }
        let l = self.shortest as f64;
        let denom = (self.path as f64).max(l);
        if denom == 0.0 {
            1.0
        } else {
            l / denom
        }
    }
}

pub fn compute_sr(episodes: &[EpisodeResult]) -> Result<f64> {
    if episodes.is_empty() {
        return Err(Error::EmptyEpisodes);
    }
    let wins = episodes.iter().filter(|e| e.success).count();
    Ok(100.0 * wins as f64 / episodes.len() as f64)
}

pub fn compute_spl(episodes: &[EpisodeResult]) -> Result<f64> {
    if episodes.is_empty() {
        return Err(Error::EmptyEpisodes);
    }
    let total: f64 = episodes.iter().map(EpisodeResult::spl_term).sum();
    Ok(100.0 * total / episodes.len() as f64)
}

/// Aggregate over one evaluation condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub sr: f64,
    pub spl: f64,
    pub n_episodes: usize,
    pub mean_len: f64,
    pub mean_asks: f64,
}

impl EvalRow {
    pub fn from_results(results: &[EpisodeResult]) -> Result<Self> {
        let n = results.len() as f64;
        Ok(EvalRow {
            sr: compute_sr(results)?,
            spl: compute_spl(results)?,
            n_episodes: results.len(),
            mean_len: results.iter().map(|r| r.length as f64).sum::<f64>() / n,
            mean_asks: results.iter().map(|r| r.asks as f64).sum::<f64>() / n,
        })
    }
}

/// Settings for an evaluation run.
#[derive(Debug, Clone)]
pub struct EvalSetup<'a> {
    pub env: &'a EnvConfig,
    pub reward: &'a RewardConfig,
    pub space: ActionSpace,
    pub split: &'a SplitSpec,
    pub which: Split,
    pub teacher_present: bool,
    pub n_episodes: usize,
    pub seed: u64,
}

/// Runs `agent` on `n_episodes` fresh episodes. Episode `i` is generated and
/// played with a generator derived from `(seed, i)`, so results do not
/// depend on evaluation order.
pub fn evaluate_episodes<A: Agent>(agent: &mut A, setup: &EvalSetup<'_>) -> Result<Vec<EpisodeResult>> {
    if setup.n_episodes == 0 {
        return Err(Error::Usage("evaluation needs at least one episode".into()));
    }
    let pool = setup.split.pool(setup.which);
    (0..setup.n_episodes)
        .map(|i| {
            let mut rng = derive_rng(setup.seed, Stream::Eval, i as u64, 0);
            let mut spec = generate_episode(&mut rng, setup.env, pool)?;
            spec.teacher_present = setup.teacher_present;
            let mut episode = Episode::new(setup.env, setup.reward, setup.space, spec);
            let shortest = episode
                .shortest_path()
                .ok_or_else(|| Error::Contract("generated episode is unreachable".into()))?;
            let mut view = episode.observe();
            agent.reset(&episode, &view);
            loop {
                let action = agent.act(&episode, &view, &mut rng)?;
                let out = episode.step(action)?;
                if out.done {
                    break;
                }
                view = out.next_view;
            }
            let st = episode.state();
            Ok(EpisodeResult {
                success: st.success,
                shortest,
                path: st.path_length,
                length: st.steps,
                asks: st.asks,
            })
        })
        .collect()
}

pub fn evaluate<A: Agent>(agent: &mut A, setup: &EvalSetup<'_>) -> Result<EvalRow> {
    EvalRow::from_results(&evaluate_episodes(agent, setup)?)
}

/// Identifies a trained agent in the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodId {
    pub method: Method,
    pub eta_percent: f64,
}

impl MethodId {
    pub fn label(&self) -> String {
        method_label(self.method, self.eta_percent)
    }
}

impl Eq for MethodId {}

impl PartialOrd for MethodId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MethodId {
    fn cmp(&self, other: &Self) -> Ordering {
        let eta = |m: &MethodId| if m.method == Method::Semi { m.eta_percent } else { 0.0 };
        self.method.cmp(&other.method).then(eta(self).total_cmp(&eta(other)))
    }
}

/// One evaluated cell of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: MethodId,
    pub teacher_present: bool,
    pub split: Split,
    pub row: EvalRow,
}

/// Which (presence, method) rows to print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// Baseline only without a teacher, Feedback only with one, semi-present
    /// agents in both.
    Standard,
    /// Every method under both presence values.
    Full,
}

/// The rendered comparison: long-format CSV and an aligned text table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTable {
    pub csv: String,
    pub text: String,
    pub rows: usize,
}

pub const CSV_HEADER: &str = "method,presence,split,sr,spl,n_episodes,mean_len,mean_asks";
const BLANK: &str = "--";

fn presence_word(p: bool) -> &'static str {
    if p {
        "present"
    } else {
        "absent"
    }
}

pub fn csv_row(method: &str, presence: bool, split: Split, row: Option<&EvalRow>) -> String {
    match row {
        Some(r) => format!(
            "{method},{},{split},{:.2},{:.2},{},{:.2},{:.2}",
            presence_word(presence),
            r.sr,
            r.spl,
            r.n_episodes,
            r.mean_len,
            r.mean_asks
        ),
        None => format!("{method},{},{split},{BLANK},{BLANK},{BLANK},{BLANK},{BLANK}", presence_word(presence)),
    }
}

/// Builds the table. Rows are ordered by presence (absent first), then
/// method; input order is irrelevant. A row appears when the layout allows
/// it and at least one of its cells was measured; missing cells print as `--`.
pub fn comparison_table(reports: &[EvalReport], layout: TableLayout) -> ComparisonTable {
    let mut cells: BTreeMap<(bool, MethodId, Split), EvalRow> = BTreeMap::new();
    let mut methods: Vec<MethodId> = Vec::new();
    for r in reports {
        cells.insert((r.teacher_present, r.method, r.split), r.row);
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods.sort();

    let mut rows: Vec<(bool, MethodId)> = Vec::new();
    for presence in [false, true] {
        for &m in &methods {
            let shown = match layout {
                TableLayout::Full => true,
                TableLayout::Standard => match m.method {
                    Method::Baseline => !presence,
                    Method::Feedback => presence,
                    Method::Semi => true,
                },
            };
            let measured = [Split::Seen, Split::Unseen].iter().any(|&s| cells.contains_key(&(presence, m, s)));
            if shown && measured {
                rows.push((presence, m));
            }
        }
    }

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for &(presence, m) in &rows {
        for split in [Split::Seen, Split::Unseen] {
            csv.push_str(&csv_row(&m.label(), presence, split, cells.get(&(presence, m, split))));
            csv.push('\n');
        }
    }

    let fmt = |v: Option<f64>| v.map_or(BLANK.to_string(), |v| format!("{v:.1}"));
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<9} {:<10} {:>8} {:>10} {:>9} {:>11}",
        "Teacher", "Method", "SR seen", "SR unseen", "SPL seen", "SPL unseen"
    );
    for &(presence, m) in &rows {
        let get = |split| cells.get(&(presence, m, split));
        let _ = writeln!(
            text,
            "{:<9} {:<10} {:>8} {:>10} {:>9} {:>11}",
            presence_word(presence),
            m.label(),
            fmt(get(Split::Seen).map(|r| r.sr)),
            fmt(get(Split::Unseen).map(|r| r.sr)),
            fmt(get(Split::Seen).map(|r| r.spl)),
            fmt(get(Split::Unseen).map(|r| r.spl)),
        );
    }
    ComparisonTable {
        csv,
        text,
        rows: rows.len(),
    }
}
