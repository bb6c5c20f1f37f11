//! Corpus-level summary of exported evaluation sequences.

use std::fmt::Write as _;
use std::path::Path;

use polyloop_core::sequence::{EvaluationSequence, SessionState};
use serde::Serialize;

use crate::stats::{
    adf_test, kendall_tau, mann_kendall_at, mann_whitney_u, quadratic_fit, AdfResult, KendallResult, MannKendallResult,
    MannWhitneyResult, QuadraticFit, StatsError, Trend, EXACT_CUTOFF,
};

/// Series shorter than this are not tested.
pub const MIN_SERIES_LENGTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    MeanRating,
    RatingVariance,
    EstimatedOptimalRatio,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 3] = [
        SeriesKind::MeanRating,
        SeriesKind::RatingVariance,
        SeriesKind::EstimatedOptimalRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::MeanRating => "mean_rating",
            SeriesKind::RatingVariance => "rating_variance",
            SeriesKind::EstimatedOptimalRatio => "estimated_optimal_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTests {
    pub values: Vec<f64>,
    pub adf: Option<Result<AdfResult, StatsError>>,
    pub mann_kendall: Option<Result<MannKendallResult, StatsError>>,
}

impl SeriesTests {
    fn run(values: Vec<f64>, alpha: f64) -> Self {
        let tested = values.len() >= MIN_SERIES_LENGTH;
        Self {
            adf: tested.then(|| adf_test(&values)),
            mann_kendall: tested.then(|| mann_kendall_at(&values, alpha)),
            values,
        }
    }

    pub fn stationary(&self) -> Option<bool> {
        match &self.adf {
            Some(Ok(r)) => Some(r.stationary_at_05),
            _ => None,
        }
    }

    pub fn trend(&self) -> Option<Trend> {
        match &self.mann_kendall {
            Some(Ok(r)) => Some(r.trend),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceStats {
    pub session_id: String,
    pub mesh: String,
    pub length: usize,
    pub state: SessionState,
    pub mean_rating: SeriesTests,
    pub rating_variance: SeriesTests,
    /// Reduction ratio of each iteration's exploit-slot variant.
    pub estimated_optimal_ratio: SeriesTests,
}

impl SequenceStats {
    pub fn series(&self, kind: SeriesKind) -> &SeriesTests {
        match kind {
            SeriesKind::MeanRating => &self.mean_rating,
            SeriesKind::RatingVariance => &self.rating_variance,
            SeriesKind::EstimatedOptimalRatio => &self.estimated_optimal_ratio,
        }
    }

    pub fn satisfied(&self) -> bool {
        self.state == SessionState::TerminatedSatisfied
    }
}

pub fn sequence_stats(seq: &EvaluationSequence, alpha: f64) -> SequenceStats {
    let rated: Vec<_> = seq.rated_iterations().collect();
    let mean = rated.iter().filter_map(|it| it.mean_rating()).collect();
    let var = rated.iter().filter_map(|it| it.rating_variance()).collect();
    let ratio = seq
        .iterations
        .iter()
        .filter_map(|it| it.exploit().map(|v| v.reduction_ratio))
        .collect();
    SequenceStats {
        session_id: seq.session_id.clone(),
        mesh: seq.mesh.clone(),
        length: seq.len(),
        state: seq.state,
        mean_rating: SeriesTests::run(mean, alpha),
        rating_variance: SeriesTests::run(var, alpha),
        estimated_optimal_ratio: SeriesTests::run(ratio, alpha),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SeriesCounts {
    pub tested: usize,
    pub untestable: usize,
    pub stationary: usize,
    pub increasing: usize,
    pub decreasing: usize,
    pub no_trend: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelComparison {
    pub lower: u8,
    pub higher: u8,
    pub n_lower: usize,
    pub n_higher: usize,
    pub result: MannWhitneyResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub alpha: f64,
    pub sequences: Vec<SequenceStats>,
    pub satisfied: usize,
    pub satisfaction_rate: f64,
    pub mean_rating_counts: SeriesCounts,
    pub rating_variance_counts: SeriesCounts,
    pub estimated_optimal_ratio_counts: SeriesCounts,
    /// Reduction ratio against rating over variants rated 1-5.
    pub ratio_rating_tau: Option<Result<KendallResult, StatsError>>,
    pub level_comparisons: Vec<LevelComparison>,
    /// Quality against reduction ratio over every computed variant.
    pub quality_fit: Option<Result<QuadraticFit, StatsError>>,
    /// `histogram[k][r]`: ratings equal to `r` given in iteration `k + 1`.
    pub histogram: Vec<[usize; 6]>,
}

impl CorpusReport {
    pub fn counts(&self, kind: SeriesKind) -> &SeriesCounts {
        match kind {
            SeriesKind::MeanRating => &self.mean_rating_counts,
            SeriesKind::RatingVariance => &self.rating_variance_counts,
            SeriesKind::EstimatedOptimalRatio => &self.estimated_optimal_ratio_counts,
        }
    }
}

fn count(stats: &[SequenceStats], kind: SeriesKind) -> SeriesCounts {
    let mut c = SeriesCounts::default();
    for s in stats {
        let t = s.series(kind);
        if t.values.len() < MIN_SERIES_LENGTH {
            continue;
        }
        match t.stationary() {
            Some(st) => {
                c.tested += 1;
                c.stationary += st as usize;
            }
            None => c.untestable += 1,
        }
        match t.trend() {
            Some(Trend::Increasing) => c.increasing += 1,
            Some(Trend::Decreasing) => c.decreasing += 1,
            Some(Trend::None) => c.no_trend += 1,
            None => {}
        }
    }
    c
}

pub fn corpus_report(sequences: &[EvaluationSequence], alpha: f64) -> CorpusReport {
    let stats: Vec<SequenceStats> = sequences.iter().map(|s| sequence_stats(s, alpha)).collect();
    let satisfied = stats.iter().filter(|s| s.satisfied()).count();

    let mut ratios = Vec::new();
    let mut ratings = Vec::new();
    let mut by_level: [Vec<f64>; 6] = Default::default();
    let mut fit_x = Vec::new();
    let mut fit_y = Vec::new();
    let mut histogram: Vec<[usize; 6]> = Vec::new();
    for seq in sequences {
        for it in &seq.iterations {
            for v in &it.variants {
                fit_x.push(v.reduction_ratio);
                fit_y.push(v.quality.mean);
                let Some(r) = v.rating else { continue };
                if histogram.len() < it.index {
                    histogram.resize(it.index, [0; 6]);
                }
                histogram[it.index - 1][r.value() as usize] += 1;
                by_level[r.value() as usize].push(v.reduction_ratio);
                if !r.is_skip() {
                    ratios.push(v.reduction_ratio);
                    ratings.push(r.value() as f64);
                }
            }
        }
    }
    let mut level_comparisons = Vec::new();
    for lo in 1..=5u8 {
        for hi in lo + 1..=5u8 {
            let (a, b) = (&by_level[lo as usize], &by_level[hi as usize]);
            if let Ok(result) = mann_whitney_u(a, b) {
                level_comparisons.push(LevelComparison {
                    lower: lo,
                    higher: hi,
                    n_lower: a.len(),
                    n_higher: b.len(),
                    result,
                });
            }
        }
    }

    CorpusReport {
        alpha,
        satisfied,
        satisfaction_rate: if stats.is_empty() {
            0.0
        } else {
            satisfied as f64 / stats.len() as f64
        },
        mean_rating_counts: count(&stats, SeriesKind::MeanRating),
        rating_variance_counts: count(&stats, SeriesKind::RatingVariance),
        estimated_optimal_ratio_counts: count(&stats, SeriesKind::EstimatedOptimalRatio),
        ratio_rating_tau: (ratios.len() >= 2).then(|| kendall_tau(&ratios, &ratings)),
        level_comparisons,
        quality_fit: (fit_x.len() >= 3).then(|| quadratic_fit(&fit_x, &fit_y)),
        histogram,
        sequences: stats,
    }
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn state_name(s: SessionState) -> &'static str {
    match s {
        SessionState::Computing => "computing",
        SessionState::AwaitingRatings => "awaiting_ratings",
        SessionState::TerminatedSatisfied => "terminated_satisfied",
        SessionState::TerminatedReset => "terminated_reset",
        SessionState::TerminatedMaxIter => "terminated_max_iter",
    }
}

fn trend_name(t: Option<Trend>) -> &'static str {
    match t {
        Some(Trend::Increasing) => "increasing",
        Some(Trend::Decreasing) => "decreasing",
        Some(Trend::None) => "none",
        None => "",
    }
}

pub fn render_text(r: &CorpusReport) -> String {
    let mut out = String::new();
    let n = r.sequences.len();
    let _ = writeln!(out, "evaluation sequence report");
    let _ = writeln!(
        out,
        "p-values: exact enumeration for Kendall tau when n <= {EXACT_CUTOFF} and for Mann-Whitney U when max(n_a, n_b) <= {EXACT_CUTOFF}; normal approximation otherwise"
    );
    let _ = writeln!(
        out,
        "ADF: constant, no trend, lag 0; MacKinnon critical values; alpha = 0.05"
    );
    let _ = writeln!(out, "Mann-Kendall: alpha = {}", r.alpha);
    let _ = writeln!(out);
    let _ = writeln!(out, "sequences: {n}");
    let _ = writeln!(out, "satisfied: {} ({:.1}%)", r.satisfied, 100.0 * r.satisfaction_rate);
    for state in [
        SessionState::TerminatedSatisfied,
        SessionState::TerminatedReset,
        SessionState::TerminatedMaxIter,
        SessionState::AwaitingRatings,
        SessionState::Computing,
    ] {
        let c = r.sequences.iter().filter(|s| s.state == state).count();
        if c > 0 {
            let _ = writeln!(out, "  {}: {c}", state_name(state));
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "series (sequences with >= {MIN_SERIES_LENGTH} values)");
    for kind in SeriesKind::ALL {
        let c = r.counts(kind);
        let _ = writeln!(
            out,
            "  {}: tested {} untestable {} stationary {} | trend increasing {} decreasing {} none {}",
            kind.name(),
            c.tested,
            c.untestable,
            c.stationary,
            c.increasing,
            c.decreasing,
            c.no_trend
        );
    }
    let _ = writeln!(out);
    match &r.ratio_rating_tau {
        Some(Ok(k)) => {
            let _ = writeln!(
                out,
                "reduction ratio vs rating: tau {} p {} ({:?})",
                num(k.tau),
                num(k.p),
                k.method
            );
        }
        Some(Err(e)) => {
            let _ = writeln!(out, "reduction ratio vs rating: {e}");
        }
        None => {
            let _ = writeln!(out, "reduction ratio vs rating: too few rated variants");
        }
    }
    if !r.level_comparisons.is_empty() {
        let _ = writeln!(
            out,
            "reduction ratio by rating level (Mann-Whitney U, first = lower level):"
        );
        for c in &r.level_comparisons {
            let _ = writeln!(
                out,
                "  {} vs {}: n {}/{} U {} p {} ({:?})",
                c.lower,
                c.higher,
                c.n_lower,
                c.n_higher,
                num(c.result.u),
                num(c.result.p),
                c.result.method
            );
        }
    }
    match &r.quality_fit {
        Some(Ok(f)) => {
            let [c0, c1, c2] = f.coefficients;
            let _ = writeln!(
                out,
                "quality vs reduction ratio: {} + {}·x + {}·x² (R² {}, n {})",
                num(c0),
                num(c1),
                num(c2),
                num(f.r_squared),
                f.n
            );
        }
        Some(Err(e)) => {
            let _ = writeln!(out, "quality vs reduction ratio: {e}");
        }
        None => {}
    }
    out
}

fn to_csv(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn render_csv(r: &CorpusReport) -> String {
    let mut header: Vec<String> = ["session_id", "mesh", "length", "state"].map(String::from).to_vec();
    for kind in SeriesKind::ALL {
        let k = kind.name();
        for col in ["n", "adf_stat", "adf_band", "stationary", "mk_s", "mk_p", "trend"] {
            header.push(format!("{k}_{col}"));
        }
    }
    let mut rows = vec![header];
    for s in &r.sequences {
        let mut row = vec![
            s.session_id.clone(),
            s.mesh.clone(),
            s.length.to_string(),
            state_name(s.state).to_string(),
        ];
        for kind in SeriesKind::ALL {
            let t = s.series(kind);
            let (stat, band) = match &t.adf {
                Some(Ok(a)) => (num(a.statistic), a.p_band.label().to_string()),
                Some(Err(_)) => (String::new(), "singular".to_string()),
                None => (String::new(), String::new()),
            };
            let (mk_s, mk_p) = match &t.mann_kendall {
                Some(Ok(m)) => (m.s.to_string(), num(m.p)),
                _ => (String::new(), String::new()),
            };
            row.extend([
                t.values.len().to_string(),
                stat,
                band,
                t.stationary().map(|b| b.to_string()).unwrap_or_default(),
                mk_s,
                mk_p,
                trend_name(t.trend()).to_string(),
            ]);
        }
        rows.push(row);
    }
    to_csv(rows)
}

pub fn render_histogram_csv(r: &CorpusReport) -> String {
    let header = [
        "iteration",
        "rating_0",
        "rating_1",
        "rating_2",
        "rating_3",
        "rating_4",
        "rating_5",
        "mean_rating",
    ];
    let mut rows = vec![header.map(String::from).to_vec()];
    for (k, counts) in r.histogram.iter().enumerate() {
        let total: usize = counts.iter().sum();
        let mean =
            (total > 0).then(|| counts.iter().enumerate().map(|(v, c)| v * c).sum::<usize>() as f64 / total as f64);
        let mut row = vec![(k + 1).to_string()];
        row.extend(counts.iter().map(|c| c.to_string()));
        row.push(opt_num(mean));
        rows.push(row);
    }
    to_csv(rows)
}

/// Writes `report.txt`, `report.csv` and `rating_hist.csv` into `dir`.
pub fn write_reports(r: &CorpusReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.txt"), render_text(r))?;
    std::fs::write(dir.join("report.csv"), render_csv(r))?;
    std::fs::write(dir.join("rating_hist.csv"), render_histogram_csv(r))
}
