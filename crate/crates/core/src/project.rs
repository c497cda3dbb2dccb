//! Project outcome measures from article assessment transitions.
//!
//! For a grade `G`, the efficiency of project `W` is the number of articles
//! that ever moved from below `G` to `G` or higher, divided by the sum over
//! those transitions of revisions per grade level crossed. Performance is the
//! fraction of a project's articles that ever held a Wikipedia-wide status
//! grade (GA or FA on the default scale).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered grade labels. Rank is the position in the list; an empty label
/// means "unassessed" and ranks below every grade.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeScale {
    labels: Vec<String>,
    /// Rank of the first Wikipedia-wide status grade.
    status_from: usize,
}

impl Default for GradeScale {
    fn default() -> Self {
        Self::new(&["Stub", "Start", "C", "B", "A", "GA", "FA"], "GA").expect("valid default scale")
    }
}

/// Rank of a grade; `None` is unassessed.
pub type Rank = Option<usize>;

fn rank_value(r: Rank) -> i64 {
    r.map_or(-1, |r| r as i64)
}

impl GradeScale {
    pub fn new(labels: &[&str], first_status: &str) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.trim().to_string()).collect();
        let unique: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if labels.is_empty() || unique.len() != labels.len() || labels.iter().any(String::is_empty) {
            return Err(Error::InvalidConfig(format!("grade labels must be unique and non-empty: {labels:?}")));
        }
        let status_from = labels
            .iter()
            .position(|l| l == first_status)
            .ok_or_else(|| Error::UnknownGrade(first_status.to_string()))?;
        Ok(Self { labels, status_from })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rank(&self, label: &str) -> Result<Rank> {
        let label = label.trim();
        if label.is_empty() {
            return Ok(None);
        }
        self.labels
            .iter()
            .position(|l| l.eq_ignore_ascii_case(label))
            .map(Some)
            .ok_or_else(|| Error::UnknownGrade(label.to_string()))
    }

    pub fn is_status(&self, r: Rank) -> bool {
        r.is_some_and(|r| r >= self.status_from)
    }

    /// Project-level grades, highest first (A, B, C on the default scale).
    pub fn reported_grades(&self) -> Vec<&str> {
        let c = self.labels.iter().position(|l| l == "C").unwrap_or(0);
        self.labels[c..self.status_from].iter().rev().map(String::as_str).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub project: String,
    pub article: String,
    pub timestamp: NaiveDateTime,
    pub old: Rank,
    pub new: Rank,
    /// Revisions since the article's previous grade transition.
    pub revisions: u64,
}

impl Transition {
    /// Grade levels gained; zero or negative for reassessments and downgrades.
    pub fn levels(&self) -> i64 {
        rank_value(self.new) - rank_value(self.old)
    }

    /// Whether this transition moves the article from below rank `g` to `g`
    /// or higher.
    pub fn crosses(&self, g: usize) -> bool {
        rank_value(self.old) < g as i64 && rank_value(self.new) >= g as i64
    }

    /// Revisions per grade level crossed.
    pub fn per_level(&self) -> f64 {
        self.revisions as f64 / self.levels() as f64
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    project: String,
    article: String,
    timestamp: String,
    old_grade: String,
    new_grade: String,
    revisions: u64,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.naive_utc())
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionLog {
    records: Vec<Transition>,
}

impl TransitionLog {
    pub fn new(records: Vec<Transition>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[Transition] {
        &self.records
    }

    pub fn push(&mut self, t: Transition) {
        self.records.push(t);
    }

    /// Reads `project,article,timestamp,old_grade,new_grade,revisions` CSV.
    pub fn read_csv<R: Read>(reader: R, scale: &GradeScale) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let timestamp = parse_timestamp(&row.timestamp).ok_or_else(|| Error::Parse {
                line,
                msg: format!("bad ISO-8601 timestamp {:?}", row.timestamp),
            })?;
            records.push(Transition {
                project: row.project,
                article: row.article,
                timestamp,
                old: scale.rank(&row.old_grade)?,
                new: scale.rank(&row.new_grade)?,
                revisions: row.revisions,
            });
        }
        Ok(Self { records })
    }

    pub fn projects(&self) -> BTreeSet<&str> {
        self.records.iter().map(|t| t.project.as_str()).collect()
    }

    fn of_project<'a>(&'a self, project: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.records.iter().filter(move |t| t.project == project)
    }

    /// Checks that each article's records are in timestamp order.
    pub fn check_ordering(&self) -> Result<()> {
        let mut last: BTreeMap<(&str, &str), NaiveDateTime> = BTreeMap::new();
        for (i, t) in self.records.iter().enumerate() {
            let key = (t.project.as_str(), t.article.as_str());
            if let Some(prev) = last.insert(key, t.timestamp) {
                if t.timestamp < prev {
                    return Err(Error::Parse {
                        line: i + 2,
                        msg: format!("timestamps for article {:?} go backwards", t.article),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Transition set size, distinct article count, and revision sum for one
/// project and grade.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct GradeStats {
    pub transitions: usize,
    pub articles: usize,
    pub revisions_per_level: f64,
}

impl GradeStats {
    /// `None` when no article crossed into the grade. Infinite when every
    /// qualifying transition has zero revisions.
    pub fn efficiency(&self) -> Option<f64> {
        (self.articles > 0).then(|| self.articles as f64 / self.revisions_per_level)
    }
}

fn grade_rank(scale: &GradeScale, grade: &str) -> Result<usize> {
    scale.rank(grade)?.ok_or_else(|| Error::UnknownGrade(grade.to_string()))
}

/// Batch computation of the transition statistics for one grade.
pub fn grade_stats(log: &TransitionLog, project: &str, grade: &str, scale: &GradeScale) -> Result<GradeStats> {
    let g = grade_rank(scale, grade)?;
    let crossing: Vec<&Transition> = log.of_project(project).filter(|t| t.crosses(g)).collect();
    let articles: HashSet<&str> = crossing.iter().map(|t| t.article.as_str()).collect();
    Ok(GradeStats {
        transitions: crossing.len(),
        articles: articles.len(),
        revisions_per_level: crossing.iter().map(|t| t.per_level()).sum(),
    })
}

/// Efficiency of `project` for `grade`.
pub fn efficiency(log: &TransitionLog, project: &str, grade: &str, scale: &GradeScale) -> Result<f64> {
    grade_stats(log, project, grade, scale)?
        .efficiency()
        .ok_or_else(|| Error::NoTransitions(grade.to_string()))
}

/// Fraction of the project's distinct articles that ever held a status grade.
pub fn performance(log: &TransitionLog, project: &str, scale: &GradeScale) -> Result<f64> {
    let mut all = HashSet::new();
    let mut status = HashSet::new();
    for t in log.of_project(project) {
        all.insert(t.article.as_str());
        if scale.is_status(t.new) || scale.is_status(t.old) {
            status.insert(t.article.as_str());
        }
    }
    if all.is_empty() {
        return Err(Error::EmptyProject(project.to_string()));
    }
    Ok(status.len() as f64 / all.len() as f64)
}

/// Streaming accumulator for per-project, per-grade statistics.
#[derive(Clone, Debug)]
pub struct EfficiencyAccumulator {
    grades: Vec<usize>,
    // (project, grade rank) -> (transitions, articles, revision sum)
    cells: BTreeMap<(String, usize), (usize, HashSet<String>, f64)>,
}

impl EfficiencyAccumulator {
    pub fn new(scale: &GradeScale, grades: &[&str]) -> Result<Self> {
        Ok(Self {
            grades: grades.iter().map(|g| grade_rank(scale, g)).collect::<Result<_>>()?,
            cells: BTreeMap::new(),
        })
    }

    pub fn push(&mut self, t: &Transition) {
        for &g in &self.grades {
            if t.crosses(g) {
                let cell = self.cells.entry((t.project.clone(), g)).or_default();
                cell.0 += 1;
                cell.1.insert(t.article.clone());
                cell.2 += t.per_level();
            }
        }
    }

    pub fn stats(&self, project: &str, grade_rank: usize) -> GradeStats {
        self.cells
            .get(&(project.to_string(), grade_rank))
            .map(|(n, arts, sum)| GradeStats {
                transitions: *n,
                articles: arts.len(),
                revisions_per_level: *sum,
            })
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectStats {
    pub project: String,
    /// Per reported grade, highest first.
    pub grades: Vec<(String, GradeStats)>,
    pub status_articles: usize,
    pub n_articles: usize,
    pub performance: f64,
}

/// Statistics for every project in the log, in project-name order.
pub fn project_stats(log: &TransitionLog, scale: &GradeScale) -> Result<Vec<ProjectStats>> {
    let grades = scale.reported_grades();
    let mut acc = EfficiencyAccumulator::new(scale, &grades)?;
    for t in log.records() {
        acc.push(t);
    }
    log.projects()
        .into_iter()
        .map(|p| {
            let performance = performance(log, p, scale)?;
            let n_articles = log.of_project(p).map(|t| t.article.as_str()).collect::<HashSet<_>>().len();
            Ok(ProjectStats {
                project: p.to_string(),
                grades: grades
                    .iter()
                    .map(|g| Ok((g.to_string(), acc.stats(p, grade_rank(scale, g)?))))
                    .collect::<Result<_>>()?,
                status_articles: (performance * n_articles as f64).round() as usize,
                n_articles,
                performance,
            })
        })
        .collect()
}

/// Writes `project,E_<grade>...,P,n_articles`; undefined efficiencies are
/// left empty.
pub fn write_stats_csv<W: Write>(stats: &[ProjectStats], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["project".to_string()];
    if let Some(first) = stats.first() {
        header.extend(first.grades.iter().map(|(g, _)| format!("E_{g}")));
    }
    header.extend(["P".to_string(), "n_articles".to_string()]);
    out.write_record(&header)?;
    for s in stats {
        let mut row = vec![s.project.clone()];
        row.extend(
            s.grades
                .iter()
                .map(|(_, g)| g.efficiency().map(|e| e.to_string()).unwrap_or_default()),
        );
        row.push(s.performance.to_string());
        row.push(s.n_articles.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub base: f64,
    /// Adding an article that crosses the grade with no extra revisions
    /// raises efficiency.
    pub increasing_in_transitions: bool,
    /// One extra revision on an existing qualifying transition lowers it.
    pub decreasing_in_revisions: bool,
    /// Duplicating every article of the project leaves it unchanged.
    pub size_independent: bool,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.increasing_in_transitions && self.decreasing_in_revisions && self.size_independent
    }
}

/// Perturbs the project's log three ways and checks the efficiency response.
pub fn axioms_check(log: &TransitionLog, project: &str, grade: &str, scale: &GradeScale) -> Result<AxiomReport> {
    let g = grade_rank(scale, grade)?;
    let base = efficiency(log, project, grade, scale)?;
    let own: Vec<Transition> = log.of_project(project).cloned().collect();
    let template = own.iter().find(|t| t.crosses(g)).expect("efficiency is defined").clone();

    let mut more = log.clone();
    let mut fresh = template.clone();
    fresh.article = unique_article(&own, "added");
    fresh.old = g.checked_sub(1);
    fresh.new = Some(g);
    fresh.revisions = 0;
    more.push(fresh);
    let with_transition = efficiency(&more, project, grade, scale)?;

    let mut heavier = log.clone();
    let idx = heavier
        .records
        .iter()
        .position(|t| t.project == project && t.crosses(g))
        .expect("a qualifying transition exists");
    heavier.records[idx].revisions += 1;
    let with_revision = efficiency(&heavier, project, grade, scale)?;

    let mut doubled = log.clone();
    let suffix = unique_article(&own, "dup");
    for t in &own {
        let mut copy = t.clone();
        copy.article = format!("{}{suffix}", t.article);
        doubled.push(copy);
    }
    let dup = efficiency(&doubled, project, grade, scale)?;

    let size_independent = if base.is_finite() {
        (dup - base).abs() <= 1e-12 * base.abs().max(1.0)
    } else {
        dup == base
    };
    Ok(AxiomReport {
        base,
        increasing_in_transitions: with_transition > base || (base.is_infinite() && with_transition == base),
        decreasing_in_revisions: with_revision < base,
        size_independent,
    })
}

fn unique_article(records: &[Transition], stem: &str) -> String {
    let taken: HashSet<&str> = records.iter().map(|t| t.article.as_str()).collect();
    (0..)
        .map(|i| format!("#{stem}{i}"))
        .find(|c| !taken.iter().any(|t| t.ends_with(c.as_str())))
        .expect("unbounded candidates")
}
