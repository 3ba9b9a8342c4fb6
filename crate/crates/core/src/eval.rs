//! Scoring alert weeks against ground truth and comparing methods.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Precision, recall and F1 of a set of alert weeks against the true alerts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_alerts_method: usize,
    pub n_alerts_real: usize,
    pub n_hits: usize,
    /// Names of the metrics whose denominator was zero (reported as 0).
    pub zero_denominator_flags: Vec<String>,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            _ => None,
        }
    }
}

pub fn precision_recall_f1(
    alerts_method: &BTreeSet<u32>,
    alerts_real: &BTreeSet<u32>,
) -> EvalReport {
    let n_hits = alerts_method.intersection(alerts_real).count();
    let mut flags = Vec::new();
    let mut ratio = |num: usize, den: usize, name: &str| {
        if den == 0 {
            flags.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(n_hits, alerts_method.len(), "precision");
    let recall = ratio(n_hits, alerts_real.len(), "recall");
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.push("f1".to_string());
        0.0
    };
    EvalReport {
        precision,
        recall,
        f1,
        n_alerts_method: alerts_method.len(),
        n_alerts_real: alerts_real.len(),
        n_hits,
        zero_denominator_flags: flags,
    }
}

/// Topic weights for one week.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicVector(pub Vec<f64>);

/// `1 − cos(cur, prev)`, in `[0, 2]`.
pub fn vector_change_score(cur: &TopicVector, prev: &TopicVector) -> Result<f64> {
    if cur.0.len() != prev.0.len() {
        return Err(Error::validation(format!(
            "topic vectors differ in length ({} vs {})",
            cur.0.len(),
            prev.0.len()
        )));
    }
    let dot: f64 = cur.0.iter().zip(&prev.0).map(|(a, b)| a * b).sum();
    let norm = |v: &TopicVector| v.0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (nc, np) = (norm(cur), norm(prev));
    if nc == 0.0 || np == 0.0 {
        return Err(Error::validation("topic vector has zero norm"));
    }
    let cosine = (dot / (nc * np)).clamp(-1.0, 1.0);
    Ok(1.0 - cosine)
}

/// Reads `week,v0,v1,...` rows. Weeks must be unique; rows are returned
/// sorted by week.
pub fn read_topic_vectors<R: Read>(reader: R) -> Result<Vec<(u32, TopicVector)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_parse_error)?.clone();
    if header.get(0) != Some("week") || header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `week,v0,v1,...`".into(),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_parse_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |field: &str| Error::Parse {
            line,
            message: format!("cannot parse {field:?} as a number"),
        };
        let week: u32 = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(&record[0]))?;
        let values = record
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>().map_err(|_| parse_err(f)))
            .collect::<Result<Vec<_>>>()?;
        rows.push((week, TopicVector(values)));
    }
    rows.sort_by_key(|(w, _)| *w);
    if let Some(pair) = rows.windows(2).find(|p| p[0].0 == p[1].0) {
        return Err(Error::validation(format!(
            "week {} appears twice",
            pair[0].0
        )));
    }
    Ok(rows)
}

/// Change score for every week whose predecessor week is also present.
pub fn topic_change_scores(vectors: &[(u32, TopicVector)]) -> Result<Vec<(u32, f64)>> {
    vectors
        .windows(2)
        .filter(|p| p[1].0 == p[0].0 + 1)
        .map(|p| Ok((p[1].0, vector_change_score(&p[1].1, &p[0].1)?)))
        .collect()
}

/// The `k` weeks with the highest scores, ties toward the earlier week.
pub fn top_weeks(scores: &[(u32, f64)], k: usize) -> BTreeSet<u32> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked.into_iter().take(k).map(|(w, _)| w).collect()
}

/// Reads the weeks flagged in an alert CSV such as the `detect` or
/// `rankscore` output. The alert column is the first one whose name starts
/// with `alert`; accepted values are `true/false/1/0`.
pub fn read_alert_weeks<R: Read>(reader: R) -> Result<BTreeSet<u32>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_parse_error)?.clone();
    let week_col = header.iter().position(|h| h == "week");
    let alert_col = header.iter().position(|h| h.starts_with("alert"));
    let (Some(week_col), Some(alert_col)) = (week_col, alert_col) else {
        return Err(Error::Parse {
            line: 1,
            message: "expected a `week` column and an `alert` column".into(),
        });
    };
    let mut weeks = BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_parse_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let week: u32 = record[week_col].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad week {:?}", &record[week_col]),
        })?;
        let flag = match record[alert_col].trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad alert value {other:?}"),
                })
            }
        };
        if flag {
            weeks.insert(week);
        }
    }
    Ok(weeks)
}

fn csv_parse_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// One-sided paired t-test of `mean(x − y) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    /// Infinite when the differences have zero spread and non-zero mean.
    #[serde(skip)]
    pub t_stat: f64,
    pub p_value: f64,
}

/// `p = P(T_{n−1} ≥ t)` for `t = mean(d)/(sd(d)/√n)`, `d = x − y`.
///
/// With zero spread the p-value is 0, 1 or 0.5 according to the sign of the
/// mean difference.
pub fn paired_t_test_one_sided(x: &[f64], y: &[f64]) -> Result<PairedTTest> {
    if x.len() != y.len() {
        return Err(Error::validation(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::validation("paired t-test needs at least 2 pairs"));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        let (t_stat, p_value) = match mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0),
            _ => (0.0, 0.5),
        };
        return Ok(PairedTTest {
            n,
            mean_diff: mean,
            sd_diff: 0.0,
            t_stat,
            p_value,
        });
    }
    let t_stat = mean / (sd / (n as f64).sqrt());
    Ok(PairedTTest {
        n,
        mean_diff: mean,
        sd_diff: sd,
        t_stat,
        p_value: student_t_sf(t_stat, (n - 1) as f64),
    })
}

/// Upper tail `P(T_df ≥ t)` of Student's t distribution.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom are positive")
        .sf(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(weeks: &[u32]) -> BTreeSet<u32> {
        weeks.iter().copied().collect()
    }

    #[test]
    fn hand_counted_report() {
        let r = precision_recall_f1(&set(&[4, 5, 9]), &set(&[5, 9, 20]));
        assert_eq!(r.n_hits, 2);
        assert_eq!(r.precision, 2.0 / 3.0);
        assert_eq!(r.recall, 2.0 / 3.0);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(r.zero_denominator_flags.is_empty());
    }

    #[test]
    fn identical_sets() {
        let r = precision_recall_f1(&set(&[1, 7]), &set(&[1, 7]));
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_method_set() {
        let r = precision_recall_f1(&set(&[]), &set(&[3]));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.zero_denominator_flags, ["precision", "f1"]);
    }

    #[test]
    fn vector_scores() {
        let v = |x: &[f64]| TopicVector(x.to_vec());
        assert!(
            vector_change_score(&v(&[0.2, 0.8]), &v(&[0.2, 0.8]))
                .unwrap()
                .abs()
                < 1e-15
        );
        assert_eq!(
            vector_change_score(&v(&[1.0, 0.0]), &v(&[0.0, 3.0])).unwrap(),
            1.0
        );
        let s = vector_change_score(&v(&[1.0, 1.0, 0.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
        assert!((s - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!(vector_change_score(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).is_err());
        assert!(vector_change_score(&v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn topic_csv_and_scores() {
        let text = "week,v0,v1\n2,0,1\n1,1,0\n4,1,1\n";
        let vectors = read_topic_vectors(text.as_bytes()).unwrap();
        assert_eq!(vectors[0].0, 1);
        let scores = topic_change_scores(&vectors).unwrap();
        assert_eq!(scores, [(2, 1.0)]);
        assert!(read_topic_vectors("week,v0\n1,0\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn top_weeks_tie_rule() {
        let scores = [(3, 0.5), (4, 0.9), (5, 0.5)];
        assert_eq!(top_weeks(&scores, 2), set(&[3, 4]));
    }

    #[test]
    fn alert_csv_reader() {
        let text = "week,hg,cps_gbe,alert\n1,0.1,NA,false\n2,0.2,0.1,true\n3,0.2,0.0,1\n";
        assert_eq!(read_alert_weeks(text.as_bytes()).unwrap(), set(&[2, 3]));
        let text = "week,cps_real,alert_real\n1,NA,false\n2,3,maybe\n";
        assert!(matches!(
            read_alert_weeks(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn t_test_identical_samples() {
        let x = [0.3, 0.5, 0.1, 0.9];
        let res = paired_t_test_one_sided(&x, &x).unwrap();
        assert_eq!(res.p_value, 0.5);
    }

    #[test]
    fn t_test_degenerate_spread() {
        let res = paired_t_test_one_sided(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(res.p_value, 0.0);
        let res = paired_t_test_one_sided(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn t_test_input_errors() {
        assert!(paired_t_test_one_sided(&[1.0], &[1.0]).is_err());
        assert!(paired_t_test_one_sided(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn t_tail_matches_reference_table() {
        // Reference values from an independent incomplete-beta implementation.
        let table = [
            (1.0, 0.5, 0.352_416_382_349_566_8),
            (2.0, -1.3, 0.838_376_484_091_979_8),
            (5.0, 2.0, 0.050_969_739_414_929_14),
            (10.0, 0.1, 0.461_160_359_282_204_17),
            (29.0, 2.13, 0.020_891_095_015_708_048),
            (50.0, -3.2, 0.998_805_969_991_443_6),
            (120.0, 1.7, 0.045_860_731_890_301_81),
            (200.0, 2.6, 0.005_008_944_084_823_031),
            (3.0, 10.0, 0.001_064_199_529_207_074_7),
            (7.0, -0.75, 0.761_150_045_046_554_7),
        ];
        for (df, t, expected) in table {
            let got = student_t_sf(t, df);
            assert!(
                (got - expected).abs() < 1e-10,
                "df={df} t={t}: {got} vs {expected}"
            );
        }
    }
}
