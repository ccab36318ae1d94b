use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::similarity::{display_name, single_token};
use super::{dot, unit_rows, EvalError};
use crate::embedspace::{EmbeddingSpace, SpaceError};
use crate::Scalar;

/// Added to the shifted cosine in the 3CosMul denominator.
pub const EPSILON: f64 = 0.001;

/// `a : a_star :: b : b_star`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
    /// Index into [`AnalogyTestSet::sections`].
    pub section: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyTestSet {
    pub name: String,
    pub sections: Vec<String>,
    pub questions: Vec<AnalogyQuestion>,
}

impl AnalogyTestSet {
    /// Four words per line; a line starting with `:` opens a named section.
    /// Questions before the first section header land in section `""`.
    pub fn parse<R: Read>(name: &str, input: R) -> Result<Self, EvalError> {
        let mut sections: Vec<String> = Vec::new();
        let mut questions = Vec::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| EvalError::Io(name.to_string(), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(section) = trimmed.strip_prefix(':') {
                sections.push(section.trim().to_string());
                continue;
            }
            let parse_err = |message: &str| EvalError::Parse {
                source_name: name.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let words: Vec<String> = trimmed
                .split_whitespace()
                .map(|w| single_token(w).ok_or_else(|| parse_err("empty word after normalization")))
                .collect::<Result<_, _>>()?;
            let [a, a_star, b, b_star] = <[String; 4]>::try_from(words)
                .map_err(|_| parse_err("expected four words"))?;
            if a == b {
                return Err(parse_err("first and third word coincide"));
            }
            if sections.is_empty() {
                sections.push(String::new());
            }
            questions.push(AnalogyQuestion {
                a,
                a_star,
                b,
                b_star,
                section: sections.len() - 1,
            });
        }
        Ok(AnalogyTestSet {
            name: name.to_string(),
            sections,
            questions,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let file = fs::File::open(path).map_err(|e| EvalError::Io(path.display().to_string(), e))?;
        Self::parse(&display_name(path), file)
    }
}

/// 3CosMul over precomputed unit rows; returns the winning row.
fn argmax_3cosmul(unit: &[Vec<f64>], a: usize, a_star: usize, b: usize) -> Option<usize> {
    let shift = |c: f64| (c + 1.0) / 2.0;
    let (va, vas, vb) = (&unit[a], &unit[a_star], &unit[b]);
    unit.iter()
        .enumerate()
        .filter(|&(c, _)| c != a && c != a_star && c != b)
        .map(|(c, vc)| {
            let score = shift(dot(vc, vb)) * shift(dot(vc, vas)) / (shift(dot(vc, va)) + EPSILON);
            (c, score)
        })
        // Strictly greater keeps the earliest row on ties.
        .fold(None, |best: Option<(usize, f64)>, (c, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((c, s)),
        })
        .map(|(c, _)| c)
}

/// Answers `a : a_star :: b : ?` with the multiplicative objective
/// `cos(c, b) cos(c, a_star) / (cos(c, a) + EPSILON)`, cosines shifted to
/// `[0, 1]` and the three query words excluded.
pub fn solve_analogy<T: Scalar>(
    space: &EmbeddingSpace<T>,
    a: &str,
    a_star: &str,
    b: &str,
) -> Result<Option<String>, SpaceError> {
    let (ia, ias, ib) = (space.index_of(a)?, space.index_of(a_star)?, space.index_of(b)?);
    let unit = unit_rows(space);
    Ok(argmax_3cosmul(&unit, ia, ias, ib).map(|c| space.words()[c].clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionScore {
    pub name: String,
    pub accuracy: Option<f64>,
    pub correct: usize,
    pub answerable: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogyScore {
    pub accuracy: f64,
    pub coverage: f64,
    pub correct: usize,
    pub answerable: usize,
    pub total: usize,
    pub sections: Vec<SectionScore>,
}

/// Accuracy over the questions whose four words are all in the vocabulary.
pub fn eval_analogy<T: Scalar>(
    space: &EmbeddingSpace<T>,
    testset: &AnalogyTestSet,
) -> Result<AnalogyScore, EvalError> {
    let total = testset.questions.len();
    if total == 0 {
        return Err(EvalError::EmptyTestSet);
    }
    let ids = |q: &AnalogyQuestion| -> Option<[usize; 4]> {
        Some([
            space.index_of(&q.a).ok()?,
            space.index_of(&q.a_star).ok()?,
            space.index_of(&q.b).ok()?,
            space.index_of(&q.b_star).ok()?,
        ])
    };
    let answerable: Vec<(usize, [usize; 4])> = testset
        .questions
        .iter()
        .enumerate()
        .filter_map(|(i, q)| ids(q).map(|ids| (i, ids)))
        .collect();
    if answerable.is_empty() {
        return Err(EvalError::NoAnswerableQuestions { total });
    }
    let unit = unit_rows(space);
    let outcomes: Vec<(usize, bool)> = answerable
        .par_iter()
        .map(|&(i, [a, a_star, b, b_star])| (i, argmax_3cosmul(&unit, a, a_star, b) == Some(b_star)))
        .collect();

    let mut sections: Vec<SectionScore> = testset
        .sections
        .iter()
        .map(|name| SectionScore {
            name: name.clone(),
            accuracy: None,
            correct: 0,
            answerable: 0,
            total: 0,
        })
        .collect();
    for q in &testset.questions {
        sections[q.section].total += 1;
    }
    let mut correct = 0;
    for &(i, ok) in &outcomes {
        let s = &mut sections[testset.questions[i].section];
        s.answerable += 1;
        if ok {
            s.correct += 1;
            correct += 1;
        }
    }
    for s in &mut sections {
        s.accuracy = (s.answerable > 0).then(|| s.correct as f64 / s.answerable as f64);
    }
    Ok(AnalogyScore {
        accuracy: correct as f64 / outcomes.len() as f64,
        coverage: outcomes.len() as f64 / total as f64,
        correct,
        answerable: outcomes.len(),
        total,
        sections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::EmbeddingMatrix;
    use ndarray::{array, Array2};

    fn space(words: &[&str], m: Array2<f64>) -> EmbeddingSpace<f64> {
        EmbeddingSpace::new(words.iter().map(|w| w.to_string()).collect(), EmbeddingMatrix::new(m)).unwrap()
    }

    /// man : king :: woman : queen with queen = woman + (king - man) exactly,
    /// plus an unrelated distractor.
    fn royal() -> EmbeddingSpace<f64> {
        let man = [1.0, 0.0, 0.0, 0.1];
        let king = [1.0, 1.0, 0.0, 0.1];
        let woman = [0.0, 0.0, 1.0, 0.1];
        let queen: Vec<f64> = (0..4).map(|i| woman[i] + king[i] - man[i]).collect();
        let other = [-1.0, -0.2, -0.3, 1.0];
        let rows = [man.to_vec(), king.to_vec(), woman.to_vec(), queen, other.to_vec()];
        let m = Array2::from_shape_fn((5, 4), |(i, j)| rows[i][j]);
        space(&["man", "king", "woman", "queen", "other"], m)
    }

    fn brute_force(s: &EmbeddingSpace<f64>, a: &str, a_star: &str, b: &str) -> String {
        let shift = |c: f64| (c + 1.0) / 2.0;
        let mut best = (String::new(), f64::NEG_INFINITY);
        for w in s.words() {
            if w == a || w == a_star || w == b {
                continue;
            }
            let score = shift(s.cosine(w, b).unwrap()) * shift(s.cosine(w, a_star).unwrap())
                / (shift(s.cosine(w, a).unwrap()) + 0.001);
            if score > best.1 {
                best = (w.clone(), score);
            }
        }
        best.0
    }

    #[test]
    fn planted_answer() {
        let s = royal();
        assert_eq!(brute_force(&s, "man", "king", "woman"), "queen");
        assert_eq!(solve_analogy(&s, "man", "king", "woman").unwrap().as_deref(), Some("queen"));
    }

    #[test]
    fn query_words_are_excluded() {
        // The raw best candidate for b : ? is a_star itself.
        let s = space(
            &["a", "astar", "b", "c"],
            array![[1.0, 0.0], [0.0, 1.0], [0.1, 1.0], [-0.5, 0.6]],
        );
        assert_eq!(solve_analogy(&s, "a", "astar", "b").unwrap().as_deref(), Some("c"));
    }

    #[test]
    fn opposite_candidate_does_not_blow_up() {
        let s = space(&["a", "astar", "b", "anti"], array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [-1.0, 0.0]]);
        // cos(anti, a) = -1 -> shifted 0, denominator EPSILON.
        let unit = unit_rows(&s);
        let w = argmax_3cosmul(&unit, 0, 1, 2);
        assert_eq!(w, Some(3));
        let score = (0.0f64 + 1.0) / 2.0 * ((0.0 + 1.0) / 2.0) / (0.0 + EPSILON);
        assert!(score.is_finite() && score <= 250.0 + 1e-9);
    }

    #[test]
    fn accuracy_and_sections() {
        let s = royal();
        let text = ": royal\nman king woman queen\nking man queen woman\n: other\nwoman queen man king\nqueen woman king man\nman king woman missing\n";
        let set = AnalogyTestSet::parse("t", text.as_bytes()).unwrap();
        assert_eq!(set.sections, ["royal", "other"]);
        let score = eval_analogy(&s, &set).unwrap();
        assert_eq!(score.answerable, 4);
        assert_eq!(score.total, 5);
        assert_eq!(score.coverage, 0.8);
        assert_eq!(score.accuracy, 1.0);
        assert_eq!(score.sections[1].total, 3);
        assert_eq!(score.sections[1].answerable, 2);
    }

    #[test]
    fn corrupted_target_costs_one_question() {
        let base = royal();
        let text = "man king woman queen\nking man queen woman\nwoman queen man king\nqueen woman king man\n";
        let set = AnalogyTestSet::parse("t", text.as_bytes()).unwrap();
        assert_eq!(eval_analogy(&base, &set).unwrap().accuracy, 1.0);

        let mut m = base.matrix().vectors().clone();
        m.row_mut(3).assign(&array![-1.0, -1.0, 0.2, -2.0]);
        let broken = space(&["man", "king", "woman", "queen", "other"], m);
        // Brute-force oracle agrees question by question.
        let mut expected = 0;
        for q in &set.questions {
            if brute_force(&broken, &q.a, &q.a_star, &q.b) == q.b_star {
                expected += 1;
            }
        }
        let score = eval_analogy(&broken, &set).unwrap();
        assert_eq!(score.correct, expected);
        assert_eq!(score.accuracy, 0.75);
    }

    #[test]
    fn all_out_of_vocabulary() {
        let set = AnalogyTestSet::parse("t", "x y z w\n".as_bytes()).unwrap();
        assert!(matches!(
            eval_analogy(&royal(), &set),
            Err(EvalError::NoAnswerableQuestions { total: 1 })
        ));
    }

    #[test]
    fn invariant_under_rotation() {
        let s = royal();
        // Orthogonal transform: rotation in the (0, 3) plane plus a reflection.
        let (c, sn) = (0.6f64, 0.8f64);
        let q = array![[c, 0.0, 0.0, -sn], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [sn, 0.0, 0.0, c]];
        let rotated = space(&["man", "king", "woman", "queen", "other"], s.matrix().vectors().dot(&q));
        for (a, a_star, b) in [("man", "king", "woman"), ("king", "man", "other"), ("queen", "other", "man")] {
            assert_eq!(solve_analogy(&s, a, a_star, b).unwrap(), solve_analogy(&rotated, a, a_star, b).unwrap());
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            AnalogyTestSet::parse("t", "a b c\n".as_bytes()),
            Err(EvalError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            AnalogyTestSet::parse("t", "a b a d\n".as_bytes()),
            Err(EvalError::Parse { line: 1, .. })
        ));
        let set = AnalogyTestSet::parse("t", ": Capital\nAthens Greece Baghdad Iraq\n".as_bytes()).unwrap();
        assert_eq!(set.questions[0].b_star, "iraq");
    }
}
