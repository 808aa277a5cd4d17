//! The two toy languages over `{a, b, c}`: membership, reference grammars,
//! built-in training sets, and positive/negative test-set samplers.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Alphabet, Corpus, Rule, RuleSet, Sentence, VariableSet};

/// Upper bound on rejection-sampling draws in [`sample_negative`].
pub const MAX_NEGATIVE_ATTEMPTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyLanguage {
    /// `aⁿbⁿcᵐ`, `n, m ≥ 1`.
    L1,
    /// `acᵐ ∪ bcᵐ`, `m ≥ 1`.
    L2,
}

impl std::str::FromStr for ToyLanguage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(ToyLanguage::L1),
            "L2" => Ok(ToyLanguage::L2),
            _ => Err(Error::invalid_arg(format!("unknown language {s:?} (L1 | L2)"))),
        }
    }
}

impl std::fmt::Display for ToyLanguage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ToyLanguage::L1 => "L1",
            ToyLanguage::L2 => "L2",
        })
    }
}

/// Test-set sizes and maximum positive length used when none are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefaultSizes {
    pub test_pos: usize,
    pub test_neg: usize,
    pub max_len: usize,
}

impl ToyLanguage {
    pub fn alphabet(self) -> Alphabet {
        Alphabet::abc()
    }

    pub fn default_sizes(self) -> DefaultSizes {
        match self {
            ToyLanguage::L1 => DefaultSizes {
                test_pos: 76,
                test_neg: 100,
                max_len: 24,
            },
            ToyLanguage::L2 => DefaultSizes {
                test_pos: 10,
                test_neg: 100,
                max_len: 12,
            },
        }
    }

    /// Every member of length at most `max_len`, in parameter-grid order.
    pub fn members_up_to(self, max_len: usize) -> Vec<Sentence> {
        let mut out = Vec::new();
        match self {
            ToyLanguage::L1 => {
                for n in 1.. {
                    if 2 * n + 1 > max_len {
                        break;
                    }
                    for m in 1..=max_len - 2 * n {
                        out.push(l1_sentence(n, m));
                    }
                }
            }
            ToyLanguage::L2 => {
                for head in ['a', 'b'] {
                    for m in 1..max_len {
                        let mut s = vec![head];
                        s.extend(std::iter::repeat_n('c', m));
                        out.push(Sentence::new(s).expect("non-empty"));
                    }
                }
            }
        }
        out
    }
}

fn l1_sentence(n: usize, m: usize) -> Sentence {
    let mut s = Vec::with_capacity(2 * n + m);
    s.extend(std::iter::repeat_n('a', n));
    s.extend(std::iter::repeat_n('b', n));
    s.extend(std::iter::repeat_n('c', m));
    Sentence::new(s).expect("non-empty")
}

/// Length of the leading run of `c` in `s`.
fn run_len(s: &[char], c: char) -> usize {
    s.iter().take_while(|&&x| x == c).count()
}

pub fn contains(lang: ToyLanguage, x: &Sentence) -> bool {
    let s = x.symbols();
    match lang {
        ToyLanguage::L1 => {
            let n_a = run_len(s, 'a');
            let n_b = run_len(&s[n_a..], 'b');
            let n_c = run_len(&s[n_a + n_b..], 'c');
            n_a >= 1 && n_a == n_b && n_c >= 1 && n_a + n_b + n_c == s.len()
        }
        ToyLanguage::L2 => {
            s.len() >= 2 && matches!(s[0], 'a' | 'b') && s[1..].iter().all(|&c| c == 'c')
        }
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// The hand-written bipartite-CNF grammar of each language, start `S`.
pub fn reference_grammar(lang: ToyLanguage) -> RuleSet {
    let alphabet = Alphabet::abc();
    let (vars, rules): (VariableSet, &[(&str, &str)]) = match lang {
        ToyLanguage::L1 => (
            VariableSet::new(names(&["A", "B", "C"]), names(&["S", "T", "V"]), "S").expect("valid"),
            &[
                ("S", "T C"),
                ("S", "S C"),
                ("T", "A V"),
                ("T", "A B"),
                ("V", "T B"),
                ("A", "a"),
                ("B", "b"),
                ("C", "c"),
            ],
        ),
        ToyLanguage::L2 => (
            VariableSet::new(names(&["A", "B"]), names(&["S"]), "S").expect("valid"),
            &[("S", "A B"), ("S", "S B"), ("A", "a"), ("A", "b"), ("B", "c")],
        ),
    };
    let rules = rules
        .iter()
        .map(|(lhs, rhs)| {
            let lhs = vars.id_of(lhs).expect("declared");
            let parts: Vec<&str> = rhs.split(' ').collect();
            match parts[..] {
                [t] => Rule::lexical(lhs, alphabet.index_of(t.chars().next().unwrap()).unwrap()),
                [c, d] => Rule::structural(lhs, vars.id_of(c).unwrap(), vars.id_of(d).unwrap()),
                _ => unreachable!(),
            }
        })
        .collect();
    RuleSet::new(alphabet, vars, rules).expect("reference grammar is well formed")
}

/// The L1 training sentence as printed; it has 4 a's and 3 b's.
pub const L1_MISPRINT: &str = "aaaabbbcc";
/// The member of L1 it most plausibly stands for.
pub const L1_MISPRINT_CORRECTED: &str = "aaaabbbbcc";

/// Built-in training sets. For L1, `verbatim` keeps the misprinted
/// sentence instead of its corrected form.
pub fn builtin_training_set(lang: ToyLanguage, verbatim: bool) -> Corpus {
    let texts: &[&str] = match lang {
        ToyLanguage::L1 => &[
            "abc",
            "aabbc",
            "aaabbbc",
            "abcc",
            "abccc",
            "aabbcc",
            "aaabbbcc",
            if verbatim {
                L1_MISPRINT
            } else {
                L1_MISPRINT_CORRECTED
            },
        ],
        ToyLanguage::L2 => &["ac", "bc", "acc", "bcc", "accc"],
    };
    texts
        .iter()
        .map(|t| Sentence::parse(t).expect("non-empty"))
        .collect()
}

/// `count` distinct members of length at most `max_len`, drawn uniformly
/// from the admissible parameter grid.
pub fn sample_positive<R: Rng + ?Sized>(
    lang: ToyLanguage,
    count: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Corpus> {
    if count == 0 {
        return Err(Error::invalid_arg("positive sample size must be at least 1"));
    }
    if max_len < 3 {
        return Err(Error::invalid_arg("max_len must be at least 3"));
    }
    let pool = lang.members_up_to(max_len);
    if count > pool.len() {
        return Err(Error::invalid_arg(format!(
            "{lang} has only {} members of length ≤ {max_len}, {count} requested",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// `count` distinct non-members over `{a, b, c}` whose lengths are drawn
/// uniformly from `lengths` (typically the positive test-set lengths).
pub fn sample_negative<R: Rng + ?Sized>(
    lang: ToyLanguage,
    count: usize,
    lengths: &[usize],
    rng: &mut R,
) -> Result<Corpus> {
    if count == 0 {
        return Err(Error::invalid_arg("negative sample size must be at least 1"));
    }
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::invalid_arg("negative length distribution must be non-empty and positive"));
    }
    let symbols = lang.alphabet().symbols().to_vec();
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for _ in 0..MAX_NEGATIVE_ATTEMPTS {
        if out.len() == count {
            return Ok(out);
        }
        let len = lengths[rng.gen_range(0..lengths.len())];
        let s = Sentence::new((0..len).map(|_| symbols[rng.gen_range(0..symbols.len())]).collect())?;
        if !contains(lang, &s) && seen.insert(s.clone()) {
            out.push(s);
        }
    }
    if out.len() == count {
        return Ok(out);
    }
    Err(Error::ResourceExhausted(format!(
        "found only {} of {count} distinct non-members of {lang} in {MAX_NEGATIVE_ATTEMPTS} draws",
        out.len()
    )))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn s(t: &str) -> Sentence {
        Sentence::parse(t).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(contains(ToyLanguage::L1, &s("aabbc")));
        assert!(!contains(ToyLanguage::L1, &s(L1_MISPRINT)));
        assert!(contains(ToyLanguage::L1, &s(L1_MISPRINT_CORRECTED)));
        assert!(!contains(ToyLanguage::L1, &s("ab")));
        assert!(!contains(ToyLanguage::L1, &s("abcab")));
        assert!(contains(ToyLanguage::L2, &s("bcc")));
        assert!(!contains(ToyLanguage::L2, &s("b")));
        assert!(!contains(ToyLanguage::L2, &s("cc")));
        assert!(!contains(ToyLanguage::L2, &s("abc")));
    }

    #[test]
    fn reference_grammars() {
        let l1 = reference_grammar(ToyLanguage::L1);
        assert_eq!(l1.vars().n_lexical(), 3);
        assert_eq!(l1.vars().n_structural(), 3);
        assert_eq!(l1.n_lexical_rules(), 3);
        assert_eq!(l1.n_structural_rules(), 5);
        assert_eq!(l1.vars().name(l1.vars().start()), "S");
        let l2 = reference_grammar(ToyLanguage::L2);
        let mut texts: Vec<String> = (0..l2.len()).map(|i| l2.format_rule(i)).collect();
        texts.sort();
        assert_eq!(texts, ["A -> 'a'", "A -> 'b'", "B -> 'c'", "S -> A B", "S -> S B"]);
    }

    #[test]
    fn training_sets() {
        let l1 = builtin_training_set(ToyLanguage::L1, false);
        assert_eq!(l1.len(), 8);
        assert!(l1.iter().all(|x| contains(ToyLanguage::L1, x)));
        let verbatim = builtin_training_set(ToyLanguage::L1, true);
        assert_eq!(verbatim[7], s(L1_MISPRINT));
        let l2 = builtin_training_set(ToyLanguage::L2, false);
        assert_eq!(l2.len(), 5);
        assert!(l2.iter().all(|x| contains(ToyLanguage::L2, x)));
    }

    #[test]
    fn positive_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = sample_positive(ToyLanguage::L1, 76, 24, &mut rng).unwrap();
        assert_eq!(pos.len(), 76);
        assert_eq!(pos.iter().collect::<HashSet<_>>().len(), 76);
        assert!(pos.iter().all(|x| contains(ToyLanguage::L1, x) && x.len() <= 24));
        let pos = sample_positive(ToyLanguage::L2, 10, 12, &mut rng).unwrap();
        assert_eq!(pos.iter().collect::<HashSet<_>>().len(), 10);
        assert!(pos.iter().all(|x| contains(ToyLanguage::L2, x)));
        assert!(sample_positive(ToyLanguage::L2, 23, 12, &mut rng).is_err());
        assert!(sample_positive(ToyLanguage::L2, 22, 12, &mut rng).is_ok());
        assert!(sample_positive(ToyLanguage::L1, 0, 12, &mut rng).is_err());
        assert!(sample_positive(ToyLanguage::L1, 1, 2, &mut rng).is_err());
    }

    #[test]
    fn negative_sampling() {
        let lengths: Vec<usize> = (3..=12).collect();
        let a = sample_negative(ToyLanguage::L1, 100, &lengths, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_negative(ToyLanguage::L1, 100, &lengths, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 100);
        assert!(a.iter().all(|x| !contains(ToyLanguage::L1, x)));
        assert!(a.iter().all(|x| lengths.contains(&x.len())));
        // Only 26 non-members of length 3 exist.
        let err = sample_negative(ToyLanguage::L1, 27, &[3], &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::ResourceExhausted(_)));
    }
}
