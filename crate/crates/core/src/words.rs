//! Finite presentations, free-group words, the C'(1/6) piece check, and the
//! word-problem strategies used to identify group elements.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

/// A signed generator: `+(i+1)` is generator `i`, `-(i+1)` its inverse.
pub type Letter = i32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordError {
    #[error("SyntaxError at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("UnknownGenerator `{name}` at {line}:{column}")]
    UnknownGenerator { name: String, line: usize, column: usize },
    #[error("RadiusExceeded: word of length {length} exceeds enumeration radius {radius}")]
    RadiusExceeded { length: usize, radius: usize },
    #[error("RewriteBudgetExceeded: gave up after {0} rewrites")]
    RewriteBudgetExceeded(usize),
    #[error("InvalidStrategy: {0}")]
    InvalidStrategy(String),
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GroupWord(Vec<Letter>);

/// Rank of a letter in the shortlex alphabet `x₀ < X₀ < x₁ < X₁ < …`.
fn letter_rank(l: Letter) -> u32 {
    let g = l.unsigned_abs() - 1;
    2 * g + u32::from(l < 0)
}

/// Shortlex comparison of raw letter sequences.
pub fn shortlex_cmp(a: &[Letter], b: &[Letter]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.iter().map(|&l| letter_rank(l)).cmp(b.iter().map(|&l| letter_rank(l))))
}

impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        shortlex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupWord({:?})", self.0)
    }
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    /// Reduces the given letters.
    pub fn new(letters: &[Letter]) -> Self {
        free_reduce(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        GroupWord(invert(&self.0))
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        free_reduce(&v)
    }

    pub fn push(&self, l: Letter) -> Self {
        let mut v = self.0.clone();
        push_reduced(&mut v, l);
        GroupWord(v)
    }

    /// Renders with generator names; inverses are upper-cased.
    pub fn render(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "e".to_string();
        }
        self.0.iter().map(|&l| letter_name(l, names)).collect::<Vec<_>>().join(" ")
    }
}

pub fn letter_name(l: Letter, names: &[String]) -> String {
    let n = &names[(l.unsigned_abs() - 1) as usize];
    if l > 0 {
        n.clone()
    } else {
        n.to_uppercase()
    }
}

fn push_reduced(v: &mut Vec<Letter>, l: Letter) {
    if v.last() == Some(&-l) {
        v.pop();
    } else {
        v.push(l);
    }
}

pub fn invert(letters: &[Letter]) -> Vec<Letter> {
    letters.iter().rev().map(|&l| -l).collect()
}

pub fn free_reduce(letters: &[Letter]) -> GroupWord {
    let mut out = Vec::with_capacity(letters.len());
    for &l in letters {
        debug_assert!(l != 0, "letter 0 is not a signed generator");
        push_reduced(&mut out, l);
    }
    GroupWord(out)
}

/// Free and cyclic reduction.
pub fn cyclic_reduce(letters: &[Letter]) -> Vec<Letter> {
    let mut w = free_reduce(letters).0;
    while w.len() >= 2 && w[0] == -w[w.len() - 1] {
        w.pop();
        w.remove(0);
    }
    w
}

pub fn rotations(r: &[Letter]) -> Vec<Vec<Letter>> {
    (0..r.len()).map(|i| r[i..].iter().chain(&r[..i]).copied().collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub generator_names: Vec<String>,
    pub relators: Vec<GroupWord>,
}

impl Presentation {
    /// Validates and cyclically reduces the relators.
    pub fn new(generator_names: Vec<String>, relators: Vec<Vec<Letter>>) -> Result<Self, WordError> {
        let n = generator_names.len() as i32;
        let mut rels = Vec::new();
        for (i, r) in relators.iter().enumerate() {
            if let Some(&bad) = r.iter().find(|&&l| l == 0 || l.abs() > n) {
                return Err(WordError::Syntax {
                    line: i + 1,
                    column: 1,
                    message: format!("letter {bad} out of range"),
                });
            }
            let c = cyclic_reduce(r);
            if c.is_empty() {
                return Err(WordError::Syntax { line: i + 1, column: 1, message: "EmptyRelator".into() });
            }
            rels.push(GroupWord(c));
        }
        Ok(Presentation { generator_names, relators: rels })
    }

    /// `⟨x₀,…,x_{n-1} | ⟩` with names `a`, `b`, ….
    pub fn free(rank: usize) -> Self {
        Presentation { generator_names: default_names(rank), relators: vec![] }
    }

    /// `⟨x, y | [x, y]⟩`.
    pub fn z2() -> Self {
        Presentation::new(vec!["x".into(), "y".into()], vec![vec![1, 2, -1, -2]]).unwrap()
    }

    /// Standard genus-g surface presentation `⟨a₁,b₁,… | Π [aᵢ,bᵢ]⟩`.
    pub fn surface(genus: usize) -> Self {
        let names = default_names(2 * genus);
        let mut r = Vec::new();
        for i in 0..genus as i32 {
            let (a, b) = (2 * i + 1, 2 * i + 2);
            r.extend([a, b, -a, -b]);
        }
        Presentation::new(names, vec![r]).unwrap()
    }

    pub fn generator_count(&self) -> usize {
        self.generator_names.len()
    }

    /// Every cyclic permutation of every relator and its inverse, deduplicated,
    /// in a deterministic order.
    pub fn symmetrized(&self) -> Vec<Vec<Letter>> {
        let mut seen = BTreeSet::new();
        for r in &self.relators {
            for base in [r.0.clone(), invert(&r.0)] {
                for rot in rotations(&base) {
                    seen.insert(GroupWordKey(rot));
                }
            }
        }
        seen.into_iter().map(|k| k.0).collect()
    }

    pub fn parse_word(&self, text: &str) -> Result<GroupWord, WordError> {
        let letters = parse_letters(text, &self.generator_names, 1, 1)?;
        Ok(free_reduce(&letters))
    }
}

/// Shortlex-ordered key for raw letter vectors.
#[derive(PartialEq, Eq)]
struct GroupWordKey(Vec<Letter>);

impl Ord for GroupWordKey {
    fn cmp(&self, other: &Self) -> Ordering {
        shortlex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for GroupWordKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| if i < 26 { ((b'a' + i as u8) as char).to_string() } else { format!("g{i}") }).collect()
}

fn parse_letters(text: &str, names: &[String], line: usize, col0: usize) -> Result<Vec<Letter>, WordError> {
    let lookup: HashMap<&str, Letter> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i as Letter + 1)).collect();
    let upper: HashMap<String, Letter> =
        names.iter().enumerate().map(|(i, n)| (n.to_uppercase(), -(i as Letter + 1))).collect();
    let single_char = names.iter().all(|n| n.chars().count() == 1);
    let mut out = Vec::new();
    let mut col = col0;
    for token in text.split_inclusive(char::is_whitespace) {
        let tok = token.trim();
        let tok_col = col;
        col += token.chars().count();
        if tok.is_empty() {
            continue;
        }
        if let Some(&l) = lookup.get(tok) {
            out.push(l);
        } else if let Some(&l) = upper.get(tok) {
            out.push(l);
        } else if single_char {
            for (k, ch) in tok.chars().enumerate() {
                let s = ch.to_string();
                match lookup.get(s.as_str()).or_else(|| upper.get(&s)) {
                    Some(&l) => out.push(l),
                    None => return Err(WordError::UnknownGenerator { name: s, line, column: tok_col + k }),
                }
            }
        } else {
            return Err(WordError::UnknownGenerator { name: tok.to_string(), line, column: tok_col });
        }
    }
    Ok(out)
}

/// Parses the text format:
///
/// ```text
/// # comment
/// gens: x y
/// rels: x y X Y
/// ```
///
/// One relator per `rels:` line; a lowercase name is a generator and its
/// upper-cased spelling the inverse.
pub fn parse_presentation(text: &str) -> Result<Presentation, WordError> {
    let mut names: Option<Vec<String>> = None;
    let mut rels: Vec<(usize, usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, rest)) = line.split_once(':') else {
            return Err(WordError::Syntax { line: line_no, column: 1, message: "expected `gens:` or `rels:`".into() });
        };
        let rest_col = key.chars().count() + 2;
        match key.trim() {
            "gens" => {
                if names.is_some() {
                    return Err(WordError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "duplicate `gens:` line".into(),
                    });
                }
                let ns: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if ns.is_empty() {
                    return Err(WordError::Syntax { line: line_no, column: rest_col, message: "no generators".into() });
                }
                let mut seen = HashSet::new();
                for n in &ns {
                    if n.to_uppercase() == *n || !seen.insert(n.clone()) {
                        return Err(WordError::Syntax {
                            line: line_no,
                            column: rest_col,
                            message: format!("generator name `{n}` must be lowercase and unique"),
                        });
                    }
                }
                names = Some(ns);
            }
            "rels" => rels.push((line_no, rest_col, rest.to_string())),
            other => {
                return Err(WordError::Syntax { line: line_no, column: 1, message: format!("unknown key `{other}`") })
            }
        }
    }
    let names = names.ok_or(WordError::Syntax { line: 1, column: 1, message: "missing `gens:` line".into() })?;
    let mut relators = Vec::new();
    for (line, col, body) in rels {
        let letters = parse_letters(&body, &names, line, col)?;
        let c = cyclic_reduce(&letters);
        if c.is_empty() {
            return Err(WordError::Syntax { line, column: col, message: "EmptyRelator".into() });
        }
        relators.push(GroupWord(c));
    }
    Ok(Presentation { generator_names: names, relators })
}

impl FromStr for Presentation {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_presentation(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct C16Report {
    pub satisfied: bool,
    pub max_piece: usize,
    pub min_relator: usize,
}

/// Longest piece of the symmetrized relator set against the shortest relator.
pub fn check_c16(p: &Presentation) -> C16Report {
    let sym = p.symmetrized();
    let mut max_piece = 0;
    for (i, a) in sym.iter().enumerate() {
        for b in &sym[i + 1..] {
            let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
            max_piece = max_piece.max(common);
        }
    }
    let min_relator = p.relators.iter().map(GroupWord::len).min().unwrap_or(0);
    C16Report { satisfied: 6 * max_piece < min_relator || p.relators.is_empty(), max_piece, min_relator }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormalFormStrategy {
    Abelian,
    Dehn,
    BoundedEnumeration { radius: usize },
}

impl fmt::Display for NormalFormStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalFormStrategy::Abelian => write!(f, "abelian"),
            NormalFormStrategy::Dehn => write!(f, "dehn"),
            NormalFormStrategy::BoundedEnumeration { radius } => write!(f, "enum:{radius}"),
        }
    }
}

impl FromStr for NormalFormStrategy {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "abelian" => Ok(NormalFormStrategy::Abelian),
            "dehn" => Ok(NormalFormStrategy::Dehn),
            t => t
                .strip_prefix("enum:")
                .and_then(|r| r.parse().ok())
                .filter(|&r: &usize| r > 0)
                .map(|radius| NormalFormStrategy::BoundedEnumeration { radius })
                .ok_or_else(|| WordError::InvalidStrategy(format!("unknown strategy `{s}`"))),
        }
    }
}

/// Upper limit on words visited by the rewriting searches.
pub const DEFAULT_REWRITE_BUDGET: usize = 200_000;

/// A validated word-problem oracle for one presentation.
#[derive(Clone, Debug)]
pub struct WordProblem {
    presentation: Presentation,
    strategy: NormalFormStrategy,
    symmetrized: Vec<Vec<Letter>>,
    /// subword longer than half a relator -> its shorter complement
    long_pieces: HashMap<Vec<Letter>, Vec<Letter>>,
    long_lengths: Vec<usize>,
    /// exactly half a relator -> the other half
    half_pieces: HashMap<Vec<Letter>, Vec<Vec<Letter>>>,
    half_lengths: Vec<usize>,
    rewrite_budget: usize,
}

impl WordProblem {
    pub fn new(p: &Presentation, strategy: NormalFormStrategy) -> Result<Self, WordError> {
        match strategy {
            NormalFormStrategy::Abelian => validate_abelian(p)?,
            NormalFormStrategy::Dehn => {
                let rep = check_c16(p);
                if !rep.satisfied {
                    return Err(WordError::InvalidStrategy(format!(
                        "Dehn strategy needs C'(1/6): max piece {} vs shortest relator {}",
                        rep.max_piece, rep.min_relator
                    )));
                }
            }
            NormalFormStrategy::BoundedEnumeration { radius } => {
                if radius == 0 {
                    return Err(WordError::InvalidStrategy("enumeration radius must be positive".into()));
                }
            }
        }
        let symmetrized = p.symmetrized();
        let mut long_pieces = HashMap::new();
        let mut half_pieces: HashMap<Vec<Letter>, Vec<Vec<Letter>>> = HashMap::new();
        for r in &symmetrized {
            let n = r.len();
            for k in 1..=n {
                let u = r[..k].to_vec();
                let comp = invert(&r[k..]);
                if 2 * k > n {
                    // keep the shortlex-least complement if two relators share u
                    long_pieces
                        .entry(u)
                        .and_modify(|c: &mut Vec<Letter>| {
                            if shortlex_cmp(&comp, c) == Ordering::Less {
                                *c = comp.clone();
                            }
                        })
                        .or_insert(comp);
                } else if 2 * k == n {
                    let e = half_pieces.entry(u).or_default();
                    if !e.contains(&comp) {
                        e.push(comp);
                    }
                }
            }
        }
        let mut long_lengths: Vec<usize> = long_pieces.keys().map(Vec::len).collect();
        long_lengths.sort_unstable();
        long_lengths.dedup();
        let mut half_lengths: Vec<usize> = half_pieces.keys().map(Vec::len).collect();
        half_lengths.sort_unstable();
        half_lengths.dedup();
        Ok(WordProblem {
            presentation: p.clone(),
            strategy,
            symmetrized,
            long_pieces,
            long_lengths,
            half_pieces,
            half_lengths,
            rewrite_budget: DEFAULT_REWRITE_BUDGET,
        })
    }

    pub fn with_rewrite_budget(mut self, budget: usize) -> Self {
        self.rewrite_budget = budget;
        self
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn strategy(&self) -> NormalFormStrategy {
        self.strategy
    }

    /// Canonical representative of the element `w` represents.
    pub fn normal_form(&self, w: &GroupWord) -> Result<GroupWord, WordError> {
        match self.strategy {
            NormalFormStrategy::Abelian => Ok(self.abelian_form(w)),
            NormalFormStrategy::Dehn => self.dehn_form(w),
            NormalFormStrategy::BoundedEnumeration { radius } => {
                if w.len() > radius {
                    return Err(WordError::RadiusExceeded { length: w.len(), radius });
                }
                self.enumerate_class(w, radius)?.ok_or(WordError::RadiusExceeded { length: w.len(), radius })
            }
        }
    }

    /// Canonical form of `w` if the element has a representative of length
    /// at most `bound`, `None` if it provably lies outside that ball.
    pub fn locate(&self, w: &GroupWord, bound: usize) -> Result<Option<GroupWord>, WordError> {
        match self.strategy {
            NormalFormStrategy::BoundedEnumeration { radius } => {
                if bound > radius {
                    return Err(WordError::RadiusExceeded { length: bound, radius });
                }
                if w.len() > bound + 1 {
                    return Err(WordError::RadiusExceeded { length: w.len(), radius: bound + 1 });
                }
                self.enumerate_class(w, bound)
            }
            _ => {
                let nf = self.normal_form(w)?;
                Ok((nf.len() <= bound).then_some(nf))
            }
        }
    }

    fn abelian_form(&self, w: &GroupWord) -> GroupWord {
        let mut exps = vec![0i64; self.presentation.generator_count()];
        for &l in &w.0 {
            exps[(l.unsigned_abs() - 1) as usize] += i64::from(l.signum());
        }
        abelian_word(&exps)
    }

    /// Greedy Dehn shortening followed by a shortlex search over the words
    /// reachable through half-relator swaps.
    fn dehn_form(&self, w: &GroupWord) -> Result<GroupWord, WordError> {
        let mut best = self.dehn_reduce(w.0.clone());
        if self.half_pieces.is_empty() {
            return Ok(GroupWord(best));
        }
        'restart: loop {
            let mut seen: HashSet<Vec<Letter>> = HashSet::new();
            let mut queue = VecDeque::new();
            seen.insert(best.clone());
            queue.push_back(best.clone());
            let target_len = best.len();
            while let Some(cur) = queue.pop_front() {
                if seen.len() > self.rewrite_budget {
                    return Err(WordError::RewriteBudgetExceeded(self.rewrite_budget));
                }
                for next in self.half_swaps(&cur) {
                    let reduced = self.dehn_reduce(next);
                    if reduced.len() < target_len {
                        best = reduced;
                        continue 'restart;
                    }
                    if seen.insert(reduced.clone()) {
                        queue.push_back(reduced);
                    }
                }
            }
            let min = seen.into_iter().min_by(|a, b| shortlex_cmp(a, b)).expect("non-empty");
            return Ok(GroupWord(min));
        }
    }

    fn half_swaps(&self, w: &[Letter]) -> Vec<Vec<Letter>> {
        let mut out = Vec::new();
        for &len in &self.half_lengths {
            if len > w.len() {
                continue;
            }
            for start in 0..=w.len() - len {
                if let Some(comps) = self.half_pieces.get(&w[start..start + len]) {
                    for c in comps {
                        let mut v = w[..start].to_vec();
                        v.extend_from_slice(c);
                        v.extend_from_slice(&w[start + len..]);
                        out.push(free_reduce(&v).0);
                    }
                }
            }
        }
        out
    }

    /// Replaces subwords that are more than half a relator until none remain.
    pub fn dehn_reduce(&self, w: Vec<Letter>) -> Vec<Letter> {
        let mut w = free_reduce(&w).0;
        'outer: loop {
            for start in 0..w.len() {
                for &len in self.long_lengths.iter().rev() {
                    if start + len > w.len() {
                        continue;
                    }
                    if let Some(comp) = self.long_pieces.get(&w[start..start + len]) {
                        let mut v = w[..start].to_vec();
                        v.extend_from_slice(comp);
                        v.extend_from_slice(&w[start + len..]);
                        w = free_reduce(&v).0;
                        continue 'outer;
                    }
                }
            }
            return w;
        }
    }

    /// Breadth-first closure of `w` under relator insertion (with free
    /// reduction) inside the length window `bound + longest relator`;
    /// returns the shortlex-least class member of length `<= bound`.
    fn enumerate_class(&self, w: &GroupWord, bound: usize) -> Result<Option<GroupWord>, WordError> {
        if self.symmetrized.is_empty() {
            return Ok((w.len() <= bound).then(|| w.clone()));
        }
        let max_rel = self.symmetrized.iter().map(Vec::len).max().unwrap_or(0);
        let window = bound.max(w.len()) + max_rel;
        let mut seen: HashSet<Vec<Letter>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(w.0.clone());
        queue.push_back(w.0.clone());
        while let Some(cur) = queue.pop_front() {
            for pos in 0..=cur.len() {
                for r in &self.symmetrized {
                    let mut v = cur[..pos].to_vec();
                    v.extend_from_slice(r);
                    v.extend_from_slice(&cur[pos..]);
                    let red = free_reduce(&v).0;
                    if red.len() <= window && !seen.contains(&red) {
                        if seen.len() >= self.rewrite_budget {
                            return Err(WordError::RewriteBudgetExceeded(self.rewrite_budget));
                        }
                        seen.insert(red.clone());
                        queue.push_back(red);
                    }
                }
            }
        }
        Ok(seen.into_iter().filter(|v| v.len() <= bound).min_by(|a, b| shortlex_cmp(a, b)).map(GroupWord))
    }
}

/// `x₀^{e₀} x₁^{e₁} …`
pub fn abelian_word(exps: &[i64]) -> GroupWord {
    let mut v = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        let l = if e >= 0 { i as Letter + 1 } else { -(i as Letter + 1) };
        v.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
    }
    GroupWord(v)
}

/// Exponent-sum vector of a word.
pub fn exponent_sums(w: &[Letter], generators: usize) -> Vec<i64> {
    let mut e = vec![0i64; generators];
    for &l in w {
        e[(l.unsigned_abs() - 1) as usize] += i64::from(l.signum());
    }
    e
}

fn validate_abelian(p: &Presentation) -> Result<(), WordError> {
    let n = p.generator_count();
    for r in &p.relators {
        if exponent_sums(&r.0, n).iter().any(|&e| e != 0) {
            return Err(WordError::InvalidStrategy(format!(
                "relator {} does not abelianize to zero",
                r.render(&p.generator_names)
            )));
        }
    }
    let sym: HashSet<Vec<Letter>> = p.symmetrized().into_iter().collect();
    for i in 0..n as Letter {
        for j in i + 1..n as Letter {
            let (a, b) = (i + 1, j + 1);
            if !sym.contains(&vec![a, b, -a, -b]) {
                return Err(WordError::InvalidStrategy(format!(
                    "abelian strategy needs the commutator of {} and {} among the relators",
                    p.generator_names[i as usize], p.generator_names[j as usize]
                )));
            }
        }
    }
    Ok(())
}

/// Convenience wrapper building a one-shot [`WordProblem`].
pub fn normal_form(p: &Presentation, s: NormalFormStrategy, w: &GroupWord) -> Result<GroupWord, WordError> {
    WordProblem::new(p, s)?.normal_form(w)
}
