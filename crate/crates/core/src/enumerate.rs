/// Iterates `Σⁿ` in lexicographic order (last coordinate fastest).
#[derive(Debug, Clone)]
pub struct Assignments {
    current: Vec<usize>,
    alphabet: usize,
    done: bool,
}

pub fn assignments(n: usize, alphabet: usize) -> Assignments {
    Assignments {
        current: vec![0; n],
        alphabet,
        done: alphabet == 0,
    }
}

impl Iterator for Assignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        advance(&mut self.current, self.alphabet, &mut self.done);
        Some(out)
    }
}

fn advance(x: &mut [usize], alphabet: usize, done: &mut bool) {
    for slot in x.iter_mut().rev() {
        *slot += 1;
        if *slot < alphabet {
            return;
        }
        *slot = 0;
    }
    *done = true;
}

/// Calls `f` on every point of `Σⁿ` in lexicographic order.
pub fn for_each_assignment(n: usize, alphabet: usize, mut f: impl FnMut(&[usize])) {
    if alphabet == 0 {
        return;
    }
    let mut x = vec![0; n];
    let mut done = false;
    while !done {
        f(&x);
        advance(&mut x, alphabet, &mut done);
    }
}

/// Mixed-radix index of `symbols` in base `alphabet`, first symbol most significant.
pub fn radix_index(symbols: impl IntoIterator<Item = usize>, alphabet: usize) -> usize {
    symbols.into_iter().fold(0, |acc, s| acc * alphabet + s)
}

/// Inverse of [`radix_index`] for a fixed width.
pub fn radix_digits(mut index: usize, width: usize, alphabet: usize) -> Vec<usize> {
    let mut out = vec![0; width];
    for slot in out.iter_mut().rev() {
        *slot = index % alphabet;
        index /= alphabet;
    }
    out
}
