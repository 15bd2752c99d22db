//! Finite Markov chain helpers shared by the mobility and MDP modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Closed communicating classes of a chain given by its successor relation.
///
/// `successors(i, out)` must push every `j` with `P(i, j) > 0` into `out`.
/// Classes are returned sorted by their smallest member, members ascending.
pub fn closed_classes<F>(n: usize, mut successors: F) -> Vec<Vec<usize>>
where
    F: FnMut(usize, &mut Vec<usize>),
{
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut component = vec![UNVISITED; n];
    let mut stack = Vec::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0;

    // Iterative Tarjan: each frame holds a node, its successors and a cursor.
    let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut succ = Vec::new();
        successors(root, &mut succ);
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, succ, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if index[w] == UNVISITED {
                    let mut succ = Vec::new();
                    successors(w, &mut succ);
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, succ, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(parent) = frames.last() {
                let p = parent.0;
                lowlink[p] = lowlink[p].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let id = components.len();
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component[w] = id;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                members.sort_unstable();
                components.push(members);
            }
        }
    }

    let mut closed = vec![true; components.len()];
    let mut succ = Vec::new();
    for v in 0..n {
        succ.clear();
        successors(v, &mut succ);
        if succ.iter().any(|&w| component[w] != component[v]) {
            closed[component[v]] = false;
        }
    }
    let mut out: Vec<Vec<usize>> = components
        .into_iter()
        .zip(closed)
        .filter_map(|(c, is_closed)| is_closed.then_some(c))
        .collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Describes closed classes for error messages, listing at most a few members each.
pub fn describe_classes<F>(classes: &[Vec<usize>], label: F) -> Vec<String>
where
    F: Fn(usize) -> String,
{
    const SHOWN: usize = 3;
    classes
        .iter()
        .map(|c| {
            let names: Vec<String> = c.iter().take(SHOWN).map(|&i| label(i)).collect();
            if c.len() > SHOWN {
                format!("{{{}, ... ({} states)}}", names.join(", "), c.len())
            } else {
                format!("{{{}}}", names.join(", "))
            }
        })
        .collect()
}

/// Stationary distribution of a dense row-stochastic matrix by a direct solve
/// of `(P^T - I) pi = 0` with one equation replaced by `sum(pi) = 1`.
pub fn dense_stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let classes = closed_classes(n, |i, out| {
        out.extend((0..n).filter(|&j| p[(i, j)] > 0.0));
    });
    if classes.len() != 1 {
        return Err(Error::ReducibleChain {
            classes: describe_classes(&classes, |i| (i + 1).to_string()),
        });
    }
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("singular stationary system".into()))?;
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let p = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.3, 0.7]);
        let pi = dense_stationary(&p).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-12);
        assert!((pi[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn transient_states_are_not_closed() {
        // 0 -> 1 <-> 2, with 3 absorbing and fed by 2.
        let adj = [vec![1], vec![2], vec![1, 3], vec![3]];
        let classes = closed_classes(4, |i, out| out.extend(&adj[i]));
        assert_eq!(classes, vec![vec![3]]);
    }

    #[test]
    fn identity_is_reducible() {
        let err = dense_stationary(&DMatrix::identity(3, 3)).unwrap_err();
        match err {
            Error::ReducibleChain { classes } => assert_eq!(classes, vec!["{1}", "{2}", "{3}"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deep_chain_does_not_overflow_the_stack() {
        let n = 200_000;
        let classes = closed_classes(n, |i, out| out.push((i + 1) % n));
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].len(), n);
    }
}
