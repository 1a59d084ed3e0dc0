//! Directed leader-follower communication graph.
//!
//! Followers are indexed `0..n`. The adjacency entry `a[i][j]` is nonzero
//! when follower `i` receives information from follower `j`; its sign marks
//! a cooperative (+1) or competitive (-1) link. The pinning entry `b[i]` is
//! nonzero when follower `i` hears the leader directly.

use nalgebra::{Complex, DMatrix};

use crate::{Error, Result};

/// Eigenvalue real parts with magnitude below this are reported as zero.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    adjacency: Vec<i8>,
    pinning: Vec<i8>,
}

impl Topology {
    pub fn new(adjacency: Vec<Vec<i8>>, pinning: Vec<i8>) -> Result<Self> {
        let n = pinning.len();
        if adjacency.len() != n {
            return Err(Error::config(
                "topology.adjacency",
                format!("{} rows for {} followers", adjacency.len(), n),
            ));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(Error::config(
                    "topology.adjacency",
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            for (j, &a) in row.iter().enumerate() {
                if !(-1..=1).contains(&a) {
                    return Err(Error::config(
                        "topology.adjacency",
                        format!("entry ({i}, {j}) = {a} is not in {{-1, 0, 1}}"),
                    ));
                }
                if i == j && a != 0 {
                    return Err(Error::config(
                        "topology.adjacency",
                        format!("self-loop on follower {i}"),
                    ));
                }
            }
            flat.extend_from_slice(row);
        }
        if let Some(b) = pinning.iter().find(|b| !(-1..=1).contains(*b)) {
            return Err(Error::config(
                "topology.pinning",
                format!("entry {b} is not in {{-1, 0, 1}}"),
            ));
        }
        Ok(Topology {
            n,
            adjacency: flat,
            pinning,
        })
    }

    /// Build from an edge list of `(receiver, sender, sign)` triples.
    pub fn from_links(pinning: Vec<i8>, links: &[(usize, usize, i8)]) -> Result<Self> {
        let n = pinning.len();
        let mut adjacency = vec![vec![0i8; n]; n];
        for &(to, from, sign) in links {
            if to >= n || from >= n {
                return Err(Error::config(
                    "topology.links",
                    format!("link ({to}, {from}) references a follower outside 0..{n}"),
                ));
            }
            adjacency[to][from] = sign;
        }
        Topology::new(adjacency, pinning)
    }

    /// Predecessor-follower chain: follower 0 is pinned to the leader and
    /// every other follower listens to the one ahead of it.
    pub fn chain(n: usize) -> Self {
        let mut adjacency = vec![vec![0i8; n]; n];
        for (i, row) in adjacency.iter_mut().enumerate().skip(1) {
            row[i - 1] = 1;
        }
        let mut pinning = vec![0i8; n];
        if n > 0 {
            pinning[0] = 1;
        }
        Topology::new(adjacency, pinning).expect("chain topology is well formed")
    }

    pub fn n_followers(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> i8 {
        self.adjacency[i * self.n + j]
    }

    pub fn pin(&self, i: usize) -> i8 {
        self.pinning[i]
    }

    /// Nonzero links as `(receiver, sender, sign)`.
    pub fn links(&self) -> Vec<(usize, usize, i8)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let a = self.weight(i, j);
                if a != 0 {
                    out.push((i, j, a));
                }
            }
        }
        out
    }

    pub fn pinning(&self) -> &[i8] {
        &self.pinning
    }

    /// Senders follower `i` listens to (followers only, leader excluded).
    pub fn informants(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.weight(i, j) != 0)
    }

    /// Relabel followers: new follower `k` is old follower `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Argument("permutation length mismatch".into()));
        }
        let adjacency = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.weight(perm[i], perm[j])).collect())
            .collect();
        let pinning = perm.iter().map(|&p| self.pinning[p]).collect();
        Topology::new(adjacency, pinning)
    }
}

/// Degree, Laplacian and grounded (`L + B`) matrices of a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrices {
    pub degree: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub grounded: DMatrix<f64>,
}

/// Degrees use `|a_ij|`, so signed and cooperative graphs share one Laplacian.
pub fn build_matrices(topology: &Topology) -> GraphMatrices {
    let n = topology.n;
    let abs_adj = DMatrix::from_fn(n, n, |i, j| f64::from(topology.weight(i, j).abs()));
    let degree = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        abs_adj.row(i).sum()
    }));
    let laplacian = &degree - &abs_adj;
    let pinning = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        f64::from(topology.pin(i).abs())
    }));
    let grounded = &laplacian + pinning;
    GraphMatrices {
        degree,
        laplacian,
        grounded,
    }
}

/// Smallest real part over the spectrum of `H = L + B`.
///
/// Positive exactly when every follower is reachable from the leader.
pub fn spectral_check(matrices: &GraphMatrices) -> Result<f64> {
    let h = &matrices.grounded;
    if h.nrows() == 0 {
        return Err(Error::Argument("grounded matrix is empty".into()));
    }
    let min = eigenvalues(h)?
        .iter()
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min);
    Ok(if min.abs() < SPECTRAL_TOLERANCE { 0.0 } else { min })
}

/// Eigenvalues of a small square matrix.
///
/// The sparsity pattern is first split into strongly connected components;
/// after a symmetric permutation the matrix is block triangular with one
/// diagonal block per component, so the spectrum is the union of the block
/// spectra. Singleton blocks are read off the diagonal exactly, 2x2 blocks
/// use the characteristic polynomial and larger ones a Schur decomposition.
/// Triangular graphs (chains, trees) therefore never see rounding.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Argument(format!(
            "matrix is {}x{}, not square",
            n,
            m.ncols()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for block in strongly_connected_blocks(m) {
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |a, b| m[(block[a], block[b])]);
        match k {
            1 => out.push(Complex::new(sub[(0, 0)], 0.0)),
            2 => {
                let tr = sub[(0, 0)] + sub[(1, 1)];
                let det = sub[(0, 0)] * sub[(1, 1)] - sub[(0, 1)] * sub[(1, 0)];
                let disc = 0.25 * tr * tr - det;
                let half = 0.5 * tr;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    out.push(Complex::new(half - r, 0.0));
                    out.push(Complex::new(half + r, 0.0));
                } else {
                    let r = (-disc).sqrt();
                    out.push(Complex::new(half, -r));
                    out.push(Complex::new(half, r));
                }
            }
            _ => {
                let schur = sub
                    .clone()
                    .try_schur(f64::EPSILON, 10_000)
                    .ok_or_else(|| Error::EigenSolve {
                        matrix: format!("{m}"),
                    })?;
                out.extend(schur.complex_eigenvalues().iter().copied());
            }
        }
    }
    Ok(out)
}

/// Index sets of strongly connected components of the off-diagonal pattern.
fn strongly_connected_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if m[(i, j)] != 0.0 {
                reach[i][j] = true;
            }
        }
    }
    // Warshall transitive closure; n is tiny.
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut blocks = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let block: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && reach[i][j] && reach[j][i])
            .collect();
        for &j in &block {
            assigned[j] = true;
        }
        blocks.push(block);
    }
    blocks
}

/// Signed (bipartite) tracking error of every follower.
///
/// `e_i = sum_j |a_ij| (y_i - sgn(a_ij) y_j) + |b_i| (y_i - sgn(b_i) y_r)`.
pub fn bipartite_error(outputs: &[f64], leader_output: f64, topology: &Topology) -> Result<Vec<f64>> {
    let n = topology.n;
    if outputs.len() != n {
        return Err(Error::Argument(format!(
            "{} outputs for {} followers",
            outputs.len(),
            n
        )));
    }
    Ok((0..n)
        .map(|i| {
            let yi = outputs[i];
            let neighbours: f64 = (0..n)
                .map(|j| {
                    let a = f64::from(topology.weight(i, j));
                    a.abs() * (yi - a.signum() * outputs[j])
                })
                .sum();
            let b = f64::from(topology.pin(i));
            neighbours + b.abs() * (yi - b.signum() * leader_output)
        })
        .collect())
}
