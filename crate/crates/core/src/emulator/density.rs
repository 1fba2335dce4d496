use num_complex::Complex64;

use crate::linalg::{CMatrix, C0, C1};

/// Density matrix over `n` qubits; position 0 is the most significant bit.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n: usize,
    rho: CMatrix,
}

type Block = [[Complex64; 2]; 2];

impl DensityMatrix {
    /// All qubits in `|0>`.
    pub fn ground(n: usize) -> Self {
        let mut rho = CMatrix::zeros(1 << n);
        rho[(0, 0)] = C1;
        DensityMatrix { n, rho }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> f64 {
        (0..self.rho.dim()).map(|k| self.rho[(k, k)].re).sum()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    fn bit(&self, pos: usize) -> usize {
        1 << (self.n - 1 - pos)
    }

    /// Apply a map to every 2x2 block that differs only in qubit `pos`.
    fn map_blocks(&mut self, pos: usize, f: impl Fn(Block) -> Block) {
        let m = self.bit(pos);
        let dim = self.rho.dim();
        for r in (0..dim).filter(|r| r & m == 0) {
            for c in (0..dim).filter(|c| c & m == 0) {
                let b = [
                    [self.rho[(r, c)], self.rho[(r, c | m)]],
                    [self.rho[(r | m, c)], self.rho[(r | m, c | m)]],
                ];
                let b = f(b);
                self.rho[(r, c)] = b[0][0];
                self.rho[(r, c | m)] = b[0][1];
                self.rho[(r | m, c)] = b[1][0];
                self.rho[(r | m, c | m)] = b[1][1];
            }
        }
    }

    /// `rho -> U rho U^dagger` for a 2x2 `u` on qubit `pos`.
    pub fn apply_1q(&mut self, pos: usize, u: &CMatrix) {
        let u = [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]];
        self.map_blocks(pos, |b| {
            let mut ub = [[C0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    ub[i][j] = u[i][0] * b[0][j] + u[i][1] * b[1][j];
                }
            }
            let mut out = [[C0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = ub[i][0] * u[j][0].conj() + ub[i][1] * u[j][1].conj();
                }
            }
            out
        });
    }

    /// Diagonal two-qubit unitary `diag(d00, d01, d10, d11)` on positions
    /// `(a, b)`, `a` being the high bit of the index into `d`.
    pub fn apply_diagonal_2q(&mut self, a: usize, b: usize, d: [Complex64; 4]) {
        let (ma, mb) = (self.bit(a), self.bit(b));
        let phase = |k: usize| d[(usize::from(k & ma != 0) << 1) | usize::from(k & mb != 0)];
        let dim = self.rho.dim();
        for r in 0..dim {
            let pr = phase(r);
            for c in 0..dim {
                self.rho[(r, c)] *= pr * phase(c).conj();
            }
        }
    }

    /// Amplitude damping with decay probability `gamma` combined with
    /// dephasing, leaving coherences multiplied by `coherence`.
    pub fn relax(&mut self, pos: usize, gamma: f64, coherence: f64) {
        self.map_blocks(pos, |b| {
            [
                [b[0][0] + b[1][1] * gamma, b[0][1] * coherence],
                [b[1][0] * coherence, b[1][1] * (1.0 - gamma)],
            ]
        });
    }

    /// Depolarizing channel of strength `lambda` on qubit `pos`.
    pub fn depolarize(&mut self, pos: usize, lambda: f64) {
        self.map_blocks(pos, |b| {
            let half_trace = (b[0][0] + b[1][1]) * (lambda / 2.0);
            [
                [b[0][0] * (1.0 - lambda) + half_trace, b[0][1] * (1.0 - lambda)],
                [b[1][0] * (1.0 - lambda), b[1][1] * (1.0 - lambda) + half_trace],
            ]
        });
    }

    /// Joint outcome distribution of the qubits at `positions`; outcome
    /// index bit order follows `positions` (first is most significant).
    pub fn marginal(&self, positions: &[usize]) -> Vec<f64> {
        let k = positions.len();
        let mut out = vec![0.0; 1 << k];
        for idx in 0..self.rho.dim() {
            let mut o = 0;
            for &p in positions {
                o = (o << 1) | usize::from(idx & self.bit(p) != 0);
            }
            out[o] += self.rho[(idx, idx)].re.max(0.0);
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
        out
    }
}
