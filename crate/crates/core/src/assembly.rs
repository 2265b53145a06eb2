//! Nyström discretization of the dispersal operator and the pointwise
//! matrices whose spectra make up the essential spectrum.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::DMat;
use crate::model::{validate_sampled, DispersalSystem, KernelSpec, SampledSystem};

/// `χ(x_a) = Σ_b k(x_b, x_a) w_b`: total rate of leaving `x_a`.
pub fn compute_chi(kernel: &DMat, grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    let w = grid.weights();
    let mut chi = vec![0.0; n];
    for b in 0..n {
        let row = kernel.row(b);
        for (c, &k) in chi.iter_mut().zip(row) {
            *c += k * w[b];
        }
    }
    chi
}

pub fn compute_chi_spec(kernel: &KernelSpec, grid: &Grid) -> Result<Vec<f64>> {
    Ok(compute_chi(&kernel.sample(grid)?, grid))
}

/// `d (K W − diag χ)` for one species.
pub fn dispersal_block(kernel: &DMat, chi: &[f64], grid: &Grid, d: f64) -> DMat {
    let n = grid.n();
    let w = grid.weights();
    let mut out = DMat::from_fn(n, n, |a, b| d * kernel[(a, b)] * w[b]);
    for a in 0..n {
        out[(a, a)] -= d * chi[a];
    }
    out
}

/// Flattened `(l n) × (l n)` operator, species-major: row `i * n + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOperator {
    pub l: usize,
    pub l1: usize,
    pub n: usize,
    pub d: Vec<f64>,
    /// `χ_i` for dispersing species, zeros for the rest.
    pub chi: Vec<Vec<f64>>,
    pub matrix: DMat,
}

impl AssembledOperator {
    pub fn size(&self) -> usize {
        self.l * self.n
    }

    pub fn block(&self, i: usize, j: usize) -> DMat {
        self.matrix.block(i * self.n, j * self.n, self.n, self.n)
    }

    /// Two little-endian `u64` dimensions followed by row-major `f64` data.
    pub fn write_binary<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix(&self.matrix, out)
    }
}

pub fn write_matrix<W: Write>(m: &DMat, mut out: W) -> io::Result<()> {
    out.write_all(&(m.rows() as u64).to_le_bytes())?;
    out.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(mut input: R) -> io::Result<DMat> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        input.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok(DMat::from_row_slice(rows, cols, &data))
}

/// Samples, validates (unless `force`) and assembles.
pub fn assemble_operator(
    sys: &DispersalSystem,
    grid: &Grid,
    force: bool,
) -> Result<AssembledOperator> {
    let sampled = sys.sample(grid)?;
    if !force {
        let report = validate_sampled(&sampled);
        if !report.passed() {
            return Err(Error::Validation {
                count: report.violations.len(),
            });
        }
    }
    Ok(assemble_sampled(&sampled))
}

pub fn chis(s: &SampledSystem) -> Vec<Vec<f64>> {
    (0..s.l)
        .map(|i| match s.kernels.get(i) {
            Some(k) => compute_chi(k, &s.grid),
            None => vec![0.0; s.n()],
        })
        .collect()
}

pub fn assemble_sampled(s: &SampledSystem) -> AssembledOperator {
    let chi = chis(s);
    assemble_with_chi(s, chi)
}

pub(crate) fn assemble_with_chi(s: &SampledSystem, chi: Vec<Vec<f64>>) -> AssembledOperator {
    let (l, n) = (s.l, s.n());
    let size = l * n;
    let mut matrix = DMat::zeros(size, size);
    let w = s.grid.weights();
    for i in 0..l.min(s.kernels.len()) {
        let di = s.d[i];
        if di == 0.0 {
            continue;
        }
        let k = &s.kernels[i];
        for a in 0..n {
            let row = matrix.row_mut(i * n + a);
            for b in 0..n {
                row[i * n + b] = di * k[(a, b)] * w[b];
            }
            row[i * n + a] -= di * chi[i][a];
        }
    }
    for a in 0..n {
        for i in 0..l {
            for j in 0..l {
                matrix[(i * n + a, j * n + a)] += s.m_entry(a, i, j);
            }
        }
    }
    AssembledOperator {
        l,
        l1: s.l1,
        n,
        d: s.d.clone(),
        chi,
        matrix,
    }
}

/// `A(x_a) = M(x_a) − diag(d_i χ_i(x_a))` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseA {
    pub matrices: Vec<DMat>,
}

pub fn pointwise_a(s: &SampledSystem, chi: &[Vec<f64>]) -> PointwiseA {
    let matrices = (0..s.n())
        .map(|a| {
            let mut m = s.m_at(a);
            for i in 0..s.l {
                if s.d[i] != 0.0 {
                    m[(i, i)] -= s.d[i] * chi[i][a];
                }
            }
            m
        })
        .collect();
    PointwiseA { matrices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefField;

    fn system(l1: usize, d: Vec<f64>, kernel: &str, m: &[&[&str]]) -> DispersalSystem {
        let rows: Vec<Vec<&str>> = m.iter().map(|r| r.to_vec()).collect();
        DispersalSystem::new(
            l1,
            d,
            (0..l1).map(|_| KernelSpec::parse(kernel).unwrap()).collect(),
            CoefField::parse(&rows).unwrap(),
            (-1.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn chi_of_constant_kernel() {
        let g = Grid::new(-1.0, 1.0, 7).unwrap();
        let chi = compute_chi_spec(&KernelSpec::parse("1").unwrap(), &g).unwrap();
        assert!(chi.iter().all(|c| (c - 2.0).abs() < 1e-14));
    }

    #[test]
    fn chi_uses_first_argument_as_integration_variable() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        // k(x, y) = exp(x): χ(y) = ∫ e^x dx independent of y.
        let chi = compute_chi_spec(&KernelSpec::parse("exp(x)").unwrap(), &g).unwrap();
        let expected: f64 = g.points().iter().map(|x| x.exp() * 0.4).sum();
        for c in chi {
            assert!((c - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_kernel_chi_equals_out_mass() {
        let g = Grid::new(-1.0, 1.0, 30).unwrap();
        let k = KernelSpec::parse("exp(-(x-y)^2)").unwrap().sample(&g).unwrap();
        let chi = compute_chi(&k, &g);
        for a in 0..30 {
            let out: f64 = (0..30).map(|b| k[(a, b)] * g.weights()[b]).sum();
            assert!((out - chi[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn two_node_hand_computation() {
        let sys = system(1, vec![1.0], "1", &[&["0"]]);
        let op = assemble_operator(&sys, &sys.grid(2).unwrap(), false).unwrap();
        assert_eq!(op.matrix, DMat::from_rows(&[[-1.0, 1.0], [1.0, -1.0]]));
    }

    #[test]
    fn zero_diffusion_is_diagonal() {
        let sys = system(1, vec![0.0], "1", &[&["x^2 - 1"]]);
        let g = sys.grid(6).unwrap();
        let op = assemble_operator(&sys, &g, false).unwrap();
        let expected: Vec<f64> = g.points().iter().map(|x| x * x - 1.0).collect();
        assert_eq!(op.matrix, DMat::diagonal_from(&expected));
    }

    #[test]
    fn constants_map_to_row_sums() {
        let sys = system(2, vec![0.7, 3.0], "exp(-(x-y)^2)", &[&["-1", "2"], &["0.5", "-3"]]);
        let op = assemble_operator(&sys, &sys.grid(40).unwrap(), false).unwrap();
        assert!(op.matrix.is_metzler(0.0));
        let v = op.matrix.mul_vec(&vec![1.0; 80]);
        for a in 0..40 {
            assert!((v[a] - 1.0).abs() < 1e-12);
            assert!((v[40 + a] + 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_gate_and_force() {
        let sys = system(2, vec![1.0, 1.0], "1", &[&["1", "0"], &["0", "1"]]);
        let g = sys.grid(4).unwrap();
        assert!(matches!(assemble_operator(&sys, &g, false), Err(Error::Validation { count: 4 })));
        assert!(assemble_operator(&sys, &g, true).is_ok());
    }

    #[test]
    fn pointwise_matrices() {
        let sys = system(1, vec![1.0], "1", &[&["x"]]);
        let g = sys.grid(4).unwrap();
        let s = sys.sample(&g).unwrap();
        let pa = pointwise_a(&s, &chis(&s));
        for (m, x) in pa.matrices.iter().zip(g.points()) {
            assert!((m[(0, 0)] - (x - 2.0)).abs() < 1e-15);
        }
        let sys = system(1, vec![5.0, 0.0], "1", &[&["-1", "1"], &["1", "-x^2"]]);
        let s = sys.sample(&g).unwrap();
        let pa = pointwise_a(&s, &chis(&s));
        for (a, m) in pa.matrices.iter().enumerate() {
            assert_eq!(m[(1, 1)], s.m_entry(a, 1, 1));
            assert!((m[(0, 0)] + 11.0).abs() < 1e-14);
        }
    }

    #[test]
    fn binary_dump_round_trips() {
        let sys = system(1, vec![1.0, 0.0], "exp(-(x-y)^2)", &[&["-1", "1"], &["1", "-1"]]);
        let op = assemble_operator(&sys, &sys.grid(3).unwrap(), false).unwrap();
        let mut buf = Vec::new();
        op.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 36 * 8);
        assert_eq!(&buf[..8], &6u64.to_le_bytes());
        assert_eq!(read_matrix(&buf[..]).unwrap(), op.matrix);
    }
}
