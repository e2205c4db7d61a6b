//! Problem description: second-order cone and linear equality constraints
//! over a vector of real variables.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("point has {got} entries, program has {expected} variables")]
    PointDimension { expected: usize, got: usize },
    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableIndex { index: usize, num_vars: usize },
    #[error("cone block has {rows} rows but offset vector has {offsets} entries")]
    BlockShape { rows: usize, offsets: usize },
    #[error("cone block must have at least one row")]
    EmptyBlock,
    #[error("non-finite coefficient in constraint data")]
    NonFinite,
}

/// Sparse real vector stored as parallel index/value arrays.
///
/// Indices are not required to be sorted; duplicates are summed on use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(cap: usize) -> Self {
        Self {
            idx: Vec::with_capacity(cap),
            val: Vec::with_capacity(cap),
        }
    }

    /// Builds from a dense slice, dropping exact zeros.
    pub fn from_dense(values: &[f64]) -> Self {
        let mut v = Self::new();
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.push(i, x);
            }
        }
        v
    }

    pub fn unit(index: usize) -> Self {
        Self {
            idx: vec![index],
            val: vec![1.0],
        }
    }

    /// Appends `value` at `index`. Zeros are skipped.
    pub fn push(&mut self, index: usize, value: f64) {
        if value != 0.0 {
            self.idx.push(index);
            self.val.push(value);
        }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * x[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.idx.iter().copied().max()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            idx: self.idx.clone(),
            val: self.val.iter().map(|v| v * factor).collect(),
        }
    }

    /// `y += alpha * self`
    pub fn axpy_into(&self, alpha: f64, y: &mut [f64]) {
        for (i, v) in self.iter() {
            y[i] += alpha * v;
        }
    }

    fn all_finite(&self) -> bool {
        self.val.iter().all(|v| v.is_finite())
    }
}

/// One cone constraint `‖A x + b‖₂ ≤ cᵀx + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub rows: Vec<SparseVec>,
    pub b: Vec<f64>,
    pub c: SparseVec,
    pub d: f64,
}

impl SocBlock {
    pub fn new(rows: Vec<SparseVec>, b: Vec<f64>, c: SparseVec, d: f64) -> Result<Self, ProgramError> {
        if rows.is_empty() {
            return Err(ProgramError::EmptyBlock);
        }
        if rows.len() != b.len() {
            return Err(ProgramError::BlockShape {
                rows: rows.len(),
                offsets: b.len(),
            });
        }
        Ok(Self { rows, b, c, d })
    }

    /// Dense constructor, `a` given row by row.
    pub fn from_dense(a: &[Vec<f64>], b: &[f64], c: &[f64], d: f64) -> Result<Self, ProgramError> {
        Self::new(
            a.iter().map(|r| SparseVec::from_dense(r)).collect(),
            b.to_vec(),
            SparseVec::from_dense(c),
            d,
        )
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `‖A x + b‖ − (cᵀx + d)`; negative inside the cone.
    pub fn gap(&self, x: &[f64]) -> f64 {
        let norm = self
            .rows
            .iter()
            .zip(&self.b)
            .map(|(r, &b)| {
                let v = r.dot(x) + b;
                v * v
            })
            .sum::<f64>()
            .sqrt();
        norm - (self.c.dot(x) + self.d)
    }

    /// True when `A = 0` and `b = 0`, i.e. the block is the half-space `cᵀx + d ≥ 0`.
    pub fn is_halfspace(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|(_, v)| v == 0.0)) && self.b.iter().all(|&b| b == 0.0)
    }

    /// Multiplies the whole block by a positive scalar; the constraint set is unchanged.
    pub fn scale(&mut self, factor: f64) {
        for r in &mut self.rows {
            *r = r.scaled(factor);
        }
        for b in &mut self.b {
            *b *= factor;
        }
        self.c = self.c.scaled(factor);
        self.d *= factor;
    }

    fn max_index(&self) -> Option<usize> {
        self.rows
            .iter()
            .filter_map(SparseVec::max_index)
            .chain(self.c.max_index())
            .max()
    }

    fn all_finite(&self) -> bool {
        self.rows.iter().all(SparseVec::all_finite)
            && self.b.iter().all(|b| b.is_finite())
            && self.c.all_finite()
            && self.d.is_finite()
    }
}

/// Linear equality `fᵀx = e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEq {
    pub f: SparseVec,
    pub e: f64,
}

/// A feasibility problem over `num_vars` real variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SocProgram {
    num_vars: usize,
    blocks: Vec<SocBlock>,
    equalities: Vec<LinearEq>,
}

impl SocProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            blocks: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn blocks(&self) -> &[SocBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [SocBlock] {
        &mut self.blocks
    }

    pub fn equalities(&self) -> &[LinearEq] {
        &self.equalities
    }

    pub fn add_block(&mut self, block: SocBlock) -> Result<(), ProgramError> {
        self.check_indices(block.max_index())?;
        if !block.all_finite() {
            return Err(ProgramError::NonFinite);
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn add_equality(&mut self, f: SparseVec, e: f64) -> Result<(), ProgramError> {
        self.check_indices(f.max_index())?;
        if !f.all_finite() || !e.is_finite() {
            return Err(ProgramError::NonFinite);
        }
        self.equalities.push(LinearEq { f, e });
        Ok(())
    }

    fn check_indices(&self, max: Option<usize>) -> Result<(), ProgramError> {
        match max {
            Some(index) if index >= self.num_vars => Err(ProgramError::VariableIndex {
                index,
                num_vars: self.num_vars,
            }),
            _ => Ok(()),
        }
    }

    /// Largest constraint violation at `x`: `(‖Ax+b‖ − cᵀx − d)₊` over cone
    /// blocks and `|fᵀx − e|` over equalities. Zero iff `x` is feasible.
    pub fn check_point(&self, x: &[f64]) -> Result<f64, ProgramError> {
        if x.len() != self.num_vars {
            return Err(ProgramError::PointDimension {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        let cones = self.blocks.iter().map(|b| b.gap(x).max(0.0));
        let eqs = self.equalities.iter().map(|eq| (eq.f.dot(x) - eq.e).abs());
        Ok(cones.chain(eqs).fold(0.0, f64::max))
    }
}

fn write_sparse(f: &mut fmt::Formatter<'_>, v: &SparseVec) -> fmt::Result {
    write!(f, "[")?;
    for (n, (i, x)) in v.iter().enumerate() {
        if n > 0 {
            write!(f, " ")?;
        }
        write!(f, "{i}:{x:e}")?;
    }
    write!(f, "]")
}

/// Debug dump, one constraint per line.
impl fmt::Display for SocProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# vars={} soc={} eq={}",
            self.num_vars,
            self.blocks.len(),
            self.equalities.len()
        )?;
        for (k, block) in self.blocks.iter().enumerate() {
            write!(f, "soc {k} dim={} rows=", block.dim())?;
            for (r, b) in block.rows.iter().zip(&block.b) {
                write_sparse(f, r)?;
                write!(f, "{b:+e};")?;
            }
            write!(f, " c=")?;
            write_sparse(f, &block.c)?;
            writeln!(f, " d={:e}", block.d)?;
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            write!(f, "eq {k} f=")?;
            write_sparse(f, &eq.f)?;
            writeln!(f, " e={:e}", eq.e)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program_has_no_violation() {
        let p = SocProgram::new(3);
        assert_eq!(p.check_point(&[1.0, -5.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn unit_ball_violation() {
        let mut p = SocProgram::new(1);
        p.add_block(SocBlock::from_dense(&[vec![1.0]], &[0.0], &[0.0], 1.0).unwrap())
            .unwrap();
        assert_eq!(p.check_point(&[2.0]).unwrap(), 1.0);
        assert_eq!(p.check_point(&[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn pythagorean_boundary_is_feasible() {
        let mut p = SocProgram::new(3);
        let block = SocBlock::from_dense(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            &[0.0, 0.0],
            &[0.0, 0.0, 1.0],
            0.0,
        )
        .unwrap();
        p.add_block(block).unwrap();
        assert_eq!(p.check_point(&[3.0, 4.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn equality_violation_is_absolute() {
        let mut p = SocProgram::new(2);
        p.add_equality(SparseVec::from_dense(&[1.0, 1.0]), 1.0).unwrap();
        assert!((p.check_point(&[2.0, 0.5]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = SocProgram::new(2);
        assert_eq!(
            p.check_point(&[1.0]),
            Err(ProgramError::PointDimension { expected: 2, got: 1 })
        );
    }

    #[test]
    fn out_of_range_index_rejected() {
        let mut p = SocProgram::new(2);
        let err = p.add_equality(SparseVec::unit(2), 0.0).unwrap_err();
        assert_eq!(err, ProgramError::VariableIndex { index: 2, num_vars: 2 });
    }

    #[test]
    fn block_shape_checked() {
        assert_eq!(
            SocBlock::new(vec![SparseVec::unit(0)], vec![], SparseVec::new(), 0.0),
            Err(ProgramError::BlockShape { rows: 1, offsets: 0 })
        );
        assert_eq!(
            SocBlock::new(vec![], vec![], SparseVec::new(), 0.0),
            Err(ProgramError::EmptyBlock)
        );
    }

    #[test]
    fn halfspace_detection() {
        let hs = SocBlock::new(vec![SparseVec::new()], vec![0.0], SparseVec::unit(0), 0.0).unwrap();
        assert!(hs.is_halfspace());
        let ball = SocBlock::from_dense(&[vec![1.0]], &[0.0], &[0.0], 1.0).unwrap();
        assert!(!ball.is_halfspace());
    }

    #[test]
    fn dump_has_one_line_per_constraint() {
        let mut p = SocProgram::new(2);
        p.add_block(SocBlock::from_dense(&[vec![1.0, 0.0]], &[0.0], &[0.0, 0.0], 1.0).unwrap())
            .unwrap();
        p.add_equality(SparseVec::unit(0), 0.5).unwrap();
        let text = p.to_string();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("soc 0"));
        assert!(text.lines().nth(2).unwrap().starts_with("eq 0"));
    }
}
