//! Dense slot-explicit tensors over R^D.
//!
//! Cross-validation path for the compressed projector action: both
//! recursion variants of the trace-free symmetric projector are realized
//! here as literal operator chains on D^l-component arrays, and the
//! two-slot operators (permutator, trace projector, pair symmetrizer) are
//! available on any adjacent slot pair for braid-relation checks. Not used
//! by the production code paths.

use crate::symtensor::{MultiIndex, SymTensor};
use crate::C64;

#[derive(Clone, Debug)]
pub struct DenseTensor {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<C64>,
}

impl DenseTensor {
    pub fn zero(dim: usize, rank: usize) -> Self {
        DenseTensor {
            dim,
            rank,
            data: vec![C64::new(0.0, 0.0); dim.pow(rank as u32)],
        }
    }

    /// Row-major flattening: slot 0 is the most significant digit.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn from_sym(t: &SymTensor) -> Self {
        let mut out = DenseTensor::zero(t.dim, t.rank);
        let mut idx = vec![0usize; t.rank];
        for o in 0..out.data.len() {
            let mut rem = o;
            for k in (0..t.rank).rev() {
                idx[k] = rem % t.dim;
                rem /= t.dim;
            }
            let mi = MultiIndex::new(idx.iter().map(|&i| i as u8 + 1).collect(), t.dim).unwrap();
            out.data[o] = t.get(&mi);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &DenseTensor) -> DenseTensor {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, c: C64) -> DenseTensor {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn add(&self, other: &DenseTensor) -> DenseTensor {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        out
    }

    fn for_each_index(&self, mut f: impl FnMut(&[usize], usize)) {
        let mut idx = vec![0usize; self.rank];
        for o in 0..self.data.len() {
            let mut rem = o;
            for k in (0..self.rank).rev() {
                idx[k] = rem % self.dim;
                rem /= self.dim;
            }
            f(&idx, o);
        }
    }

    /// Permutator P on slots (a, b).
    pub fn swap_slots(&self, a: usize, b: usize) -> DenseTensor {
        let mut out = DenseTensor::zero(self.dim, self.rank);
        self.for_each_index(|idx, o| {
            let mut j = idx.to_vec();
            j.swap(a, b);
            let oo = out.offset(&j);
            out.data[oo] = self.data[o];
        });
        out
    }

    /// Trace projector Pt on slots (a, b): (delta_{ab}/D) * contraction.
    pub fn trace_project(&self, a: usize, b: usize) -> DenseTensor {
        let mut out = DenseTensor::zero(self.dim, self.rank);
        self.for_each_index(|idx, _| {
            if idx[a] == 0 && idx[b] == 0 {
                // compute the contraction once per (a,b)-diagonal fiber
                let mut tr = C64::new(0.0, 0.0);
                let mut j = idx.to_vec();
                for k in 0..self.dim {
                    j[a] = k;
                    j[b] = k;
                    tr += self.data[self.offset(&j)];
                }
                tr /= C64::new(self.dim as f64, 0.0);
                for k in 0..self.dim {
                    j[a] = k;
                    j[b] = k;
                    let oo = self.offset(&j);
                    out.data[oo] = tr;
                }
            }
        });
        out
    }

    /// Pair symmetrizer (1 + P)/2 - Pt on slots (a, b).
    pub fn pair_sym_project(&self, a: usize, b: usize) -> DenseTensor {
        let swapped = self.swap_slots(a, b);
        let traced = self.trace_project(a, b);
        self.add(&swapped).scale(C64::new(0.5, 0.0)).sub(&traced)
    }

    /// M(l+1) on the adjacent pair (a, a+1).
    pub fn apply_m_pair(&self, l: usize, a: usize) -> DenseTensor {
        let lp1 = l as f64 + 1.0;
        let trace_coef = if l == 0 {
            0.0
        } else {
            2.0 * self.dim as f64 * l as f64 / (self.dim + 2 * l - 2) as f64
        };
        let mut out = self.clone();
        out = out.add(&self.swap_slots(a, a + 1).scale(C64::new(l as f64, 0.0)));
        out = out.sub(&self.trace_project(a, a + 1).scale(C64::new(trace_coef, 0.0)));
        out.scale(C64::new(1.0 / lp1, 0.0))
    }

    /// Trace-free symmetric projector on the slot window [start, start+len),
    /// built by the recursion that splits off the last slot of the window.
    pub fn project_window_last(&self, start: usize, len: usize) -> DenseTensor {
        if len <= 1 {
            return self.clone();
        }
        let a = self.project_window_last(start, len - 1);
        let b = a.apply_m_pair(len - 1, start + len - 2);
        b.project_window_last(start, len - 1)
    }

    /// Same projector, built by the recursion that splits off the first slot.
    pub fn project_window_first(&self, start: usize, len: usize) -> DenseTensor {
        if len <= 1 {
            return self.clone();
        }
        let a = self.project_window_first(start + 1, len - 1);
        let b = a.apply_m_pair(len - 1, start);
        b.project_window_first(start + 1, len - 1)
    }
}
