use super::Diagram;
use crate::error::{Error, Result};

/// Real tensor over projection indices `m_j ∈ -ℓ_j..=ℓ_j`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotTensor {
    ells: Vec<u32>,
    data: Vec<f64>,
}

impl SlotTensor {
    pub fn new(ells: Vec<u32>, data: Vec<f64>) -> Result<Self> {
        let len: usize = ells.iter().map(|&l| (2 * l + 1) as usize).product();
        if data.len() != len {
            return Err(Error::InvalidArgument(format!(
                "tensor needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(SlotTensor { ells, data })
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn get(&self, ms: &[i32]) -> f64 {
        let mut idx = 0usize;
        for (&m, &l) in ms.iter().zip(&self.ells) {
            idx = idx * (2 * l + 1) as usize + (m + l as i32) as usize;
        }
        self.data[idx]
    }
}

/// `Σ_m ∏_i |X^(i)_{m_i..}| · |δ(γ)|` for a diagram without flat edges.
///
/// Each edge ties one index of two distinct tensors with opposite signs.
pub fn abs_contraction(tensors: &[SlotTensor], d: &Diagram) -> Result<f64> {
    let set = d.index_set();
    if set.row_count() != tensors.len()
        || set.row_sizes().iter().zip(tensors).any(|(&q, t)| q != t.ells.len())
    {
        return Err(Error::InvalidArgument("tensor ranks do not match the index set".into()));
    }
    if d.flags().has_flat_edge {
        return Err(Error::InvalidArgument("contraction requires a diagram without flat edges".into()));
    }
    let ell_of = |s: usize| {
        let slot = set.slot(s);
        tensors[slot.row].ells[slot.col]
    };
    let mut edge_ell = Vec::new();
    for &(a, b) in d.edges() {
        if ell_of(a) != ell_of(b) {
            return Ok(0.0);
        }
        edge_ell.push(ell_of(a) as i32);
    }
    let mut m_edges: Vec<i32> = edge_ell.iter().map(|&l| -l).collect();
    let mut index: Vec<Vec<i32>> = tensors.iter().map(|t| vec![0; t.ells.len()]).collect();
    let mut total = 0.0;
    loop {
        for (e, &(a, b)) in d.edges().iter().enumerate() {
            let (sa, sb) = (set.slot(a), set.slot(b));
            index[sa.row][sa.col] = m_edges[e];
            index[sb.row][sb.col] = -m_edges[e];
        }
        total += tensors
            .iter()
            .zip(&index)
            .map(|(t, ms)| t.get(ms).abs())
            .product::<f64>();
        // Odometer step over the edge projections.
        let mut e = 0;
        loop {
            if e == m_edges.len() {
                return Ok(total);
            }
            if m_edges[e] < edge_ell[e] {
                m_edges[e] += 1;
                break;
            }
            m_edges[e] = -edge_ell[e];
            e += 1;
        }
    }
}
