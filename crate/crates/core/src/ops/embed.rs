//! Embedding lookup: token ids to stacked vectors, with the PAD row's
//! gradient discarded so row 0 stays frozen at zero.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

pub const PAD_ID: u32 = 0;

/// Gather rows of the `[vocab, d]` table for a `[batch, s]` id matrix
/// (flattened, row-major). Output `[batch, s, d]`; a single sequence
/// (batch 1) is the `[1, s, d]` single-channel view the stem consumes.
pub fn embed_lookup<T: Real>(
    tape: &GradTape<T>,
    ids: &[u32],
    batch: usize,
    table: &Tensor<T>,
) -> Result<Tensor<T>> {
    let tshape = table.expect_rank(2, "embedding table")?;
    let (vocab, d) = (tshape[0], tshape[1]);
    if batch == 0 || ids.len() % batch != 0 {
        return Err(Error::Shape(alloc::format!(
            "embed_lookup: {} ids do not form {batch} rows",
            ids.len()
        )));
    }
    let s = ids.len() / batch;
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= vocab) {
        return Err(Error::Data(alloc::format!(
            "embed_lookup: token id {bad} out of vocabulary size {vocab}"
        )));
    }

    let mut data = Vec::with_capacity(ids.len() * d);
    {
        let td = table.data();
        for &id in ids {
            let r = id as usize;
            data.extend_from_slice(&td[r * d..(r + 1) * d]);
        }
    }
    let out = Tensor::from_vec(&[batch, s, d], data)?;

    if tape.tracks(&[table]) {
        out.mark_tracked();
        let (table, o) = (table.clone(), out.clone());
        let ids: Vec<u32> = ids.to_vec();
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let mut dt = alloc::vec![T::zero(); vocab * d];
            for (pos, &id) in ids.iter().enumerate() {
                if id == PAD_ID {
                    continue; // pad embedding never learns
                }
                let r = id as usize;
                for (tv, &gv) in dt[r * d..(r + 1) * d].iter_mut().zip(&g[pos * d..(pos + 1) * d]) {
                    *tv += gv;
                }
            }
            table.accumulate_grad(&dt);
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table() -> Tensor<f64> {
        // row 0 = PAD (zeros), rows 1..3 distinct
        Tensor::from_vec(
            &[4, 2],
            vec![0.0, 0.0, 1.0, 10.0, 2.0, 20.0, 3.0, 30.0],
        )
        .unwrap()
    }

    #[test]
    fn all_pad_input_is_all_zero() {
        let tape = GradTape::<f64>::disabled();
        let out = embed_lookup(&tape, &[0, 0, 0], 1, &toy_table()).unwrap();
        assert_eq!(out.shape(), vec![1, 3, 2]);
        assert!(out.to_vec().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gathers_rows_in_order() {
        let tape = GradTape::<f64>::disabled();
        let out = embed_lookup(&tape, &[2, 1, 3, 0], 2, &toy_table()).unwrap();
        assert_eq!(out.shape(), vec![2, 2, 2]);
        assert_eq!(out.to_vec(), vec![2.0, 20.0, 1.0, 10.0, 3.0, 30.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_id_rejected() {
        let tape = GradTape::<f64>::disabled();
        assert!(embed_lookup(&tape, &[4], 1, &toy_table()).is_err());
    }

    #[test]
    fn pad_row_receives_no_gradient() {
        let tape = GradTape::<f64>::new();
        let table = toy_table().requires_grad();
        // id 1 appears twice: its grads must accumulate
        let out = embed_lookup(&tape, &[0, 1, 1, 2], 1, &table).unwrap();
        let loss = crate::ops::sum_all(&tape, &out);
        tape.backward(&loss).unwrap();
        let g = table.grad().unwrap();
        assert_eq!(g[0..2], [0.0, 0.0]); // PAD row untouched
        assert_eq!(g[2..4], [2.0, 2.0]); // row 1 hit twice
        assert_eq!(g[4..6], [1.0, 1.0]);
        assert_eq!(g[6..8], [0.0, 0.0]); // row 3 unused
    }

    #[test]
    fn untracked_table_records_nothing() {
        let tape = GradTape::<f64>::new();
        let table = toy_table(); // static embeddings
        let before = tape.len();
        embed_lookup(&tape, &[1, 2], 1, &table).unwrap();
        assert_eq!(tape.len(), before);
    }
}
