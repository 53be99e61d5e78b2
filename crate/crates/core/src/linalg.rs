//! Small dense linear algebra over a [`GaloisField`].

use crate::field::{Elem, GaloisField};

/// Scales `v` so its first nonzero entry is 1. Returns false for the zero vector.
pub fn normalize(field: &GaloisField, v: &mut [Elem]) -> bool {
    match v.iter().position(|&c| c != 0) {
        None => false,
        Some(i) => {
            let s = field.inv(v[i]);
            if s != 1 {
                for c in v[i..].iter_mut() {
                    *c = field.mul(*c, s);
                }
            }
            true
        }
    }
}

pub fn scale(field: &GaloisField, s: Elem, v: &[Elem]) -> Vec<Elem> {
    v.iter().map(|&c| field.mul(s, c)).collect()
}

/// `a + s·b`.
pub fn axpy(field: &GaloisField, a: &[Elem], s: Elem, b: &[Elem]) -> Vec<Elem> {
    a.iter().zip(b).map(|(&x, &y)| field.add(x, field.mul(s, y))).collect()
}

pub fn sub(field: &GaloisField, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    a.iter().zip(b).map(|(&x, &y)| field.sub(x, y)).collect()
}

/// Reduces `rows` to reduced row-echelon form in place, dropping zero rows.
/// Returns the pivot columns.
pub fn rref(field: &GaloisField, rows: &mut Vec<Vec<Elem>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let s = field.inv(rows[r][c]);
        for x in rows[r].iter_mut() {
            *x = field.mul(*x, s);
        }
        let pivot_row = std::mem::take(&mut rows[r]);
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = field.neg(row[c]);
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = field.add(*x, field.mul(f, y));
                }
            }
        }
        rows[r] = pivot_row;
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(field: &GaloisField, rows: &[Vec<Elem>]) -> usize {
    let mut m = rows.to_vec();
    rref(field, &mut m).len()
}

/// Square matrix times vector.
pub fn mat_vec(field: &GaloisField, m: &[Vec<Elem>], v: &[Elem]) -> Vec<Elem> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(0, |acc, (&a, &b)| field.add(acc, field.mul(a, b)))
        })
        .collect()
}

/// Solves `v = α·b1 + β·b2` for independent `b1`, `b2`.
pub fn coords_in_pair(
    field: &GaloisField,
    v: &[Elem],
    b1: &[Elem],
    b2: &[Elem],
) -> Option<(Elem, Elem)> {
    // Find two columns on which (b1, b2) is invertible and solve there.
    let n = v.len();
    for i in 0..n {
        for j in i + 1..n {
            let det = field.sub(field.mul(b1[i], b2[j]), field.mul(b1[j], b2[i]));
            if det == 0 {
                continue;
            }
            let d = field.inv(det);
            let alpha = field.mul(d, field.sub(field.mul(v[i], b2[j]), field.mul(v[j], b2[i])));
            let beta = field.mul(d, field.sub(field.mul(b1[i], v[j]), field.mul(b1[j], v[i])));
            let ok = (0..n).all(|c| v[c] == field.add(field.mul(alpha, b1[c]), field.mul(beta, b2[c])));
            return ok.then_some((alpha, beta));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_rank() {
        let f = GaloisField::with_default_modulus(3, 1).unwrap();
        let mut m = vec![vec![0, 2, 1], vec![1, 1, 1], vec![1, 0, 0]];
        let r = rank(&f, &m);
        let piv = rref(&f, &mut m);
        assert_eq!(piv.len(), r);
        for (i, &c) in piv.iter().enumerate() {
            assert_eq!(m[i][c], 1);
        }
        assert_eq!(rank(&f, &[vec![1, 2, 0], vec![2, 1, 0]]), 1);
        assert_eq!(rank(&f, &[vec![0, 0, 0]]), 0);
    }

    #[test]
    fn pair_coordinates() {
        let f = GaloisField::with_default_modulus(5, 1).unwrap();
        let b1 = [1, 0, 2];
        let b2 = [0, 1, 3];
        let v = axpy(&f, &scale(&f, 3, &b1), 4, &b2);
        assert_eq!(coords_in_pair(&f, &v, &b1, &b2), Some((3, 4)));
        assert_eq!(coords_in_pair(&f, &[0, 0, 1], &b1, &b2), None);
    }
}
