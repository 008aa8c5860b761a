//! Bitmask exterior algebra on the `2d` generators `dz₁…dz_d, dz̄₁…dz̄_d`.
//!
//! A basis monomial is a mask; bit `j < d` is `dz_{j+1}`, bit `d + j` is
//! `dz̄_{j+1}`. Monomials are written with generators in increasing bit
//! order, so `dz_I ∧ dz̄_J` is the canonical form.

pub type Mask = u32;

pub fn holomorphic_bit(j: usize) -> Mask {
    1 << j
}

pub fn antiholomorphic_bit(d: usize, j: usize) -> Mask {
    1 << (d + j)
}

/// Number of holomorphic (`p`) and antiholomorphic (`q`) generators in `m`.
pub fn bidegree(d: usize, m: Mask) -> (usize, usize) {
    let hol = m & ((1 << d) - 1);
    (hol.count_ones() as usize, (m >> d).count_ones() as usize)
}

/// Sign of `e_a ∧ e_b = ± e_{a|b}`, or `None` when `a` and `b` overlap.
pub fn wedge_sign(a: Mask, b: Mask) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        // generators of `a` above y must pass over it
        swaps += (a >> (y + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps % 2 == 0 { 1.0 } else { -1.0 })
}

/// `ι_g e_m`: removes generator `g`; `None` when `g ∉ m`.
pub fn interior(g: usize, m: Mask) -> Option<(Mask, f64)> {
    let bit = 1 << g;
    if m & bit == 0 {
        return None;
    }
    let below = (m & (bit - 1)).count_ones();
    Some((m & !bit, if below % 2 == 0 { 1.0 } else { -1.0 }))
}

/// `e_g ∧ e_m`.
pub fn wedge_generator(g: usize, m: Mask) -> Option<(Mask, f64)> {
    wedge_sign(1 << g, m).map(|s| (m | (1 << g), s))
}

/// All masks with exactly `p` holomorphic and `q` antiholomorphic bits,
/// ascending.
pub fn masks_of_bidegree(d: usize, p: usize, q: usize) -> Vec<Mask> {
    (0..(1u32 << (2 * d)))
        .filter(|&m| bidegree(d, m) == (p, q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        // d = 2: bits 0,1 = dz1,dz2; bits 2,3 = dz̄1,dz̄2
        assert_eq!(wedge_sign(0b0001, 0b0010), Some(1.0)); // dz1∧dz2
        assert_eq!(wedge_sign(0b0010, 0b0001), Some(-1.0)); // dz2∧dz1
        assert_eq!(wedge_sign(0b0100, 0b0010), Some(-1.0)); // dz̄1∧dz2 = −dz2∧dz̄1
        assert_eq!(wedge_sign(0b0011, 0b0011), None);
        // (dz1∧dz2)∧(dz̄1∧dz̄2) canonical
        assert_eq!(wedge_sign(0b0011, 0b1100), Some(1.0));
        // (dz̄1∧dz̄2)∧(dz1∧dz2): four transpositions
        assert_eq!(wedge_sign(0b1100, 0b0011), Some(1.0));
        // dz̄1 ∧ (dz1∧dz2): passes two generators
        assert_eq!(wedge_sign(0b0100, 0b0011), Some(1.0));
    }

    #[test]
    fn interior_signs() {
        assert_eq!(interior(0, 0b0011), Some((0b0010, 1.0)));
        assert_eq!(interior(1, 0b0011), Some((0b0001, -1.0)));
        assert_eq!(interior(2, 0b0011), None);
    }

    #[test]
    fn interior_is_adjoint_of_wedge() {
        // ι_g(e_g ∧ e_m) = e_m when g ∉ m
        for m in 0u32..16 {
            for g in 0..4 {
                if let Some((w, s)) = wedge_generator(g, m) {
                    let (back, s2) = interior(g, w).unwrap();
                    assert_eq!(back, m);
                    assert_eq!(s * s2, 1.0);
                }
            }
        }
    }

    #[test]
    fn bidegree_counts() {
        assert_eq!(masks_of_bidegree(2, 1, 1).len(), 4);
        assert_eq!(masks_of_bidegree(3, 0, 2).len(), 3);
        assert_eq!(bidegree(2, 0b1011), (2, 1));
    }
}
