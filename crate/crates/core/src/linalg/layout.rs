use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// What a register segment is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentRole {
    /// Carries the operator's action.
    System,
    /// Projected onto `|0>` when reading a block.
    Encoding,
    /// Traced out.
    Garbage,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub qubits: usize,
    pub role: SegmentRole,
}

impl Segment {
    pub fn new(name: impl Into<String>, qubits: usize, role: SegmentRole) -> Self {
        Segment { name: name.into(), qubits, role }
    }
}

/// Ordered qubit segments. Segment 0 holds the most significant bits of a
/// basis index, so `tensor(a, b)` matches the layout `[a, b]`.
/// Zero-width segments are allowed and take no bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    segments: Vec<Segment>,
}

impl RegisterLayout {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &segments {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::InvalidLayout(format!("duplicate segment name `{}`", s.name)));
            }
        }
        Ok(RegisterLayout { segments })
    }

    /// Convenience constructor from `(name, qubits, role)` triples.
    pub fn from_parts(parts: &[(&str, usize, SegmentRole)]) -> Result<Self> {
        Self::new(parts.iter().map(|&(n, q, r)| Segment::new(n, q, r)).collect())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_qubits(&self) -> usize {
        self.segments.iter().map(|s| s.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_qubits()
    }

    pub fn segment(&self, name: &str) -> Result<&Segment> {
        self.segments
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSegment(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.segments.iter().any(|s| s.name == name)
    }

    /// Qubit offset of a segment counted from the most significant end.
    pub fn offset(&self, name: &str) -> Result<usize> {
        let mut off = 0;
        for s in &self.segments {
            if s.name == name {
                return Ok(off);
            }
            off += s.qubits;
        }
        Err(Error::UnknownSegment(name.to_string()))
    }

    /// Qubit positions (0 = most significant) of the named segments, in the
    /// order the names are given.
    pub fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in names {
            let off = self.offset(name)?;
            out.extend(off..off + self.segment(name)?.qubits);
        }
        Ok(out)
    }

    pub fn names_with_role(&self, role: SegmentRole) -> Vec<&str> {
        self.segments.iter().filter(|s| s.role == role).map(|s| s.name.as_str()).collect()
    }

    pub fn qubits_with_role(&self, role: SegmentRole) -> usize {
        self.segments.iter().filter(|s| s.role == role).map(|s| s.qubits).sum()
    }

    /// Layout made of the named segments only, in layout order.
    pub fn restrict(&self, keep: &[&str]) -> Result<RegisterLayout> {
        for k in keep {
            self.segment(k)?;
        }
        Ok(RegisterLayout {
            segments: self.segments.iter().filter(|s| keep.contains(&s.name.as_str())).cloned().collect(),
        })
    }

    /// Layout without the named segments.
    pub fn without(&self, drop: &[&str]) -> Result<RegisterLayout> {
        for d in drop {
            self.segment(d)?;
        }
        Ok(RegisterLayout {
            segments: self.segments.iter().filter(|s| !drop.contains(&s.name.as_str())).cloned().collect(),
        })
    }

    /// Copy with the named segments reassigned to `role`.
    pub fn with_role(&self, names: &[&str], role: SegmentRole) -> Result<RegisterLayout> {
        let mut out = self.clone();
        for name in names {
            let idx = out
                .segments
                .iter()
                .position(|s| s.name == *name)
                .ok_or_else(|| Error::UnknownSegment(name.to_string()))?;
            out.segments[idx].role = role;
        }
        Ok(out)
    }

    /// Copy with every segment name prefixed by `prefix`.
    pub fn prefixed(&self, prefix: &str) -> RegisterLayout {
        RegisterLayout {
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(format!("{prefix}{}", s.name), s.qubits, s.role))
                .collect(),
        }
    }

    /// Concatenation `self` then `other`.
    pub fn concat(&self, other: &RegisterLayout) -> Result<RegisterLayout> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        RegisterLayout::new(segs)
    }

    pub fn push(&mut self, seg: Segment) -> Result<()> {
        if self.contains(&seg.name) {
            return Err(Error::InvalidLayout(format!("duplicate segment name `{}`", seg.name)));
        }
        self.segments.push(seg);
        Ok(())
    }

    /// Splits every basis index into a kept part and a remainder part.
    pub fn split(&self, keep: &[&str]) -> Result<Split> {
        let total = self.total_qubits();
        let keep_pos: HashSet<usize> = self.positions(keep)?.into_iter().collect();
        let kept: Vec<usize> = (0..total).filter(|p| keep_pos.contains(p)).collect();
        let rest: Vec<usize> = (0..total).filter(|p| !keep_pos.contains(p)).collect();
        Ok(Split { total, kept_offsets: index_offsets(total, &kept), rest_offsets: index_offsets(total, &rest) })
    }
}

/// Lookup tables so that `index(k, r) = kept_offsets[k] | rest_offsets[r]`
/// for kept index `k` and remainder index `r`, both in layout bit order.
#[derive(Clone, Debug)]
pub struct Split {
    pub total: usize,
    pub kept_offsets: Vec<usize>,
    pub rest_offsets: Vec<usize>,
}

impl Split {
    pub fn kept_dim(&self) -> usize {
        self.kept_offsets.len()
    }

    pub fn rest_dim(&self) -> usize {
        self.rest_offsets.len()
    }

    #[inline]
    pub fn index(&self, kept: usize, rest: usize) -> usize {
        self.kept_offsets[kept] | self.rest_offsets[rest]
    }
}

/// For qubit positions `pos` (0 = most significant in a `total`-qubit register),
/// returns the full-register index contributed by each value of the sub-register
/// formed by those qubits, with `pos[0]` as its most significant bit.
pub fn index_offsets(total: usize, pos: &[usize]) -> Vec<usize> {
    let k = pos.len();
    (0..1usize << k)
        .map(|v| {
            let mut idx = 0;
            for (i, &p) in pos.iter().enumerate() {
                if (v >> (k - 1 - i)) & 1 == 1 {
                    idx |= 1 << (total - 1 - p);
                }
            }
            idx
        })
        .collect()
}

fn check_square(m: &ComplexMatrix, layout: &RegisterLayout) -> Result<()> {
    if !m.is_square() || m.rows() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix against a {}-qubit layout",
            m.rows(),
            m.cols(),
            layout.total_qubits()
        )));
    }
    Ok(())
}

fn check_vector(v: &[C64], layout: &RegisterLayout) -> Result<()> {
    if v.len() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against a {}-qubit layout",
            v.len(),
            layout.total_qubits()
        )));
    }
    Ok(())
}

/// Traces out every segment not named in `keep`.
pub fn partial_trace(m: &ComplexMatrix, layout: &RegisterLayout, keep: &[&str]) -> Result<ComplexMatrix> {
    check_square(m, layout)?;
    let s = layout.split(keep)?;
    let mut out = ComplexMatrix::zeros(s.kept_dim(), s.kept_dim());
    for i in 0..s.kept_dim() {
        for j in 0..s.kept_dim() {
            let mut acc = ZERO;
            for r in 0..s.rest_dim() {
                acc += m[(s.index(i, r), s.index(j, r))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density operator of the pure state `v` on the `keep` segments.
pub fn reduced_density(v: &[C64], layout: &RegisterLayout, keep: &[&str]) -> Result<ComplexMatrix> {
    check_vector(v, layout)?;
    let s = layout.split(keep)?;
    let mut out = ComplexMatrix::zeros(s.kept_dim(), s.kept_dim());
    for r in 0..s.rest_dim() {
        for i in 0..s.kept_dim() {
            let a = v[s.index(i, r)];
            if a == ZERO {
                continue;
            }
            for j in 0..s.kept_dim() {
                out[(i, j)] += a * v[s.index(j, r)].conj();
            }
        }
    }
    Ok(out)
}

/// `<0|m|0>` on the named segments, leaving an operator on the others.
pub fn project_zero(m: &ComplexMatrix, layout: &RegisterLayout, zero: &[&str]) -> Result<ComplexMatrix> {
    check_square(m, layout)?;
    let others: Vec<&str> = layout
        .segments()
        .iter()
        .map(|s| s.name.as_str())
        .filter(|n| !zero.contains(n))
        .collect();
    let s = layout.split(&others)?;
    for z in zero {
        layout.segment(z)?;
    }
    Ok(ComplexMatrix::from_fn(s.kept_dim(), s.kept_dim(), |i, j| m[(s.index(i, 0), s.index(j, 0))]))
}

/// `(<0| on the named segments) v`, a vector on the remaining segments.
pub fn project_zero_vector(v: &[C64], layout: &RegisterLayout, zero: &[&str]) -> Result<Vec<C64>> {
    check_vector(v, layout)?;
    for z in zero {
        layout.segment(z)?;
    }
    let others: Vec<&str> = layout
        .segments()
        .iter()
        .map(|s| s.name.as_str())
        .filter(|n| !zero.contains(n))
        .collect();
    let s = layout.split(&others)?;
    Ok((0..s.kept_dim()).map(|i| v[s.index(i, 0)]).collect())
}

/// Embeds a vector on `small` into `big` by placing `|0>` on every segment of
/// `big` that `small` lacks. Segment names shared by both must agree in width.
pub fn pad_with_zeros(v: &[C64], small: &RegisterLayout, big: &RegisterLayout) -> Result<Vec<C64>> {
    check_vector(v, small)?;
    let names: Vec<&str> = small.segments().iter().map(|s| s.name.as_str()).collect();
    for s in small.segments() {
        if big.segment(&s.name)?.qubits != s.qubits {
            return Err(Error::InvalidLayout(format!("segment `{}` changes width", s.name)));
        }
    }
    let split = big.split(&names)?;
    // the kept index of `big` orders bits by `big`'s layout, so reorder
    let order = small.restrict(&names)?;
    let same_order = order.segments().iter().map(|s| s.name.as_str()).eq(big
        .segments()
        .iter()
        .map(|s| s.name.as_str())
        .filter(|n| names.contains(n)));
    if !same_order {
        return Err(Error::InvalidLayout("shared segments must appear in the same order".into()));
    }
    let mut out = vec![ZERO; big.dim()];
    for (i, &a) in v.iter().enumerate() {
        out[split.index(i, 0)] = a;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::ONE;
    use SegmentRole::*;

    fn two(a: &str, b: &str) -> RegisterLayout {
        RegisterLayout::from_parts(&[(a, 1, System), (b, 1, Garbage)]).unwrap()
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(RegisterLayout::from_parts(&[("x", 1, System), ("x", 2, System)]).is_err());
    }

    #[test]
    fn index_offsets_big_endian() {
        assert_eq!(index_offsets(3, &[0]), vec![0, 4]);
        assert_eq!(index_offsets(3, &[2, 0]), vec![0, 4, 1, 5]);
    }

    #[test]
    fn trace_of_product_state() {
        let rho = ComplexMatrix::from_real_rows(&[&[0.75, 0.25], &[0.25, 0.25]]);
        let sigma = ComplexMatrix::from_real_diag(&[0.4, 0.6]);
        let l = two("a", "b");
        let t = partial_trace(&rho.kron(&sigma), &l, &["a"]).unwrap();
        assert!(t.max_abs_diff(&rho) < 1e-15);
        let t = partial_trace(&rho.kron(&sigma), &l, &["b"]).unwrap();
        assert!(t.max_abs_diff(&sigma) < 1e-15);
    }

    #[test]
    fn bell_state_marginal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        let l = two("a", "b");
        let m = ComplexMatrix::outer(&phi);
        let half = ComplexMatrix::from_real_diag(&[0.5, 0.5]);
        assert!(partial_trace(&m, &l, &["a"]).unwrap().max_abs_diff(&half) < 1e-15);
        assert!(reduced_density(&phi, &l, &["b"]).unwrap().max_abs_diff(&half) < 1e-15);
        assert!(partial_trace(&m, &l, &["a", "b"]).unwrap().max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn unknown_segment() {
        let l = two("a", "b");
        let m = ComplexMatrix::identity(4);
        assert_eq!(partial_trace(&m, &l, &["c"]), Err(Error::UnknownSegment("c".into())));
    }

    #[test]
    fn projection_picks_zero_block() {
        // 3 qubits: sys(1) enc(2); m = diag(0..8)
        let l = RegisterLayout::from_parts(&[("s", 1, System), ("e", 2, Encoding)]).unwrap();
        let m = ComplexMatrix::from_real_diag(&(0..8).map(|i| i as f64).collect::<Vec<_>>());
        let b = project_zero(&m, &l, &["e"]).unwrap();
        assert!(b.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.0, 4.0])) < 1e-15);
        let v: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 0.0)).collect();
        assert_eq!(project_zero_vector(&v, &l, &["s"]).unwrap(), v[..4].to_vec());
    }

    #[test]
    fn padding_inserts_zero_segment() {
        let small = RegisterLayout::from_parts(&[("s", 1, System), ("f", 1, Encoding)]).unwrap();
        let big = RegisterLayout::from_parts(&[("s", 1, System), ("pe", 2, Encoding), ("f", 1, Encoding)]).unwrap();
        let v = vec![ZERO, ONE, ZERO, ZERO];
        let p = pad_with_zeros(&v, &small, &big).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p[1], ONE);
        let v = vec![ZERO, ZERO, ONE, ZERO];
        assert_eq!(pad_with_zeros(&v, &small, &big).unwrap()[8], ONE);
    }
}
