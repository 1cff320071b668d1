//! Signed-power maps between velocity and p-momentum, the dual energies,
//! the `A_q` tensor and the monotonicity inequality.

use crate::error::{Error, Result};
use crate::fields::{lp_norm_pow, TensorField2, VectorField2};
use crate::par;

/// A conjugate exponent pair `1/p + 1/q = 1`, `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponent {
    p: f64,
    q: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self {
            p,
            q: p / (p - 1.0),
        })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The pair with roles swapped.
    pub fn dual(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
        }
    }
}

/// `|v|^{r-2} v` for a single 2-vector, with `0 ↦ 0`.
#[inline]
pub fn signed_power(v: [f64; 2], r: f64) -> [f64; 2] {
    let m = v[0].hypot(v[1]);
    if m == 0.0 {
        return [0.0, 0.0];
    }
    let f = m.powf(r - 2.0);
    [f * v[0], f * v[1]]
}

/// `|v|^{p-2} v` for a single vector.
pub fn p_power_vec(v: [f64; 2], p: PExponent) -> [f64; 2] {
    signed_power(v, p.p)
}

/// `|w|^{q-2} w` for a single vector.
pub fn q_power_vec(w: [f64; 2], p: PExponent) -> [f64; 2] {
    signed_power(w, p.q)
}

fn map_field(w: &VectorField2, r: f64) -> VectorField2 {
    let n = w.grid.len();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    // Two passes keep the helpers single-output; the map is cheap.
    par::fill(&mut u, |k| signed_power(w.at(k), r)[0]);
    par::fill(&mut v, |k| signed_power(w.at(k), r)[1]);
    VectorField2 { grid: w.grid, u, v }
}

/// Velocity to p-momentum, `v_p = |v|^{p-2} v`.
pub fn p_power(v: &VectorField2, p: PExponent) -> VectorField2 {
    map_field(v, p.p)
}

/// p-momentum to velocity, `v = |v_p|^{q-2} v_p`.
pub fn q_power(w: &VectorField2, p: PExponent) -> VectorField2 {
    map_field(w, p.q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    /// Lagrangian `∫ |v|^p / p`.
    pub lagrangian: f64,
    /// Hamiltonian `∫ |v_p|^q / q`.
    pub hamiltonian: f64,
}

/// Lagrangian of `v` and Hamiltonian of `p_power(v)`.
pub fn energies(v: &VectorField2, p: PExponent) -> Energies {
    let vp = p_power(v, p);
    // lp_norm_pow cannot fail for p, q > 1.
    let lagrangian = lp_norm_pow(v, p.p).unwrap_or(f64::NAN) / p.p;
    let hamiltonian = lp_norm_pow(&vp, p.q).unwrap_or(f64::NAN) / p.q;
    Energies {
        lagrangian,
        hamiltonian,
    }
}

/// `A_q(w) = I + (q - 2) ŵ ⊗ ŵ`, with `A_q(0) = I`.
pub fn a_q_tensor(w: &VectorField2, p: PExponent) -> TensorField2 {
    let n = w.grid.len();
    let c = p.q - 2.0;
    let comp = |k: usize| -> [f64; 4] {
        let [a, b] = w.at(k);
        let m2 = a * a + b * b;
        if m2 == 0.0 {
            return [1.0, 0.0, 0.0, 1.0];
        }
        let (ha, hb) = (a / m2.sqrt(), b / m2.sqrt());
        let off = c * (ha * hb);
        [1.0 + c * ha * ha, off, off, 1.0 + c * hb * hb]
    };
    let mut t = TensorField2 {
        grid: w.grid,
        xx: vec![0.0; n],
        xy: vec![0.0; n],
        yx: vec![0.0; n],
        yy: vec![0.0; n],
    };
    par::fill(&mut t.xx, |k| comp(k)[0]);
    par::fill(&mut t.xy, |k| comp(k)[1]);
    par::fill(&mut t.yx, |k| comp(k)[2]);
    par::fill(&mut t.yy, |k| comp(k)[3]);
    t
}

/// Both sides of the monotonicity inequality for vectors of any dimension:
/// `lhs = (|a|^{p-2}a - |b|^{p-2}b)·(a - b)` and
/// `rhs_unit = (|a| + |b|)^{p-2} |a - b|²`.
pub fn monotonicity_gap(a: &[f64], b: &[f64], p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    let fa = if na == 0.0 { 0.0 } else { na.powf(p - 2.0) };
    let fb = if nb == 0.0 { 0.0 } else { nb.powf(p - 2.0) };
    let mut lhs = 0.0;
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        lhs += (fa * x - fb * y) * d;
        d2 += d * d;
    }
    let rhs_unit = if d2 == 0.0 {
        0.0
    } else {
        (na + nb).powf(p - 2.0) * d2
    };
    Ok((lhs, rhs_unit))
}
