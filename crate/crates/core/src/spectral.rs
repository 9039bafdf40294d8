//! Sparse Fourier representation of mean-zero real scalars on the torus
//! `[-pi, pi]^2`, together with the Sobolev norms used by every experiment.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * A field is `rho(x, y) = sum_k a_k exp(i k . (x, y))` over integer
//!   wavevectors `k`, with `a_{-k} = conj(a_k)` so that `rho` is real.
//! * Norms are physical integrals, not mode averages:
//!   `||rho||_{L^2}^2 = (2 pi)^2 sum_k |a_k|^2`.
//! * For `s >= 0` the Sobolev weight is inhomogeneous, `(1 + |k|^2)^s`.
//!   For `s < 0` it is homogeneous, `|k|^{2s}`, which is finite precisely
//!   because the mean mode is excluded.
//! * `mixing_scale = ||rho||_{H^-1} / ||rho||_{L^2}` (a length scale in
//!   `(0, 1]` territory for unit-scale data; it equals `1/|k|` on a single
//!   conjugate pair).

use std::collections::BTreeMap;

use thiserror::Error;

pub use num_complex::Complex64;

/// Amplitudes below this magnitude are dropped from sparse storage; the
/// associated L^2 mass is accumulated on the owning field's error ledger.
pub const PRUNE_THRESHOLD: f64 = 1e-300;

/// `(2 pi)^2`, the measure of the torus; the prefactor of every squared norm.
pub const TORUS_MEASURE: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("amplitude at the mean mode (0,0) must be absent or exactly zero")]
    MeanNotZero,
    #[error("mode ({kx},{ky}) lies outside the truncation band {band}")]
    OutOfBand { kx: i64, ky: i64, band: i64 },
    #[error("mode ({kx},{ky}) supplied twice (directly or via its conjugate)")]
    DuplicateMode { kx: i64, ky: i64 },
    #[error("modes ({kx},{ky}) and its negation do not form an exact conjugate pair")]
    NotConjugate { kx: i64, ky: i64 },
    #[error("non-finite amplitude at mode ({kx},{ky})")]
    NotFinite { kx: i64, ky: i64 },
    #[error("operation undefined on the zero field")]
    ZeroField,
}

/// Integer wavevector on the torus. Ordering is lexicographic in `(kx, ky)`,
/// which fixes the reduction order of every norm sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wavevector {
    pub kx: i64,
    pub ky: i64,
}

impl Wavevector {
    pub fn new(kx: i64, ky: i64) -> Self {
        Wavevector { kx, ky }
    }

    pub fn neg(self) -> Self {
        Wavevector { kx: -self.kx, ky: -self.ky }
    }

    pub fn mag_sq(self) -> i64 {
        self.kx * self.kx + self.ky * self.ky
    }

    pub fn is_mean(self) -> bool {
        self.kx == 0 && self.ky == 0
    }
}

/// Sparse spectral field. Invariants, enforced by every constructor:
///
/// * every stored mode satisfies `|kx| <= band` and `|ky| <= band`;
/// * the mean mode is never stored (mean-zero);
/// * `a_{-k}` is stored and bitwise equal to `conj(a_k)` (real field);
/// * no stored amplitude is zero or below [`PRUNE_THRESHOLD`] in magnitude
///   (canonical sparse form; pruned mass goes to the error ledger).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2D {
    modes: BTreeMap<Wavevector, Complex64>,
    band: i64,
    dropped_l2_sq: f64,
}

impl SpectralField2D {
    pub fn new(band: i64) -> Self {
        assert!(band >= 1, "truncation band must be at least 1");
        SpectralField2D { modes: BTreeMap::new(), band, dropped_l2_sq: 0.0 }
    }

    /// Inserts the conjugate pair `a` at `k` and `conj(a)` at `-k`.
    ///
    /// Zero and sub-threshold amplitudes are pruned on entry (the threshold
    /// case feeds the ledger), so the canonical-form invariant holds without
    /// a separate normalization pass.
    pub fn insert_pair(&mut self, k: Wavevector, a: Complex64) -> Result<(), FieldError> {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(FieldError::NotFinite { kx: k.kx, ky: k.ky });
        }
        if k.is_mean() {
            if a == Complex64::new(0.0, 0.0) {
                return Ok(());
            }
            return Err(FieldError::MeanNotZero);
        }
        if k.kx.abs() > self.band || k.ky.abs() > self.band {
            return Err(FieldError::OutOfBand { kx: k.kx, ky: k.ky, band: self.band });
        }
        if self.modes.contains_key(&k) || self.modes.contains_key(&k.neg()) {
            return Err(FieldError::DuplicateMode { kx: k.kx, ky: k.ky });
        }
        let mag = a.norm();
        if mag == 0.0 {
            return Ok(());
        }
        if mag < PRUNE_THRESHOLD {
            self.dropped_l2_sq += 2.0 * TORUS_MEASURE * a.norm_sqr();
            return Ok(());
        }
        self.modes.insert(k, a);
        self.modes.insert(k.neg(), a.conj());
        Ok(())
    }

    /// Builds a field from half-spectrum pairs; each entry stands for itself
    /// and its conjugate at the negated wavevector.
    pub fn from_pairs<I>(band: i64, pairs: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (Wavevector, Complex64)>,
    {
        let mut field = SpectralField2D::new(band);
        for (k, a) in pairs {
            field.insert_pair(k, a)?;
        }
        Ok(field)
    }

    /// Rebuilds a field from a complete mode list (both halves present), as
    /// read back from a checkpoint. Validates every invariant, including
    /// bitwise conjugate pairing, and restores the error ledger verbatim.
    pub fn from_full_modes<I>(band: i64, modes: I, dropped_l2_sq: f64) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (Wavevector, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, a) in modes {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(FieldError::NotFinite { kx: k.kx, ky: k.ky });
            }
            if k.is_mean() && a != Complex64::new(0.0, 0.0) {
                return Err(FieldError::MeanNotZero);
            }
            if k.kx.abs() > band || k.ky.abs() > band {
                return Err(FieldError::OutOfBand { kx: k.kx, ky: k.ky, band });
            }
            let mag = a.norm();
            if mag == 0.0 {
                continue;
            }
            if map.insert(k, a).is_some() {
                return Err(FieldError::DuplicateMode { kx: k.kx, ky: k.ky });
            }
        }
        for (k, a) in &map {
            match map.get(&k.neg()) {
                Some(b) if *b == a.conj() => {}
                _ => return Err(FieldError::NotConjugate { kx: k.kx, ky: k.ky }),
            }
        }
        Ok(SpectralField2D { modes: map, band, dropped_l2_sq })
    }

    /// Internal constructor for module code that builds both halves itself
    /// (the solver mirrors the negative-x half from the positive one, so the
    /// pairing is exact by construction).
    pub(crate) fn from_parts_unchecked(
        modes: BTreeMap<Wavevector, Complex64>,
        band: i64,
        dropped_l2_sq: f64,
    ) -> Self {
        debug_assert!(modes.iter().all(|(k, a)| {
            !k.is_mean()
                && k.kx.abs() <= band
                && k.ky.abs() <= band
                && a.norm() >= PRUNE_THRESHOLD
                && modes.get(&k.neg()).copied() == Some(a.conj())
        }));
        SpectralField2D { modes, band, dropped_l2_sq }
    }

    pub fn band(&self) -> i64 {
        self.band
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn amplitude(&self, k: Wavevector) -> Complex64 {
        self.modes.get(&k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// All stored modes in wavevector order.
    pub fn modes(&self) -> impl Iterator<Item = (Wavevector, Complex64)> + '_ {
        self.modes.iter().map(|(k, a)| (*k, *a))
    }

    /// Accumulated L^2 mass (squared, integral convention) lost to pruning
    /// and band truncation.
    pub fn dropped_l2_sq(&self) -> f64 {
        self.dropped_l2_sq
    }

    pub(crate) fn add_dropped_l2_sq(&mut self, amount: f64) {
        self.dropped_l2_sq += amount;
    }

    /// `sqrt((2 pi)^2 sum |a_k|^2)`, summed in wavevector order.
    pub fn norm_l2(&self) -> f64 {
        let sum: f64 = self.modes.values().map(|a| a.norm_sqr()).sum();
        (TORUS_MEASURE * sum).sqrt()
    }

    /// Sobolev norm of order `s`: inhomogeneous weight `(1 + |k|^2)^s` for
    /// `s >= 0`, homogeneous weight `|k|^{2s}` for `s < 0`. The homogeneous
    /// branch is well defined because the mean mode is structurally excluded.
    pub fn norm_sobolev(&self, s: f64) -> f64 {
        let sum: f64 = self
            .modes
            .iter()
            .map(|(k, a)| sobolev_weight(k.mag_sq() as f64, s) * a.norm_sqr())
            .sum();
        (TORUS_MEASURE * sum).sqrt()
    }

    /// `||rho||_{H^-1} / ||rho||_{L^2}`; errors on the zero field.
    pub fn mixing_scale(&self) -> Result<f64, FieldError> {
        if self.modes.is_empty() {
            return Err(FieldError::ZeroField);
        }
        Ok(self.norm_sobolev(-1.0) / self.norm_l2())
    }

    /// Pointwise evaluation (real part is exact by conjugate symmetry; used
    /// by quadrature cross-checks, not by any hot path).
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for (k, a) in &self.modes {
            let th = k.kx as f64 * x + k.ky as f64 * y;
            acc += a.re * th.cos() - a.im * th.sin();
        }
        acc
    }
}

fn sobolev_weight(mag_sq: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if s == 1.0 {
        1.0 + mag_sq
    } else if s == -1.0 {
        1.0 / mag_sq
    } else if s >= 0.0 {
        (1.0 + mag_sq).powf(s)
    } else {
        mag_sq.powf(s)
    }
}

/// Sparse Fourier coefficients of a real function of `y` alone, stored with
/// both conjugate halves. Constructors keep the Hermitian pairing exact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct YSpectrum {
    coeffs: BTreeMap<i64, Complex64>,
}

impl YSpectrum {
    pub fn zero() -> Self {
        YSpectrum { coeffs: BTreeMap::new() }
    }

    /// The constant function `c`.
    pub fn constant(c: f64) -> Self {
        let mut s = YSpectrum::zero();
        if c != 0.0 {
            s.coeffs.insert(0, Complex64::new(c, 0.0));
        }
        s
    }

    /// `amp * cos(l y)` for `l > 0`.
    pub fn cos_wave(l: i64, amp: f64) -> Self {
        assert!(l > 0);
        let mut s = YSpectrum::zero();
        if amp != 0.0 {
            s.coeffs.insert(l, Complex64::new(amp / 2.0, 0.0));
            s.coeffs.insert(-l, Complex64::new(amp / 2.0, 0.0));
        }
        s
    }

    /// `amp * sin(l y)` for `l > 0`.
    pub fn sin_wave(l: i64, amp: f64) -> Self {
        assert!(l > 0);
        let mut s = YSpectrum::zero();
        if amp != 0.0 {
            s.coeffs.insert(l, Complex64::new(0.0, -amp / 2.0));
            s.coeffs.insert(-l, Complex64::new(0.0, amp / 2.0));
        }
        s
    }

    /// Builds a spectrum from coefficients on `l >= 0`; negative modes are
    /// mirrored as conjugates. The `l = 0` entry must be real.
    pub fn from_half_pairs<I>(pairs: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut s = YSpectrum::zero();
        for (l, c) in pairs {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FieldError::NotFinite { kx: 0, ky: l });
            }
            if l < 0 {
                return Err(FieldError::NotConjugate { kx: 0, ky: l });
            }
            if l == 0 && c.im != 0.0 {
                return Err(FieldError::NotConjugate { kx: 0, ky: 0 });
            }
            if c.norm() == 0.0 {
                continue;
            }
            if s.coeffs.insert(l, c).is_some() {
                return Err(FieldError::DuplicateMode { kx: 0, ky: l });
            }
            if l != 0 {
                s.coeffs.insert(-l, c.conj());
            }
        }
        Ok(s)
    }

    /// Rebuilds from a complete coefficient list (checkpoint load path),
    /// validating exact Hermitian pairing.
    pub fn from_full_pairs<I>(pairs: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (l, c) in pairs {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FieldError::NotFinite { kx: 0, ky: l });
            }
            if c.norm() == 0.0 {
                continue;
            }
            if map.insert(l, c).is_some() {
                return Err(FieldError::DuplicateMode { kx: 0, ky: l });
            }
        }
        let spec = YSpectrum { coeffs: map };
        for (&l, c) in &spec.coeffs {
            if spec.coeffs.get(&-l).copied() != Some(c.conj()) {
                return Err(FieldError::NotConjugate { kx: 0, ky: l });
            }
        }
        Ok(spec)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mode_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest `|l|` carrying a coefficient (0 for the zero spectrum).
    pub fn support_radius(&self) -> i64 {
        self.coeffs.keys().map(|l| l.abs()).max().unwrap_or(0)
    }

    pub fn coeff(&self, l: i64) -> Complex64 {
        self.coeffs.get(&l).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(l, c)| (*l, *c))
    }

    /// `integral f^2 dy = 2 pi sum |c_l|^2` over one period.
    pub fn l2_sq_integral(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `integral (f')^2 dy = 2 pi sum l^2 |c_l|^2`.
    pub fn deriv_l2_sq_integral(&self) -> f64 {
        2.0 * std::f64::consts::PI
            * self.coeffs.iter().map(|(l, c)| (*l as f64).powi(2) * c.norm_sqr()).sum::<f64>()
    }

    /// Upper bound for `sup |f|` (triangle inequality over modes).
    pub fn sup_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Pointwise evaluation, exact-real via the Hermitian pairing.
    pub fn evaluate(&self, y: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        for (&l, c) in self.coeffs.range(1..) {
            let th = l as f64 * y;
            acc += 2.0 * (c.re * th.cos() - c.im * th.sin());
        }
        acc
    }

    pub fn scale(&self, s: f64) -> YSpectrum {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c.norm() * s.abs() != 0.0)
            .map(|(l, c)| (*l, c * s))
            .collect();
        YSpectrum { coeffs }
    }

    pub fn add(&self, other: &YSpectrum) -> YSpectrum {
        let mut coeffs = self.coeffs.clone();
        for (&l, &c) in &other.coeffs {
            let e = coeffs.entry(l).or_insert(Complex64::new(0.0, 0.0));
            *e += c;
        }
        coeffs.retain(|_, c| c.norm() != 0.0);
        YSpectrum { coeffs }
    }
}

/// Raised by [`convolve_capped`] when the product support would exceed the
/// configured mode budget.
#[derive(Debug, Error, PartialEq)]
#[error("convolution support would exceed the cap of {cap} stored modes")]
pub struct CapExceeded {
    pub cap: usize,
}

/// Convolution of two Hermitian spectra, `c_l = sum_m a_m b_{l-m}`.
///
/// Only `l >= 0` is accumulated (in key order, so the result is
/// deterministic); negative modes are mirrored afterwards, which keeps the
/// Hermitian pairing bitwise exact, and the `l = 0` coefficient is assembled
/// from explicitly conjugate-paired products so it is exactly real.
pub fn convolve_capped(
    a: &YSpectrum,
    b: &YSpectrum,
    cap: usize,
) -> Result<YSpectrum, CapExceeded> {
    let mut half: BTreeMap<i64, Complex64> = BTreeMap::new();
    let mut at_zero = 0.0;
    for (la, ca) in a.iter() {
        for (lb, cb) in b.iter() {
            let l = la + lb;
            if l < 0 {
                continue;
            }
            let v = ca * cb;
            if l == 0 {
                // Pairs (la, lb) and (-la, -lb) contribute v + conj(v).
                // Counting each ordered pair once with its real part doubled
                // covers both, except the self-paired product at la = lb = 0.
                if la == 0 {
                    at_zero += v.re;
                } else if la > 0 {
                    at_zero += 2.0 * v.re;
                }
                continue;
            }
            *half.entry(l).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
    }
    half.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
    let mut out: BTreeMap<i64, Complex64> = BTreeMap::new();
    if at_zero.abs() >= PRUNE_THRESHOLD {
        out.insert(0, Complex64::new(at_zero, 0.0));
    }
    for (&l, &c) in &half {
        out.insert(l, c);
        out.insert(-l, c.conj());
    }
    if out.len() > cap {
        return Err(CapExceeded { cap });
    }
    Ok(YSpectrum { coeffs: out })
}

/// Norms of the single-x-mode field `f(y) sin x + g(y) cos x`, computed
/// directly from the profile spectra.
///
/// Writing the field's 2D modes as `a_{(1,l)} = (g_l - i f_l)/2`, the cross
/// terms between `f` and `g` cancel over `l <-> -l` for every even weight,
/// leaving diagonal sums: with `p_l = |f_l|^2 + |g_l|^2`,
///
/// * `L^2^2     = 2 pi^2 sum_l p_l`
/// * `H^1^2     = 2 pi^2 sum_l (2 + l^2) p_l`
/// * `H^-1^2    = 2 pi^2 sum_l p_l / (1 + l^2)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XModeNorms {
    pub l2: f64,
    pub h1: f64,
    pub hneg1: f64,
}

pub fn single_xmode_norms(f: &YSpectrum, g: &YSpectrum) -> XModeNorms {
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    let mut hneg1_sq = 0.0;
    let mut ls: Vec<i64> = f.iter().map(|(l, _)| l).chain(g.iter().map(|(l, _)| l)).collect();
    ls.sort_unstable();
    ls.dedup();
    let two_pi_sq = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    for l in ls {
        let p = f.coeff(l).norm_sqr() + g.coeff(l).norm_sqr();
        let lsq = (l * l) as f64;
        l2_sq += p;
        h1_sq += (2.0 + lsq) * p;
        hneg1_sq += p / (1.0 + lsq);
    }
    XModeNorms {
        l2: (two_pi_sq * l2_sq).sqrt(),
        h1: (two_pi_sq * h1_sq).sqrt(),
        hneg1: (two_pi_sq * hneg1_sq).sqrt(),
    }
}

/// Assembles `f(y) sin x + g(y) cos x` as a sparse 2D field:
/// `a_{(1,l)} = (g_l - i f_l)/2`, with the `kx = -1` half mirrored as
/// conjugates. The band is the smallest one containing the result.
pub fn single_xmode_assemble(f: &YSpectrum, g: &YSpectrum) -> SpectralField2D {
    let mut modes: BTreeMap<Wavevector, Complex64> = BTreeMap::new();
    let mut ls: Vec<i64> = f.iter().map(|(l, _)| l).chain(g.iter().map(|(l, _)| l)).collect();
    ls.sort_unstable();
    ls.dedup();
    let band = ls.iter().map(|l| l.abs()).max().unwrap_or(0).max(1);
    let i = Complex64::new(0.0, 1.0);
    for l in ls {
        let a = (g.coeff(l) - i * f.coeff(l)) / 2.0;
        if a.norm() < PRUNE_THRESHOLD {
            continue;
        }
        modes.insert(Wavevector::new(1, l), a);
        modes.insert(Wavevector::new(-1, -l), a.conj());
    }
    SpectralField2D::from_parts_unchecked(modes, band, 0.0)
}

/// `||f sin x + g cos x||_{H^1}`, evaluated spectrally via the identity
/// `H^1^2 = 2 pi ||f||^2 + 2 pi ||g||^2 + pi ||f'||^2 + pi ||g'||^2`
/// (the weight `2 + l^2` per profile mode).
pub fn h1_single_xmode(f: &YSpectrum, g: &YSpectrum) -> f64 {
    single_xmode_norms(f, g).h1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// sin x as a field: a_{(1,0)} = -i/2.
    fn sin_x() -> SpectralField2D {
        SpectralField2D::from_pairs(1, [(Wavevector::new(1, 0), c(0.0, -0.5))]).unwrap()
    }

    /// Midpoint-rule quadrature of rho^2 over the torus; spectrally accurate
    /// for trigonometric polynomials once n exceeds twice the band.
    fn l2_sq_by_quadrature(field: &SpectralField2D, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -PI + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -PI + (j as f64 + 0.5) * h;
                let v = field.evaluate(x, y);
                acc += v * v;
            }
        }
        acc * h * h
    }

    #[test]
    fn norm_l2_of_sin_x_is_sqrt2_pi() {
        assert!((sin_x().norm_l2() - 2f64.sqrt() * PI).abs() < 1e-14);
    }

    #[test]
    fn norm_l2_matches_quadrature_oracle() {
        let field = SpectralField2D::from_pairs(
            4,
            [
                (Wavevector::new(1, 0), c(0.0, -0.5)),
                (Wavevector::new(2, -3), c(0.3, 0.7)),
                (Wavevector::new(0, 4), c(-0.2, 0.1)),
            ],
        )
        .unwrap();
        let quad = l2_sq_by_quadrature(&field, 32).sqrt();
        assert!((field.norm_l2() - quad).abs() < 1e-11 * quad);
    }

    #[test]
    fn sobolev_examples_pin_the_convention() {
        // 2 cos(x+y): unit amplitudes on +-(1,1).
        let two_cos = SpectralField2D::from_pairs(1, [(Wavevector::new(1, 1), c(1.0, 0.0))]).unwrap();
        assert!((two_cos.norm_l2() - 2.0 * 2f64.sqrt() * PI).abs() < 1e-13);
        // s = -1: homogeneous weight 1/2 on each of the two unit amplitudes.
        assert!((two_cos.norm_sobolev(-1.0) - 2.0 * PI).abs() < 1e-13);
        // s = 1: weight 1 + 2 = 3 on each of the two unit amplitudes,
        // i.e. sqrt((2 pi)^2 * 6) = 2 sqrt(6) pi. Cross-checked against the
        // physical integral: rho^2 + |grad rho|^2 integrates to 24 pi^2.
        assert!((two_cos.norm_sobolev(1.0) - 2.0 * 6f64.sqrt() * PI).abs() < 1e-13);

        // sin x + cos 3y, s = -1: weights 1 and 1/9 on half-amplitudes 1/2.
        let mixed = SpectralField2D::from_pairs(
            3,
            [(Wavevector::new(1, 0), c(0.0, -0.5)), (Wavevector::new(0, 3), c(0.5, 0.0))],
        )
        .unwrap();
        let expect = (TORUS_MEASURE * (0.25 + 0.25 / 9.0) * 2.0).sqrt();
        assert!((mixed.norm_sobolev(-1.0) - expect).abs() < 1e-13);
    }

    #[test]
    fn h1_of_sin_x_is_2pi() {
        assert!((sin_x().norm_sobolev(1.0) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn mixing_scale_is_inverse_wavenumber_on_a_pair() {
        for (kx, ky) in [(1i64, 0i64), (1, 1), (3, -4), (0, 7)] {
            let f =
                SpectralField2D::from_pairs(8, [(Wavevector::new(kx, ky), c(0.4, -0.9))]).unwrap();
            let expect = 1.0 / ((kx * kx + ky * ky) as f64).sqrt();
            assert!((f.mixing_scale().unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn mixing_scale_rejects_zero_field() {
        let z = SpectralField2D::new(4);
        assert_eq!(z.mixing_scale(), Err(FieldError::ZeroField));
    }

    #[test]
    fn mean_mode_is_rejected() {
        let err = SpectralField2D::from_pairs(2, [(Wavevector::new(0, 0), c(1.0, 0.0))]);
        assert_eq!(err.unwrap_err(), FieldError::MeanNotZero);
        // An exactly zero mean amplitude is tolerated and simply not stored.
        let ok = SpectralField2D::from_pairs(2, [(Wavevector::new(0, 0), c(0.0, 0.0))]).unwrap();
        assert!(ok.is_zero());
    }

    #[test]
    fn out_of_band_is_rejected() {
        let err = SpectralField2D::from_pairs(2, [(Wavevector::new(3, 0), c(1.0, 0.0))]);
        assert!(matches!(err.unwrap_err(), FieldError::OutOfBand { .. }));
    }

    #[test]
    fn tiny_amplitudes_are_pruned_onto_the_ledger() {
        let a = c(1e-301, 0.0);
        let f = SpectralField2D::from_pairs(2, [(Wavevector::new(1, 0), a)]).unwrap();
        assert!(f.is_zero());
        let expect = 2.0 * TORUS_MEASURE * a.norm_sqr();
        assert!((f.dropped_l2_sq() - expect).abs() <= f64::EPSILON * expect);
    }

    #[test]
    fn full_mode_list_round_trips_and_validates() {
        let f = SpectralField2D::from_pairs(
            5,
            [(Wavevector::new(1, 2), c(0.1, 0.2)), (Wavevector::new(0, 5), c(-0.3, 0.05))],
        )
        .unwrap();
        let rebuilt =
            SpectralField2D::from_full_modes(5, f.modes(), f.dropped_l2_sq()).unwrap();
        assert_eq!(f, rebuilt);

        let broken = SpectralField2D::from_full_modes(
            5,
            [(Wavevector::new(1, 0), c(0.5, 0.5)), (Wavevector::new(-1, 0), c(0.5, 0.5))],
            0.0,
        );
        assert!(matches!(broken.unwrap_err(), FieldError::NotConjugate { .. }));
    }

    #[test]
    fn single_xmode_assembly_matches_hand_modes() {
        // f = 1, g = 0: rho = sin x, so a_{(1,0)} = -i/2.
        let f = YSpectrum::constant(1.0);
        let g = YSpectrum::zero();
        let field = single_xmode_assemble(&f, &g);
        assert_eq!(field.amplitude(Wavevector::new(1, 0)), c(0.0, -0.5));
        assert_eq!(field.amplitude(Wavevector::new(-1, 0)), c(0.0, 0.5));

        // f = 0, g = cos y: rho = cos x cos y, norm pi (quadrature-checked).
        let g = YSpectrum::cos_wave(1, 1.0);
        let field = single_xmode_assemble(&YSpectrum::zero(), &g);
        assert!((field.norm_l2() - PI).abs() < 1e-13);
        let quad = l2_sq_by_quadrature(&field, 16).sqrt();
        assert!((field.norm_l2() - quad).abs() < 1e-12);
    }

    #[test]
    fn h1_single_xmode_closed_form_and_spectral_route_agree() {
        // f = sin y, g = cos y: rho = cos(x - y), H^1 = sqrt(6) pi.
        let f = YSpectrum::sin_wave(1, 1.0);
        let g = YSpectrum::cos_wave(1, 1.0);
        let direct = h1_single_xmode(&f, &g);
        assert!((direct - (6.0 * PI * PI).sqrt()).abs() < 1e-13);
        let assembled = single_xmode_assemble(&f, &g).norm_sobolev(1.0);
        assert!((direct - assembled).abs() < 1e-12 * direct);
    }

    #[test]
    fn h1_of_constant_profile_is_2pi() {
        // f = 1, g = 0: H^1(sin x) = 2 pi.
        let h = h1_single_xmode(&YSpectrum::constant(1.0), &YSpectrum::zero());
        assert!((h - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn convolution_matches_pointwise_products() {
        let a = YSpectrum::from_half_pairs([
            (0, c(0.3, 0.0)),
            (1, c(0.2, -0.4)),
            (3, c(-0.1, 0.05)),
        ])
        .unwrap();
        let b = YSpectrum::from_half_pairs([(1, c(0.5, 0.1)), (2, c(0.0, 0.7))]).unwrap();
        let prod = convolve_capped(&a, &b, 1 << 10).unwrap();
        for i in 0..17 {
            let y = -PI + 2.0 * PI * i as f64 / 17.0;
            let expect = a.evaluate(y) * b.evaluate(y);
            assert!((prod.evaluate(y) - expect).abs() < 1e-14);
        }
        // Hermitian pairing is exact, and l = 0 is exactly real.
        for (l, cv) in prod.iter() {
            assert_eq!(prod.coeff(-l), cv.conj());
        }
        assert_eq!(prod.coeff(0).im, 0.0);
    }

    #[test]
    fn convolution_cap_is_enforced() {
        let a = YSpectrum::from_half_pairs((0..6).map(|l| (l, c(1.0, 0.0)))).unwrap();
        let err = convolve_capped(&a, &a, 4).unwrap_err();
        assert_eq!(err, CapExceeded { cap: 4 });
    }

    #[test]
    fn yspectrum_evaluation_and_integrals() {
        let s = YSpectrum::sin_wave(3, 2.0);
        assert!((s.evaluate(0.4) - 2.0 * (1.2f64).sin()).abs() < 1e-15);
        assert!((s.l2_sq_integral() - 4.0 * PI).abs() < 1e-13);
        assert!((s.deriv_l2_sq_integral() - 36.0 * PI).abs() < 1e-12);
        assert!((s.sup_bound() - 2.0).abs() < 1e-15);
    }
}
