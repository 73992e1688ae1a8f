//! Quartic bulk potential and its convexified shift.
//!
//! ```text
//! F(Q) = a/2 |Q|² + b/3 tr(Q³) + c/4 |Q|⁴
//! G(Q) = F(Q) + Λ |Q|²
//! ```
//!
//! Gradients are taken on the manifold of symmetric traceless matrices, which
//! removes the isotropic Lagrange multiplier `λI` exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{frobenius_inner, tr_q3, traceless_square, Mat3, TracelessSymTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Convexity shift Λ.
    pub lambda: f64,
    /// Growth exponent audited against `|∂F(Q)| ≤ C̄(1 + |Q|^q)`.
    pub q: f64,
    pub c_bar: f64,
}

impl PotentialParams {
    pub fn new(a: f64, b: f64, c: f64, lambda: f64) -> Self {
        PotentialParams {
            a,
            b,
            c,
            lambda,
            q: 3.0,
            c_bar: Self::default_c_bar(a, b, c),
        }
    }

    /// The all-zero potential used by the linear wave problem.
    pub fn zero() -> Self {
        PotentialParams {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            lambda: 0.0,
            q: 3.0,
            c_bar: 1.0,
        }
    }

    pub fn default_c_bar(a: f64, b: f64, c: f64) -> f64 {
        1.0 + a.abs() + b.abs() + c.abs()
    }

    /// Shift `max(0, −a/2 + |b|·radius)` used when no Λ is configured.
    pub fn default_lambda(a: f64, b: f64, radius: f64) -> f64 {
        (-a / 2.0 + b.abs() * radius).max(0.0)
    }

    /// Checks the parameter invariants; `c = 0` is allowed only when `a = b = 0`.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("lambda", self.lambda),
            ("q", self.q),
            ("c_bar", self.c_bar),
        ] {
            if !v.is_finite() {
                errs.push(format!("potential.{name}: must be finite, got {v}"));
            }
        }
        let trivial = self.a == 0.0 && self.b == 0.0 && self.c == 0.0;
        if !(self.c > 0.0 || trivial) {
            errs.push(format!(
                "potential.c: must be > 0 for the convexity and growth assumptions, got {}",
                self.c
            ));
        }
        if self.lambda < 0.0 {
            errs.push(format!("potential.lambda: must be >= 0, got {}", self.lambda));
        }
        if self.q >= 5.0 {
            errs.push(format!("potential.q: growth exponent must be < 5, got {}", self.q));
        }
        if self.c_bar <= 0.0 {
            errs.push(format!("potential.c_bar: must be > 0, got {}", self.c_bar));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Smallest Λ for which `G` is convex along every ray through the origin.
    pub fn ray_threshold(&self) -> f64 {
        if self.c <= 0.0 {
            return (-self.a / 2.0).max(0.0);
        }
        (self.b * self.b / (36.0 * self.c) - self.a / 2.0).max(0.0)
    }

    /// Λ above which the Hessian bound guarantees convexity everywhere.
    pub fn hessian_threshold(&self) -> f64 {
        if self.c <= 0.0 {
            return if self.b == 0.0 {
                (-self.a / 2.0).max(0.0)
            } else {
                f64::INFINITY
            };
        }
        (self.b * self.b / (3.0 * self.c) - self.a / 2.0).max(0.0)
    }

    /// Minimum over all rays of `d²G(tQ̂)/dt²`.
    pub fn ray_min_curvature(&self) -> f64 {
        let base = self.a + 2.0 * self.lambda;
        if self.c <= 0.0 {
            return if self.b == 0.0 { base } else { f64::NEG_INFINITY };
        }
        base - self.b * self.b / (18.0 * self.c)
    }
}

pub fn bulk_value(q: &TracelessSymTensor, p: &PotentialParams) -> f64 {
    let s = q.norm_sq();
    p.a / 2.0 * s + p.b / 3.0 * tr_q3(q) + p.c / 4.0 * s * s
}

pub fn bulk_gradient(q: &TracelessSymTensor, p: &PotentialParams) -> TracelessSymTensor {
    let s = q.norm_sq();
    *q * (p.a + p.c * s) + traceless_square(q) * p.b
}

pub fn g_value(q: &TracelessSymTensor, p: &PotentialParams) -> f64 {
    bulk_value(q, p) + p.lambda * q.norm_sq()
}

pub fn g_gradient(q: &TracelessSymTensor, p: &PotentialParams) -> TracelessSymTensor {
    bulk_gradient(q, p) + *q * (2.0 * p.lambda)
}

/// Multiplier `λ = −(b/3)|Q|²` removed by the traceless projection.
pub fn lambda_multiplier(q: &TracelessSymTensor, p: &PotentialParams) -> f64 {
    -p.b / 3.0 * q.norm_sq()
}

/// Pointwise `G(Q) − ∂G(Q̃):(Q − Q̃) − G(Q̃)`.
pub fn convexity_gap(
    q: &TracelessSymTensor,
    q_tilde: &TracelessSymTensor,
    p: &PotentialParams,
) -> f64 {
    g_value(q, p) - frobenius_inner(&g_gradient(q_tilde, p), &(*q - *q_tilde)) - g_value(q_tilde, p)
}

/// Haar-distributed rotation with determinant +1.
pub fn random_orthogonal(rng: &mut impl Rng) -> Mat3 {
    loop {
        let mut cols = [[0.0; 3]; 3];
        for x in cols.iter_mut().flatten() {
            *x = rng.sample(StandardNormal);
        }
        let dot = |u: &[f64; 3], v: &[f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let mut ok = true;
        for i in 0..3 {
            for j in 0..i {
                let d = dot(&cols[i], &cols[j]);
                let cj = cols[j];
                for k in 0..3 {
                    cols[i][k] -= d * cj[k];
                }
            }
            let n = dot(&cols[i], &cols[i]).sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            cols[i].iter_mut().for_each(|x| *x /= n);
        }
        if !ok {
            continue;
        }
        let c = cols;
        let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1])
            - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
        if det < 0.0 {
            cols[2].iter_mut().for_each(|x| *x = -*x);
        }
        return Mat3::from_rows(cols).transpose();
    }
}

/// Uniform direction with norm uniform in `[0, radius]`.
pub fn random_tensor_in_ball(rng: &mut impl Rng, radius: f64) -> TracelessSymTensor {
    loop {
        let mut c = [0.0; 5];
        for x in &mut c {
            *x = rng.sample(StandardNormal);
        }
        let t = TracelessSymTensor(c);
        let n = t.norm();
        if n > 1e-12 {
            let r = radius * rng.random::<f64>();
            return t * (r / n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub params: PotentialParams,
    pub n_samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub isotropy_pass: bool,
    /// Largest `|F(Q) − F(RQRᵀ)| / (1 + |F(Q)|)`.
    pub isotropy_gap: f64,
    pub isotropy_witness: Option<(TracelessSymTensor, Mat3)>,
    pub convexity_pass: bool,
    /// Largest `G(mid) − (G(Q₁) + G(Q₂))/2` over sampled pairs.
    pub convexity_gap: f64,
    pub convexity_witness: Option<(TracelessSymTensor, TracelessSymTensor)>,
    pub min_g: f64,
    pub nonnegativity_witness: Option<TracelessSymTensor>,
    pub growth_pass: bool,
    /// Largest `|∂F(Q)| / (C̄(1 + |Q|^q))`.
    pub growth_ratio: f64,
    pub growth_witness: Option<TracelessSymTensor>,
    pub ray_threshold: f64,
    pub hessian_threshold: f64,
    pub ray_min_curvature: f64,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.isotropy_pass && self.convexity_pass && self.growth_pass
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let t = |q: &TracelessSymTensor| {
            let c = q.coeffs();
            format!("[{:.17e}, {:.17e}, {:.17e}, {:.17e}, {:.17e}]", c[0], c[1], c[2], c[3], c[4])
        };
        let m = |r: &Mat3| {
            let rows: Vec<String> = r
                .0
                .iter()
                .map(|row| format!("[{:.17e}, {:.17e}, {:.17e}]", row[0], row[1], row[2]))
                .collect();
            format!("[{}]", rows.join(", "))
        };
        let p = &self.params;
        let mut lines = vec![
            format!("a: {:.17e}", p.a),
            format!("b: {:.17e}", p.b),
            format!("c: {:.17e}", p.c),
            format!("lambda: {:.17e}", p.lambda),
            format!("q: {:.17e}", p.q),
            format!("c_bar: {:.17e}", p.c_bar),
            format!("samples: {}", self.n_samples),
            format!("radius: {:.17e}", self.radius),
            format!("seed: {}", self.seed),
            format!("isotropy_pass: {}", self.isotropy_pass),
            format!("isotropy_gap: {:.17e}", self.isotropy_gap),
            format!("convexity_pass: {}", self.convexity_pass),
            format!("convexity_gap: {:.17e}", self.convexity_gap),
            format!("min_g: {:.17e}", self.min_g),
            format!("growth_pass: {}", self.growth_pass),
            format!("growth_ratio: {:.17e}", self.growth_ratio),
            format!("ray_threshold: {:.17e}", self.ray_threshold),
            format!("hessian_threshold: {:.17e}", self.hessian_threshold),
            format!("ray_min_curvature: {:.17e}", self.ray_min_curvature),
        ];
        if let Some((q, r)) = &self.isotropy_witness {
            lines.push(format!("isotropy_witness_q: {}", t(q)));
            lines.push(format!("isotropy_witness_r: {}", m(r)));
        }
        if let Some((q1, q2)) = &self.convexity_witness {
            lines.push(format!("convexity_witness_q1: {}", t(q1)));
            lines.push(format!("convexity_witness_q2: {}", t(q2)));
        }
        if let Some(q) = &self.nonnegativity_witness {
            lines.push(format!("nonnegativity_witness: {}", t(q)));
        }
        if let Some(q) = &self.growth_witness {
            lines.push(format!("growth_witness: {}", t(q)));
        }
        lines.push(format!("passed: {}", self.passed()));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

struct Sample {
    iso_gap: f64,
    iso: (TracelessSymTensor, Mat3),
    conv_gap: f64,
    conv_rel: f64,
    conv: (TracelessSymTensor, TracelessSymTensor),
    g_min: f64,
    g_min_at: TracelessSymTensor,
    growth: f64,
    growth_at: TracelessSymTensor,
}

fn audit_sample(p: &PotentialParams, radius: f64, seed: u64, index: usize) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let q1 = random_tensor_in_ball(&mut rng, radius);
    let q2 = random_tensor_in_ball(&mut rng, radius);
    let r = random_orthogonal(&mut rng);

    let f1 = bulk_value(&q1, p);
    let rotated = TracelessSymTensor::project(&q1.to_matrix().conjugate_by(&r));
    let iso_gap = (f1 - bulk_value(&rotated, p)).abs() / (1.0 + f1.abs());

    // Independent pair plus the symmetric pair through the origin.
    let mut conv_gap = f64::NEG_INFINITY;
    let mut conv_rel = f64::NEG_INFINITY;
    let mut conv = (q1, q2);
    for (x, y) in [(q1, q2), (q1, -q1)] {
        let (gx, gy) = (g_value(&x, p), g_value(&y, p));
        let gap = g_value(&((x + y) * 0.5), p) - 0.5 * (gx + gy);
        let rel = gap / (1.0 + gx.abs() + gy.abs());
        if rel > conv_rel {
            conv_rel = rel;
            conv_gap = gap;
            conv = (x, y);
        }
    }

    let (g1, g2) = (g_value(&q1, p), g_value(&q2, p));
    let (g_min, g_min_at) = if g1 <= g2 { (g1, q1) } else { (g2, q2) };

    let growth_of = |q: &TracelessSymTensor| {
        bulk_gradient(q, p).norm() / (p.c_bar * (1.0 + q.norm().powf(p.q)))
    };
    let (gr1, gr2) = (growth_of(&q1), growth_of(&q2));
    let (growth, growth_at) = if gr1 >= gr2 { (gr1, q1) } else { (gr2, q2) };

    Sample {
        iso_gap,
        iso: (q1, r),
        conv_gap,
        conv_rel,
        conv,
        g_min,
        g_min_at,
        growth,
        growth_at,
    }
}

/// Sampling audit of isotropy, Λ-convexity and growth.
///
/// Sample `i` draws from its own ChaCha8 stream, and the worst cases are
/// reduced in index order, so the report does not depend on thread count.
/// Convexity is judged with the rounding-aware tolerance
/// `1e-12·(1 + |G(Q₁)| + |G(Q₂)|)`.
pub fn check_assumptions(
    p: &PotentialParams,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("audit needs at least one sample".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "audit radius must be positive and finite, got {radius}"
        )));
    }
    let samples: Vec<Sample> = (0..n_samples)
        .into_par_iter()
        .map(|i| audit_sample(p, radius, seed, i))
        .collect();

    let mut rep = AssumptionReport {
        params: *p,
        n_samples,
        radius,
        seed,
        isotropy_pass: true,
        isotropy_gap: 0.0,
        isotropy_witness: None,
        convexity_pass: true,
        convexity_gap: f64::NEG_INFINITY,
        convexity_witness: None,
        min_g: f64::INFINITY,
        nonnegativity_witness: None,
        growth_pass: true,
        growth_ratio: 0.0,
        growth_witness: None,
        ray_threshold: p.ray_threshold(),
        hessian_threshold: p.hessian_threshold(),
        ray_min_curvature: p.ray_min_curvature(),
    };
    let mut worst_conv_rel = f64::NEG_INFINITY;
    let mut worst_conv = None;
    let mut min_g_at = None;
    let mut growth_at = None;
    let mut iso_at = None;
    for s in samples {
        if s.iso_gap > rep.isotropy_gap || iso_at.is_none() {
            rep.isotropy_gap = rep.isotropy_gap.max(s.iso_gap);
            iso_at = Some(s.iso);
        }
        if s.conv_rel > worst_conv_rel {
            worst_conv_rel = s.conv_rel;
            rep.convexity_gap = s.conv_gap;
            worst_conv = Some(s.conv);
        }
        if s.g_min < rep.min_g {
            rep.min_g = s.g_min;
            min_g_at = Some(s.g_min_at);
        }
        if s.growth > rep.growth_ratio || growth_at.is_none() {
            rep.growth_ratio = rep.growth_ratio.max(s.growth);
            growth_at = Some(s.growth_at);
        }
    }
    rep.isotropy_pass = rep.isotropy_gap <= 1e-10;
    if !rep.isotropy_pass {
        rep.isotropy_witness = iso_at;
    }
    let convex_ok = worst_conv_rel <= 1e-12;
    let nonneg_ok = rep.min_g >= -1e-12;
    rep.convexity_pass = convex_ok && nonneg_ok;
    if !convex_ok {
        rep.convexity_witness = worst_conv;
    }
    if !nonneg_ok {
        rep.nonnegativity_witness = min_g_at;
    }
    rep.growth_pass = rep.growth_ratio <= 1.0;
    if !rep.growth_pass {
        rep.growth_witness = growth_at;
    }
    Ok(rep)
}
