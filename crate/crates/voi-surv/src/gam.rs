//! Penalized tensor-product spline regression of net benefits on extension
//! summaries.
//!
//! Each margin is a cubic regression spline parameterized by its values at
//! a small set of knots placed at quantiles of the distinct covariate
//! values, penalized by the integrated squared second derivative. The two
//! margins combine as a tensor product, each with its own smoothing
//! parameter chosen by generalized cross-validation. A sum-to-zero
//! constraint identifies the smooth next to an explicit intercept, so the
//! fitted mean equals the response mean and fitted values are invariant to
//! affine rescaling of either covariate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::SummaryStat;
use crate::error::{Error, Result};
use crate::rng::standard_normal_pair;

/// Marginal basis dimension: knots per covariate, 5 x 5 = 25 tensor
/// functions before the identifiability constraint.
const MARGIN_DIM: usize = 5;

/// Smoothing-parameter search range on the natural-log scale, spanning
/// [1e-8, 1e8]. Marginal penalties are normalized to unit Frobenius norm
/// so this range is meaningful at any covariate scale.
const LOG_LAMBDA_LIMIT: f64 = 18.420680743952367;

/// Absolute tolerance for the golden-section search on log smoothing.
const LAMBDA_SEARCH_TOL: f64 = 1e-6;

/// Maximum coordinate-descent sweeps over the two smoothing parameters.
const MAX_SWEEPS: usize = 10;

/// One regression input: an arm's extension-window summary as covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    /// Event count in the extension window.
    pub events: f64,
    /// Person-months at risk in the extension window.
    pub time_at_risk: f64,
}

impl From<SummaryStat> for DesignPoint {
    fn from(s: SummaryStat) -> Self {
        DesignPoint {
            events: s.events as f64,
            time_at_risk: s.time_at_risk,
        }
    }
}

/// A fitted tensor-product spline smoother.
#[derive(Debug, Clone)]
pub struct SmoothFit {
    /// Conditional-mean estimates at the design points, in input order.
    pub fitted: Vec<f64>,
    /// Intercept followed by the constrained-basis coefficients.
    pub coef: Vec<f64>,
    /// Selected smoothing parameters, one per margin; 1 for a margin
    /// degraded below spline form (its penalty is identically zero).
    pub smoothing_params: [f64; 2],
    /// Effective degrees of freedom of the penalized fit.
    pub edf: f64,
    /// Residual variance estimate.
    pub sigma2: f64,
    /// Descriptions of margin degradations; empty for a full tensor fit.
    pub notes: Vec<String>,
    /// Factor C with Cov(fitted) = C C'; a fitted-value draw is
    /// fitted + C z for standard-normal z.
    cov_factor: DMatrix<f64>,
}

impl SmoothFit {
    /// Number of independent normal deviates one fitted-value draw needs.
    pub fn coef_dim(&self) -> usize {
        self.cov_factor.ncols()
    }

    /// Write one draw from the approximate distribution of the fitted
    /// values into `out`.
    pub fn simulate_fitted_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.fitted.len(), "output length mismatch");
        let p = self.cov_factor.ncols();
        let mut z = DVector::zeros(p);
        let mut i = 0;
        while i < p {
            let (a, b) = standard_normal_pair(rng);
            z[i] = a;
            if i + 1 < p {
                z[i + 1] = b;
            }
            i += 2;
        }
        let shift = &self.cov_factor * &z;
        for (o, (f, s)) in out.iter_mut().zip(self.fitted.iter().zip(shift.iter())) {
            *o = f + s;
        }
    }

    /// One draw from the approximate distribution of the fitted values.
    pub fn simulate_fitted<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.fitted.len()];
        self.simulate_fitted_into(rng, &mut out);
        out
    }
}

/// Cubic regression spline on fixed knots, parameterized by the function
/// values at the knots. Natural boundary conditions: the second derivative
/// vanishes at the first and last knot.
struct CrBasis {
    knots: Vec<f64>,
    /// Row j maps knot values to the second derivative at knot j; the
    /// boundary rows are zero.
    second_deriv: DMatrix<f64>,
    /// Integrated squared second derivative as a quadratic form in the
    /// knot values, scaled to unit Frobenius norm.
    penalty: DMatrix<f64>,
}

impl CrBasis {
    /// Knots must be strictly increasing with at least three entries.
    fn new(knots: Vec<f64>) -> CrBasis {
        let q = knots.len();
        let h: Vec<f64> = (0..q - 1).map(|j| knots[j + 1] - knots[j]).collect();
        let mut d = DMatrix::zeros(q - 2, q);
        let mut b = DMatrix::zeros(q - 2, q - 2);
        for j in 0..q - 2 {
            d[(j, j)] = 1.0 / h[j];
            d[(j, j + 1)] = -1.0 / h[j] - 1.0 / h[j + 1];
            d[(j, j + 2)] = 1.0 / h[j + 1];
            b[(j, j)] = (h[j] + h[j + 1]) / 3.0;
            if j + 1 < q - 2 {
                b[(j, j + 1)] = h[j + 1] / 6.0;
                b[(j + 1, j)] = h[j + 1] / 6.0;
            }
        }
        let chol = b
            .cholesky()
            .expect("the spline band matrix is positive definite for increasing knots");
        let f = chol.solve(&d);
        let mut penalty = d.transpose() * &f;
        let norm = penalty.norm();
        penalty /= norm;
        let mut second_deriv = DMatrix::zeros(q, q);
        second_deriv.rows_mut(1, q - 2).copy_from(&f);
        CrBasis {
            knots,
            second_deriv,
            penalty,
        }
    }

    /// Basis row at x. Evaluation clamps to the knot range; all fitting
    /// evaluations are at the training points the knots were built from.
    fn row_into(&self, x: f64, out: &mut [f64]) {
        let q = self.knots.len();
        let x = x.clamp(self.knots[0], self.knots[q - 1]);
        let j = self
            .knots
            .partition_point(|&k| k <= x)
            .saturating_sub(1)
            .min(q - 2);
        let (k0, k1) = (self.knots[j], self.knots[j + 1]);
        let h = k1 - k0;
        let am = (k1 - x) / h;
        let ap = (x - k0) / h;
        let cm = ((k1 - x).powi(3) / h - h * (k1 - x)) / 6.0;
        let cp = ((x - k0).powi(3) / h - h * (x - k0)) / 6.0;
        out.fill(0.0);
        out[j] += am;
        out[j + 1] += ap;
        for c in 0..q {
            out[c] += cm * self.second_deriv[(j, c)] + cp * self.second_deriv[(j + 1, c)];
        }
    }
}

/// One covariate's marginal basis, degrading gracefully as the number of
/// distinct values shrinks.
enum Margin {
    Spline(CrBasis),
    /// Two distinct values support only a line through them.
    Linear { lo: f64, span: f64 },
    /// A single distinct value carries no information.
    Constant,
}

impl Margin {
    fn build(xs: &[f64]) -> Margin {
        let mut distinct: Vec<f64> = xs.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite covariates"));
        distinct.dedup();
        match distinct.len() {
            1 => Margin::Constant,
            2 => Margin::Linear {
                lo: distinct[0],
                span: distinct[1] - distinct[0],
            },
            n if n <= MARGIN_DIM => Margin::Spline(CrBasis::new(distinct)),
            _ => Margin::Spline(CrBasis::new(quantile_knots(&distinct))),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Margin::Spline(b) => b.knots.len(),
            Margin::Linear { .. } => 2,
            Margin::Constant => 1,
        }
    }

    fn row_into(&self, x: f64, out: &mut [f64]) {
        match self {
            Margin::Spline(b) => b.row_into(x, out),
            Margin::Linear { lo, span } => {
                out[0] = 1.0;
                out[1] = (x - lo) / span;
            }
            Margin::Constant => out[0] = 1.0,
        }
    }

    /// Marginal roughness penalty; zero for degraded margins.
    fn penalty(&self) -> DMatrix<f64> {
        match self {
            Margin::Spline(b) => b.penalty.clone(),
            other => DMatrix::zeros(other.dim(), other.dim()),
        }
    }

    fn is_penalized(&self) -> bool {
        matches!(self, Margin::Spline(_))
    }

    fn degradation(&self, name: &str) -> Option<String> {
        match self {
            Margin::Spline(_) => None,
            Margin::Linear { .. } => Some(format!(
                "covariate {name} has two distinct values; margin degraded to linear"
            )),
            Margin::Constant => Some(format!(
                "covariate {name} is constant; margin dropped from the smooth"
            )),
        }
    }
}

/// Interior-quantile knots over the strictly increasing distinct values.
fn quantile_knots(distinct: &[f64]) -> Vec<f64> {
    let n = distinct.len();
    (0..MARGIN_DIM)
        .map(|i| {
            let pos = i as f64 / (MARGIN_DIM - 1) as f64 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                distinct[lo] * (1.0 - frac) + distinct[lo + 1] * frac
            } else {
                distinct[n - 1]
            }
        })
        .collect()
}

/// Constrained tensor design assembled from validated inputs.
enum BuiltDesign {
    /// Both covariates constant: no regression is possible.
    Degenerate { notes: Vec<String> },
    Tensor {
        core: FitCore,
        /// Which margins carry a roughness penalty worth searching over.
        active: [bool; 2],
        notes: Vec<String>,
    },
}

fn build_design(inputs: &[DesignPoint], response: &[f64]) -> BuiltDesign {
    let n = inputs.len();
    let ev: Vec<f64> = inputs.iter().map(|p| p.events).collect();
    let ty: Vec<f64> = inputs.iter().map(|p| p.time_at_risk).collect();
    let margin_e = Margin::build(&ev);
    let margin_y = Margin::build(&ty);
    let mut notes = Vec::new();
    notes.extend(margin_e.degradation("events"));
    notes.extend(margin_y.degradation("time_at_risk"));

    let (pe, py) = (margin_e.dim(), margin_y.dim());
    let p = pe * py;
    if p == 1 {
        return BuiltDesign::Degenerate { notes };
    }

    // Tensor design: row = kron(margin_e row, margin_y row).
    let mut x = DMatrix::zeros(n, p);
    let mut re = vec![0.0; pe];
    let mut ry = vec![0.0; py];
    for i in 0..n {
        margin_e.row_into(ev[i], &mut re);
        margin_y.row_into(ty[i], &mut ry);
        for (a, &rea) in re.iter().enumerate() {
            for (b, &ryb) in ry.iter().enumerate() {
                x[(i, a * py + b)] = rea * ryb;
            }
        }
    }

    // Sum-to-zero constraint: restrict coefficients to the null space of
    // the column-sum row via a Householder reflection, then prepend an
    // explicit intercept. The design keeps p columns and full rank.
    let colsum = x.row_sum().transpose();
    let mut v = colsum.clone();
    v[0] += colsum.norm() * colsum[0].signum();
    let mut house = DMatrix::identity(p, p);
    house -= (&v * v.transpose()) * (2.0 / v.norm_squared());
    let z = house.columns(1, p - 1).into_owned();

    let xz = &x * &z;
    let mut design = DMatrix::zeros(n, p);
    design.column_mut(0).fill(1.0);
    design.columns_mut(1, p - 1).copy_from(&xz);

    let embed = |s: DMatrix<f64>| {
        let zsz = z.transpose() * s * &z;
        let mut full = DMatrix::zeros(p, p);
        full.view_mut((1, 1), (p - 1, p - 1)).copy_from(&zsz);
        full
    };
    let s_e = embed(margin_e.penalty().kronecker(&DMatrix::identity(py, py)));
    let s_y = embed(DMatrix::identity(pe, pe).kronecker(&margin_y.penalty()));

    let y = DVector::from_column_slice(response);
    BuiltDesign::Tensor {
        core: FitCore {
            mtm: design.transpose() * &design,
            mty: design.transpose() * &y,
            design,
            response: y,
            penalties: [s_e, s_y],
        },
        active: [margin_e.is_penalized(), margin_y.is_penalized()],
        notes,
    }
}

/// Precomputed quantities for repeated penalized solves at different
/// smoothing parameters.
struct FitCore {
    design: DMatrix<f64>,
    response: DVector<f64>,
    mtm: DMatrix<f64>,
    mty: DVector<f64>,
    penalties: [DMatrix<f64>; 2],
}

struct PenalizedFit {
    beta: DVector<f64>,
    rss: f64,
    edf: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl FitCore {
    fn penalized(&self, lambda: [f64; 2]) -> Result<PenalizedFit> {
        let n = self.design.nrows();
        let mut a = self.mtm.clone();
        a += &self.penalties[0] * lambda[0];
        a += &self.penalties[1] * lambda[1];
        let chol = match a.clone().cholesky() {
            Some(c) => c,
            None => {
                // Collinear tensor columns (deterministically related
                // covariates) need a tiny ridge to stay solvable.
                let ridge = 1e-10 * self.mtm.diagonal().mean().max(f64::MIN_POSITIVE);
                for i in 0..a.nrows() {
                    a[(i, i)] += ridge;
                }
                a.cholesky().ok_or_else(|| {
                    Error::numeric("penalized normal equations are not positive definite")
                })?
            }
        };
        let beta = chol.solve(&self.mty);
        let fitted = &self.design * &beta;
        let rss = (&self.response - &fitted).norm_squared();
        let edf = chol.solve(&self.mtm).trace();
        debug_assert!(edf < n as f64);
        Ok(PenalizedFit {
            beta,
            rss,
            edf,
            chol,
        })
    }

    fn gcv(&self, lambda: [f64; 2]) -> Result<f64> {
        let n = self.design.nrows() as f64;
        let fit = self.penalized(lambda)?;
        Ok(n * fit.rss / (n - fit.edf).powi(2))
    }
}

/// Golden-section minimum of f over [lo, hi].
fn golden_section(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    const INVPHI: f64 = 0.6180339887498949;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > LAMBDA_SEARCH_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fit the penalized tensor-product smoother of `response` on the two
/// summary covariates.
///
/// Needs at least 50 points. A covariate with too few distinct values
/// degrades per [`SmoothFit::notes`]; with both covariates constant the
/// fitted values collapse to the response mean.
pub fn fit_tensor_spline(inputs: &[DesignPoint], response: &[f64]) -> Result<SmoothFit> {
    let n = inputs.len();
    if n < 50 {
        return Err(Error::invalid(format!(
            "smoother needs at least 50 points, got {n}"
        )));
    }
    if response.len() != n {
        return Err(Error::invalid(format!(
            "response length {} does not match {n} design points",
            response.len()
        )));
    }
    if inputs
        .iter()
        .any(|p| !p.events.is_finite() || !p.time_at_risk.is_finite())
        || response.iter().any(|y| !y.is_finite())
    {
        return Err(Error::invalid("design points and response must be finite"));
    }

    let (core, active, notes) = match build_design(inputs, response) {
        BuiltDesign::Degenerate { notes } => {
            let y = DVector::from_column_slice(response);
            return Ok(constant_fit(&y, notes));
        }
        BuiltDesign::Tensor {
            core,
            active,
            notes,
        } => (core, active, notes),
    };

    // Coordinate descent over the two log smoothing parameters, each by
    // golden section; margins without a penalty are left at lambda = 1.
    let mut log_lam = [0.0_f64; 2];
    let mut prev = core.gcv(log_lam.map(f64::exp))?;
    for _ in 0..MAX_SWEEPS {
        for dim in 0..2 {
            if !active[dim] {
                continue;
            }
            log_lam[dim] = golden_section(
                |ll| {
                    let mut trial = log_lam;
                    trial[dim] = ll;
                    core.gcv(trial.map(f64::exp))
                },
                -LOG_LAMBDA_LIMIT,
                LOG_LAMBDA_LIMIT,
            )?;
        }
        let now = core.gcv(log_lam.map(f64::exp))?;
        if (prev - now).abs() <= 1e-9 * (1.0 + now.abs()) {
            break;
        }
        prev = now;
    }

    let lambda = log_lam.map(f64::exp);
    let fit = core.penalized(lambda)?;
    let nf = n as f64;
    let sigma2 = (fit.rss / (nf - fit.edf)).max(0.0);
    let fitted_vec = &core.design * &fit.beta;

    // Cov(fitted) = sigma^2 M A^{-1} M'; with A = L L' the factor is
    // sigma * M L^{-T}, computed by one triangular solve.
    let wt = fit
        .chol
        .l()
        .solve_lower_triangular(&core.design.transpose())
        .ok_or_else(|| Error::numeric("singular Cholesky factor in covariance"))?;
    let cov_factor = wt.transpose() * sigma2.sqrt();

    Ok(SmoothFit {
        fitted: fitted_vec.iter().copied().collect(),
        coef: fit.beta.iter().copied().collect(),
        smoothing_params: lambda,
        edf: fit.edf,
        sigma2,
        notes,
        cov_factor,
    })
}

/// Degenerate fit when both covariates are constant: the smooth carries no
/// information and every fitted value is the response mean.
fn constant_fit(y: &DVector<f64>, mut notes: Vec<String>) -> SmoothFit {
    let n = y.len();
    let mean = y.mean();
    let rss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sigma2 = rss / (n as f64 - 1.0);
    notes.push("both covariates constant; fitted values equal the response mean".to_string());
    SmoothFit {
        fitted: vec![mean; n],
        coef: vec![mean],
        smoothing_params: [1.0, 1.0],
        edf: 1.0,
        sigma2,
        notes,
        cov_factor: DMatrix::from_element(n, 1, (sigma2 / n as f64).sqrt()),
    }
}
