//! Orientation-preserving circle homeomorphisms given by their lifts.
//!
//! Every homeomorphism carries a partition of one period into pieces on which
//! the metric speed `v_g = G′` is constant, monotone, generic, or zero with
//! the increment of `G` carried by a singular measure. Capped integrals
//! `∫ min{1, v_g}` are exact on the first three kinds up to root finding.

mod cantor;
mod families;

pub use cantor::{salem, FatCantor};
pub use families::HomeoSpec;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{adaptive_gauss, arc_distance};

/// Default size of the cached speed table.
pub const DEFAULT_TABLE_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Power,
    Cantor,
    Pwl,
    Isometry,
    Composed,
}

#[derive(Debug, Clone)]
enum Kind {
    Shift(f64),
    Power { alpha: f64, beta: f64 },
    Pwl { xs: Vec<f64>, ys: Vec<f64> },
    Cantor { set: FatCantor, arc: f64, p: f64 },
    Salem { p: f64 },
    Composed(Vec<CircleHomeo>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PieceKind {
    Singular,
    Slope(f64),
    /// `G′` monotone on the piece; `cross` splits it into a part with
    /// `G′ ≥ 1` (left of `cross` when `above_left`) and a part with `G′ < 1`.
    Monotone { cross: f64, above_left: bool },
    Generic,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    kind: PieceKind,
}

#[derive(Debug, Clone)]
pub struct CircleHomeo {
    kind: Kind,
    descriptor: Descriptor,
    /// Partition of `[0, 2π)`.
    pieces: Vec<Piece>,
    singular: Vec<(f64, f64)>,
    speed_table: Vec<f64>,
}

/// Sampled Lebesgue decomposition of `g*H¹` over one period.
#[derive(Debug, Clone, Serialize)]
pub struct LebesgueDecomposition {
    /// Midpoint samples of `v_g` on a uniform grid of `[0, 2π)`.
    pub density: Vec<f64>,
    /// `∫ v_g` over one period.
    pub ac_mass: f64,
    /// Mass of the singular part on each singular arc.
    pub singular_mass: Vec<((f64, f64), f64)>,
}

impl LebesgueDecomposition {
    pub fn total_mass(&self) -> f64 {
        self.ac_mass + self.singular_mass.iter().map(|(_, m)| m).sum::<f64>()
    }
}

/// Sampled bi-Lipschitz constants of a circle map in both directions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BilipReport {
    /// `max σ(gx,gy)/σ(x,y)`.
    pub forward: f64,
    /// `max σ(x,y)/σ(gx,gy)`.
    pub inverse: f64,
}

impl BilipReport {
    pub fn constant(&self) -> f64 {
        self.forward.max(self.inverse)
    }
}

impl CircleHomeo {
    fn build(kind: Kind, descriptor: Descriptor) -> Result<Self> {
        let mut g = Self { kind, descriptor, pieces: Vec::new(), singular: Vec::new(), speed_table: Vec::new() };
        g.pieces = g.make_pieces()?;
        g.singular = merge_arcs(g.pieces.iter().filter(|p| p.kind == PieceKind::Singular).map(|p| (p.a, p.b)));
        g.speed_table = g.tabulate(DEFAULT_TABLE_SIZE);
        Ok(g)
    }

    /// Rebuilds the cached speed table with `n` samples.
    pub fn with_table_size(mut self, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!("speed table needs at least 16 samples, got {n}")));
        }
        self.speed_table = self.tabulate(n);
        Ok(self)
    }

    fn tabulate(&self, n: usize) -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / n as f64;
                self.speed(t).unwrap_or(f64::INFINITY)
            })
            .collect()
    }

    pub fn identity() -> Self {
        Self::rotation(0.0)
    }

    /// Rigid rotation `θ ↦ θ + angle`.
    pub fn rotation(angle: f64) -> Self {
        Self::build(Kind::Shift(angle), Descriptor::Isometry).expect("rotations are valid")
    }

    /// Power family: on `[−π, π]` the lift is `G(φ) = π·h⁻¹(φ/π)` with
    /// `h(x) = x^α` for `x ≥ 0` and `−(−x)^β` for `x < 0`, extended periodically.
    pub fn power(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 1.0 && beta >= alpha && beta.is_finite()) {
            return domain(format!("power family needs 1 <= alpha <= beta, got ({alpha}, {beta})"));
        }
        if alpha == 1.0 && beta == 1.0 {
            return Self::build(Kind::Shift(0.0), Descriptor::Power);
        }
        Self::build(Kind::Power { alpha, beta }, Descriptor::Power)
    }

    /// Piecewise-linear lift through `(θ, G(θ))` breakpoints spanning one period.
    pub fn pwl(breakpoints: &[(f64, f64)]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return domain("pwl homeomorphism needs at least two breakpoints");
        }
        let xs: Vec<f64> = breakpoints.iter().map(|b| b.0).collect();
        let ys: Vec<f64> = breakpoints.iter().map(|b| b.1).collect();
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return domain("pwl breakpoints must be finite");
        }
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return domain("pwl breakpoints must be strictly increasing in both coordinates");
            }
        }
        let span = xs[xs.len() - 1] - xs[0];
        let rise = ys[ys.len() - 1] - ys[0];
        if (span - TAU).abs() > 1e-9 || (rise - TAU).abs() > 1e-9 {
            return domain(format!("pwl breakpoints must span one period with increase 2π, got span {span} and increase {rise}"));
        }
        Self::build(Kind::Pwl { xs, ys }, Descriptor::Pwl)
    }

    /// Piecewise-linear map with slope `eps` on `[c−w, c+w]`, the compensating
    /// constant slope elsewhere, and `G(c) = c`.
    pub fn patch(eps: f64, center: f64, half_width: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return domain(format!("patch slope must be positive, got {eps}"));
        }
        if !(half_width > 0.0 && half_width < PI && half_width * eps < PI) {
            return domain(format!("patch half width {half_width} does not fit in one period"));
        }
        let (c, w) = (center, half_width);
        Self::pwl(&[(c - w, c - eps * w), (c + w, c + eps * w), (c - w + TAU, c - eps * w + TAU)])
    }

    /// Cantor family: the identity outside `arc·E_k`, and on each interval of
    /// `arc·E_k` a Salem staircase with parameter `p` mapping it onto itself.
    pub fn cantor(fraction: f64, levels: u32) -> Result<Self> {
        Self::cantor_with(fraction, levels, PI, 0.3)
    }

    pub fn cantor_with(fraction: f64, levels: u32, arc: f64, p: f64) -> Result<Self> {
        if !(arc > 0.0 && arc < TAU) {
            return domain(format!("cantor arc must lie in (0, 2π), got {arc}"));
        }
        check_salem(p)?;
        let set = FatCantor::new(fraction, levels)?;
        Self::build(Kind::Cantor { set, arc, p }, Descriptor::Cantor)
    }

    /// Fully singular map `G(φ) = 2π·S_p(φ/2π)`; its metric speed vanishes a.e.
    pub fn fully_singular(p: f64) -> Result<Self> {
        check_salem(p)?;
        Self::build(Kind::Salem { p }, Descriptor::Cantor)
    }

    /// `outer ∘ … ∘ inner` with the first element applied first.
    pub fn composed(parts: Vec<CircleHomeo>) -> Result<Self> {
        if parts.is_empty() {
            return domain("composition needs at least one map");
        }
        Self::build(Kind::Composed(parts), Descriptor::Composed)
    }

    pub fn descriptor(&self) -> Descriptor {
        self.descriptor
    }

    /// Arcs of `[0, 2π)` carrying the singular part of `g*H¹`.
    pub fn singular_support(&self) -> &[(f64, f64)] {
        &self.singular
    }

    pub fn speed_table(&self) -> &[f64] {
        &self.speed_table
    }

    /// Power exponents, when this is a power-family map.
    pub fn power_exponents(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Power { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    /// The lift `G: ℝ → ℝ`.
    pub fn lift(&self, theta: f64) -> f64 {
        let k = (theta / TAU).floor();
        let t = theta - k * TAU;
        let t = if t >= TAU { 0.0 } else { t };
        self.lift_base(t) + k * TAU
    }

    /// Lift on `[0, 2π)`, normalised so that the lift is continuous.
    fn lift_base(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Shift(c) => t + c,
            Kind::Power { alpha, beta } => {
                if t <= PI {
                    PI * (t / PI).powf(1.0 / alpha)
                } else {
                    TAU - PI * ((TAU - t) / PI).powf(1.0 / beta)
                }
            }
            Kind::Pwl { xs, ys } => {
                // shift t into [xs0, xs0 + 2π)
                let x0 = xs[0];
                let m = ((t - x0) / TAU).floor();
                let s = t - m * TAU;
                let i = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let (xa, xb, ya, yb) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
                ya + (yb - ya) * (s - xa) / (xb - xa) + m * TAU
            }
            Kind::Cantor { set, arc, p } => {
                if t >= *arc {
                    return t;
                }
                match set.locate(t / arc) {
                    Some(i) => {
                        let (a, b) = set.intervals[i];
                        let s = (t / arc - a) / (b - a);
                        arc * (a + (b - a) * salem(*p, s))
                    }
                    None => t,
                }
            }
            Kind::Salem { p } => TAU * salem(*p, t / TAU),
            Kind::Composed(parts) => parts.iter().fold(t, |x, g| g.lift(x)),
        }
    }

    /// Evaluates `g` on an angle, reduced to `[0, 2π)`.
    pub fn apply(&self, theta: f64) -> f64 {
        crate::numeric::wrap_angle(self.lift(theta))
    }

    /// `G⁻¹(ψ)` by monotone bisection to 1e−12.
    pub fn inverse_lift(&self, psi: f64) -> f64 {
        if let Kind::Shift(c) = self.kind {
            return psi - c;
        }
        invert_increasing(|t| self.lift(t), psi)
    }

    /// Metric speed `v_g(θ)`. Points where `G` has no derivative (corners of
    /// piecewise-linear lifts, the critical point of the power family) are
    /// reported as [`Error::Undefined`].
    pub fn speed(&self, theta: f64) -> Result<f64> {
        let t = crate::numeric::wrap_angle(theta);
        match &self.kind {
            Kind::Shift(_) => Ok(1.0),
            Kind::Power { alpha, beta } => {
                if t == 0.0 {
                    return Err(Error::Undefined { at: theta, reason: "critical point of the power family".into() });
                }
                if t <= PI {
                    Ok((t / PI).powf(1.0 / alpha - 1.0) / alpha)
                } else {
                    Ok(((TAU - t) / PI).powf(1.0 / beta - 1.0) / beta)
                }
            }
            Kind::Pwl { xs, ys } => {
                let x0 = xs[0];
                let s = x0 + (t - x0).rem_euclid(TAU);
                let i = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let slope = |i: usize| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
                let n = xs.len() - 1;
                let here = slope(i);
                let (left, right) = if (s - xs[i - 1]).abs() < 1e-12 || (s - x0).abs() < 1e-12 {
                    (if i >= 2 { slope(i - 1) } else { slope(n) }, here)
                } else if (xs[i] - s).abs() < 1e-12 {
                    (here, if i < n { slope(i + 1) } else { slope(1) })
                } else {
                    (here, here)
                };
                if (left - right).abs() > 1e-12 {
                    return Err(Error::Undefined { at: theta, reason: "corner of a piecewise-linear lift".into() });
                }
                Ok(here)
            }
            Kind::Cantor { set, arc, .. } => {
                if t < *arc && set.locate(t / arc).is_some() {
                    Ok(0.0)
                } else {
                    Ok(1.0)
                }
            }
            Kind::Salem { .. } => Ok(0.0),
            Kind::Composed(parts) => {
                let mut x = t;
                let mut v = 1.0;
                for g in parts {
                    v *= g.speed(x)?;
                    x = g.lift(x);
                }
                Ok(v)
            }
        }
    }

    /// Breakpoints in `[0, 2π)` of the piece structure, sorted, starting at 0.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        match &self.kind {
            Kind::Shift(_) | Kind::Salem { .. } => {}
            Kind::Power { .. } => pts.push(PI),
            Kind::Pwl { xs, .. } => pts.extend(xs.iter().map(|&x| crate::numeric::wrap_angle(x))),
            Kind::Cantor { set, arc, .. } => {
                for &(a, b) in &set.intervals {
                    pts.push(arc * a);
                    pts.push(arc * b);
                }
            }
            Kind::Composed(parts) => {
                for (j, g) in parts.iter().enumerate() {
                    let prefix = &parts[..j];
                    let inner = |x: f64| prefix.iter().fold(x, |x, h| h.lift(x));
                    pts.extend(g.breakpoints().into_iter().map(|y| crate::numeric::wrap_angle(invert_increasing(inner, y))));
                }
            }
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts.retain(|&x| x < TAU);
        pts
    }

    fn make_pieces(&self) -> Result<Vec<Piece>> {
        let bps = self.breakpoints();
        let mut pieces = Vec::with_capacity(bps.len());
        for (i, &a) in bps.iter().enumerate() {
            let b = bps.get(i + 1).copied().unwrap_or(TAU);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let kind = match &self.kind {
                Kind::Shift(_) => PieceKind::Slope(1.0),
                Kind::Salem { .. } => PieceKind::Singular,
                Kind::Pwl { .. } => PieceKind::Slope((self.lift(b) - self.lift(a)) / (b - a)),
                Kind::Cantor { .. } => {
                    if self.speed(mid)? == 0.0 {
                        PieceKind::Singular
                    } else {
                        PieceKind::Slope(1.0)
                    }
                }
                Kind::Power { .. } => {
                    // G′ is infinite at 0 and decreases on (0, π]; increases on [π, 2π).
                    let above_left = a == 0.0;
                    let f = |x: f64| self.speed(x).unwrap_or(f64::INFINITY) - 1.0;
                    let (fa, fb) = (f(a + 1e-12 * (b - a)), f(b - 1e-12 * (b - a)));
                    let cross = if fa >= 0.0 && fb >= 0.0 {
                        if above_left { b } else { a }
                    } else if fa < 0.0 && fb < 0.0 {
                        if above_left { a } else { b }
                    } else {
                        let (mut lo, mut hi) = (a, b);
                        for _ in 0..200 {
                            let m = 0.5 * (lo + hi);
                            if (f(m) >= 0.0) == above_left {
                                lo = m;
                            } else {
                                hi = m;
                            }
                            if hi - lo < 1e-15 {
                                break;
                            }
                        }
                        0.5 * (lo + hi)
                    };
                    PieceKind::Monotone { cross, above_left }
                }
                Kind::Composed(_) => {
                    if self.composed_singular(mid) {
                        PieceKind::Singular
                    } else {
                        PieceKind::Generic
                    }
                }
            };
            pieces.push(Piece { a, b, kind });
        }
        Ok(pieces)
    }

    fn composed_singular(&self, t: f64) -> bool {
        if let Kind::Composed(parts) = &self.kind {
            let mut x = t;
            for g in parts {
                if g.in_singular_support(x) {
                    return true;
                }
                x = g.lift(x);
            }
        }
        false
    }

    /// Whether `θ` lies in a singular-support arc.
    pub fn in_singular_support(&self, theta: f64) -> bool {
        let t = crate::numeric::wrap_angle(theta);
        self.singular.iter().any(|&(a, b)| a <= t && t <= b)
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.b <= t).min(self.pieces.len() - 1)
    }

    /// `∫_x^y min{1, v_g}` for `x ≤ y` within one piece.
    fn piece_capped(&self, p: &Piece, x: f64, y: f64) -> f64 {
        if y <= x {
            return 0.0;
        }
        match p.kind {
            PieceKind::Singular => 0.0,
            PieceKind::Slope(s) => s.min(1.0) * (y - x),
            PieceKind::Monotone { cross, above_left } => {
                let (lo_above, hi_above) = if above_left { (p.a, cross) } else { (cross, p.b) };
                let ia = x.max(lo_above);
                let ib = y.min(hi_above);
                let above = (ib - ia).max(0.0);
                // the part below 1 is a single interval at one end
                let (ba, bb) = if above_left { (x.max(cross), y) } else { (x, y.min(cross)) };
                let below = if bb > ba { self.lift_base(bb) - self.lift_base(ba) } else { 0.0 };
                above + below
            }
            PieceKind::Generic => adaptive_gauss(&|t| self.speed(t).unwrap_or(f64::INFINITY).min(1.0), x, y, 1e-13),
        }
    }

    /// `∫ v_g` over `[x, y]` inside one piece, excluding singular mass.
    fn piece_ac(&self, p: &Piece, x: f64, y: f64) -> f64 {
        match p.kind {
            PieceKind::Singular => 0.0,
            PieceKind::Generic => self.lift(y) - self.lift(x),
            _ => self.lift_base(y) - self.lift_base(x),
        }
    }

    fn integrate_base<F: Fn(&Piece, f64, f64) -> f64>(&self, x: f64, y: f64, f: F) -> f64 {
        // x ≤ y inside [0, 2π]
        let mut total = 0.0;
        let mut i = self.piece_index(x);
        while i < self.pieces.len() {
            let p = &self.pieces[i];
            if p.a >= y {
                break;
            }
            total += f(p, x.max(p.a), y.min(p.b));
            i += 1;
        }
        total
    }

    /// Integral over `[a, b]` with `0 ≤ b − a ≤ 2π`.
    fn integrate<F: Fn(&Piece, f64, f64) -> f64 + Copy>(&self, a: f64, b: f64, f: F) -> f64 {
        let k = (a / TAU).floor();
        let (x, y) = (a - k * TAU, b - k * TAU);
        if y <= TAU {
            self.integrate_base(x, y, f)
        } else {
            self.integrate_base(x, TAU, f) + self.integrate_base(0.0, y - TAU, f)
        }
    }

    /// `∫_a^b min{1, v_g}` over the lift parameter (signed).
    pub fn capped_integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.capped_integral(b, a);
        }
        let turns = ((b - a) / TAU).floor();
        let full = if turns > 0.0 { turns * self.integrate(0.0, TAU, |p, x, y| self.piece_capped(p, x, y)) } else { 0.0 };
        full + self.integrate(a, b - turns * TAU, |p, x, y| self.piece_capped(p, x, y))
    }

    /// `∫_a^b v_g` (absolutely continuous part only).
    pub fn speed_integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.speed_integral(b, a);
        }
        let turns = ((b - a) / TAU).floor();
        let full = if turns > 0.0 { turns * self.integrate(0.0, TAU, |p, x, y| self.piece_ac(p, x, y)) } else { 0.0 };
        full + self.integrate(a, b - turns * TAU, |p, x, y| self.piece_ac(p, x, y))
    }

    /// Uniform-grid density samples plus singular masses per singular arc.
    pub fn lebesgue_decomposition(&self, n: usize) -> LebesgueDecomposition {
        let density = if n == self.speed_table.len() { self.speed_table.clone() } else { self.tabulate(n.max(1)) };
        let ac_mass = self.speed_integral(0.0, TAU);
        let singular_mass = self
            .singular
            .iter()
            .map(|&(a, b)| {
                let ac = self.speed_integral(a, b);
                ((a, b), self.lift(b) - self.lift(a) - ac)
            })
            .collect();
        LebesgueDecomposition { density, ac_mass, singular_mass }
    }

    /// Samples `n` equally spaced angles and compares `σ(gx,gy)` with
    /// `σ(x,y)` over all pairs.
    pub fn bilip_report(&self, n: usize) -> BilipReport {
        let n = n.max(2);
        let th: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let im: Vec<f64> = th.iter().map(|&t| self.lift(t)).collect();
        let (forward, inverse) = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut f: f64 = 0.0;
                let mut v: f64 = 0.0;
                for j in i + 1..n {
                    let d = arc_distance(th[i], th[j]);
                    let e = arc_distance(im[i], im[j]);
                    if e == 0.0 {
                        v = f64::INFINITY;
                    } else {
                        v = v.max(d / e);
                    }
                    f = f.max(e / d);
                }
                (f, v)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        BilipReport { forward, inverse }
    }

    /// Sampled bi-Lipschitz constant `max(forward, inverse)`.
    pub fn bilip_constant(&self, n: usize) -> f64 {
        self.bilip_report(n).constant()
    }

    /// Checks periodicity and monotonicity of the lift on `n` samples and
    /// returns the worst periodicity defect.
    pub fn check_lift(&self, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut prev = self.lift(-1e-9 - TAU / n as f64);
        for i in 0..=n {
            let t = TAU * i as f64 / n as f64 - 1e-9;
            let g = self.lift(t);
            if g <= prev {
                return domain(format!("lift is not increasing near {t}"));
            }
            prev = g;
            worst = worst.max((self.lift(t + TAU) - g - TAU).abs());
        }
        Ok(worst)
    }
}

/// Inverse of an increasing lift by bisection on the period containing `psi`.
fn invert_increasing<F: Fn(f64) -> f64>(lift: F, psi: f64) -> f64 {
    let g0 = lift(0.0);
    let k = ((psi - g0) / TAU).floor();
    let mut lo = k * TAU;
    let mut hi = lo + TAU;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if lift(mid) < psi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_salem(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("salem parameter must lie in (0,1), got {p}"));
    }
    Ok(())
}

fn merge_arcs<I: Iterator<Item = (f64, f64)>>(arcs: I) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in arcs {
        match out.last_mut() {
            Some(last) if (a - last.1).abs() < 1e-15 => last.1 = b,
            _ => out.push((a, b)),
        }
    }
    out
}
