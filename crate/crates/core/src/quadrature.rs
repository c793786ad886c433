//! Adaptive Gauss–Kronrod (10/21 point) integration.
//!
//! The range is first cut at the caller's breakpoints; each piece becomes a
//! segment, and semi-infinite segments are mapped onto `[0, 1)` with
//! `x = a ± t/(1-t)`. Panels from all segments share one priority queue keyed on
//! their error estimate, so the error budget is global. The final value is a
//! compensated sum over panels in position order, which makes the result
//! independent of refinement order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::special::CompensatedSum;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// How infinite ends are handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailPolicy {
    /// Map `[a, ∞)` onto `[0, 1)`.
    Map,
    /// Replace `±∞` by `±radius`.
    Truncate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail: TailPolicy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 1 << 16,
            tail: TailPolicy::Map,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_max_subdivisions(mut self, max: usize) -> Result<Self> {
        self.max_subdivisions = max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Result<Self> {
        self.tail = tail;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::precondition("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions < 16 {
            return Err(Error::precondition("max_subdivisions must be at least 16"));
        }
        if let TailPolicy::Truncate(r) = self.tail {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::precondition("truncation radius must be positive and finite"));
            }
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Integrate `f` over `[lo, hi]` (either end may be infinite).
pub fn integrate<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breakpoints(f, lo, hi, &[], spec)
}

/// Like [`integrate`], with panels aligned to the given interior breakpoints.
pub fn integrate_with_breakpoints<F>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::precondition("integration limits must not be NaN"));
    }
    if lo == hi {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
        });
    }
    if lo > hi {
        let r = integrate_with_breakpoints(f, hi, lo, breakpoints, spec)?;
        return Ok(Integral {
            value: -r.value,
            ..r
        });
    }
    let (lo, hi) = match spec.tail {
        TailPolicy::Map => (lo, hi),
        TailPolicy::Truncate(r) => (lo.max(-r), hi.min(r)),
    };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    if lo.is_infinite() && hi.is_infinite() && cuts.is_empty() {
        cuts.push(0.0);
    }
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let segments: Vec<Segment> = edges
        .windows(2)
        .map(|w| Segment::new(w[0], w[1]))
        .collect();

    Adaptive::new(&f, &segments, spec).run()
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Finite(f64, f64),
    /// `[a, ∞)`
    Upper(f64),
    /// `(-∞, b]`
    Lower(f64),
}

impl Segment {
    fn new(a: f64, b: f64) -> Self {
        match (a.is_infinite(), b.is_infinite()) {
            (false, false) => Segment::Finite(a, b),
            (false, true) => Segment::Upper(a),
            (true, false) => Segment::Lower(b),
            (true, true) => unreachable!("doubly infinite segments are split at 0"),
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            Segment::Finite(a, b) => (a, b),
            _ => (0.0, 1.0),
        }
    }

    #[inline]
    fn eval<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        match *self {
            Segment::Finite(..) => f(t),
            Segment::Upper(a) => {
                let u = 1.0 - t;
                let v = f(a + t / u);
                if v == 0.0 {
                    0.0
                } else {
                    v / (u * u)
                }
            }
            Segment::Lower(b) => {
                let u = 1.0 - t;
                let v = f(b - t / u);
                if v == 0.0 {
                    0.0
                } else {
                    v / (u * u)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    segment: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    id: u64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Adaptive<'a, F> {
    f: &'a F,
    segments: &'a [Segment],
    spec: &'a QuadratureSpec,
    next_id: u64,
}

impl<'a, F: Fn(f64) -> f64> Adaptive<'a, F> {
    fn new(f: &'a F, segments: &'a [Segment], spec: &'a QuadratureSpec) -> Self {
        Adaptive {
            f,
            segments,
            spec,
            next_id: 0,
        }
    }

    fn panel(&mut self, segment: usize, a: f64, b: f64) -> Result<Panel> {
        let seg = self.segments[segment];
        let (value, error) = gk21(|t| seg.eval(self.f, t), a, b);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::precondition(format!(
                "integrand is not finite on panel [{a}, {b}]"
            )));
        }
        let id = self.next_id;
        self.next_id += 1;
        Ok(Panel {
            segment,
            a,
            b,
            value,
            error,
            id,
        })
    }

    fn run(mut self) -> Result<Integral> {
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        for i in 0..self.segments.len() {
            let (a, b) = self.segments[i].range();
            let p = self.panel(i, a, b)?;
            heap.push(p);
        }
        let mut count = heap.len();
        let (mut value, mut error) = totals(heap.iter());
        let mut since_resync = 0usize;
        loop {
            if error <= self.spec.target(value) {
                // confirm against a fresh reduction before accepting
                let (v, e) = totals(heap.iter().chain(frozen.iter()));
                if e <= self.spec.target(v) {
                    return Ok(finish(heap, frozen, count));
                }
                value = v;
                error = e;
            }
            let Some(worst) = heap.pop() else {
                return Err(accuracy("no refinable panel left", value, error));
            };
            if count >= self.spec.max_subdivisions {
                heap.push(worst);
                let (value, error) = totals(heap.iter().chain(frozen.iter()));
                return Err(accuracy("maximum subdivisions reached", value, error));
            }
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b)
                || (worst.b - worst.a) < 1e-15 * mid.abs().max(1e-300)
            {
                frozen.push(worst);
                continue;
            }
            let left = self.panel(worst.segment, worst.a, mid)?;
            let right = self.panel(worst.segment, mid, worst.b)?;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            count += 1;
            since_resync += 1;
            if since_resync >= 64 {
                (value, error) = totals(heap.iter().chain(frozen.iter()));
                since_resync = 0;
            }
        }
    }
}

fn totals<'p>(panels: impl Iterator<Item = &'p Panel>) -> (f64, f64) {
    let mut v = CompensatedSum::new();
    let mut e = 0.0;
    for p in panels {
        v.add(p.value);
        e += p.error;
    }
    (v.value(), e)
}

fn finish(heap: BinaryHeap<Panel>, frozen: Vec<Panel>, count: usize) -> Integral {
    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|x, y| x.segment.cmp(&y.segment).then(x.a.total_cmp(&y.a)));
    let mut v = CompensatedSum::new();
    let mut e = 0.0;
    for p in &all {
        v.add(p.value);
        e += p.error;
    }
    Integral {
        value: v.value(),
        error_estimate: e,
        panels: count,
    }
}

fn accuracy(msg: &str, best: f64, error_estimate: f64) -> Error {
    Error::Accuracy {
        message: msg.to_string(),
        best,
        error_estimate,
    }
}

/// One 21-point Kronrod panel with the embedded 10-point Gauss estimate.
fn gk21<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = g(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = f_center.abs() * WGK[10];
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = g(center - dx);
        let f2 = g(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_k * half;
    let res_abs = res_abs * abs_half;
    let res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}
