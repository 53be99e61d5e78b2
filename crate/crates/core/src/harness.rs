//! Planted instances, corruption, a brute-force reference corrector, and the
//! seeded experiment runner.
//!
//! All randomness flows from explicit 64-bit seeds. Trial `i` of an
//! experiment runs under `derive_seed(master_seed, i)`, and within a trial
//! the planted map, the corruption and the sampled corrector use
//! `derive_seed(trial_seed, 0)`, `derive_seed(trial_seed, 1)` and
//! `derive_seed(trial_seed, 2)`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{self, rational_json, BoundReport, Rational};
use crate::corrector::{self, CorrectionMode, CorrectionOutcome, EpsMeasurement, SemilinearMap};
use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec, Frobenius, GaloisField};
use crate::linalg;
use crate::projspace::{PointMap, ProjPoint, ProjSpace, MAX_ENUMERABLE_LINES};

/// Mixes a master seed and an index into a child seed.
///
/// `z = master + (index + 1)·0x9E3779B97F4A7C15` (wrapping), followed by the
/// SplitMix64 finalizer: `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
/// z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which field automorphism a planted map uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlantedSigma {
    Exponent(u32),
    Random,
}

impl Serialize for PlantedSigma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PlantedSigma::Exponent(j) => s.serialize_u32(*j),
            PlantedSigma::Random => s.serialize_str("random"),
        }
    }
}

impl<'de> Deserialize<'de> for PlantedSigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(j) => Ok(PlantedSigma::Exponent(j)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for PlantedSigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            return Ok(PlantedSigma::Random);
        }
        s.parse()
            .map(PlantedSigma::Exponent)
            .map_err(|_| Error::invalid(format!("sigma must be an exponent or \"random\", got {s:?}")))
    }
}

/// Uniform invertible matrix (by rejection) with the requested automorphism.
pub fn gen_semilinear(space: &ProjSpace, seed: u64, sigma: PlantedSigma) -> Result<SemilinearMap> {
    let field = space.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exponent = match sigma {
        PlantedSigma::Exponent(j) if j < field.degree() => j,
        PlantedSigma::Exponent(j) => {
            return Err(Error::invalid(format!("sigma exponent {j} must be below {}", field.degree())))
        }
        PlantedSigma::Random => rng.random_range(0..field.degree()),
    };
    let d = space.dim() + 1;
    let q = field.order() as Elem;
    loop {
        let m: Vec<Vec<Elem>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(0..q)).collect()).collect();
        if linalg::rank(field, &m) == d {
            return SemilinearMap::new(field, Frobenius::new(exponent, field), m);
        }
    }
}

/// Swaps the images of `count` disjoint random pairs of points.
pub fn corrupt_swap(f: &PointMap, count: usize, seed: u64) -> Result<PointMap> {
    let n = f.domain().num_points();
    if 2 * count > n {
        return Err(Error::invalid(format!("cannot pick {count} disjoint pairs from {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, n, 2 * count).into_vec();
    let mut table = f.table().to_vec();
    for pair in picked.chunks(2) {
        table.swap(pair[0], pair[1]);
    }
    PointMap::new(f.domain().clone(), f.codomain().clone(), table)
}

/// Largest space [`naive_correct_point`] accepts.
pub const NAIVE_MAX_POINTS: usize = 200;

/// Reference implementation of exact correction at `x`, working from
/// coordinates and ranks only. Every line membership, span and meet is
/// recomputed for every quadruple.
pub fn naive_correct_point(f: &PointMap, x: &ProjPoint) -> Result<CorrectionOutcome> {
    let dom = f.domain();
    let cod = f.codomain();
    if dom.num_points() > NAIVE_MAX_POINTS || cod.num_points() > NAIVE_MAX_POINTS {
        return Err(Error::TooLarge(format!("naive corrector is limited to {NAIVE_MAX_POINTS} points")));
    }
    dom.check_point(x)?;
    let field = dom.field();
    let xi = dom.index_of(x);
    let dc = |i: usize| dom.point_coords(i);
    let fc = |i: usize| cod.point_coords(f.image(i));
    let rank = |vs: &[Vec<Elem>]| linalg::rank(field, vs);

    let mut pencil = Vec::new();
    for y1 in (0..dom.num_points()).filter(|&y| y != xi) {
        for y2 in (0..dom.num_points()).filter(|&y| y != xi && y != y1) {
            if rank(&[dc(xi), dc(y1), dc(y2)]) == 2 {
                pencil.push((y1, y2));
            }
        }
    }

    let preserved = |a: usize, b: usize| {
        let mut imgs = Vec::new();
        for z in 0..dom.num_points() {
            if rank(&[dc(a), dc(b), dc(z)]) == 2 {
                imgs.push(fc(z));
            }
        }
        rank(&imgs) == 2
    };

    let mut votes = vec![0u64; cod.num_points()];
    for &(y1, y2) in &pencil {
        for &(y3, y4) in &pencil {
            if y1 == y3 || y2 == y4 || !preserved(y1, y3) || !preserved(y2, y4) {
                continue;
            }
            let (a, b, c, d) = (fc(y1), fc(y2), fc(y3), fc(y4));
            if rank(&[a.clone(), b.clone(), c.clone(), d.clone()]) == 2 {
                continue;
            }
            let common: Vec<usize> = (0..cod.num_points())
                .filter(|&z| {
                    let zc = cod.point_coords(z);
                    rank(&[a.clone(), b.clone(), zc.clone()]) == 2 && rank(&[c.clone(), d.clone(), zc]) == 2
                })
                .collect();
            if let [z] = common[..] {
                votes[z] += 1;
            }
        }
    }

    let total = (pencil.len() * pencil.len()) as u64;
    let best = votes.iter().copied().max().unwrap_or(0);
    let leaders: Vec<usize> = (0..votes.len()).filter(|&z| votes[z] > 0 && 2 * votes[z] >= total).collect();
    Ok(CorrectionOutcome {
        x: xi,
        z: if leaders.len() == 1 { Some(leaders[0]) } else { None },
        votes: best,
        quadruples_examined: total,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Corruption {
    SwapPairs { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub field: FieldSpec,
    pub n: usize,
    pub planted_sigma: PlantedSigma,
    pub corruption: Corruption,
    pub mode: CorrectionMode,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub trial_seed: u64,
    /// Fraction of lines not sent to lines by the corrupted map. Exact when
    /// the line set is enumerable, else the sampled fraction.
    #[serde(with = "rational_json")]
    pub eps_actual: Rational,
    pub eps_exact: bool,
    pub hypotheses: BoundReport,
    /// The corrected map equals the planted map at every point.
    pub recovered: bool,
    /// Fraction of points where the corrected map equals the corrupted input.
    #[serde(with = "rational_json")]
    pub agreement: Rational,
    /// Reconstruction of the corrected map gives the planted σ and matrix.
    pub reconstruction_ok: bool,
    pub uncorrectable: usize,
    pub planted_sigma: u32,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn run_trial(spec: &ExperimentSpec, space: &ProjSpace, trial: usize) -> Result<TrialResult> {
    let start = Instant::now();
    let trial_seed = derive_seed(spec.master_seed, trial as u64);
    let planted = gen_semilinear(space, derive_seed(trial_seed, 0), spec.planted_sigma)?;
    let clean = planted.to_point_map(space)?;
    let Corruption::SwapPairs { count } = spec.corruption;
    let f = corrupt_swap(&clean, count, derive_seed(trial_seed, 1))?;
    let mode = match spec.mode {
        CorrectionMode::Exact => CorrectionMode::Exact,
        CorrectionMode::Sampled { samples, threshold, line_samples, .. } => CorrectionMode::Sampled {
            samples,
            threshold,
            line_samples,
            seed: derive_seed(trial_seed, 2),
        },
    };
    let (corrected, report) = corrector::correct_map(&f, &mode)?;
    let (eps_actual, eps_exact) = match report.eps {
        EpsMeasurement::Exact { eps } => (eps, true),
        EpsMeasurement::Sampled { .. } if space.num_lines() <= MAX_ENUMERABLE_LINES => {
            (Rational::one() - corrector::preserved_line_fraction_exact(&f)?, true)
        }
        EpsMeasurement::Sampled { bad, samples, .. } => (bounds::rational(bad as i64, samples as i64), false),
    };
    let mut hypotheses = bounds::hypotheses(space.q() as u64, space.dim() as u32, &eps_actual)?;
    hypotheses.guarantee_applicable &= eps_exact;
    let reconstruction_ok = corrector::reconstruct_semilinear(&corrected).is_ok_and(|m| m == planted);
    Ok(TrialResult {
        trial,
        trial_seed,
        eps_actual,
        eps_exact,
        hypotheses,
        recovered: corrected == clean,
        agreement: report.agreement_with_input,
        reconstruction_ok,
        uncorrectable: report.uncorrectable_count,
        planted_sigma: planted.sigma().exponent(),
        elapsed: start.elapsed(),
    })
}

/// Runs every trial, in parallel on the current rayon pool, and returns the
/// results in trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialResult>> {
    if spec.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if spec.n < 2 {
        return Err(Error::invalid("experiments need n >= 2"));
    }
    let space = ProjSpace::new(GaloisField::new(spec.field.clone())?, spec.n)?;
    (0..spec.trials).into_par_iter().map(|t| run_trial(spec, &space, t)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::invalid(format!("unknown report format {s:?}"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// Column order of CSV reports.
pub const CSV_COLUMNS: [&str; 16] = [
    "trial",
    "trial_seed",
    "eps_num",
    "eps_den",
    "eps_exact",
    "A_num",
    "A_den",
    "B_num",
    "B_den",
    "hyp1_strict",
    "hyp2",
    "guarantee_applicable",
    "recovered",
    "agreement",
    "reconstruction_ok",
    "uncorrectable",
];

/// Serializes results; JSON is a pretty-printed array of trial objects.
pub fn render_report(results: &[TrialResult], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(results)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for r in results {
                let h = &r.hypotheses;
                w.write_record([
                    r.trial.to_string(),
                    r.trial_seed.to_string(),
                    r.eps_actual.numer().to_string(),
                    r.eps_actual.denom().to_string(),
                    r.eps_exact.to_string(),
                    h.a.numer().to_string(),
                    h.a.denom().to_string(),
                    h.b.numer().to_string(),
                    h.b.denom().to_string(),
                    h.hyp1_strict.to_string(),
                    h.hyp2.to_string(),
                    h.guarantee_applicable.to_string(),
                    r.recovered.to_string(),
                    format!("{}", r.agreement.to_f64().unwrap_or(f64::NAN)),
                    r.reconstruction_ok.to_string(),
                    r.uncorrectable.to_string(),
                ])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

pub fn emit_report(results: &[TrialResult], format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = render_report(results, format)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}
