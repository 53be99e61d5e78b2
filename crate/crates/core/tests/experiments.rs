use std::collections::HashSet;
use std::path::PathBuf;

use projcorrect::corrector::{self, CorrectionMode};
use projcorrect::harness::{self, Corruption, PlantedSigma, ReportFormat, CSV_COLUMNS};
use projcorrect::{ExperimentSpec, FieldSpec, GaloisField, PointMap, ProjSpace, TrialResult};

fn space(p: u32, k: u32, n: usize) -> ProjSpace {
    ProjSpace::new(GaloisField::with_default_modulus(p, k).unwrap(), n).unwrap()
}

fn splitmix(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        field: FieldSpec::with_default_modulus(2, 2).unwrap(),
        n: 3,
        planted_sigma: PlantedSigma::Random,
        corruption: Corruption::SwapPairs { count: 2 },
        mode: CorrectionMode::Exact,
        trials: 4,
        master_seed: 11,
    }
}

#[test]
fn seed_derivation() {
    for master in [0, 1, 42, u64::MAX] {
        for i in [0, 1, 2, 1000, u64::MAX - 1] {
            assert_eq!(harness::derive_seed(master, i), splitmix(master, i));
        }
    }
    let seeds: HashSet<u64> = (0..10_000).map(|i| harness::derive_seed(7, i)).collect();
    assert_eq!(seeds.len(), 10_000);
}

#[test]
fn generated_maps_are_invertible() {
    let s = space(3, 1, 2);
    for seed in 0..1000 {
        let m = harness::gen_semilinear(&s, seed, PlantedSigma::Random).unwrap();
        let f = m.to_point_map(&s).unwrap();
        let distinct: HashSet<u32> = f.table().iter().copied().collect();
        assert_eq!(distinct.len(), s.num_points());
    }
    let s4 = space(2, 2, 2);
    for e in 0..2 {
        let m = harness::gen_semilinear(&s4, 3, PlantedSigma::Exponent(e)).unwrap();
        assert_eq!(m.sigma().exponent(), e);
    }
    assert!(harness::gen_semilinear(&s4, 3, PlantedSigma::Exponent(2)).is_err());
    assert_eq!(
        harness::gen_semilinear(&s, 5, PlantedSigma::Random).unwrap(),
        harness::gen_semilinear(&s, 5, PlantedSigma::Random).unwrap()
    );
}

#[test]
fn swaps_keep_injectivity() {
    let s = space(2, 1, 4);
    let f = PointMap::identity(&s);
    assert_eq!(harness::corrupt_swap(&f, 0, 1).unwrap(), f);
    for seed in 0..100 {
        for count in [1, 3, 15] {
            let g = harness::corrupt_swap(&f, count, seed).unwrap();
            let distinct: HashSet<u32> = g.table().iter().copied().collect();
            assert_eq!(distinct.len(), 31);
            let changed = (0..31).filter(|&i| g.image(i) != f.image(i)).count();
            assert_eq!(changed, 2 * count);
        }
    }
    assert!(harness::corrupt_swap(&f, 16, 0).is_err());
}

#[test]
fn trial_seeds_and_determinism() {
    let spec = small_spec();
    let a = harness::run_experiment(&spec).unwrap();
    let b = harness::run_experiment(&spec).unwrap();
    let json = |r: &[TrialResult]| harness::render_report(r, ReportFormat::Json).unwrap();
    assert_eq!(json(&a), json(&b));
    for (i, t) in a.iter().enumerate() {
        assert_eq!(t.trial, i);
        assert_eq!(t.trial_seed, splitmix(11, i as u64));
        assert!(t.eps_exact);
    }

    // replay trial 2 by hand
    let s = space(2, 2, 3);
    let ts = splitmix(11, 2);
    let m = harness::gen_semilinear(&s, splitmix(ts, 0), PlantedSigma::Random).unwrap();
    let clean = m.to_point_map(&s).unwrap();
    let g = harness::corrupt_swap(&clean, 2, splitmix(ts, 1)).unwrap();
    let (h, rep) = corrector::correct_map(&g, &CorrectionMode::Exact).unwrap();
    assert_eq!(a[2].recovered, h == clean);
    assert_eq!(a[2].agreement, rep.agreement_with_input);
    assert_eq!(a[2].uncorrectable, rep.uncorrectable_count);
    let eps = projcorrect::bounds::rational(1, 1) - corrector::preserved_line_fraction_exact(&g).unwrap();
    assert_eq!(a[2].eps_actual, eps);
}

#[test]
fn json_round_trip() {
    let results = harness::run_experiment(&small_spec()).unwrap();
    let text = harness::render_report(&results, ReportFormat::Json).unwrap();
    let back: Vec<TrialResult> = serde_json::from_slice(&text).unwrap();
    assert_eq!(back.len(), results.len());
    for (x, y) in back.iter().zip(&results) {
        assert_eq!(x.trial_seed, y.trial_seed);
        assert_eq!(x.eps_actual, y.eps_actual);
        assert_eq!(x.hypotheses, y.hypotheses);
        assert_eq!(x.recovered, y.recovered);
    }
    let spec_text = serde_json::to_string(&small_spec()).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentSpec>(&spec_text).unwrap(), small_spec());
}

#[test]
fn csv_rows() {
    let results = harness::run_experiment(&small_spec()).unwrap();
    let text = String::from_utf8(harness::render_report(&results, ReportFormat::Csv).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for (row, t) in rows.iter().zip(&results) {
        assert_eq!(row.len(), CSV_COLUMNS.len());
        assert_eq!(row[1].parse::<u64>().unwrap(), t.trial_seed);
        assert_eq!(row[2], t.eps_actual.numer().to_string());
        assert_eq!(row[3], t.eps_actual.denom().to_string());
        assert_eq!(row[12].parse::<bool>().unwrap(), t.recovered);
    }
}

#[test]
fn csv_golden() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/experiment_gf4_n3.csv");
    let results = harness::run_experiment(&small_spec()).unwrap();
    let text = harness::render_report(&results, ReportFormat::Csv).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    assert_eq!(String::from_utf8(text).unwrap(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn emit_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let results = harness::run_experiment(&small_spec()).unwrap();
    for format in [ReportFormat::Json, ReportFormat::Csv] {
        let path = dir.path().join(format!("out.{format}"));
        harness::emit_report(&results, format, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), harness::render_report(&results, format).unwrap());
    }
    let bad = dir.path().join("missing/out.csv");
    assert!(harness::emit_report(&results, ReportFormat::Csv, &bad).unwrap_err().is_io());
}

#[test]
fn rejects_bad_experiments() {
    let mut spec = small_spec();
    spec.trials = 0;
    assert!(harness::run_experiment(&spec).is_err());
    let mut spec = small_spec();
    spec.n = 1;
    assert!(harness::run_experiment(&spec).is_err());
    let mut spec = small_spec();
    spec.corruption = Corruption::SwapPairs { count: 43 };
    assert!(harness::run_experiment(&spec).is_err());
}
