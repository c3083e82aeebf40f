//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p eigenexpr --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use eigenexpr::synth::{write_dataset, SyntheticDataset};
use eigenexpr::*;
use rand::seq::SliceRandom;
use rand::Rng;
use Expression::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "{what} took {took:?}, limit {limit:?}");
    Ok(took)
}

fn table_replay() -> Outcome {
    let start = Instant::now();
    let eds = load_replay_dir(&fixture("published_tables")).map_err(|e| e.to_string())?;
    let result = replay(eds).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(1), start, "replay")?;

    let expected = [
        (RegionKind::LeftEye, [Sad, Fear, Sad, Anger, Fear]),
        (RegionKind::RightEye, [Disgust, Disgust, Fear, Sad, Sad]),
        (RegionKind::Nose, [Sad, Disgust, Anger, Anger, Sad]),
        (RegionKind::Lip, [Surprise, Sad, Fear, Sad, Sad]),
        (RegionKind::NoseLip, [Surprise, Disgust, Sad, Surprise, Sad]),
    ];
    for (region, winners) in expected {
        let got = result
            .votes
            .region_winners(region)
            .ok_or(format!("no votes for {region}"))?;
        ensure!(*got == winners, "{region}: winners {got:?}, expected {winners:?}");
    }
    ensure!(
        result.votes.totals() == &[3, 0, 4, 3, 11, 4],
        "totals {:?}",
        result.votes.totals()
    );
    ensure!(result.decided == Sad, "decided {}", result.decided);
    Ok(format!("totals 3,0,4,3,11,4 -> Sad in {took:?}"))
}

fn eigen_solver() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2);
    let sizes = [2, 40, 60, 90, 95];
    let mut worst = [0.0f64; 4];
    for i in 0..200 {
        let n = sizes[i % sizes.len()];
        let c = random_symmetric(&mut rng, n);
        let norm = c.frobenius_norm();
        let pairs = eigen_symmetric(&c).map_err(|e| e.to_string())?;
        ensure!(pairs.len() == n, "n={n}: {} pairs", pairs.len());

        for p in &pairs {
            let cv = c.mul_vec(&p.vector).unwrap();
            let r = cv
                .iter()
                .zip(p.vector.iter())
                .map(|(a, v)| (a - p.value * v).powi(2))
                .sum::<f64>()
                .sqrt();
            worst[0] = worst[0].max(r / norm.max(1.0));
        }
        for a in 0..n {
            for b in a..n {
                let d = pairs[a].vector.dot(&pairs[b].vector) - f64::from(u8::from(a == b));
                worst[1] = worst[1].max(d.abs());
            }
        }
        let sum: f64 = pairs.iter().map(|p| p.value).sum();
        worst[2] = worst[2].max((sum - c.trace()).abs() / c.trace().abs().max(1.0));
        let reference = reference_eigenvalues(&c);
        for (p, r) in pairs.iter().zip(&reference) {
            worst[3] = worst[3].max((p.value - r).abs());
        }
    }
    let took = within(Duration::from_secs(60), start, "200 decompositions")?;
    for (name, w) in ["residual", "orthogonality", "trace", "reference"].iter().zip(worst) {
        ensure!(w <= 1e-8, "worst {name} error {w:e}");
    }
    Ok(format!(
        "200 matrices, worst residual {:.1e}, orthogonality {:.1e}, trace {:.1e}, reference {:.1e}, {took:?}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn numerics() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (r, c) = (rng.random_range(2..40), rng.random_range(1..30));
        let m = random_matrix(&mut rng, r, c);

        let mean = column_mean(&m);
        for (a, b) in mean.iter().zip(oracle_column_mean(&m)) {
            worst = worst.max((a - b).abs());
        }
        let oracle_mean = oracle_column_mean(&m);
        let centered = center(&m);
        for i in 0..r {
            for j in 0..c {
                worst = worst.max((centered[(i, j)] - (m[(i, j)] - oracle_mean[j])).abs());
            }
        }

        let cov = covariance(&m).map_err(|e| e.to_string())?;
        let oracle = oracle_covariance(&m);
        for j in 0..c {
            for k in 0..c {
                worst = worst.max((cov[(j, k)] - oracle[j][k]).abs());
                ensure!(cov[(j, k)] == cov[(k, j)], "covariance not symmetric at ({j},{k})");
            }
        }
        let min = eigen_symmetric(&cov).unwrap().last().unwrap().value;
        ensure!(min >= -1e-10 * cov.trace(), "covariance eigenvalue {min:e} below zero");

        let len = rng.random_range(1..200);
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = euclidean_distance(&a, &b).unwrap();
        worst = worst.max((d - oracle_distance(&a, &b)).abs());
    }
    ensure!(worst <= 1e-12, "worst oracle difference {worst:e}");
    Ok(format!("100 instances each, worst difference {worst:.1e}"))
}

fn self_classification() -> Outcome {
    let mut worst = 0.0f64;
    for seed in [40, 41, 42] {
        let faces = random_faces(seed);
        let model = train_images(&faces).map_err(|e| e.to_string())?;
        for face in &faces {
            let result = classify(&face.image, &face.crops, &model).map_err(|e| e.to_string())?;
            ensure!(
                result.decided == face.expression,
                "{} decided as {}",
                face.expression,
                result.decided
            );
            let votes = result.votes.total(face.expression);
            ensure!(votes == 25, "{} got {votes}/25 votes", face.expression);
            for m in &result.ed_matrices {
                for k in 0..BASIS_SIZE {
                    worst = worst.max(m.get(face.expression, k));
                }
            }
        }
    }
    ensure!(worst <= 1e-9, "self-row distance {worst:e}");
    Ok(format!("18 faces, 25/25 votes each, worst self distance {worst:.1e}"))
}

fn synthetic_accuracy() -> Outcome {
    let start = Instant::now();
    let train = SyntheticDataset::new(0.05, 1).generate(10).map_err(|e| e.to_string())?;
    let test = SyntheticDataset::new(0.05, 2).generate(10).map_err(|e| e.to_string())?;
    let model = train_images(&train).map_err(|e| e.to_string())?;
    let report = evaluate_samples(&model, &test, SplitMode::Disjoint);
    let took = within(Duration::from_secs(60), start, "train and evaluate")?;
    ensure!(report.errors.is_empty(), "{} samples failed", report.errors.len());
    let rate = report.overall_rate.unwrap_or(0.0);
    ensure!(rate >= 0.95, "overall rate {:.1}%", rate * 100.0);
    Ok(format!(
        "{}/{} correct ({:.1}%) in {took:?}",
        report.correct,
        report.tested,
        rate * 100.0
    ))
}

fn classify_latency() -> Outcome {
    let samples = SyntheticDataset::new(0.05, 6).generate(2).map_err(|e| e.to_string())?;
    let model = train_images(&samples).map_err(|e| e.to_string())?;
    let probes = SyntheticDataset::new(0.05, 7).generate(4).map_err(|e| e.to_string())?;
    // warm up the thread pool
    classify(&probes[0].image, &probes[0].crops, &model).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for p in &probes {
        classify(&p.image, &p.crops, &model).map_err(|e| e.to_string())?;
    }
    let mean = start.elapsed().as_secs_f64() / probes.len() as f64;
    ensure!(mean <= 0.1, "mean classification {mean:.3} s");
    Ok(format!("mean {:.1} ms over {} samples", mean * 1e3, probes.len()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let samples = SyntheticDataset::new(0.05, 8).generate(3).map_err(|e| e.to_string())?;
    write_dataset(dir.path(), "img", &samples).map_err(|e| e.to_string())?;
    let manifest = TrainingManifest::load(&dir.path().join("manifest.json")).map_err(|e| e.to_string())?;

    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for p in &paths {
        let model = train(&manifest).map_err(|e| e.to_string())?;
        save_model(&model, p).map_err(|e| e.to_string())?;
    }
    let bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    ensure!(bytes[0] == bytes[1], "two training runs wrote different files");

    let model = train(&manifest).map_err(|e| e.to_string())?;
    let loaded = load_model(&paths[0]).map_err(|e| e.to_string())?;
    ensure!(
        model_bits(&loaded) == model_bits(&model),
        "load(save(m)) differs from m"
    );

    let mut rng = rng(9);
    for _ in 0..5 {
        let mut shuffled = manifest.clone();
        shuffled.entries.shuffle(&mut rng);
        let permuted = train(&shuffled).map_err(|e| e.to_string())?;
        ensure!(
            model_bits(&permuted) == model_bits(&model),
            "permuted manifest changed the model"
        );
    }
    Ok(format!(
        "identical {} byte files, bit-exact reload, 5 permutations",
        bytes[0].len()
    ))
}

fn random_ed(rng: &mut rand_chacha::ChaCha8Rng, region: RegionKind) -> EdMatrix {
    let mut rows = [[0.0; BASIS_SIZE]; Expression::COUNT];
    for row in &mut rows {
        for v in row.iter_mut() {
            *v = rng.random_range(0.0..2.0);
        }
    }
    EdMatrix::new(region, rows).unwrap()
}

fn invariants() -> Outcome {
    let mut rng = rng(10);
    const N: usize = 120;

    // argmin is unchanged by positive scaling
    for _ in 0..N {
        let eds: Vec<EdMatrix> = RegionKind::ALL.iter().map(|&r| random_ed(&mut rng, r)).collect();
        let base = aggregate(eds.clone()).unwrap();
        let factor = rng.random_range(0.01..100.0);
        let scaled: Vec<EdMatrix> = eds.iter().map(|m| m.scaled(factor).unwrap()).collect();
        for (a, b) in eds.iter().zip(&scaled) {
            ensure!(
                region_votes(a) == region_votes(b),
                "scaling by {factor} moved an argmin"
            );
        }
        ensure!(
            aggregate(scaled).unwrap().decided == base.decided,
            "scaling changed the decision"
        );
    }

    // every region casts exactly five votes
    for _ in 0..N {
        let eds: Vec<EdMatrix> = RegionKind::ALL.iter().map(|&r| random_ed(&mut rng, r)).collect();
        let result = aggregate(eds).unwrap();
        let sum: u32 = result.votes.totals().iter().sum();
        ensure!(sum == 25, "votes sum to {sum}");
        for r in RegionKind::ALL {
            ensure!(
                result.votes.region_counts(r).iter().sum::<u32>() == 5,
                "{r} did not cast five votes"
            );
        }
    }

    // lowering a winner keeps it; raising a loser changes nothing; dropping
    // below the column minimum takes the vote
    for _ in 0..N {
        let m = random_ed(&mut rng, RegionKind::Nose);
        let before = region_votes(&m);
        let e = Expression::ALL[rng.random_range(0..6)];
        let k = rng.random_range(0..BASIS_SIZE);
        let v = m.get(e, k);
        if before[k] == e {
            let after = region_votes(&m.with_entry(e, k, v * rng.random_range(0.0..1.0)).unwrap());
            ensure!(after == before, "lowering the winning entry changed the votes");
        } else {
            let after = region_votes(&m.with_entry(e, k, v + rng.random_range(0.0..1.0)).unwrap());
            ensure!(after == before, "raising a losing entry changed the votes");
            let min = m.get(before[k], k);
            let after = region_votes(&m.with_entry(e, k, min * 0.5).unwrap());
            ensure!(after[k] == e, "undercutting the minimum did not take the vote");
        }
    }

    // adding a constant to every pixel leaves the basis alone
    for i in 0..N {
        let r = RegionKind::ALL[i % 5];
        let (h, w) = r.canonical_dims();
        let img = random_image(&mut rng, h, w, 0.0, 0.6);
        let shift = rng.random_range(0.0..0.4);
        let shifted = GrayImage::new(h, w, img.pixels().iter().map(|p| p + shift).collect()).unwrap();
        let a = extract_basis(&img, r).unwrap();
        let b = extract_basis(&shifted, r).unwrap();
        for (p, q) in a.pairs().iter().zip(b.pairs()) {
            ensure!(
                (p.value - q.value).abs() <= 1e-10 * p.value,
                "{r}: eigenvalue moved under shift"
            );
            let d = euclidean_distance(&p.vector, &q.vector).unwrap();
            ensure!(d <= 1e-8, "{r}: eigenvector moved {d:e} under shift");
        }
    }

    // signs are fixed by the largest component, and repeat bit for bit
    for i in 0..N {
        let c = random_symmetric(&mut rng, 2 + i % 30);
        let first = eigen_symmetric(&c).unwrap();
        let second = eigen_symmetric(&c).unwrap();
        ensure!(first == second, "repeated decomposition differed");
        for p in &first {
            let big = p
                .vector
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            ensure!(big >= 0.0, "largest component {big} is negative");
            let flipped = Vector::new(p.vector.iter().map(|x| -x).collect())
                .unwrap()
                .sign_normalized();
            ensure!(flipped == p.vector, "negated vector normalized differently");
        }
    }
    Ok(format!("5 invariants x {N} instances"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 table replay", table_replay),
        ("2 eigen solver", eigen_solver),
        ("3 numerics vs oracles", numerics),
        ("4 self-classification", self_classification),
        ("5 synthetic accuracy", synthetic_accuracy),
        ("6 classification latency", classify_latency),
        ("7 determinism and persistence", determinism),
        ("8 invariants", invariants),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
