use bfecc_core::analysis::{restrict_to_coarse, sample_function, three_grid_order, TestFunction};
use bfecc_core::grid::{make_uniform_grid, shift_grid, Field};
use bfecc_core::interp::{Method, TransferPlan};
use bfecc_core::study::{preset, run_preset, run_study, StudyConfig};

fn csv_with_threads(cfg: &StudyConfig, threads: usize) -> String {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_study(cfg).unwrap().to_csv())
}

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let mut rotated = preset("table10").unwrap();
    rotated.ladder.spacings.truncate(3);
    for cfg in [preset("table2").unwrap(), preset("table7").unwrap(), rotated] {
        let reference = run_study(&cfg).unwrap().to_csv();
        assert_eq!(run_study(&cfg).unwrap().to_csv(), reference);
        for threads in [1, 3] {
            assert_eq!(csv_with_threads(&cfg, threads), reference, "{}", cfg.study.name);
        }
    }
}

#[test]
fn exported_preset_reproduces_preset_output() {
    let direct = run_preset("table5").unwrap();
    let text = preset("table5").unwrap().to_toml_string();
    let cfg = StudyConfig::from_toml_str(&text).unwrap();
    let via_file = run_study(&cfg).unwrap();
    assert_eq!(via_file.to_csv(), direct.to_csv());
    assert_eq!(via_file.to_text(), direct.to_text());
}

#[test]
fn kappa_of_plain_transfers_is_about_two() {
    let coarse_h = 0.05;
    let w = coarse_h / 3.0;
    let mut targets = Vec::new();
    let mut fields = Vec::new();
    for level in 0..3 {
        let h = coarse_h / f64::from(1 << level);
        let n = (1.0 / h).round() as usize + 1;
        let source = make_uniform_grid(1, &[n], &[h], &[0.0]).unwrap();
        let target = shift_grid(&source, &[w]).unwrap();
        let f = sample_function(&source, TestFunction::SinPiX);
        let out = TransferPlan::for_grid(&source, &target, Method::Multilinear)
            .apply(&f)
            .unwrap();
        fields.push(Field::new(target.clone(), out.values).unwrap());
        targets.push(target);
    }
    let coarse = &targets[0];
    let c = fields[0].values().to_vec();
    let m = restrict_to_coarse(&fields[1], coarse, 2).unwrap();
    let f = restrict_to_coarse(&fields[2], coarse, 4).unwrap();
    let keep: Vec<usize> = (0..c.len())
        .filter(|&i| c[i].is_finite() && m[i].is_finite() && f[i].is_finite())
        .collect();
    assert!(keep.len() >= 15);
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let kappa = three_grid_order(&pick(&c), &pick(&m), &pick(&f)).unwrap();
    assert!((kappa - 2.0).abs() <= 0.3, "kappa {kappa}");
}
