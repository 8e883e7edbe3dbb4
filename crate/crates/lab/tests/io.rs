use proptest::prelude::*;
use repulsion_core::{RateRow, RateTable, SpeedConstants};
use repulsion_lab::io::*;
use repulsion_lab::tolerances::{Tolerances, TOLERANCES_VERSION};

proptest! {
    #[test]
    fn rate_table_round_trips_bit_exactly(
        start in 0.02f64..0.5,
        steps in prop::collection::vec((1e-6f64..0.01, 1e-3f64..1e3, 1e-12f64..10.0), 3..40),
    ) {
        let mut alpha = start;
        let rows: Vec<RateRow> = steps.iter().map(|&(d, j, c)| { alpha += d; RateRow { alpha, j, c } }).collect();
        let table = RateTable::new(rows).unwrap();
        let mut buf = Vec::new();
        write_rate_table(&mut buf, &table).unwrap();
        let back = read_rate_table(buf.as_slice()).unwrap();
        for (a, b) in table.rows().iter().zip(back.rows()) {
            prop_assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            prop_assert_eq!(a.j.to_bits(), b.j.to_bits());
            prop_assert_eq!(a.c.to_bits(), b.c.to_bits());
        }
    }
}

#[test]
fn rate_table_header_is_checked() {
    let bad = "alpha,J\n0.1,2\n";
    assert!(read_rate_table(bad.as_bytes()).is_err());
    let short = "alpha,J,C\n0.1,2,3\n0.2,2,3\n";
    assert!(read_rate_table(short.as_bytes()).is_err());
    let text = "alpha,J,C\n0.1,2,3\n0.2,2,3\n0.3,4,5\n";
    assert_eq!(read_rate_table(text.as_bytes()).unwrap().len(), 3);
}

#[test]
fn seventeen_significant_digits() {
    assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    assert_eq!(fmt_f64(4.0), "4.0000000000000000e0");
}

#[test]
fn speed_constants_json_keys() {
    let c = SpeedConstants {
        j0: 2.4,
        gamma_star: 4.6,
        gamma_bullet: 3.5,
        gamma_bullet_cost: 11.6,
        gamma_circ: 1.98,
    };
    let v = serde_json::to_value(SpeedConstantsJson::from(c)).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "Gamma_bullet",
            "gamma_bullet",
            "gamma_circ",
            "gamma_star",
            "j0"
        ]
    );
    assert_eq!(v["Gamma_bullet"], 11.6);
}

#[test]
fn bins_and_density_csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.csv");
    save_bins(&p, &[(0.0, 0.5, 1.0), (0.5, 1.0, 1.0)]).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("bin_left,bin_right,value\n"));
    assert_eq!(text.lines().count(), 3);

    let g = repulsion_core::specfun::SampledFunction::from_fn(0.0, 1.0, 11, |x| x).unwrap();
    let q = dir.path().join("d.csv");
    save_density(&q, &g).unwrap();
    let text = std::fs::read_to_string(&q).unwrap();
    assert!(text.starts_with("x,density\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn manifest_requires_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest {
        command: "x".into(),
        parameters: Default::default(),
        seed: Some(1),
        outputs: vec![dir.path().join("missing.csv")],
        wall_time: 0.0,
    };
    assert!(m.save(&dir.path().join("m.json")).is_err());
}

#[test]
fn tolerance_overrides_keep_defaults() {
    let t = Tolerances::from_json(r#"{"version": 1, "se_multiplier": 4.0}"#).unwrap();
    assert_eq!(t.se_multiplier, 4.0);
    assert_eq!(t.ks_occupation0, Tolerances::default().ks_occupation0);
    assert_eq!(TOLERANCES_VERSION, 1);
    assert!(Tolerances::from_json(r#"{"version": 2}"#).is_err());
    assert!(Tolerances::from_json(r#"{"no_such_field": 1}"#).is_err());
    let json = serde_json::to_string(&Tolerances::default()).unwrap();
    assert_eq!(Tolerances::from_json(&json).unwrap(), Tolerances::default());
}
