use std::path::PathBuf;

use proptest::prelude::*;
use schiffer_cli::{resolve, ConfigError, Overrides, RunConfig};

#[test]
fn defaults_are_valid() {
    let c = RunConfig::default();
    c.validate().unwrap();
    assert_eq!((c.k, c.l, c.m_colloc), (48, 16, 32));
    assert_eq!(c.sphere_ell(), None);
}

#[test]
fn text_with_comments() {
    let mut c = RunConfig::default();
    c.apply_text("# grid\nK = 32   # radial\n\nL=8\nM = 16\nell = 7\nout = runs/a\n", "inline").unwrap();
    assert_eq!((c.k, c.l, c.m_colloc, c.ell), (32, 8, 16, 7));
    assert_eq!(c.out, PathBuf::from("runs/a"));
    assert_eq!(c.sphere_ell(), Some(7));
}

#[test]
fn text_errors() {
    let mut c = RunConfig::default();
    assert!(matches!(c.apply_text("K 32", "f"), Err(ConfigError::Syntax { line: 1, .. })));
    assert!(matches!(c.apply_text("\nfoo = 1", "f"), Err(ConfigError::UnknownKey(k)) if k == "foo"));
    assert!(matches!(c.apply_text("K = -1", "f"), Err(ConfigError::BadValue { .. })));
    assert!(matches!(c.apply_text("newton_tol = x", "f"), Err(ConfigError::BadValue { .. })));
}

#[test]
fn precedence_flag_env_file_default() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.conf");
    std::fs::write(&path, "N = 2\nK = 32\nout = from_file\n").unwrap();
    let base = Overrides { config: Some(path), ..Overrides::default() };
    let c = resolve(&base, None).unwrap();
    assert_eq!((c.n, c.k, c.l), (2, 32, 16));
    assert_eq!(c.out, PathBuf::from("from_file"));
    let c = resolve(&base, Some("from_env".into())).unwrap();
    assert_eq!(c.out, PathBuf::from("from_env"));
    let flags = Overrides { k: Some(40), out: Some("from_flag".into()), ..base };
    let c = resolve(&flags, Some("from_env".into())).unwrap();
    assert_eq!((c.n, c.k), (2, 40));
    assert_eq!(c.out, PathBuf::from("from_flag"));
}

#[test]
fn envelope() {
    let bad = [
        Overrides { k: Some(7), ..Default::default() },
        Overrides { sl_n: Some(4), ..Default::default() },
        Overrides { kernel_tol: Some(0.0), ..Default::default() },
        Overrides { zero_tol: Some(1e-2), ..Default::default() },
        Overrides { n: Some(0), ..Default::default() },
        Overrides { m: Some(7), ..Default::default() },
        Overrides { lambda0: Some(0.0), ..Default::default() },
        Overrides { s_max: Some(f64::INFINITY), ..Default::default() },
        Overrides { m_colloc: Some(8), l: Some(9), ..Default::default() },
    ];
    for o in &bad {
        assert!(matches!(resolve(o, None), Err(ConfigError::Invalid(_))), "{o:?}");
    }
}

#[test]
fn json_echo_uses_file_keys() {
    let v = serde_json::to_value(RunConfig::default()).unwrap();
    let mut c = RunConfig::default();
    for (key, value) in v.as_object().unwrap() {
        let text = match value {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        c.set(key, &text).unwrap();
    }
    assert_eq!(c, RunConfig::default());
}

proptest! {
    #[test]
    fn sizes_below_eight_rejected(k in 0usize..8) {
        let o = Overrides { k: Some(k), ..Default::default() };
        prop_assert!(resolve(&o, None).is_err());
    }

    #[test]
    fn tolerance_envelope(t in 1e-300f64..1.0) {
        let o = Overrides { newton_tol: Some(t), ..Default::default() };
        prop_assert_eq!(resolve(&o, None).is_ok(), t < 1e-2);
    }

    #[test]
    fn set_round_trips_numbers(n in 1u32..=5, m in 1u32..=6, lambda0 in 0.01f64..0.99) {
        let mut c = RunConfig::default();
        c.apply_text(&format!("N = {n}\nm = {m}\nlambda0 = {lambda0}"), "p").unwrap();
        prop_assert_eq!((c.n, c.m, c.lambda0), (n, m, lambda0));
        prop_assert!(c.validate().is_ok());
    }
}
