use photonsrc_web::{pulse_value, spectrum_value, steady_value};

#[test]
fn spectrum_groups_levels_by_label() {
    let v = spectrum_value("two_photon_jc", 5.0, 11, 3).unwrap();
    assert_eq!(v["g"].as_array().unwrap().len(), 11);
    let levels = v["levels"].as_array().unwrap();
    // |g,0>, |g,1>, then a +/- pair for each manifold 2..=3
    assert_eq!(levels.len(), 6);
    for l in levels {
        assert_eq!(l["energy"].as_array().unwrap().len(), 11);
    }
}

#[test]
fn steady_blockade_tightens_with_coupling() {
    let v = steady_value(1.0, 20.0, 3, 0.5, 0.5, 1.0).unwrap();
    let g2: Vec<f64> = v["g2_zero"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(g2[0] > g2[1] && g2[1] > g2[2], "{g2:?}");
}

#[test]
fn pulse_without_merits_reports_efficiency_only() {
    let v = pulse_value("two_photon_jc", 0, 10.0, 0.5, 0.5, 1.0, 2.0, false).unwrap();
    let e = v["efficiency"].as_f64().unwrap();
    assert!(e > 0.0 && e.is_finite());
    assert!(v["purity"].is_null());
    assert_eq!(v["t"].as_array().unwrap().len(), v["p_fock1"].as_array().unwrap().len());
}

#[test]
fn bad_inputs_are_errors() {
    assert!(spectrum_value("jc", 5.0, 11, 3).is_err());
    assert!(steady_value(0.0, 20.0, 3, 0.5, 0.5, 1.0).is_err());
    assert!(pulse_value("standard_jc", 2, 10.0, 0.5, 0.5, 1.0, 2.0, false).is_err());
    assert!(spectrum_value("two_photon_jc", 5.0, 1, 3).is_err());
}
