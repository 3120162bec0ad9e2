mod common;

use common::*;
use ldesmarket::accreditation::*;
use ldesmarket::domain::*;
use ldesmarket::planner::{assemble, solve_equilibrium};

fn settings(paradigm: Paradigm, durations: &[f64]) -> AccreditationSettings {
    AccreditationSettings { durations: durations.to_vec(), paradigm, ..AccreditationSettings::default() }
}

#[test]
fn shortfall_hand_values() {
    // threshold D^flex·(VOLL − PC)/VOLL = 2·12751/20300
    let threshold: f64 = 2.0 * 12751.0 / 20300.0;
    assert!((threshold - 1.25626).abs() < 5e-6);
    assert_eq!(shortfall(100.0, 2.0, 20300.0, 7549.0, 100.0, threshold), 0.0);
    let l = shortfall(100.0, 2.0, 20300.0, 7549.0, 95.0, 0.0);
    assert!((l - (5.0 + threshold)).abs() < 1e-12);
    assert!((l - 6.25626).abs() < 5e-6);
    assert_eq!(shortfall(100.0, 2.0, 20300.0, 7549.0, 100.0, 2.0), 0.0);
}

/// Fixed 10 MW generator, demand 5, 11, 5 MW over three hours, a solar
/// unit that is dark in the peak, and a storage technology to accredit.
fn toy() -> (ScenarioSet, TechnologyCatalog, FixedCapacities, MarketDesign) {
    let set = scenario_set(&["sun"], &[vec![(1.0, 5.0, 0.0, vec![1.0]), (1.0, 11.0, 0.0, vec![0.0]), (1.0, 5.0, 0.0, vec![1.0])]]);
    let mut solar = generator("Solar", 0.0, 1.0);
    solar.availability_profile_key = Some("sun".into());
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 1.0), solar], storage: vec![storage("S", 1.0, 1.0, 1.0, 1.0)] };
    let mix = FixedCapacities {
        generators: [("G".to_string(), 10.0), ("Solar".to_string(), 0.0)].into(),
        storage: [("S".to_string(), StorageCapacity { power: 0.0, energy: 0.0 })].into(),
    };
    (set, cat, mix, MarketDesign::eom_pc(1000.0, 500.0, f64::INFINITY))
}

/// Least unserved energy a storage unit of `power` MW and `energy` MWh can
/// reach in the toy, by enumeration on a grid of charge and discharge.
fn toy_brute_force_eue(power: f64, energy: f64) -> f64 {
    let demand = [5.0, 11.0, 5.0];
    let supply = 10.0;
    let n = 20;
    let step = power / n as f64;
    let mut best = f64::INFINITY;
    let levels: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    // each interval either charges or discharges one grid level
    let options: Vec<f64> = levels.iter().map(|v| -v).chain(levels.iter().skip(1).copied()).collect();
    for e0 in [0.0, energy] {
        for &a in &options {
            for &b in &options {
                for &c in &options {
                    let flows = [a, b, c];
                    let mut e = e0;
                    let mut ok = true;
                    let mut eue = 0.0;
                    for t in 0..3 {
                        let f = flows[t];
                        // positive is discharge
                        e -= f;
                        if e < -1e-12 || e > energy + 1e-12 || supply + f.min(0.0) < 0.0 {
                            ok = false;
                            break;
                        }
                        let served = (supply + f).min(demand[t]).max(0.0);
                        if f < 0.0 && supply + f < demand[t] - 1e-12 {
                            ok = false;
                            break;
                        }
                        eue += demand[t] - served;
                    }
                    if ok && e >= e0 - 1e-12 {
                        best = best.min(eue);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn toy_storage_matches_the_perfect_generator() {
    let (set, cat, mix, design) = toy();
    let eps = 0.01;
    let acc = accredit(&mix, &set, &cat, &design, &settings(Paradigm::Unconstrained, &[1.0, 2.0])).unwrap();
    let reference = &acc.estimates[0];
    assert_eq!(reference.resource, REFERENCE_NAME);
    assert_eq!(reference.credit, 1.0);
    assert!((reference.eue_0 - 1.0).abs() < 1e-7, "{}", reference.eue_0);
    assert!((reference.eue_ref - (1.0 - eps)).abs() < 1e-7);
    let oracle = toy_brute_force_eue(eps, eps);
    assert!((oracle - (1.0 - eps)).abs() < 1e-12);
    let s1 = acc.estimates.iter().find(|e| e.resource == "S" && e.duration == Some(1.0)).unwrap();
    assert!((s1.eue_r - oracle).abs() < 1e-7);
    assert!((s1.credit - 1.0).abs() < 1e-4, "{}", s1.credit);
    let solar = acc.generator_credit("Solar").unwrap();
    assert!(solar.abs() < 1e-4, "{solar}");
    assert!((acc.generator_credit("G").unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn no_scarcity_is_reported() {
    let (set, cat, mut mix, design) = toy();
    mix.generators.insert("G".into(), 20.0);
    let err = accredit(&mix, &set, &cat, &design, &settings(Paradigm::Unconstrained, &[1.0])).unwrap_err();
    assert!(matches!(err, AccreditationError::NoScarcity { .. }), "{err}");
    assert!(err.to_string().contains("larger epsilon"));
}

#[test]
fn nonpositive_epsilon_is_rejected() {
    let (set, cat, mix, design) = toy();
    let s = AccreditationSettings { epsilon: 0.0, ..settings(Paradigm::Unconstrained, &[1.0]) };
    assert_eq!(accredit(&mix, &set, &cat, &design, &s).unwrap_err(), AccreditationError::Epsilon(0.0));
}

#[test]
fn unserved_energy_resums() {
    let set = day_pair();
    let cat = small_catalog();
    let sol = solve_equilibrium(&assemble(&set, &cat, &MarketDesign::eom_pc(3000.0, 200.0, f64::INFINITY)).unwrap(), &tight()).unwrap();
    let u = unserved_energy(&sol, EueConvention::CappedOnly).unwrap();
    let mut total = 0.0;
    for (sc, s) in set.scenarios.iter().enumerate() {
        let offset: usize = set.scenarios[..sc].iter().map(|x| x.intervals.len()).sum();
        for (t, iv) in s.intervals.iter().enumerate() {
            let k = offset + t;
            let l = (iv.d_fix + iv.d_flex * (3000.0 - 200.0) / 3000.0 - sol.served_fixed[k] - sol.served_flex[k]).max(0.0);
            assert!(u.unserved[k] >= 0.0);
            assert!((u.unserved[k] - l).abs() < 1e-12);
            total += s.probability * iv.weight_hours * l;
        }
    }
    assert!((u.eue - total).abs() <= 1e-9 * total.max(1.0));
    let uncapped = solve_equilibrium(&assemble(&set, &cat, &MarketDesign::eom_voll(3000.0, 200.0, f64::INFINITY)).unwrap(), &tight()).unwrap();
    assert!(unserved_energy(&uncapped, EueConvention::CappedOnly).is_err());
    assert!(unserved_energy(&uncapped, EueConvention::Comparable).is_ok());
}

fn benchmark() -> (ScenarioSet, TechnologyCatalog, FixedCapacities, MarketDesign) {
    let set = day_pair();
    let cat = small_catalog();
    let sol = solve_equilibrium(&assemble(&set, &cat, &MarketDesign::eom_voll(3000.0, 200.0, f64::INFINITY)).unwrap(), &tight()).unwrap();
    (set, cat, sol.mix(), MarketDesign::eom_pc(3000.0, 200.0, f64::INFINITY))
}

#[test]
fn paradigms_order_the_marginal_generator() {
    let (set, cat, mut mix, design) = benchmark();
    assert!(mix.storage["Store"].power > 1.0);
    // with the baseload derated, charging is supply-limited and only a
    // storage unit free to re-charge can carry the extra MW into the peak
    *mix.generators.get_mut("Base").unwrap() *= 0.8;
    let run = |p: Paradigm| accredit(&mix, &set, &cat, &design, &settings(p, &[4.0])).unwrap();
    let (u, c, cd) = (run(Paradigm::Unconstrained), run(Paradigm::ChargingFixed), run(Paradigm::ChargingAndDischargingFixed));
    let (ru, rc, rcd) = (u.estimates[0].reduction(), c.estimates[0].reduction(), cd.estimates[0].reduction());
    let noise = CREDIT_NOISE * ru;
    assert!(ru > rc + noise, "{ru} {rc}");
    assert!(rc >= rcd - noise, "{rc} {rcd}");
    assert_eq!(u.estimates[0].eue_0, cd.estimates[0].eue_0);
    for e in &u.estimates {
        assert!(e.credit <= 1.0 + 1e-3, "{} {:?} {}", e.resource, e.duration, e.credit);
    }
}

#[test]
fn storage_credits_rise_with_duration() {
    let (set, cat, mix, design) = benchmark();
    let acc = accredit(&mix, &set, &cat, &design, &settings(Paradigm::Unconstrained, &[1.0, 2.0, 4.0, 8.0, 16.0])).unwrap();
    let pts = acc.storage_points("Store");
    assert!(pts.len() >= 2);
    for w in pts.windows(2) {
        assert!(w[1].1 >= w[0].1 - CREDIT_NOISE, "{pts:?}");
    }
    assert!(acc.warnings.is_empty(), "{:?}", acc.warnings);
}

#[test]
fn two_segment_points_are_recovered() {
    let f = |z: f64| if z <= 4.0 { 0.1 + 0.2 * z } else { 0.9 + 0.02 * (z - 4.0) };
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0].iter().map(|&z| (z, f(z))).collect();
    let fit = fit_credit_curve(&pts, 2).unwrap();
    assert!(fit.r_squared > 1.0 - 1e-9);
    assert!(!fit.warning);
    for z in [1.0, 2.5, 4.0, 5.0, 10.0] {
        assert!((fit.curve.value(z) - f(z).min(1.0)).abs() < 1e-6, "{z}: {}", fit.curve.value(z));
    }
}

#[test]
fn saturated_points_fit_a_flat_curve() {
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&z| (z, 1.0)).collect();
    let fit = fit_credit_curve(&pts, 4).unwrap();
    for s in &fit.curve.segments {
        assert!(s.beta.abs() < 1e-9);
    }
    assert!((fit.curve.value(3.0) - 1.0).abs() < 1e-9);
}

#[test]
fn ramp_to_one_fits_closely() {
    let pts: Vec<(f64, f64)> = DEFAULT_DURATIONS.iter().map(|&z| (z, f64::min(1.0, z / 8.0))).collect();
    let fit = fit_credit_curve(&pts, 4).unwrap();
    assert!(fit.r_squared > 0.999, "{}", fit.r_squared);
    assert!(fit.curve.violations().is_empty());
}

#[test]
fn convex_points_get_a_concave_fit_and_a_flag() {
    let pts = vec![(1.0, 0.0), (2.0, 0.05), (4.0, 0.1), (8.0, 0.6), (16.0, 1.0)];
    let fit = fit_credit_curve(&pts, 4).unwrap();
    assert!(fit.warning);
    assert!(fit.curve.violations().is_empty());
    let mut prev = f64::NEG_INFINITY;
    for i in 0..100 {
        let v = fit.curve.value(i as f64 * 0.2);
        assert!(v >= prev - 1e-12);
        prev = v;
    }
}

#[test]
fn too_few_points_are_rejected() {
    assert_eq!(fit_credit_curve(&[(1.0, 0.5), (2.0, 0.6)], 4).unwrap_err(), AccreditationError::FitInput { needed: 5, found: 2 });
}
