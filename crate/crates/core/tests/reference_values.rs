use gl2tower_core::invariants::{cusp_count, invariants};
use gl2tower_core::reference::{nonsplit_cartan_normalizer, EXCEPTIONAL, H155, H57, K57};
use gl2tower_core::subgroup::{parse_subgroup_json, parse_subgroup_text};
use gl2tower_core::tower::{enumerate_tower, export_json, import_json, TowerConfig};

#[test]
fn printed_generators_give_expected_cusps() {
    assert_eq!(cusp_count(&H57.subgroup()).unwrap(), 2);
    assert_eq!(cusp_count(&K57.subgroup()).unwrap(), 8);
    assert_eq!(invariants(&H155.subgroup()).unwrap().genus, 1);
}

#[test]
fn nonsplit_cartan_mod_16_has_genus_2() {
    assert_eq!(invariants(&nonsplit_cartan_normalizer(4)).unwrap().genus, 2);
}

#[test]
fn h57_mod_32_class_count() {
    assert_eq!(H57.subgroup().conjugacy_classes(5).unwrap().len(), 416);
}

#[test]
fn exceptional_rows_are_open_subgroups() {
    for row in EXCEPTIONAL.iter() {
        let h = row.gens.subgroup();
        assert!(h.level() <= row.gens.modulus);
        assert!(h.predicates().det_surjective, "{}", row.j_invariant);
    }
}

#[test]
fn subgroup_text_and_json_round_trip() {
    let h = H57.subgroup();
    let from_text = parse_subgroup_text(&h.to_text()).unwrap();
    let from_json = parse_subgroup_json(&serde_json::to_string(&h.to_json()).unwrap()).unwrap();
    assert_eq!(from_text.elements(), h.elements());
    assert_eq!(from_json.elements(), h.elements());
}

#[test]
fn lattice_json_round_trip() {
    let lat = enumerate_tower(&TowerConfig { max_level_exp: Some(3), ..TowerConfig::default() }).unwrap();
    let s = export_json(&lat);
    let back = import_json(&s).unwrap();
    assert_eq!(export_json(&back), s);
    assert_eq!(back.stages, lat.stages);
}
