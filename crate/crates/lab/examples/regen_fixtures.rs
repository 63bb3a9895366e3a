use markov_adam::fixture::FixtureFile;
use markov_adam_core::{fixtures, PolicyTable};
fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (td, tdp, tdf) = fixtures::td_ten_state();
    let (sc, scp, scf) = fixtures::two_state_scalar_td();
    let files = [
        ("two_state", FixtureFile::from_parts("two_state", &fixtures::two_state_chain(), None, None)),
        ("two_state_scalar_td", FixtureFile::from_parts("two_state_scalar_td", &sc, Some(&scp), Some(&scf))),
        ("single_state", FixtureFile::from_parts("single_state", &fixtures::single_state(0.25), None, None)),
        (
            "three_state",
            FixtureFile::from_parts("three_state", &fixtures::three_state(), Some(&PolicyTable::uniform(3, 2)), None),
        ),
        ("pg_four_state", FixtureFile::from_parts("pg_four_state", &fixtures::pg_four_state(), None, None)),
        ("td_ten_state", FixtureFile::from_parts("td_ten_state", &td, Some(&tdp), Some(&tdf))),
    ];
    for (name, f) in files {
        std::fs::write(dir.join(format!("{name}.toml")), f.to_toml().unwrap()).unwrap();
    }
}
