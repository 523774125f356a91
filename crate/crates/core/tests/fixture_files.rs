use std::fs;
use std::path::Path;

use cosm_core::{fixtures, load_system_file, System};

#[test]
fn shipped_fixtures_are_generator_output() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let all = fixtures::all();
    assert_eq!(fs::read_dir(&dir).unwrap().count(), all.len());
    for (stem, sys) in all {
        let path = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, sys.to_pretty_json(), "{stem} was edited by hand; rerun `cosm generate --fixtures`");
        let loaded: System = load_system_file(&path).unwrap();
        assert_eq!(loaded.fingerprint(), sys.fingerprint());
    }
}
