//! Regenerates the files under `fixtures/`.
//!
//! cargo run -p planglow-core --features testkit --example make_fixtures

use planglow_core::testkit;

fn main() -> std::io::Result<()> {
    std::fs::create_dir_all(testkit::FIXTURES_DIR)?;
    for (name, contents) in testkit::fixture_files() {
        let path = testkit::fixture_path(name);
        std::fs::write(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
