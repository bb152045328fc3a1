fn main() {
    println!("cargo:rerun-if-changed=cbindgen.toml");
    println!("cargo:rerun-if-changed=src");

    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let out_dir = std::path::Path::new(&crate_dir).join("include");
    std::fs::create_dir_all(&out_dir).unwrap();
    let header_path = out_dir.join("pdework.h");

    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(header_path);
        }
        Err(err) => {
            // Fail the build rather than ship a stale header.
            panic!("cbindgen generate failed: {err}");
        }
    }
}
