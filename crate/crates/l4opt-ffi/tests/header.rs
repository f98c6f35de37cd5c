//! The generated C header is a build artifact of this crate; make sure it
//! exists and declares the complete API surface.

#[test]
fn generated_header_declares_the_full_api() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/l4opt.h");
    let header = std::fs::read_to_string(path).expect("include/l4opt.h should be generated");

    for needle in [
        "#ifndef L4OPT_H",
        "typedef struct L4Handle L4Handle;",
        "typedef struct L4Params",
        "typedef enum L4Status",
        "L4_STATUS_OK = 0",
        "L4_STATUS_INTERNAL_PANIC = 6",
        "#define L4_FLAVOR_MOM 0",
        "#define L4_FLAVOR_ADAM 1",
        "l4opt_params_default",
        "l4opt_create",
        "l4opt_step",
        "l4opt_last_eta",
        "l4opt_last_gv",
        "l4opt_lmin",
        "l4opt_steps",
        "l4opt_free",
        "l4opt_status_message",
    ] {
        assert!(header.contains(needle), "header is missing `{needle}`");
    }
}
