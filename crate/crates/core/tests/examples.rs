// Every example compiles into this test and runs end to end.

mod coefficient_grid {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/coefficient_grid.rs"));

    #[test]
    fn runs() {
        main().expect("coefficient_grid example");
    }
}

mod coercivity {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/coercivity.rs"));

    #[test]
    fn runs() {
        main().expect("coercivity example");
    }
}

mod config_run {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/config_run.rs"));

    #[test]
    fn runs() {
        run(None).expect("config_run example");
    }
}

mod decay_estimates {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/decay_estimates.rs"));

    #[test]
    fn runs() {
        main().expect("decay_estimates example");
    }
}

mod far_field {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/far_field.rs"));

    #[test]
    fn runs() {
        main().expect("far_field example");
    }
}

mod identity_checks {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/identity_checks.rs"));

    #[test]
    fn runs() {
        main().expect("identity_checks example");
    }
}

mod lap_sphere {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lap_sphere.rs"));

    #[test]
    fn runs() {
        run(0.5).expect("lap_sphere example");
    }
}

mod mesh_exterior {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mesh_exterior.rs"));

    #[test]
    fn runs() {
        main().expect("mesh_exterior example");
    }
}

mod mie_series {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mie_series.rs"));

    #[test]
    fn runs() {
        main().expect("mie_series example");
    }
}
