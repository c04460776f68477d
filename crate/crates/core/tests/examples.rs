//! Every example runs end to end at a small size.

macro_rules! example {
    ($name:ident, $file:literal, $n:expr) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!("../examples/", $file));

            #[test]
            fn runs() {
                run_example($n).unwrap();
            }
        }
    };
}

example!(generate_graph, "generate_graph.rs", 2000);
example!(percolate, "percolate.rs", 2000);
example!(lln, "lln.rs", 2000);
example!(threshold_scan, "threshold_scan.rs", 5000);
example!(trajectory, "trajectory.rs", 2000);
example!(sandwich, "sandwich.rs", 500);
example!(kernel, "kernel.rs", 5000);
example!(theory, "theory.rs", 0);
