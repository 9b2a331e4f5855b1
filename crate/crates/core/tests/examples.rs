//! Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(summarize_and_chunk);
example!(vector_search);
example!(entropy_gate);
example!(mock_model);
example!(adaptive_answer);
example!(evaluate_modes);
example!(threshold_sweep);
example!(entropy_statistics);
example!(latency_table);
