use proptest::prelude::*;

use gendisc::corpus::{apply_filters, EpisodeRecord, FilterConfig, GenderSeconds};
use gendisc::correlate::pearson_r;
use gendisc::dweat::{resolve_overlap, swap_words, SwapOutcome, WordLists};
use gendisc::embed::{cosine_values, embed_batch, LocalProvider};
use gendisc::text::words;

fn record() -> impl Strategy<Value = EpisodeRecord> {
    (
        0u8..6,
        0u16..500,
        prop::collection::vec("[a-z]{1,6}", 0..60),
        1.0f64..40.0,
        prop::sample::select(vec!["en", "en-US", "es", "fr"]),
        prop::option::of((0.0f64..15.0, 0.0f64..15.0)),
    )
        .prop_map(|(show, ep, ws, dur, lang, gs)| {
            let mut r = EpisodeRecord::new(&format!("s{show}"), &format!("e{ep:03}"), &ws.join(" "), dur);
            r.language = Some(lang.to_string());
            r.gender_seconds = gs.map(|(women, men)| GenderSeconds { women, men, ..Default::default() });
            r
        })
}

fn records() -> impl Strategy<Value = Vec<EpisodeRecord>> {
    prop::collection::vec(record(), 0..30).prop_map(|mut rs| {
        rs.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
        rs.dedup_by(|a, b| a.episode_id == b.episode_id);
        rs
    })
}

fn sentence() -> impl Strategy<Value = String> {
    let pool = vec!["like", "Really", "PEOPLE", "going", "Think", "the", "cat", "sat", "really's", "likely", "get"];
    prop::collection::vec(prop::sample::select(pool), 1..40).prop_map(|ws| ws.join(" ") + ".")
}

proptest! {
    #[test]
    fn filtering_is_idempotent(rs in records()) {
        let cfg = FilterConfig::default();
        let (once, _) = apply_filters(rs, &cfg);
        let (twice, report) = apply_filters(once.clone(), &cfg);
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(report.retained, once.len());
        prop_assert!(report.counts_dropped_per_filter.values().all(|&n| n == 0));
    }

    #[test]
    fn filter_accounting_balances(rs in records()) {
        let n = rs.len();
        let (kept, report) = apply_filters(rs, &FilterConfig::default());
        let dropped: usize = report.counts_dropped_per_filter.values().sum();
        prop_assert_eq!(kept.len() + dropped, n);
        let mut shows: Vec<&str> = kept.iter().map(|r| r.show_id.as_str()).collect();
        shows.sort_unstable();
        let before = shows.len();
        shows.dedup();
        prop_assert_eq!(shows.len(), before);
    }

    #[test]
    fn swap_log_replays_to_the_swapped_segment(s in sentence(), seed in any::<u64>()) {
        let lists = WordLists::published();
        match swap_words("e", &s, &lists.t_w, &lists.t_m, 0, seed).unwrap() {
            SwapOutcome::Kept(pair) => {
                prop_assert_eq!(pair.replay(), pair.s_prime.clone());
                prop_assert_eq!(pair.gamma, pair.swap_log.len());
                let expected = words(&s).iter().filter(|w| lists.t_w.contains(w)).count();
                prop_assert_eq!(pair.gamma, expected);
                prop_assert!(words(&pair.s_prime).iter().all(|w| !lists.t_w.contains(w)));
            }
            SwapOutcome::Rejected { .. } => prop_assert!(false, "gamma_min 0 never rejects"),
        }
    }

    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        u in prop::collection::vec(-10.0f64..10.0, 4),
        v in prop::collection::vec(-10.0f64..10.0, 4),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let a = cosine_values(&u, &v).unwrap();
        prop_assert!((a - cosine_values(&v, &u).unwrap()).abs() <= 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
        prop_assert!((a - cosine_values(&scaled, &v).unwrap()).abs() <= 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn pearson_is_invariant_to_positive_affine_maps(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let Ok(r) = pearson_r(&x, &y) else { return Ok(()) };
        let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((r - pearson_r(&xt, &y).unwrap()).abs() < 1e-9);
        prop_assert!((r - pearson_r(&y, &x).unwrap()).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((r + pearson_r(&neg, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn resolved_lists_are_disjoint_and_drawn_from_their_inputs(
        w in prop::collection::vec("[a-e]{1,2}", 1..30),
        m in prop::collection::vec("[a-e]{1,2}", 1..30),
        len in 1usize..6,
    ) {
        if let Ok((tw, tm)) = resolve_overlap(&w, &m, len) {
            prop_assert_eq!(tw.len(), len);
            prop_assert_eq!(tm.len(), len);
            prop_assert!(tw.iter().all(|x| !tm.contains(x)));
            prop_assert!(tw.iter().all(|x| w.contains(x)));
            prop_assert!(tm.iter().all(|x| m.contains(x)));
        }
    }

    #[test]
    fn local_batches_preserve_order(ts in prop::collection::vec("[a-z ]{0,12}", 1..20)) {
        let p = LocalProvider::from_reader("a 1 0 0\nb 0 1 0\n".as_bytes()).unwrap();
        let texts: Vec<String> = ts.into_iter().map(|t| format!("x{t}")).collect();
        let batch = embed_batch(&p, &texts).unwrap();
        for (t, v) in texts.iter().zip(&batch) {
            prop_assert_eq!(&v.values, &p.embed_text(t));
        }
    }
}
