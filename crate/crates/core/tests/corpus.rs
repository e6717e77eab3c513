use tsvar::calculus::LimitKind;
use tsvar::problems::corpus;
use tsvar::variational::{verify_candidate, VerifyConfig};

#[test]
fn known_candidates_reproduce_their_verdicts() {
    let cfg = VerifyConfig::default();
    for p in corpus() {
        for c in &p.known_candidates {
            let r = verify_candidate(&p.problem, &c.path, &cfg).unwrap();
            assert_eq!(
                r.verdict, c.expected,
                "{} / {}: el {:e}, transversality {:?}, probes {:?}, violated {}",
                p.id,
                c.label,
                r.el_sup_norm,
                r.transversality.kind,
                r.weak_max_probes
                    .iter()
                    .map(|q| (q.id.clone(), q.estimate.kind))
                    .collect::<Vec<_>>(),
                r.hypothesis_diagnostics.violated
            );
        }
    }
}

#[test]
fn ex_neg_transversality_is_beta_alpha() {
    let p = corpus().into_iter().find(|p| p.id == "ex-neg").unwrap();
    let r = verify_candidate(&p.problem, &p.candidate("const").unwrap().path, &VerifyConfig::default())
        .unwrap();
    assert_eq!(r.transversality.kind, LimitKind::Converged { value: 1.0 });
}
