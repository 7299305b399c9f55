use seqphoton::estimators::*;

#[test]
fn calibrate() {
    // phi+ case at Δt = 98 ps
    let phi = build_partial_dm_phi_plus(&PhiPlusMeasurements {
        mu_tilde: 0.9753,
        mu_bar_e: 0.5, mu_bar_l: 0.5,
        p0: 0.47, sigma_p0: 0.01,
        p1: 0.05,
        p2: 0.45, sigma_p2: 0.03,
        m_ee: 0.76, sigma_m_ee: 0.02,
        m_ll: 0.76, sigma_m_ll: 0.02,
        c2_el: 0.55, sigma_c2_el: 0.03,
    }).unwrap();
    let est = sample_concurrence(&phi, 100_000, 7).unwrap();
    println!("phi+ : mean {:.4} std {:.4} renorm {:.4} rej {}", est.mean, est.std, est.mean_renormalized, est.n_rejected);

    // psi+ case at T = T1/2
    for (mutp, mee, mll, mel) in [(0.96, 0.81, 0.79, 0.76), (0.96, 0.80, 0.78, 0.76), (0.995, 0.81, 0.79, 0.76), (0.96, 0.81, 0.79, 0.74)] {
        let psi = build_partial_dm_psi_plus(&PsiPlusMeasurements {
            mu_tilde_pi: mutp,
            mu_bar_e: 0.5, mu_bar_l: 0.5,
            m_ee: mee, sigma_m_ee: 0.02,
            m_ll: mll, sigma_m_ll: 0.02,
            m_el: mel, sigma_m_el: 0.02,
            p0: 0.01, p2: 0.035,
        }).unwrap();
        let est = sample_concurrence(&psi, 100_000, 7).unwrap();
        println!("psi+ ({mutp},{mee},{mll},{mel}): mean {:.4} std {:.4} rej {}", est.mean, est.std, est.n_rejected);
    }

    // fidelity phi+
    let f = fidelity_phi_plus(&PhiPlusInputs {
        p0: 0.47, p2: 0.45, mu: 1.02 * 1.03,
        mu_bar_e: 0.5, mu_bar_l: 0.5,
        m_ee: 0.76, m_ll: 0.76, c2_el: 0.55,
    }).unwrap();
    println!("F_phi+: central {:.4} range [{:.4}, {:.4}]", f.central, f.lower, f.upper);
    panic!("calibration output");
}
