//! Closed-form classification of hyperpriors: posterior propriety and
//! admissibility of the posterior mean under quadratic loss.
//!
//! Every verdict carries the governing rule as a self-contained inequality so
//! a report can be audited without chasing references. `Unknown` is a
//! first-class answer: the theory deliberately leaves regions open, and this
//! module never fills them with conjecture.

use crate::error::{Error, Result};
use crate::exact::{greater_or_equal, strictly_greater, strictly_less, Decision};
use crate::linalg::eye;
use crate::prior::{named_v_prior, BetaPriorSpec, HyperpriorSpec, VPriorName};
use nalgebra::DVector;

/// Does the formal posterior integrate to a probability distribution?
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propriety {
    Proper,
    Improper,
}

#[derive(Debug, Clone)]
pub struct ProprietyVerdict {
    pub status: Propriety,
    /// The governing inequality, stated in full.
    pub rule: String,
    /// Set when a deciding comparison was within 1e-9 of equality.
    pub boundary: bool,
}

/// Is the posterior mean admissible under quadratic loss?
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    Inadmissible,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityVerdict {
    pub status: Admissibility,
    pub rule: String,
    pub boundary: bool,
}

fn combine(verdict: bool, decisions: &[Decision]) -> (bool, bool) {
    (verdict, decisions.iter().any(|d| d.boundary))
}

/// Posterior propriety for the model with m blocks of dimension k.
///
/// The rules, with l the repulsion exponent of the V-prior:
///
/// - flat beta (Case 1), m = 1: proper iff pi(V) itself has finite mass,
///   i.e. a1 < 1 and a2 > 1 + (k-1)l;
/// - flat beta (Case 1), m >= 2: proper iff a1 < 1 and a2 > (3-m)/2 + (k-1)l;
/// - normal beta (Case 2): proper iff a1 < 1 and a2 > 1 - m/2 + (k-1)l;
/// - hierarchical beta (Case 3): the Case 2 condition and b > 1 - k/2.
///
/// For l = 1 in Case 3 the literature states the combined condition as
/// sufficient only; the rule string carries that tag.
pub fn check_propriety(spec: &HyperpriorSpec, m: usize, k: usize) -> Result<ProprietyVerdict> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be >= 1".into()));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    let (a1, a2, l) = (spec.vprior.a1, spec.vprior.a2, spec.vprior.l);
    let (mf, kf) = (m as f64, k as f64);
    let rep = (kf - 1.0) * l;

    let d_a1 = strictly_less(a1, 1.0);

    match &spec.bprior {
        BetaPriorSpec::Flat => {
            if m == 1 {
                let thr = 1.0 + rep;
                let d_a2 = strictly_greater(a2, thr);
                let holds = d_a1.holds && d_a2.holds;
                let (status, boundary) = combine(holds, &[d_a1, d_a2]);
                return Ok(ProprietyVerdict {
                    status: if status { Propriety::Proper } else { Propriety::Improper },
                    rule: format!(
                        "flat-mean case with a single block: proper iff pi(V) has finite \
                         mass, i.e. a1 < 1 and a2 > 1 + (k-1)l = {thr}"
                    ),
                    boundary,
                });
            }
            let thr = (3.0 - mf) / 2.0 + rep;
            let d_a2 = strictly_greater(a2, thr);
            let (holds, boundary) = combine(d_a1.holds && d_a2.holds, &[d_a1, d_a2]);
            Ok(ProprietyVerdict {
                status: if holds { Propriety::Proper } else { Propriety::Improper },
                rule: format!(
                    "flat-mean case, m >= 2: proper iff a1 < 1 and \
                     a2 > (3-m)/2 + (k-1)l = {thr}"
                ),
                boundary,
            })
        }
        BetaPriorSpec::Normal { .. } => {
            let thr = 1.0 - mf / 2.0 + rep;
            let d_a2 = strictly_greater(a2, thr);
            let (holds, boundary) = combine(d_a1.holds && d_a2.holds, &[d_a1, d_a2]);
            Ok(ProprietyVerdict {
                status: if holds { Propriety::Proper } else { Propriety::Improper },
                rule: format!(
                    "normal-mean case: proper iff a1 < 1 and a2 > 1 - m/2 + (k-1)l = {thr}"
                ),
                boundary,
            })
        }
        BetaPriorSpec::Hierarchical { b, .. } => {
            let thr = 1.0 - mf / 2.0 + rep;
            let bthr = 1.0 - kf / 2.0;
            let d_a2 = strictly_greater(a2, thr);
            let d_b = strictly_greater(*b, bthr);
            let (holds, boundary) =
                combine(d_a1.holds && d_a2.holds && d_b.holds, &[d_a1, d_a2, d_b]);
            let tag = if l == 1.0 && holds {
                " (stated as sufficient for l = 1)"
            } else {
                ""
            };
            Ok(ProprietyVerdict {
                status: if holds { Propriety::Proper } else { Propriety::Improper },
                rule: format!(
                    "hierarchical-mean case: proper iff a1 < 1, \
                     a2 > 1 - m/2 + (k-1)l = {thr} and b > 1 - k/2 = {bthr}{tag}"
                ),
                boundary,
            })
        }
    }
}

/// Admissibility of the posterior mean under quadratic loss.
///
/// Only the l = 0 priors are covered by the theory; everything else is
/// `Unknown`. Within l = 0 (all with a1 < 1, implied by propriety):
///
/// - flat beta, m >= 2: admissible if k = 2 and a2 > 1; inadmissible if
///   a2 < 3/2 - 1/k; the remaining region (k = 2, a2 = 1; k >= 3,
///   a2 >= 3/2 - 1/k) is open;
/// - normal beta: admissible iff a2 >= 1 - 1/k, inadmissible otherwise
///   (every proper spec is covered);
/// - hierarchical beta, m >= 2: admissible if (i) a2 >= 1 - 1/k and b > 1,
///   (ii) k >= 3, 0 <= b < 1 and a2 > 1 - b/k, or (iii) k = 2, 0 < b < 1 and
///   a2 > 1 - b/2; no inadmissibility branch is known.
pub fn classify_admissibility(
    spec: &HyperpriorSpec,
    m: usize,
    k: usize,
) -> Result<AdmissibilityVerdict> {
    let prop = check_propriety(spec, m, k)?;
    if prop.status == Propriety::Improper {
        return Ok(AdmissibilityVerdict {
            status: Admissibility::Unknown,
            rule: "no posterior mean (improper posterior)".into(),
            boundary: prop.boundary,
        });
    }
    let (a2, l) = (spec.vprior.a2, spec.vprior.l);
    if l != 0.0 {
        return Ok(AdmissibilityVerdict {
            status: Admissibility::Unknown,
            rule: "only l = 0 priors are classified; analysis for l > 0 needs \
                   different techniques"
                .into(),
            boundary: false,
        });
    }
    let kf = k as f64;

    match &spec.bprior {
        BetaPriorSpec::Flat => {
            if m == 1 {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Unknown,
                    rule: "flat-mean admissibility theory requires m >= 2".into(),
                    boundary: false,
                });
            }
            let inadm_thr = 1.5 - 1.0 / kf;
            if k == 2 {
                let d = strictly_greater(a2, 1.0);
                if d.holds {
                    return Ok(AdmissibilityVerdict {
                        status: Admissibility::Admissible,
                        rule: "flat-mean case: admissible for k = 2 and a2 > 1".into(),
                        boundary: d.boundary,
                    });
                }
            }
            let d_lo = strictly_greater(a2, (3.0 - m as f64) / 2.0);
            let d_hi = strictly_less(a2, inadm_thr);
            if d_lo.holds && d_hi.holds {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Inadmissible,
                    rule: format!(
                        "flat-mean case: inadmissible for (3-m)/2 < a2 < 3/2 - 1/k = {inadm_thr}"
                    ),
                    boundary: d_lo.boundary || d_hi.boundary,
                });
            }
            Ok(AdmissibilityVerdict {
                status: Admissibility::Unknown,
                rule: format!(
                    "open region of the flat-mean case (k = 2 with a2 = 1, or k >= 3 \
                     with a2 >= 3/2 - 1/k = {inadm_thr}): inadmissibility is suspected \
                     but unproven"
                ),
                boundary: d_hi.boundary,
            })
        }
        BetaPriorSpec::Normal { .. } => {
            let thr = 1.0 - 1.0 / kf;
            let d = greater_or_equal(a2, thr);
            if d.holds {
                Ok(AdmissibilityVerdict {
                    status: Admissibility::Admissible,
                    rule: format!("normal-mean case: admissible for a2 >= 1 - 1/k = {thr}"),
                    boundary: d.boundary,
                })
            } else {
                // Propriety already gives a2 > (2-m)/2, so the inadmissible
                // band is fully determined by a2 < 1 - 1/k.
                Ok(AdmissibilityVerdict {
                    status: Admissibility::Inadmissible,
                    rule: format!(
                        "normal-mean case: inadmissible for (2-m)/2 < a2 < 1 - 1/k = {thr}"
                    ),
                    boundary: d.boundary,
                })
            }
        }
        BetaPriorSpec::Hierarchical { b, .. } => {
            if m == 1 {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Unknown,
                    rule: "hierarchical-mean admissibility theory requires m >= 2".into(),
                    boundary: false,
                });
            }
            let b = *b;
            let thr_i = 1.0 - 1.0 / kf;
            let d_a2_i = greater_or_equal(a2, thr_i);
            let d_b_i = strictly_greater(b, 1.0);
            if d_a2_i.holds && d_b_i.holds {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Admissible,
                    rule: format!(
                        "hierarchical-mean case (i): admissible for a2 >= 1 - 1/k = {thr_i} \
                         and b > 1"
                    ),
                    boundary: d_a2_i.boundary || d_b_i.boundary,
                });
            }
            let thr_ii = 1.0 - b / kf;
            let d_a2_ii = strictly_greater(a2, thr_ii);
            let d_b_hi = strictly_less(b, 1.0);
            if k >= 3 && b >= 0.0 && d_b_hi.holds && d_a2_ii.holds {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Admissible,
                    rule: format!(
                        "hierarchical-mean case (ii): admissible for k >= 3, 0 <= b < 1 \
                         and a2 > 1 - b/k = {thr_ii}"
                    ),
                    boundary: d_a2_ii.boundary || d_b_hi.boundary,
                });
            }
            let d_b_lo = strictly_greater(b, 0.0);
            if k == 2 && d_b_lo.holds && d_b_hi.holds && d_a2_ii.holds {
                return Ok(AdmissibilityVerdict {
                    status: Admissibility::Admissible,
                    rule: format!(
                        "hierarchical-mean case (iii): admissible for k = 2, 0 < b < 1 \
                         and a2 > 1 - b/2 = {thr_ii}"
                    ),
                    boundary: d_a2_ii.boundary || d_b_lo.boundary || d_b_hi.boundary,
                });
            }
            Ok(AdmissibilityVerdict {
                status: Admissibility::Unknown,
                rule: format!(
                    "outside the proven hierarchical-mean regions (needs a2 >= 1 - 1/k \
                     with b > 1, or a2 > 1 - b/k = {thr_ii} with b < 1); no \
                     inadmissibility result is known here"
                ),
                boundary: d_a2_ii.boundary || d_a2_i.boundary,
            })
        }
    }
}

/// The recommended default hyperprior: the reference-style V-prior
/// pi(V) = [|I+V| prod (d_i - d_j)]^-1 together with the heavy-tailed
/// hierarchical mean prior pi(beta) = [1 + ||beta||^2]^-(k-1)/2
/// (beta0 = 0, A = I, b = c = 1/2). Proper for every m >= 2 and admissible
/// for all k.
pub fn recommend_default(k: usize) -> Result<HyperpriorSpec> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    Ok(HyperpriorSpec {
        vprior: named_v_prior(VPriorName::HierReferenceA, k)?,
        bprior: BetaPriorSpec::Hierarchical {
            beta0: DVector::zeros(k),
            a: eye(k),
            b: 0.5,
            c: 0.5,
        },
    })
}

/// Smallest block count m at which this hyperprior's posterior becomes
/// proper, if any exists.
pub fn minimal_proper_m(spec: &HyperpriorSpec, k: usize) -> Result<Option<usize>> {
    // a1 and (Case 3) b do not depend on m; if they fail, no m helps.
    for m in 1..=(4 * k + 8) {
        if check_propriety(spec, m, k)?.status == Propriety::Proper {
            return Ok(Some(m));
        }
    }
    Ok(None)
}
