use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Alphabet, FormalSeries, Monomial, SeriesError};
use crate::{fmt_q, parse_q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub hbar: i32,
    pub monomial: BTreeMap<String, u32>,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub cutoff: i32,
    pub terms: Vec<TermJson>,
}

impl SeriesJson {
    pub fn from_series(s: &FormalSeries) -> Self {
        let alpha = s.alphabet();
        let terms = s
            .terms()
            .map(|(k, c)| TermJson {
                hbar: k.hbar,
                monomial: k
                    .mono
                    .exps()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| (alpha.var(i).name.clone(), e))
                    .collect(),
                coeff: fmt_q(c),
            })
            .collect();
        SeriesJson {
            cutoff: s.cutoff(),
            terms,
        }
    }

    /// Reads the terms in the given alphabet. Each monomial is read with its
    /// factors in generator order.
    pub fn to_series(&self, alphabet: &Arc<Alphabet>) -> Result<FormalSeries, SeriesError> {
        let mut out = FormalSeries::zero(alphabet.clone(), self.cutoff);
        for t in &self.terms {
            let mut e = vec![0u32; alphabet.len()];
            for (name, &k) in &t.monomial {
                let i = alphabet
                    .index_of(name)
                    .ok_or_else(|| SeriesError::UnknownGenerator(name.clone()))?;
                if alphabet.parity(i).is_odd() && k > 1 {
                    return Err(SeriesError::Malformed(format!(
                        "odd generator `{name}` raised to power {k}"
                    )));
                }
                e[i] += k;
            }
            let c = parse_q(&t.coeff).map_err(|m| SeriesError::Malformed(m.to_string()))?;
            out.add_term(Monomial(e), t.hbar, c);
        }
        Ok(out)
    }
}
