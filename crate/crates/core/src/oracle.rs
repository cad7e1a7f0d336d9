//! Black-box bidding queries with memoization and an audit ledger.
//!
//! Algorithms touch landscapes only through [`CountingOracle::query`]. Every
//! call is appended to the ledger; `distinct` counts unique `(platform, bid)`
//! keys and is the figure reported as query complexity.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::landscape::Instance;

/// What one bidding query reveals.
///
/// `marginal_cost` is `None` for bid `0` (non-participation) and
/// `Some(f64::INFINITY)` for the free probe one past the top bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryAnswer {
    pub value: f64,
    pub cost: f64,
    pub marginal_cost: Option<f64>,
}

impl QueryAnswer {
    pub const BEYOND_TOP: QueryAnswer =
        QueryAnswer { value: f64::INFINITY, cost: f64::INFINITY, marginal_cost: Some(f64::INFINITY) };

    /// Marginal cost with `+inf` for the beyond-top sentinel; panics on bid 0.
    pub fn mc(&self) -> f64 {
        self.marginal_cost.expect("marginal cost is undefined at bid 0")
    }

    pub fn is_beyond_top(&self) -> bool {
        self.marginal_cost == Some(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub platform: usize,
    pub bid: usize,
    pub value: f64,
    pub cost: f64,
    pub mc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryLedger {
    entries: Vec<LedgerEntry>,
    distinct: usize,
}

impl QueryLedger {
    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn distinct(&self) -> usize {
        self.distinct
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<LedgerEntry>> {
        text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(Error::from)).collect()
    }

    /// Re-derives every recorded answer from the instance.
    pub fn replay(entries: &[LedgerEntry], instance: &Instance) -> Result<()> {
        for (i, e) in entries.iter().enumerate() {
            let want = direct_answer(instance, e.platform, e.bid)?;
            if want.value != e.value || want.cost != e.cost || want.marginal_cost != e.mc {
                return Err(Error::Invariant(format!(
                    "ledger entry {i} ({}, {}) disagrees with the instance",
                    e.platform, e.bid
                )));
            }
        }
        Ok(())
    }
}

fn direct_answer(instance: &Instance, platform: usize, bid: usize) -> Result<QueryAnswer> {
    let p = instance.platform(platform)?;
    Ok(QueryAnswer {
        value: p.value_at(bid)?,
        cost: p.cost_at(bid)?,
        marginal_cost: if bid == 0 { None } else { Some(p.marginal_cost(bid)?) },
    })
}

/// Counted, memoized access to one instance for the duration of one run.
#[derive(Debug)]
pub struct CountingOracle<'a> {
    instance: &'a Instance,
    ledger: QueryLedger,
    memo: HashMap<(usize, usize), QueryAnswer>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Self { instance, ledger: QueryLedger::default(), memo: HashMap::new() }
    }

    pub fn num_platforms(&self) -> usize {
        self.instance.num_platforms()
    }

    pub fn bids(&self) -> usize {
        self.instance.bids()
    }

    pub fn budget(&self) -> f64 {
        self.instance.budget()
    }

    pub fn target_ros(&self) -> f64 {
        self.instance.target_ros()
    }

    /// Same test as [`Instance::feasible_totals`]; the constraint parameters are public knowledge.
    pub fn feasible_totals(&self, value: f64, cost: f64) -> bool {
        self.instance.feasible_totals(value, cost)
    }

    /// Plays `bid` on `platform`. Bid `n + 1` returns the free beyond-top sentinel.
    pub fn query(&mut self, platform: usize, bid: usize) -> Result<QueryAnswer> {
        let m = self.num_platforms();
        if platform >= m {
            return Err(domain(format!("platform {platform} out of range (m = {m})")));
        }
        let n = self.bids();
        if bid == n + 1 {
            return Ok(QueryAnswer::BEYOND_TOP);
        }
        if bid > n + 1 {
            return Err(domain(format!("bid {bid} outside 0..={}", n + 1)));
        }
        let answer = match self.memo.get(&(platform, bid)) {
            Some(a) => *a,
            None => {
                let a = direct_answer(self.instance, platform, bid)?;
                self.memo.insert((platform, bid), a);
                self.ledger.distinct += 1;
                a
            }
        };
        self.ledger.entries.push(LedgerEntry {
            platform,
            bid,
            value: answer.value,
            cost: answer.cost,
            mc: answer.marginal_cost,
        });
        Ok(answer)
    }

    /// `(total, distinct)` query counts so far.
    pub fn snapshot_counts(&self) -> (usize, usize) {
        (self.ledger.total(), self.ledger.distinct())
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }
}
