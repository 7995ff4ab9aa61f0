//! Run statistics: per-scheme fact counts, interval segment counts, and
//! memory estimates, emitted as `key=value` lines with an optional CSV row.

use std::fmt::Write as _;

use crate::engine::Reasoner;
use crate::scheme::{DomainFilter, SchemeBox, SchemeId};

#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub lines: Vec<(String, String)>,
    /// Wall time (seconds), peak and static memory (bytes) for the CSV row.
    pub time_s: f64,
    pub peak_bytes: usize,
    pub static_bytes: usize,
}

impl RunStats {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// CSV matching the time/peak/static reporting convention.
    pub fn render_csv(&self) -> String {
        format!(
            "time,peak,static\n{:.3},{:.3},{:.3}\n",
            self.time_s,
            self.peak_bytes as f64 / (1024.0 * 1024.0),
            self.static_bytes as f64 / (1024.0 * 1024.0)
        )
    }
}

/// Gathers statistics from a materialised reasoner.
pub fn collect(reasoner: &Reasoner) -> RunStats {
    let mut st = RunStats::default();
    let reg = reasoner.registry();
    let report = &reasoner.last_report;

    st.time_s = report.wall.as_secs_f64();
    st.static_bytes = reg.total_bytes();
    st.peak_bytes = report.peak_bytes.max(st.static_bytes);

    st.push("rounds", reasoner.round());
    st.push("last_run_rounds", report.rounds);
    st.push("time_s", format!("{:.6}", st.time_s));
    st.push("peak_bytes", st.peak_bytes);
    st.push("static_bytes", st.static_bytes);
    st.push("schemes", reg.scheme_count());

    for idx in 0..reg.scheme_count() as u32 {
        let sid = SchemeId(idx);
        let prefix = format!("scheme.{idx}");
        st.push(format!("{prefix}.bytes"), reg.scheme_bytes(sid));
        match &*reg.cell(sid).borrow() {
            SchemeBox::Plain(s) => {
                st.push(format!("{prefix}.kind"), "plain");
                st.push(format!("{prefix}.facts"), s.fact_count());
                st.push(format!("{prefix}.rules"), s.rule_count());
                st.push(format!("{prefix}.strict_instances"), s.instances_generated());
                let mut counts: Vec<_> = s.label_counts().into_iter().collect();
                counts.sort_by_key(|(p, _)| p.0);
                for (pred, by_label) in counts {
                    let name = reasoner.interner.pred_name(pred);
                    st.push(
                        format!("{prefix}.pred.{name}"),
                        format!("i={} delta={} delta_new={}", by_label[2], by_label[1], by_label[0]),
                    );
                }
            }
            SchemeBox::Tc(s) => {
                let name = reasoner.interner.pred_name(s.owned_pred());
                st.push(format!("{prefix}.kind"), "tc");
                st.push(format!("{prefix}.pred"), name);
                st.push(format!("{prefix}.nodes"), s.live_node_count());
                st.push(format!("{prefix}.dropped"), s.dropped_node_count());
                let (in_segs, d_segs, n_segs) = s.segment_counts();
                st.push(format!("{prefix}.segments.in"), in_segs);
                st.push(format!("{prefix}.segments.d"), d_segs);
                st.push(format!("{prefix}.segments.n"), n_segs);
                st.push(format!("{prefix}.explicit_edges"), s.edge_count());
                st.push(format!("{prefix}.represented_facts"), s.count(DomainFilter::All));
                st.push(format!("{prefix}.renumbers"), s.renumber_count());
                st.push(format!("{prefix}.probe_cost"), s.probe_cost());
            }
            SchemeBox::Union(s) => {
                let name = reasoner.interner.pred_name(s.owned_pred());
                st.push(format!("{prefix}.kind"), "union");
                st.push(format!("{prefix}.pred"), name);
                st.push(format!("{prefix}.explicit_facts"), s.explicit_fact_count());
                st.push(format!("{prefix}.supports"), s.supports().len());
                // sum over supports: an upper bound, overlap double-counts
                st.push(format!("{prefix}.virtual_upper_bound"), s.virtual_upper_bound(reg));
            }
        }
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{parse_facts, parse_program, Interner};
    use crate::engine::{EngineConfig, Reasoner};

    #[test]
    fn stats_render() {
        let mut it = Interner::new();
        let program = parse_program(
            "R(?x,?z) :- R(?x,?y), R(?y,?z).\nU(?x,?y) :- A(?x,?y).\n",
            &mut it,
        )
        .unwrap();
        let facts = parse_facts("R(a,b). R(b,c). A(p,q).", &mut it).unwrap();
        let mut r = Reasoner::new(program, it, EngineConfig::default());
        r.insert(&facts).unwrap();
        let st = collect(&r);
        let lines = st.render_lines();
        assert!(lines.contains("scheme.1.kind=tc"));
        assert!(lines.contains("scheme.1.represented_facts=3"));
        assert!(lines.contains("scheme.2.kind=union"));
        let csv = st.render_csv();
        assert!(csv.starts_with("time,peak,static\n"));
    }
}
