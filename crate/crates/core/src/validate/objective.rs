use serde::Serialize;

use crate::scenario::{MerClass, Scenario};
use crate::solver::Schedule;

/// Objective terms recomputed from a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    /// Weighted restored energy, kWh.
    pub restored: f64,
    /// Travelling spans per class, in [`MerClass::ALL`] order.
    pub travel_spans: [usize; 3],
    /// Exchange indicators set, generators then tankers.
    pub exchange_spans: [usize; 2],
    pub phi_travel: f64,
    pub phi_fuel: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn travel_total(&self) -> usize {
        self.travel_spans.iter().sum()
    }

    pub fn exchange_total(&self) -> usize {
        self.exchange_spans.iter().sum()
    }
}

/// Recompute the objective of `schedule` from first principles.
pub fn recompute_objective(scenario: &Scenario, schedule: &Schedule) -> ObjectiveBreakdown {
    let restored = resilience_series(scenario, schedule).iter().map(|p| p.restored_kwh).sum();
    let travel_spans = MerClass::ALL.map(|c| schedule.routes(c).iter().map(|r| r.travel_spans()).sum());
    let meg: usize = schedule.megs.iter().flat_map(|g| &g.exchanging).flatten().filter(|&&l| l).count();
    let ft: usize = schedule.tanker_fuel.iter().flat_map(|f| &f.exchanging).flatten().filter(|&&l| l).count();
    let (phi_travel, phi_fuel) = (scenario.study.phi_travel, scenario.study.phi_fuel);
    let travel: usize = travel_spans.iter().sum();
    let total = restored - phi_travel * travel as f64 - phi_fuel * (meg + ft) as f64;
    ObjectiveBreakdown {
        restored,
        travel_spans,
        exchange_spans: [meg, ft],
        phi_travel,
        phi_fuel,
        total,
    }
}

/// Served load and cumulative objective terms of one span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResiliencePoint {
    pub span: usize,
    /// Unweighted served active load, kW.
    pub served_kw: f64,
    /// Priority-weighted served active load, kW.
    pub weighted_kw: f64,
    /// Weighted energy restored in this span, kWh.
    pub restored_kwh: f64,
    /// Running sum of `restored_kwh`.
    pub cumulative_kwh: f64,
    /// Running travel penalty, `φ_travel` times travelling spans so far.
    pub cumulative_travel_penalty: f64,
    /// Running exchange penalty, `φ_fuel` times exchanges so far.
    pub cumulative_exchange_penalty: f64,
}

/// Per-span served load of `schedule`.
pub fn resilience_series(scenario: &Scenario, schedule: &Schedule) -> Vec<ResiliencePoint> {
    let dt = scenario.time.span_length_h;
    let (phi_t, phi_f) = (scenario.study.phi_travel, scenario.study.phi_fuel);
    let (mut cumulative, mut travel, mut exchange) = (0.0, 0.0, 0.0);
    schedule
        .grid
        .iter()
        .enumerate()
        .map(|(s, g)| {
            let t = s + 1;
            let (mut served, mut weighted) = (0.0, 0.0);
            for (i, node) in scenario.network.nodes.iter().enumerate() {
                if g.pickup[i] {
                    served += node.p_kw_at(t);
                    weighted += node.weight * node.p_kw_at(t);
                }
            }
            let moving = MerClass::ALL
                .iter()
                .flat_map(|&c| schedule.routes(c))
                .filter(|r| r.is_travelling(t))
                .count();
            let exchanging = schedule
                .megs
                .iter()
                .map(|m| &m.exchanging[s])
                .chain(schedule.tanker_fuel.iter().map(|f| &f.exchanging[s]))
                .flatten()
                .filter(|&&l| l)
                .count();
            cumulative += weighted * dt;
            travel += phi_t * moving as f64;
            exchange += phi_f * exchanging as f64;
            ResiliencePoint {
                span: t,
                served_kw: served,
                weighted_kw: weighted,
                restored_kwh: weighted * dt,
                cumulative_kwh: cumulative,
                cumulative_travel_penalty: travel,
                cumulative_exchange_penalty: exchange,
            }
        })
        .collect()
}

/// Tab-separated series, one row per span.
pub fn series_table(series: &[ResiliencePoint]) -> String {
    let mut out = String::from("span\tserved_kw\tweighted_kw\trestored_kwh\tcumulative_kwh\ttravel_penalty\texchange_penalty\n");
    for p in series {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            p.span, p.served_kw, p.weighted_kw, p.restored_kwh, p.cumulative_kwh, p.cumulative_travel_penalty, p.cumulative_exchange_penalty
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::scenario::parse_scenario;
    use crate::solver::extract_schedule;

    fn idle() -> (Scenario, Schedule) {
        let s = parse_scenario(include_str!("../../data/tiny/t4-mixed.json")).unwrap();
        let a = assemble(&s).unwrap();
        let sched = extract_schedule(&a, &vec![0.0; a.model.num_vars()]).unwrap();
        (s, sched)
    }

    #[test]
    fn idle_schedule_scores_zero() {
        let (s, sched) = idle();
        let b = recompute_objective(&s, &sched);
        assert_eq!((b.restored, b.travel_total(), b.exchange_total()), (0.0, 0, 0));
        assert_eq!(b.total, 0.0);
        assert!(resilience_series(&s, &sched).iter().all(|p| p.served_kw == 0.0 && p.cumulative_kwh == 0.0));
    }

    #[test]
    fn series_table_has_one_row_per_span() {
        let (s, sched) = idle();
        let table = series_table(&resilience_series(&s, &sched));
        assert_eq!(table.lines().count(), s.time.span_count + 1);
    }
}
