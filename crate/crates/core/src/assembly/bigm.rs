use crate::fleet::fuel_curve_pu;
use crate::scenario::{BigMPolicy, MerClass, Scenario};

/// Big-M constants for every switched row family.
#[derive(Debug, Clone, PartialEq)]
pub struct BigM {
    routing: [f64; 3],
    fuel: Vec<f64>,
    voltage: Vec<f64>,
    neighbor: Vec<f64>,
}

fn class_slot(class: MerClass) -> usize {
    match class {
        MerClass::Carrier => 0,
        MerClass::Generator => 1,
        MerClass::Tanker => 2,
    }
}

impl BigM {
    pub fn new(scenario: &Scenario) -> Self {
        let d = scenario.time.span_count as f64;
        let net = &scenario.network;
        let routing = MerClass::ALL.map(|class| {
            let t_max = scenario.travel.table(class).iter().flatten().copied().max().unwrap_or(0);
            d.max(t_max as f64)
        });
        let dt = scenario.time.span_length_h;
        let fuel = scenario
            .fleet
            .generators
            .iter()
            .enumerate()
            .map(|(m, g)| {
                let curve = fuel_curve_pu(scenario, m);
                let b_max = g.b_max_l(dt);
                let p_top = *curve.breakpoints.last().expect("curve has breakpoints");
                let spread = (0..curve.segments())
                    .map(|l| curve.slopes[l].abs() * p_top + curve.intercepts[l].abs())
                    .fold(0.0, f64::max);
                let need = curve.required_big_m((0.0, b_max), (0.0, net.to_pu(g.p_max_kw)));
                (b_max + spread).max(need)
            })
            .collect();
        let span = net.v_max_pu.powi(2) - net.v_min_pu.powi(2);
        let voltage = net
            .branches
            .iter()
            .enumerate()
            .map(|(b, br)| span + 2.0 * (br.r_pu + br.x_pu) * net.s_max_pu(b))
            .collect();
        let neighbor = (0..net.nodes.len()).map(|i| net.degree(i).max(1) as f64).collect();
        let tight = BigM {
            routing,
            fuel,
            voltage,
            neighbor,
        };
        match scenario.study.big_m {
            BigMPolicy::Tight => tight,
            BigMPolicy::Uniform => {
                let top = tight.largest();
                BigM {
                    routing: [top; 3],
                    fuel: vec![top; tight.fuel.len()],
                    voltage: vec![top; tight.voltage.len()],
                    neighbor: vec![top; tight.neighbor.len()],
                }
            }
        }
    }

    /// Residual-travel gate of the routing rows.
    pub fn routing(&self, class: MerClass) -> f64 {
        self.routing[class_slot(class)]
    }

    /// Segment-selection rows of generator `m`'s fuel curve.
    pub fn fuel(&self, m: usize) -> f64 {
        self.fuel[m]
    }

    /// Switched voltage-drop rows of branch `b`.
    pub fn voltage(&self, b: usize) -> f64 {
        self.voltage[b]
    }

    /// Scaling of the energized-neighbour lower row at node `i`.
    pub fn neighbor(&self, i: usize) -> f64 {
        self.neighbor[i]
    }

    pub fn largest(&self) -> f64 {
        self.routing
            .iter()
            .chain(&self.fuel)
            .chain(&self.voltage)
            .chain(&self.neighbor)
            .copied()
            .fold(0.0, f64::max)
    }
}
