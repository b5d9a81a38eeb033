//! Time and price model for running one fragment on one node.
//!
//! A node's busy time is deployment (transfer of fragment and service plus
//! installation), computation, and transfer of the outputs back to the
//! trusted zone. Cost is busy time times the node's price per second.

use serde::{Deserialize, Serialize};

use crate::encoder::EncodedFragment;
use crate::scenario::{CloudInstance, Simulation};
use crate::splitter::Fragment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Billing {
    /// Billed per second, no rounding.
    #[default]
    Continuous,
    /// Busy time rounded up to whole minutes.
    PerMinute,
}

impl Billing {
    pub fn billed_seconds(self, busy: f64) -> f64 {
        match self {
            Billing::Continuous => busy,
            Billing::PerMinute => (busy / 60.0).ceil() * 60.0,
        }
    }
}

/// Anything that can be shipped to a node.
pub trait Workload {
    fn patch_count(&self) -> usize;
    fn size_bytes(&self) -> u64;
}

impl Workload for Fragment {
    fn patch_count(&self) -> usize {
        self.len()
    }
    fn size_bytes(&self) -> u64 {
        self.size_bytes
    }
}

impl Workload for EncodedFragment {
    fn patch_count(&self) -> usize {
        self.len()
    }
    fn size_bytes(&self) -> u64 {
        self.size_bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRequest {
    pub fragment_bytes: u64,
    pub service_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeTiming {
    pub t_deploy: f64,
    pub t_compute: f64,
    pub t_comm: f64,
    pub t_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub instance_id: String,
    pub busy_seconds: f64,
    pub price: f64,
    pub cost: f64,
}

fn check_bandwidth(node: &CloudInstance) -> Result<()> {
    if node.b > 0.0 && node.b.is_finite() {
        Ok(())
    } else {
        Err(Error::ZeroBandwidth(node.id.clone()))
    }
}

/// `(fragment_bytes + service_bytes) / b + install_time`.
pub fn deployment_time(req: &DeploymentRequest, node: &CloudInstance, install_time: f64) -> Result<f64> {
    check_bandwidth(node)?;
    Ok((req.fragment_bytes + req.service_bytes) as f64 / node.b + install_time)
}

/// `patch_count / (base_throughput * perf)`.
pub fn compute_time(patch_count: usize, node: &CloudInstance, base_throughput: f64) -> Result<f64> {
    let rate = base_throughput * node.perf;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidThroughput(rate));
    }
    Ok(patch_count as f64 / rate)
}

/// Busy time of `node` when it processes `work`. An empty workload costs
/// only the installation.
pub fn node_completion<W: Workload + ?Sized>(work: &W, node: &CloudInstance, sim: &Simulation) -> Result<NodeTiming> {
    let req = DeploymentRequest {
        fragment_bytes: work.size_bytes(),
        service_bytes: sim.service_bytes,
    };
    let n = work.patch_count();
    if n == 0 {
        check_bandwidth(node)?;
        return Ok(NodeTiming {
            t_deploy: sim.install_time,
            t_compute: 0.0,
            t_comm: 0.0,
            t_total: sim.install_time,
        });
    }
    let t_deploy = deployment_time(&req, node, sim.install_time)?;
    let t_compute = compute_time(n, node, sim.base_throughput)?;
    let t_comm = (n as u64 * sim.output_bytes_per_patch) as f64 / node.b;
    Ok(NodeTiming {
        t_deploy,
        t_compute,
        t_comm,
        t_total: t_deploy + t_compute + t_comm,
    })
}

pub fn cost_line(timing: &NodeTiming, node: &CloudInstance, billing: Billing) -> CostLine {
    let busy = billing.billed_seconds(timing.t_total);
    CostLine {
        instance_id: node.id.clone(),
        busy_seconds: busy,
        price: node.p,
        cost: busy * node.p,
    }
}

/// Sum of billed busy time times price over all nodes.
pub fn monetary_cost(timings: &[(NodeTiming, &CloudInstance)], billing: Billing) -> f64 {
    timings.iter().map(|(t, n)| cost_line(t, n, billing).cost).sum()
}

/// Latest completion over a set of nodes, 0 for none.
pub fn makespan(timings: &[NodeTiming]) -> f64 {
    timings.iter().map(|t| t.t_total).fold(0.0, f64::max)
}
