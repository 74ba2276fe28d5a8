use std::collections::BTreeMap;

use renyi_accounting::curve::RdpCurve;
use renyi_accounting::harness::{
    export, import, reconstruct, run_session, ExportFormat, ScheduleReplay, SessionConfig, SessionSource,
};
use renyi_accounting::mechanisms::{DiscreteMechanism, GaussianMechanism, MechanismSpec, BOTTOM_LABEL};
use renyi_accounting::oracle::{AdversaryScript, ScriptNode};
use renyi_accounting::orders::OrderSet;

fn main() -> renyi_accounting::error::Result<()> {
    let dir = std::env::temp_dir().join("renyi-acct-session-log");
    std::fs::create_dir_all(&dir).map_err(|e| renyi_accounting::error::Error::Io { path: dir.clone(), source: e })?;

    // filter session: a script asking 0.4, 0.5, 0.2, 0.1 under a cap of 1.0
    let orders = OrderSet::singleton(2.0)?;
    let mech = DiscreteMechanism::new(vec!["ok".into()], vec![1.0], vec![1.0])?;
    let mut node = ScriptNode::Stop;
    for eps in [0.1, 0.2, 0.5, 0.4] {
        let children = BTreeMap::from([("ok".to_owned(), node.clone()), (BOTTOM_LABEL.to_owned(), node)]);
        node = ScriptNode::query(mech.clone(), RdpCurve::new(orders.clone(), vec![eps])?, children);
    }
    let cap = RdpCurve::new(orders, vec![1.0])?;
    let run = run_session(&SessionConfig::filter(cap, 1e-5, SessionSource::Script(AdversaryScript::new(node)?)))?;
    print!("{}", renyi_accounting::harness::to_jsonl(&run.log)?);

    // odometer session over a fixed schedule, exported three ways
    let mut schedule = ScheduleReplay::empty();
    schedule.push(MechanismSpec::Gaussian(GaussianMechanism::new(4.0, 1.0)?), 30)?;
    let config = SessionConfig::odometer(OrderSet::default_set(), 1e-5, SessionSource::Schedule(schedule)).with_seed(11);
    let run = run_session(&config)?;
    for (format, name) in [(ExportFormat::Jsonl, "odometer.jsonl"), (ExportFormat::Json, "odometer.json"), (ExportFormat::Csv, "odometer.csv")] {
        let path = dir.join(name);
        export(&run.log, format, &path)?;
        println!("wrote {}", path.display());
    }

    let log = import(&dir.join("odometer.jsonl"))?;
    assert_eq!(reconstruct(&log)?, run.state);
    println!("reimported log rebuilds the live odometer exactly");
    Ok(())
}
