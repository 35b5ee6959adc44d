//! CSV export of a grant-free schedule.
//!
//! ```text
//! # hp_ns=20000000,pattern=DDDDDDDSUU,mu=1,n_rb=106
//! frame,slot,rb,flow_id,mcs
//! 0,8,0,3,11
//! ```

use std::io::{self, Write};

use super::GrantFreeSchedule;

pub fn write_schedule_csv<W: Write>(schedule: &GrantFreeSchedule, mut out: W) -> io::Result<()> {
    let p = &schedule.pattern;
    writeln!(
        out,
        "# hp_ns={},pattern={},mu={},n_rb={}",
        schedule.hp.as_ns(),
        p.label_string(),
        p.mu(),
        p.n_rb()
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "slot", "rb", "flow_id", "mcs"])?;
    for (g, rb, r) in schedule.grid.iter() {
        let at = p.from_global(g);
        w.serialize((at.frame, at.slot, rb, r.flow_id, r.mcs.get()))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge_delay::DelayParams;
    use crate::flow::{FlowSpec, QosProfile, ResourceType, TrafficClass};
    use crate::grantfree::preallocate;
    use crate::link::{ChannelState, Cqi, McsRange};
    use crate::time::{Duration, Fraction, TddPattern};

    #[test]
    fn header_and_rows() {
        let p = TddPattern::parse("DDDDDDDSUU", 1, 106, Fraction::ONE).unwrap();
        let f = FlowSpec {
            id: 3,
            ue_id: 3,
            bat: Duration::from_ms(4),
            bs: 20,
            period: Duration::from_ms(10),
            tc: TrafficClass::new(6).unwrap(),
            qos: QosProfile {
                priority: 1,
                pdb: Duration::from_ms(1),
                mdbv: None,
                resource_type: ResourceType::DcGbr,
            },
        };
        let ch = ChannelState::uniform(&[3], 106, Cqi::new(10).unwrap());
        let s = preallocate(&[f], &p, &ch, McsRange::FULL, DelayParams::default()).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# hp_ns=10000000,pattern=DDDDDDDSUU,mu=1,n_rb=106");
        assert_eq!(lines[1], "frame,slot,rb,flow_id,mcs");
        assert_eq!(lines[2], "0,8,0,3,18");
        assert_eq!(lines.len(), 3);
    }
}
