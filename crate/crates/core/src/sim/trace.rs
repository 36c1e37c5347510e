//! Optional per-episode trace dumps: one CSV row per tick per vehicle.

use std::io::{self, Write};

/// One sampled vehicle pose.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub tick: u32,
    pub vehicle: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub progress: f64,
}

pub const TRACE_HEADER: &str = "tick,id,x,y,heading,speed,p";

pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.tick, r.vehicle, r.x, r.y, r.heading, r.speed, r.progress
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_rows_serialize_in_order() {
        let rows = vec![
            TraceRow { tick: 0, vehicle: 0, x: 1.0, y: 2.0, heading: 0.5, speed: 3.0, progress: 4.0 },
            TraceRow { tick: 1, vehicle: 0, x: 1.5, y: 2.0, heading: 0.5, speed: 3.1, progress: 4.2 },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert_eq!(lines.next(), Some("0,0,1,2,0.5,3,4"));
    }
}
