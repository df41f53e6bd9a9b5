//! Plain-text rendering of a [`CycleReport`].
//!
//! `key: value` lines plus one CSV section. Nothing time- or host-dependent
//! is written, so equal inputs give byte-identical reports.

use std::fmt::Write as _;

use crate::layer_pipeline::{CycleReport, LayerCycles};
use crate::PUBLISHED_IMAGES_PER_SECOND;

/// Fixed-precision float so the text does not depend on float formatting.
fn f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        "inf".to_string()
    }
}

fn csv_row(name: &str, l: &LayerCycles) -> String {
    format!(
        "{name},{},{},{},{},{},{},{},{}",
        l.spikes_in,
        l.spikes_out,
        l.fetch_cycles,
        l.accum_cycles,
        l.decay_cycles,
        l.threshold_cycles,
        l.lopd_cycles,
        l.total_cycles()
    )
}

/// Accuracy as `(correct, total)`, when labels were available.
pub fn render(report: &CycleReport, clock_hz: f64, accuracy: Option<(u64, u64)>) -> String {
    let mut s = String::new();
    let images = report.images.max(1) as f64;
    let _ = writeln!(s, "# dtsnn cycle report (model estimate)");
    let _ = writeln!(s, "images: {}", report.images);
    let _ = writeln!(s, "clock_hz: {}", f(clock_hz));
    if let Some((correct, total)) = accuracy {
        let pct = if total == 0 {
            0.0
        } else {
            100.0 * correct as f64 / total as f64
        };
        let _ = writeln!(s, "accuracy_percent: {}", f(pct));
        let _ = writeln!(s, "correct: {correct}");
        let _ = writeln!(s, "total: {total}");
    }
    let _ = writeln!(s, "sorter_cycles: {}", report.sorter_cycles);
    let _ = writeln!(s, "saturations: {}", report.saturations);
    let _ = writeln!(s);
    let _ = writeln!(s, "[layers]");
    let _ = writeln!(
        s,
        "layer,spikes_in,spikes_out,fetch_cycles,accum_cycles,decay_cycles,threshold_cycles,lopd_cycles,total_cycles"
    );
    for (i, l) in report.layers.iter().enumerate() {
        let _ = writeln!(s, "{}", csv_row(&(i + 1).to_string(), l));
    }
    let _ = writeln!(s, "{}", csv_row("total", &report.totals()));
    let _ = writeln!(s);
    let _ = writeln!(s, "[throughput]");
    let seq = report.sequential_cycles();
    let _ = writeln!(s, "sequential_cycles: {seq}");
    let _ = writeln!(s, "sequential_cycles_per_image: {}", f(seq as f64 / images));
    let _ = writeln!(s, "pipelined_cycles: {}", report.pipelined_cycles);
    let _ = writeln!(
        s,
        "pipelined_cycles_per_image: {}",
        f(report.pipelined_cycles as f64 / images)
    );
    let _ = writeln!(
        s,
        "images_per_second_sequential: {}",
        f(report.images_per_second(clock_hz))
    );
    let _ = writeln!(
        s,
        "images_per_second_pipelined: {}",
        f(report.pipelined_images_per_second(clock_hz))
    );
    let _ = writeln!(
        s,
        "published_images_per_second: {}",
        f(PUBLISHED_IMAGES_PER_SECOND)
    );
    s
}

/// Value of the first `key: value` line.
pub fn lookup<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(": ")?;
        (k == key).then_some(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_stable() {
        let report = CycleReport {
            images: 2,
            sorter_cycles: 20,
            layers: vec![LayerCycles {
                spikes_in: 10,
                spikes_out: 4,
                fetch_cycles: 10,
                accum_cycles: 10,
                decay_cycles: 30,
                threshold_cycles: 6,
                lopd_cycles: 10,
            }],
            pipelined_cycles: 132,
            saturations: 0,
        };
        let text = render(&report, 300e6, Some((1, 2)));
        assert_eq!(text, render(&report, 300e6, Some((1, 2))));
        assert_eq!(lookup(&text, "accuracy_percent"), Some("50.000"));
        assert_eq!(lookup(&text, "sequential_cycles"), Some("86"));
        assert_eq!(
            lookup(&text, "images_per_second_pipelined"),
            Some("4545454.545")
        );
        assert!(text.contains("\n1,10,4,10,10,30,6,10,66\n"));
        assert!(text.contains("\ntotal,10,4,10,10,30,6,10,66\n"));
    }
}
