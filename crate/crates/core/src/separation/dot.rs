//! Graphviz rendering of the class/dominance diagram.

use std::fmt::Write;

use super::SeparationResult;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotOptions {
    /// Classes with more members than this are labelled collectively.
    pub collective_threshold: Option<usize>,
    pub collective_name: String,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            collective_threshold: None,
            collective_name: "Others".to_string(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One node per equivalence class and one edge per dominance relation not
/// implied by transitivity.
///
/// With per-team `rrwp` values, classes are ordered top to bottom by the
/// mean RRWP of their members, using `rank=same` groups and invisible
/// edges between consecutive groups.
pub fn render_dot(result: &SeparationResult, options: &DotOptions, rrwp: Option<&[f64]>) -> String {
    let classes = result.classes();
    let label_of = |class: usize| -> String {
        let members = &classes[class];
        match options.collective_threshold {
            Some(limit) if members.len() > limit => {
                format!("{} ({})", options.collective_name, members.len())
            }
            _ => members
                .iter()
                .map(|&k| result.item_label(k))
                .collect::<Vec<_>>()
                .join(", "),
        }
    };
    let class_rrwp = |class: usize, r: &[f64]| -> f64 {
        let members = &classes[class];
        members.iter().map(|&k| r[result.items()[k].team.0]).sum::<f64>() / members.len() as f64
    };

    let mut order: Vec<usize> = (0..classes.len()).collect();
    if let Some(r) = rrwp {
        order.sort_by(|&a, &b| class_rrwp(b, r).total_cmp(&class_rrwp(a, r)).then(a.cmp(&b)));
    }

    let mut out = String::new();
    out.push_str("digraph separation {\n");
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [shape=ellipse];\n");
    for &class in &order {
        let _ = write!(out, "  c{class} [label=\"{}\"", escape(&label_of(class)));
        if let Some(r) = rrwp {
            let _ = write!(out, ", rrwp=\"{:.3}\"", class_rrwp(class, r));
        }
        out.push_str("];\n");
    }
    for (a, b) in result.class_edges_reduced() {
        let _ = writeln!(out, "  c{a} -> c{b};");
    }
    if let Some(r) = rrwp {
        // group classes with equal (rounded) RRWP on one rank
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last_key = None;
        for &class in &order {
            let key = (class_rrwp(class, r) * 1e3).round() as i64;
            if last_key == Some(key) {
                groups.last_mut().expect("group").push(class);
            } else {
                groups.push(vec![class]);
                last_key = Some(key);
            }
        }
        for group in groups.iter().filter(|g| g.len() > 1) {
            let names: Vec<String> = group.iter().map(|c| format!("c{c}")).collect();
            let _ = writeln!(out, "  {{ rank=same; {}; }}", names.join("; "));
        }
        for pair in groups.windows(2) {
            let _ = writeln!(out, "  c{} -> c{} [style=invis];", pair[0][0], pair[1][0]);
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{parse_dataset, ModelKind, ParseOptions};
    use crate::separation::saturate;

    fn first_example() -> SeparationResult {
        let d = parse_dataset(
            "a,b,1\nb,a,1\nc,d,1\nd,c,1\na,c,1",
            ParseOptions::new(ModelKind::Basic),
        )
        .unwrap();
        saturate(&d, ModelKind::Basic).unwrap()
    }

    #[test]
    fn plain_diagram() {
        let dot = render_dot(&first_example(), &DotOptions::default(), None);
        assert!(dot.contains("c0 [label=\"a, b\"];"));
        assert!(dot.contains("c1 [label=\"c, d\"];"));
        assert!(dot.contains("c0 -> c1;"));
        assert!(!dot.contains("invis"));
    }

    #[test]
    fn collective_label() {
        let options = DotOptions {
            collective_threshold: Some(1),
            collective_name: "Others".into(),
        };
        let dot = render_dot(&first_example(), &options, None);
        assert!(dot.contains("label=\"Others (2)\""));
    }

    #[test]
    fn rrwp_orders_nodes() {
        let rrwp = [1.0 / 6.0, 1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0];
        let dot = render_dot(&first_example(), &DotOptions::default(), Some(&rrwp));
        let first = dot.find("c1 [").unwrap();
        let second = dot.find("c0 [").unwrap();
        assert!(first < second);
        assert!(dot.contains("c1 -> c0 [style=invis];"));
        assert!(dot.contains("rrwp=\"0.833\""));
    }
}
