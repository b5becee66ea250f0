use std::fmt::Write;

use tutor_core::tutor::{Classification, Diagnostic, Feedback};

/// Human-readable rendering of feedback for terminals and logs.
pub fn render(fb: &Feedback) -> String {
    let mut out = String::new();
    let headline = match fb.classification {
        Classification::Correct => "Correct: the program passes every test.",
        Classification::OnTrack => "On track: the holes can be completed to a working program.",
        Classification::OffTrack => "Off track: the program cannot be completed as written.",
        Classification::TooComplex => "Too complex: no completion was found within the search budget.",
        Classification::Inconclusive => "Inconclusive: evaluation did not finish.",
    };
    out.push_str(headline);
    out.push('\n');
    if let Some(d) = &fb.diagnostic {
        let (stage, message) = match d {
            Diagnostic::Syntax { message, .. } => ("syntax error", message),
            Diagnostic::Type { message, .. } => ("type error", message),
        };
        let _ = writeln!(out, "{stage}: {message}");
    }
    if let Some(c) = &fb.counterexample {
        let _ = writeln!(out, "counterexample: {}", c.text);
        let _ = writeln!(out, "  expected: {}", c.expected);
        if c.properties_skipped {
            out.push_str("  properties not checked: the output is incomplete\n");
        } else if !c.violated.is_empty() {
            let _ = writeln!(out, "  violated properties: {}", c.violated.join(", "));
        }
    }
    if let Some(c) = &fb.conflict {
        let _ = writeln!(out, "hole ?{} would need to give different answers to the same question:", c.hole);
        for p in c.pairs.iter().take(3) {
            let inputs: Vec<String> = p.inputs.iter().take(3).map(ToString::to_string).collect();
            let _ = writeln!(out, "  {}  vs  {}  (input {})", p.text[0], p.text[1], inputs.join(", "));
        }
    }
    if let Some(h) = fb.failed_hole {
        let _ = writeln!(out, "no expression can fill hole ?{h}");
    }
    if let Some(i) = &fb.inconclusive {
        let _ = writeln!(out, "on input {}: {}", i.input, i.reason);
    }
    for spec in &fb.hole_specs {
        let _ = writeln!(out, "hole ?{}:", spec.hole);
        for e in &spec.examples {
            let _ = writeln!(out, "  {e}");
        }
    }
    if let Some(r) = &fb.recovery {
        match &r.repair {
            Some(repair) => {
                let _ = writeln!(out, "a nearby working program:\n{}", indent(&repair.source));
            }
            None => {
                let _ = writeln!(out, "no nearby working program found after {} attempts", r.iterations);
            }
        }
    }
    if let Some(a) = &fb.advice {
        let _ = writeln!(out, "hint: try an approach based on `{}`", a.construct);
    }
    out
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}
