//! Figure reproductions as compiled-in configurations, one per plotted series.

use crate::config::Preset;

/// A single curve of a figure: output suffix and its configuration text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    pub suffix: String,
    pub config: String,
}

fn series(suffix: impl Into<String>, config: String) -> Series {
    Series {
        suffix: suffix.into(),
        config,
    }
}

fn size_sweep(state: &str, dim: u32) -> String {
    format!(
        "command=sweep\nstate={state}\nL=range(1,30,1)\na=1\nJ=ohmic\nalpha=1\ndim={dim}\nomega_c=20\n\
         occupation=vacuum\nt=20\nmethod=closed_form\n"
    )
}

pub fn expand(preset: Preset) -> Vec<Series> {
    match preset {
        // GHZ' susceptibility over one reciprocal period.
        Preset::Fig3 => [2, 4, 6, 8]
            .iter()
            .map(|l| {
                series(
                    format!("L{l}"),
                    format!(
                        "command=susceptibility\nstate=GHZ'\nL={l}\na=1\nk=linspace(0,2*pi,401)\n\
                         method=closed_form\n"
                    ),
                )
            })
            .collect(),
        Preset::Fig4Left => vec![series("d1", size_sweep("GHZ", 1)), series("d2", size_sweep("GHZ", 2))],
        Preset::Fig4Right => vec![series("d1", size_sweep("GHZ'", 1)), series("d2", size_sweep("GHZ'", 2))],
        // Leading-order GHZ' decoherence with a Gaussian occupation peak at pi.
        Preset::Fig5 => {
            let base = "command=sweep\nstate=GHZ'\nL=range(1,100,1)\na=1\nJ=band_limited\nalpha=1\n\
                        omega_max=2*pi\nsolid_angle=2\nt=leading_order\nmethod=quadrature\n";
            let mut out = vec![series(
                "delta",
                format!("{base}occupation=delta\ncenter=pi\nN_tot=10\n"),
            )];
            for n in [200, 150, 100, 50] {
                out.push(series(
                    format!("sigma_2pi_over_{n}"),
                    format!("{base}occupation=gaussian\ncenter=pi\nwidth=2*pi/{n}\nN_tot=10\n"),
                ));
            }
            out
        }
        Preset::Fig6 => ["GHZ", "GHZ'"]
            .iter()
            .map(|state| {
                let suffix = if *state == "GHZ" { "ghz" } else { "ghz_prime" };
                series(
                    suffix,
                    format!(
                        "command=decoherence\nstate={state}\nL=6\na=1\nJ=ohmic\nalpha=1\ndim=2\nomega_c=10\n\
                         occupation=vacuum\nt=range(0,12,0.01)\nmethod=closed_form\n"
                    ),
                )
            })
            .collect(),
    }
}
