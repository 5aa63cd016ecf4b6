//! JSON formats for complexes and protocols.

use std::collections::BTreeMap;

use num::{BigInt, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{CwComplex, IntChain};
use crate::error::{Error, Result};
use crate::protocol::{Drive, DrivingProtocol, PeriodicSpline};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryEntry {
    pub cell: String,
    pub face: String,
    pub coeff: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub cell: String,
    pub face: String,
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexFile {
    pub name: String,
    pub dimension: usize,
    pub cells: Vec<Vec<String>>,
    #[serde(default)]
    pub boundary: Vec<BoundaryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomEntry>>,
    /// Run manifest that produced the file, if any; ignored on input.
    #[serde(default, skip_serializing)]
    pub manifest: Option<String>,
}

fn parse_error(what: &str, e: serde_json::Error) -> Error {
    Error::Malformed(format!("{what}: {e} (line {}, column {})", e.line(), e.column()))
}

impl ComplexFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_error("complex file", e))
    }

    pub fn build(&self) -> Result<CwComplex> {
        if self.cells.len() != self.dimension + 1 {
            return Err(Error::Dimension(format!(
                "dimension {} needs {} cell lists, got {}",
                self.dimension,
                self.dimension + 1,
                self.cells.len()
            )));
        }
        let entries: Vec<(&str, &str, i64)> =
            self.boundary.iter().map(|b| (b.cell.as_str(), b.face.as_str(), b.coeff)).collect();
        let c = CwComplex::from_entries(self.name.clone(), self.cells.clone(), &entries)?;
        let Some(atoms) = &self.atoms else {
            return Ok(c);
        };
        let d = c.dimension();
        let mut map = c.atoms().clone();
        for a in atoms {
            let alpha = c.cell_index(d, &a.cell)?;
            let face = c.cell_index(d - 1, &a.face)?;
            map.insert((alpha, face), a.signs.clone());
        }
        Ok(c.with_atoms(map))
    }

    pub fn from_complex(c: &CwComplex) -> Self {
        let d = c.dimension();
        let mut boundary = Vec::new();
        for k in 1..=d {
            let b = c.boundary(k);
            for a in 0..b.ncols() {
                for j in 0..b.nrows() {
                    let x = &b[(j, a)];
                    if !x.is_zero() {
                        boundary.push(BoundaryEntry {
                            cell: c.cells(k)[a].clone(),
                            face: c.cells(k - 1)[j].clone(),
                            coeff: x.to_i64().expect("incidence fits in 64 bits"),
                        });
                    }
                }
            }
        }
        let defaults = c.default_atoms();
        let atoms = (c.atoms() != defaults.atoms()).then(|| {
            c.atoms()
                .iter()
                .map(|(&(a, f), s)| AtomEntry {
                    cell: c.cells(d)[a].clone(),
                    face: c.cells(d - 1)[f].clone(),
                    signs: s.clone(),
                })
                .collect()
        });
        Self { name: c.name().to_string(), dimension: d, cells: c.all_cells().to_vec(), boundary, atoms, manifest: None }
    }
}

/// Canonical JSON: sorted keys, two-space indentation, trailing newline.
pub fn canonical_json<T: Serialize>(x: &T) -> String {
    let v: Value = serde_json::to_value(x).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub fn read_complex(text: &str) -> Result<CwComplex> {
    ComplexFile::parse(text)?.build()
}

pub fn dump_complex(c: &CwComplex) -> String {
    canonical_json(&ComplexFile::from_complex(c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DriveSpec {
    #[serde(rename = "builtin-sin")]
    Sin {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default = "one")]
        harmonic: u32,
        #[serde(default)]
        phase: f64,
    },
    #[serde(rename = "spline")]
    Spline { samples: Vec<f64> },
    #[serde(rename = "constant")]
    Constant { value: f64 },
}

fn one() -> u32 {
    1
}

impl DriveSpec {
    pub fn to_drive(&self) -> Result<Drive> {
        Ok(match self {
            DriveSpec::Sin { offset, amplitude, harmonic, phase } => {
                Drive::Harmonic { offset: *offset, amplitude: *amplitude, harmonic: *harmonic, phase: *phase }
            }
            DriveSpec::Spline { samples } => Drive::Spline(PeriodicSpline::new(samples.clone())?),
            DriveSpec::Constant { value } => Drive::Constant(*value),
        })
    }

    pub fn from_drive(d: &Drive) -> Self {
        match d {
            Drive::Constant(v) => DriveSpec::Constant { value: *v },
            Drive::Harmonic { offset, amplitude, harmonic, phase } => {
                DriveSpec::Sin { offset: *offset, amplitude: *amplitude, harmonic: *harmonic, phase: *phase }
            }
            Drive::Spline(s) => DriveSpec::Spline { samples: s.samples().to_vec() },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    #[serde(rename = "tau_D")]
    pub tau_d: f64,
    pub beta: f64,
    pub cells: BTreeMap<String, DriveSpec>,
    /// Initial integer cycle as `cell → coefficient`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<BTreeMap<String, i64>>,
    #[serde(default, skip_serializing)]
    pub manifest: Option<String>,
}

impl ProtocolFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_error("protocol file", e))
    }

    pub fn build(&self, c: &CwComplex) -> Result<DrivingProtocol> {
        let terms = self.cells.iter().map(|(k, v)| Ok((k.as_str(), v.to_drive()?))).collect::<Result<Vec<_>>>()?;
        DrivingProtocol::from_named(c, self.tau_d, self.beta, terms)
    }

    pub fn initial_state(&self, c: &CwComplex) -> Result<Option<IntChain>> {
        let Some(z) = &self.z0 else {
            return Ok(None);
        };
        let d = c.dimension();
        IntChain::from_named(c, d - 1, z.iter().map(|(k, v)| (k.as_str(), BigInt::from(*v)))).map(Some)
    }

    pub fn from_protocol(c: &CwComplex, p: &DrivingProtocol, z0: Option<&IntChain>) -> Self {
        let d = c.dimension();
        let mut cells = BTreeMap::new();
        for (id, drive) in c.cells(d - 1).iter().zip(&p.e).chain(c.cells(d).iter().zip(&p.w)) {
            cells.insert(id.clone(), DriveSpec::from_drive(drive));
        }
        let z0 = z0.map(|z| {
            z.to_named(c).into_iter().map(|(k, v)| (k, v.to_i64().expect("coefficient fits in 64 bits"))).collect()
        });
        Self { tau_d: p.tau_d, beta: p.beta, cells, z0, manifest: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn complex_round_trip_is_identical() {
        for c in [builtin::wedge_spheres(), builtin::torus(), builtin::cycle_graph(5)] {
            let text = dump_complex(&c);
            let back = read_complex(&text).unwrap();
            assert!(back == c, "{}", c.name());
            assert_eq!(dump_complex(&back), text);
        }
    }

    #[test]
    fn custom_atoms_survive() {
        let text = r#"{"name": "rp2", "dimension": 2,
            "cells": [["v"], ["a"], ["D"]],
            "boundary": [{"cell": "D", "face": "a", "coeff": 2}],
            "atoms": [{"cell": "D", "face": "a", "signs": [1, 1]}]}"#;
        let c = read_complex(text).unwrap();
        assert!(c.validate().is_empty());
        assert_eq!(c.atoms_for(0, 0), &[1, 1]);
        let mixed = text.replace("[1, 1]", "[1, -1, 1]");
        let c = read_complex(&mixed).unwrap();
        assert_eq!(dump_complex(&read_complex(&dump_complex(&c)).unwrap()), dump_complex(&c));
        assert!(c.validate().iter().any(|v| v.kind == "atom-sum"));
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = read_complex("{\n  \"name\": 3\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_face_is_named() {
        let text = r#"{"name": "x", "dimension": 1, "cells": [["p"], ["a"]],
            "boundary": [{"cell": "a", "face": "zz", "coeff": 1}]}"#;
        let err = read_complex(text).unwrap_err();
        assert!(matches!(err, Error::UnknownCell(ref s) if s == "zz"), "{err}");
    }

    #[test]
    fn protocol_round_trip() {
        let (c, p) = builtin::example("wedge-spheres-d2").unwrap();
        let z0 = builtin::default_z0(&c);
        let f = ProtocolFile::from_protocol(&c, &p, Some(&z0));
        let text = canonical_json(&f);
        let back = ProtocolFile::parse(&text).unwrap();
        assert_eq!(back.build(&c).unwrap(), p);
        assert_eq!(back.initial_state(&c).unwrap().unwrap(), z0);
    }

    #[test]
    fn protocol_kinds_parse() {
        let c = builtin::wedge_spheres();
        let text = r#"{"tau_D": 10, "beta": 2, "cells": {
            "f1": {"kind": "builtin-sin", "amplitude": 1.0},
            "f2": {"kind": "spline", "samples": [0, 1, 0, -1]},
            "e1": {"kind": "constant", "value": 0.5},
            "e2": {"kind": "builtin-sin", "offset": 1, "amplitude": 2, "harmonic": 2, "phase": 0.1}}}"#;
        let p = ProtocolFile::parse(text).unwrap().build(&c).unwrap();
        let ws = p.evaluate(0.25);
        assert!((ws.e[0] - 1.0).abs() < 1e-12);
        assert!((ws.e[1] - 1.0).abs() < 1e-12);
        assert_eq!(ws.w[0], 0.5);
        let missing = r#"{"tau_D": 1, "beta": 1, "cells": {"f1": {"kind": "constant", "value": 0}}}"#;
        assert!(ProtocolFile::parse(missing).unwrap().build(&c).is_err());
    }
}
