"""
Artifact Schema Definition
Single source of truth for the on-disk formats.
Used by the repositories, the CLI help text, and the README.
"""

Artifact_Schema_Description = """
Every artifact is a JSON sidecar <stem>.json plus data files named in its "files" map.
All floats are written with 17 significant digits.

Sidecar fields:
- kind: state | density | sinogram | quadratures | kernel | wigner | qudit_probs | qudit_state | mub_family
- command: subcommand that produced it
- x_grid, y_grid: {"min", "max", "n"} uniform grids (y_grid also carries sinogram offsets)
- measure: PlainDxDy | DqDpOver2Pi
- provenance: exact | sampled (quadratures), with shots
- d: qudit dimension
- source: upstream sidecar path, relative to this sidecar's directory
- diagnostics: residuals and corrections recorded by the producing step

Data files (CSV with a header row, row-major):
- density:      x,y,value
- wigner:       q,p,value
- sinogram:     theta,xprime,value
- quadratures:  theta,xprime,value
- kernel:       <stem>_real.csv and <stem>_imag.csv, each x1,x2,value
- qudit_state:  <stem>_real.csv and <stem>_imag.csv, each row,col,value
- qudit_probs:  basis,outcome,prob   (basis d is the computational basis)
- mub_family:   basis,outcome,n,real,imag   (component n of |outcome;basis>)
- density / wigner with --pgm: <stem>.pgm (16-bit P5) and <stem>.pgm.json {"min", "max"}
"""

State_Spec_Schema_Description = """
State specs are JSON objects discriminated by "kind":
- {"kind": "vacuum"}
- {"kind": "fock", "n": 2}
- {"kind": "coherent", "alpha_re": 1.0, "alpha_im": 0.5}
- {"kind": "thermal", "nbar": 0.5}
- {"kind": "cat", "alpha_re": 1.5, "alpha_im": 0.0, "parity": 1}
- {"kind": "mixed", "weights": [0.5, 0.5], "components": [{...}, {...}]}
- {"kind": "phantom", "blobs": [{"shape": "gaussian", "x0": -1.5, "y0": 0.0, "sigma": 0.6, "weight": 0.6},
                                 {"shape": "ellipse", "x0": 1.5, "y0": 1.0, "a": 1.0, "b": 0.5,
                                  "angle": 0.3, "weight": 0.4}]}
- {"kind": "qudit_pure", "d": 3, "vector_re": [1, 0, 0], "vector_im": [0, 0, 0]}
- {"kind": "qudit_random_mixed", "d": 5, "seed": 7}

Optional for continuous kinds: "nmax" (Fock truncation, default 60).
Coherent amplitudes use a = (x + ip)/sqrt(2): <X_theta> = sqrt(2) Re(alpha e^{-i theta}).
"""
