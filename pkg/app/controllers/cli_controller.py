"""
CLI Controller
Command-line front end wiring the tomography pipelines.

Each subcommand reads at most one upstream artifact (the sidecar given with --in,
or the path read from stdin) and writes one artifact, printing its sidecar path
on stdout, so commands chain with shell pipes:

    phantom --kind vacuum | wigner | quadratures --angles 90 | reconstruct-wigner | report

Exit codes: 0 success, 1 verification failure, 2 bad arguments, 3 numerical
precondition failure.
"""
import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.config.settings import ARTIFACT_DIR, EPSILON_FACTOR, FFT_PADDING, GRID_MAX, GRID_MIN, GRID_N
from app.errors import TomographyError, UsageError
from app.models.artifact_schema import Artifact_Schema_Description, State_Spec_Schema_Description
from app.models.field_models import PrimeDim, QuadratureDataset
from app.models.run_models import RunConfig
from app.models.state_models import StateKind, StateSpec
from app.repositories import artifact_repository, state_repository
from app.services import (
    mub_continuous_service,
    numerics_service,
    qudit_service,
    radon_service,
    report_service,
    state_service,
    verify_service,
    wigner_service,
)
from app.utils.logging_utils import configure_logging

LOGGER = logging.getLogger(__name__)

SUBCOMMANDS = (
    "phantom", "radon", "iradon", "kernel", "wigner", "quadratures", "sample",
    "reconstruct-wigner", "reconstruct-dm", "qudit-mub", "qudit-sim", "qudit-recon",
    "verify", "report",
)


# -----------------------------------------------------------------------------
# Argument parsing
# -----------------------------------------------------------------------------
def _shots(value: str) -> Optional[int]:
    if value == "exact":
        return None
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--shots expects an integer or 'exact', got '{value}'")


def _default_spacing() -> float:
    return (GRID_MAX - GRID_MIN) / (GRID_N - 1)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", help="upstream sidecar (default: path read from stdin)")
    common.add_argument("--out", help=f"output stem (default: {ARTIFACT_DIR}/<subcommand>)")
    common.add_argument("--grid-min", type=float)
    common.add_argument("--grid-max", type=float)
    common.add_argument("--grid-n", type=int)
    common.add_argument("--angles", type=int, help="number of uniform angles in [0, pi)")
    common.add_argument("--offsets", type=int, help="number of offsets spanning the grid extent")
    common.add_argument("--epsilon", type=float,
                        help=f"PV regularization (default EPSILON_FACTOR x offset spacing, factor {EPSILON_FACTOR:g}); "
                             f"pass the offset spacing, {_default_spacing():g} on the default grid, "
                             f"or set EPSILON_FACTOR=1 for epsilon = one offset spacing")
    common.add_argument("--method", choices=radon_service.METHODS)
    common.add_argument("--shots", type=_shots, help="samples per angle / basis, or 'exact'")
    common.add_argument("--seed", type=int)
    common.add_argument("--d", type=int, help="qudit dimension (prime)")
    common.add_argument("--order", type=int, help="interpolation order for line integrals")
    common.add_argument("--apodize", action="store_true", help="cosine apodization of the ramp filter")
    common.add_argument("--clip", action="store_true", help="clip negative overshoot of classical densities")
    common.add_argument("--positivity", action="store_true", help="eigenvalue floor on reconstructed states")
    common.add_argument("--pgm", action="store_true", help="also write a 16-bit PGM image")
    common.add_argument("--singular-angles", choices=mub_continuous_service.SINGULAR_MODES)
    common.add_argument("--log-level", help="override LOG_LEVEL")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="tomokit",
        description="Classical and quantum tomography from projections and quadrature data.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=Artifact_Schema_Description + State_Spec_Schema_Description,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    phantom = sub.add_parser("phantom", parents=[common], help="ground-truth state or 2D phantom")
    phantom.add_argument("--kind", choices=[k.value for k in StateKind if k not in
                                            (StateKind.MIXED, StateKind.QUDIT_PURE, StateKind.QUDIT_RANDOM_MIXED)])
    phantom.add_argument("--spec", help="StateSpec JSON document")
    phantom.add_argument("--n", type=int)
    phantom.add_argument("--alpha-re", type=float)
    phantom.add_argument("--alpha-im", type=float)
    phantom.add_argument("--nbar", type=float)
    phantom.add_argument("--parity", type=int, choices=(1, -1))

    sub.add_parser("radon", parents=[common], help="sinogram of a 2D density")
    sub.add_parser("iradon", parents=[common], help="inverse Radon reconstruction")
    sub.add_parser("kernel", parents=[common], help="position density kernel of a state")
    sub.add_parser("wigner", parents=[common], help="Wigner function of a state or kernel")
    sub.add_parser("quadratures", parents=[common], help="exact rotated-quadrature distributions")
    sub.add_parser("sample", parents=[common], help="simulated homodyne histograms")
    sub.add_parser("reconstruct-wigner", parents=[common], help="Wigner function from quadratures")
    sub.add_parser("reconstruct-dm", parents=[common], help="density kernel from quadratures")
    sub.add_parser("qudit-mub", parents=[common], help="the d + 1 mutually unbiased bases")
    qudit_sim = sub.add_parser("qudit-sim", parents=[common], help="MUB measurement probabilities")
    qudit_sim.add_argument("--state", help="e<k>, mixed or random:<seed>")
    sub.add_parser("qudit-recon", parents=[common], help="qudit state from MUB probabilities")
    verify = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    verify.add_argument("--module", choices=["all", *verify_service.SUITES])
    report = sub.add_parser("report", parents=[common], help="compare a reconstruction with ground truth")
    report.add_argument("--truth", help="explicit ground-truth sidecar")
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    """Drop unset flags so RunConfig defaults (from settings) apply."""
    values = {key: value for key, value in vars(args).items()
              if value is not None and key not in ("log_level", "truth")}
    return RunConfig(**values)


# -----------------------------------------------------------------------------
# Plumbing
# -----------------------------------------------------------------------------
def _input_path(config: RunConfig) -> str:
    if config.input:
        return config.input
    if sys.stdin is None or sys.stdin.isatty():
        raise UsageError(f"'{config.subcommand}' needs an input: pass --in or pipe a sidecar path")
    for line in sys.stdin:
        if line.strip():
            return line.strip()
    raise UsageError(f"'{config.subcommand}' needs an input: stdin was empty")


def _out_stem(config: RunConfig) -> str:
    return artifact_repository.stem_of(config.out or os.path.join(ARTIFACT_DIR, config.subcommand))


def _angles(config: RunConfig):
    return numerics_service.uniform_angles(config.angles)


def _state_from_chain(path: str) -> StateSpec:
    for _, meta in artifact_repository.walk_chain(path):
        if meta.kind == "state":
            return StateSpec.model_validate(meta.state)
    raise UsageError(f"no state spec upstream of {path}")


def _state_from_flags(config: RunConfig) -> StateSpec:
    if config.spec:
        return state_repository.load_state_spec(config.spec)
    kind = config.kind or "vacuum"
    if kind == StateKind.PHANTOM.value:
        return state_service.default_phantom()
    fields = {"kind": kind, "alpha_re": config.alpha_re, "alpha_im": config.alpha_im, "parity": config.parity}
    if config.n is not None:
        fields["n"] = config.n
    if config.nbar is not None:
        fields["nbar"] = config.nbar
    try:
        return StateSpec(**fields)
    except ValidationError as e:
        raise UsageError(f"invalid --kind {kind} flags: {e.errors()[0]['msg']}") from e


# -----------------------------------------------------------------------------
# Subcommands
# -----------------------------------------------------------------------------
def cmd_phantom(config: RunConfig) -> str:
    spec = _state_from_flags(config)
    stem = _out_stem(config)
    if spec.kind is StateKind.PHANTOM:
        spec_path = artifact_repository.write_state(stem + "_spec", spec, config.subcommand)
        density = state_service.realize_phantom(spec, config.grid, config.grid)
        return artifact_repository.write_density(stem, density, config.subcommand, source=spec_path, pgm=config.pgm)
    return artifact_repository.write_state(stem, spec, config.subcommand)


def cmd_radon(config: RunConfig) -> str:
    path = _input_path(config)
    meta = artifact_repository.read_metadata(path)
    if meta.kind == "state":
        density = state_service.realize_phantom(artifact_repository.read_state(path), config.grid, config.grid)
    else:
        density = artifact_repository.read_density(path)
    sinogram = radon_service.forward_radon(density, _angles(config), config.offset_grid, order=config.order)
    return artifact_repository.write_sinogram(_out_stem(config), sinogram, config.subcommand, source=path)


def cmd_iradon(config: RunConfig) -> str:
    path = _input_path(config)
    sinogram = artifact_repository.read_sinogram(path)
    density = radon_service.inverse_radon(sinogram, config.grid, config.grid, method=config.method,
                                          epsilon=config.epsilon, padding=FFT_PADDING, apodize=config.apodize,
                                          clip_negative=config.clip)
    return artifact_repository.write_density(_out_stem(config), density, config.subcommand, source=path,
                                             pgm=config.pgm)


def cmd_kernel(config: RunConfig) -> str:
    path = _input_path(config)
    kernel = state_service.realize_kernel(artifact_repository.read_state(path), config.grid)
    return artifact_repository.write_kernel(_out_stem(config), kernel, config.subcommand, source=path)


def _kernel_from(path: str, config: RunConfig):
    meta = artifact_repository.read_metadata(path)
    if meta.kind == "kernel":
        return artifact_repository.read_kernel(path)
    return state_service.realize_kernel(artifact_repository.read_state(path), config.grid)


def cmd_wigner(config: RunConfig) -> str:
    path = _input_path(config)
    kernel = _kernel_from(path, config)
    field = wigner_service.wigner_transform(kernel, kernel.grid, config.grid, order=config.order)
    return artifact_repository.write_wigner(_out_stem(config), field, config.subcommand, source=path,
                                            pgm=config.pgm)


def cmd_quadratures(config: RunConfig) -> str:
    path = _input_path(config)
    meta = artifact_repository.read_metadata(path)
    offsets = config.offset_grid
    if meta.kind == "state":
        data = state_service.exact_quadratures(artifact_repository.read_state(path), _angles(config), offsets)
    else:
        if meta.kind == "wigner":
            field = artifact_repository.read_wigner(path)
        else:
            kernel = _kernel_from(path, config)
            field = wigner_service.wigner_transform(kernel, kernel.grid, config.grid)
        sinogram = wigner_service.quadrature_sinogram(field, _angles(config), offsets, order=config.order)
        data = QuadratureDataset(angles=sinogram.angles, offsets=offsets, values=sinogram.values,
                                 provenance="exact")
    return artifact_repository.write_sinogram(_out_stem(config), data, config.subcommand, source=path)


def cmd_sample(config: RunConfig) -> str:
    path = _input_path(config)
    spec = _state_from_chain(path)
    if config.shots is None:
        data = state_service.exact_quadratures(spec, _angles(config), config.offset_grid)
    else:
        data = state_service.sample_quadratures(spec, _angles(config), config.shots, config.seed,
                                                config.offset_grid)
    return artifact_repository.write_sinogram(_out_stem(config), data, config.subcommand, source=path)


def cmd_reconstruct_wigner(config: RunConfig) -> str:
    path = _input_path(config)
    data = artifact_repository.read_sinogram(path)
    field = wigner_service.reconstruct_wigner(data, config.grid, config.grid, method=config.method,
                                              epsilon=config.epsilon, apodize=config.apodize)
    return artifact_repository.write_wigner(_out_stem(config), field, config.subcommand, source=path,
                                            pgm=config.pgm)


def cmd_reconstruct_dm(config: RunConfig) -> str:
    path = _input_path(config)
    data = artifact_repository.read_sinogram(path)
    kernel = mub_continuous_service.reconstruct_density_matrix(
        data, config.grid, epsilon=config.epsilon, singular_angles=config.singular_angles,
        positivity=config.positivity,
    )
    return artifact_repository.write_kernel(_out_stem(config), kernel, config.subcommand, source=path)


def _prime(config: RunConfig) -> PrimeDim:
    if config.d is None:
        raise UsageError(f"'{config.subcommand}' needs --d")
    return PrimeDim(config.d)


def cmd_qudit_mub(config: RunConfig) -> str:
    fam = qudit_service.mub_family(_prime(config))
    diagnostics = {
        "orthonormality_residual": qudit_service.orthonormality_residual(fam),
        "flatness_residual": qudit_service.flatness_residual(fam),
        "eigen_relation_residual": qudit_service.eigen_relation_residual(fam),
    }
    return artifact_repository.write_mub_family(_out_stem(config), fam, config.subcommand, diagnostics)


def _qudit_truth(config: RunConfig, dim: PrimeDim, fam):
    label = config.state
    if label == "mixed":
        return qudit_service.maximally_mixed(dim)
    if label.startswith("random:"):
        try:
            seed = int(label.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"--state random:<seed> needs an integer seed, got '{label}'")
        return state_service.realize_qudit(StateSpec(kind="qudit_random_mixed", d=dim.d, seed=seed))
    if label.startswith("e") and label[1:].isdigit() and int(label[1:]) < dim.d:
        return qudit_service.basis_state(fam, dim.d, int(label[1:]))
    raise UsageError(f"--state expects e<k> with k < {dim.d}, mixed or random:<seed>, got '{label}'")


def cmd_qudit_sim(config: RunConfig) -> str:
    stem = _out_stem(config)
    if config.input:
        state = state_service.realize_qudit(artifact_repository.read_state(config.input))
        dim = state.dim
        fam = qudit_service.mub_family(dim)
    else:
        dim = _prime(config)
        fam = qudit_service.mub_family(dim)
        state = _qudit_truth(config, dim, fam)
    truth = artifact_repository.write_qudit_state(stem + "_truth", state, config.subcommand,
                                                  source=config.input, provenance="truth")
    if config.shots is None:
        probs = qudit_service.measurement_probabilities(state, fam)
        provenance = "exact"
    else:
        probs = qudit_service.sample_measurements(state, fam, config.shots, config.seed)
        provenance = "sampled"
    return artifact_repository.write_probabilities(stem, probs, dim.d, config.subcommand, source=truth,
                                                   provenance=provenance, shots=config.shots)


def cmd_qudit_recon(config: RunConfig) -> str:
    path = _input_path(config)
    probs, d = artifact_repository.read_probabilities(path)
    fam = qudit_service.mub_family(PrimeDim(d))
    state = qudit_service.reconstruct_qudit(probs, fam, positivity=config.positivity)
    return artifact_repository.write_qudit_state(_out_stem(config), state, config.subcommand, source=path,
                                                 provenance="reconstructed")


HANDLERS: Dict[str, Callable[[RunConfig], str]] = {
    "phantom": cmd_phantom,
    "radon": cmd_radon,
    "iradon": cmd_iradon,
    "kernel": cmd_kernel,
    "wigner": cmd_wigner,
    "quadratures": cmd_quadratures,
    "sample": cmd_sample,
    "reconstruct-wigner": cmd_reconstruct_wigner,
    "reconstruct-dm": cmd_reconstruct_dm,
    "qudit-mub": cmd_qudit_mub,
    "qudit-sim": cmd_qudit_sim,
    "qudit-recon": cmd_qudit_recon,
}


def _emit_json(document: dict, out: Optional[str]) -> None:
    text = json.dumps(document, indent=2, sort_keys=True)
    if out:
        directory = os.path.dirname(out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)


# -----------------------------------------------------------------------------
# Entry
# -----------------------------------------------------------------------------
def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, dispatch one subcommand and return the process exit code.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        0 on success, 1 on verification failure, 2 on bad arguments, 3 on numerical failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.log_level)

    try:
        config = to_config(args)
        if config.subcommand == "verify":
            result = verify_service.run_verification(config.module, config.d)
            _emit_json(result.model_dump(mode="json"), config.out)
            for failure in result.failures:
                LOGGER.error("[CLI] verify failed: %s/%s value=%s threshold=%s %s", failure.module, failure.name,
                             failure.value, failure.threshold, failure.detail)
            return 0 if result.passed else 1
        if config.subcommand == "report":
            report = report_service.build_report(_input_path(config), getattr(args, "truth", None))
            _emit_json(report.model_dump(mode="json", exclude_none=True), config.out)
            return 0
        print(HANDLERS[config.subcommand](config))
        return 0
    except ValidationError as e:
        LOGGER.error("[CLI] invalid arguments: %s", e.errors()[0]["msg"])
        return UsageError.exit_code
    except TomographyError as e:
        LOGGER.error("[CLI] %s: %s", type(e).__name__, e)
        return e.exit_code
