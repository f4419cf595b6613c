"""Command-line interface.

Every command prints one JSON document ``{"tool_version", "command",
"result"}`` to stdout (or to ``--output``).  Exit codes: 0 the command ran
(whatever the verdict, MARGINAL included), 1 invalid input, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundsearch import SearchConfig, search, write_hits
from .circuit import CircuitDescription, replay_circuit, synthesize_circuit, synthesize_passive, verify_network
from .errors import InputError, NumericalError, UnphysicalStateError
from .gaussian import (
    CovarianceMatrix,
    ModePartition,
    is_physical,
    physicality_spectrum,
    ppt_check,
    symplectic_eigenvalues,
)
from .lmi import DEFAULT_DELTA_FEAS, DEFAULT_EPSILON, InfeasibilityCertificate, verify_certificate
from .separability import build_problem, classify
from .symplectic import GaussianRecipe, compose_covariance

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here that is an input error."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    # accept the output envelope of another command as input
    if isinstance(data, dict) and "result" in data and "tool_version" in data:
        data = data["result"]
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return data


def _covariance(args) -> CovarianceMatrix:
    data = _read_json(_require(args.input, "--input"))
    # classify/construct results nest the matrix one level down
    if "matrix" not in data and isinstance(data.get("covariance"), dict):
        data = data["covariance"]
    return CovarianceMatrix.from_dict(data)


def _require(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required")
    return value


def _partition(args, cov: CovarianceMatrix) -> ModePartition:
    if args.partition is not None:
        return ModePartition.parse(args.partition).check(cov.n_modes)
    if cov.partition is not None:
        return cov.partition
    raise InputError("--partition m,n is required (or a 'partition' field in the input)")


def cmd_physical(args) -> dict:
    cov = _covariance(args)
    rep = is_physical(cov, args.tol_phys)
    out = {"physical": rep.physical, "min_eig": rep.min_eig, "spectrum": physicality_spectrum(cov).tolist()}
    if np.linalg.eigvalsh(cov.matrix)[0] > 1e-12:
        out["symplectic_eigenvalues"] = symplectic_eigenvalues(cov).tolist()
    return out


def cmd_ppt(args) -> dict:
    cov = _covariance(args)
    part = _partition(args, cov)
    phys = is_physical(cov, args.tol_phys)
    if not phys.physical:
        raise UnphysicalStateError(f"state is not physical (min eigenvalue {phys.min_eig:.3g})")
    rep = ppt_check(cov, part, args.tol_phys)
    return {"partition": list(part), "ppt": rep.ppt, "min_eig": rep.min_eig}


def cmd_classify(args) -> dict:
    cov = _covariance(args)
    part = _partition(args, cov)
    verdict = classify(cov, part, epsilon=args.epsilon, delta_feas=args.delta_feas, tol_phys=args.tol_phys)
    out = {"partition": list(part)}
    out.update(verdict.to_dict())
    out["robustness"] = verdict.ppt_min_eig
    out["certificate_slack"] = verdict.certificate_slack
    return out


def _recipe(args) -> GaussianRecipe:
    path = args.recipe if args.recipe is not None else args.input
    return GaussianRecipe.from_dict(_read_json(_require(path, "--recipe")))


def cmd_construct(args) -> dict:
    recipe = _recipe(args)
    part = ModePartition.parse(args.partition) if args.partition is not None else None
    cov = CovarianceMatrix(compose_covariance(recipe), part)
    return cov.to_dict()


def cmd_synthesize(args) -> dict:
    data = _read_json(_require(args.recipe if args.recipe is not None else args.input, "--input"))
    if "K_unitary" in data:
        recipe = GaussianRecipe.from_dict(data)
        circuit = synthesize_circuit(recipe)
        ok, residual = verify_network(circuit.post_layer, circuit.phases, recipe.unitary)
        return {"circuit": circuit.to_dict(), "post_layer_match": ok, "post_layer_residual": residual}
    if "re" in data:
        re = np.array(data["re"], dtype=float)
        q = re + 1j * np.array(data.get("im", np.zeros_like(re)), dtype=float)
        ops, phases = synthesize_passive(q)
        ok, residual = verify_network(ops, phases, q)
        return {"ops": [op.to_dict() for op in ops], "phases": phases.tolist(), "match": ok, "residual": residual}
    raise InputError("synthesize expects a recipe (K_unitary) or a unitary ({re, im})")


def cmd_replay(args) -> dict:
    data = _read_json(_require(args.input, "--input"))
    if "circuit" in data and isinstance(data["circuit"], dict):
        data = data["circuit"]
    circuit = CircuitDescription.from_dict(data)
    part = ModePartition.parse(args.partition) if args.partition is not None else None
    return CovarianceMatrix(replay_circuit(circuit), part).to_dict()


def cmd_search(args) -> dict:
    data = _read_json(args.config) if args.config is not None else {}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.max_candidates is not None:
        data["max_candidates"] = args.max_candidates
    if args.workers is not None:
        data["workers"] = args.workers
    data.setdefault("epsilon", args.epsilon)
    data.setdefault("delta_feas", args.delta_feas)
    config = SearchConfig.from_dict(data)
    result = search(config)
    if args.output_dir is not None:
        write_hits(result, args.output_dir)
    return result.to_dict()


def cmd_verify_cert(args) -> dict:
    cov = _covariance(args)
    part = _partition(args, cov)
    cert_data = _read_json(_require(args.certificate, "--certificate"))
    if "Z" not in cert_data and isinstance(cert_data.get("certificate"), dict):
        cert_data = cert_data["certificate"]
    cert = InfeasibilityCertificate.from_dict(cert_data)
    check = verify_certificate(build_problem(cov, part).lmi, cert)
    return {"valid": check.valid, "slack": check.slack, "details": dict(check.details)}


COMMANDS = {
    "physical": cmd_physical,
    "ppt": cmd_ppt,
    "classify": cmd_classify,
    "construct": cmd_construct,
    "search": cmd_search,
    "synthesize": cmd_synthesize,
    "replay": cmd_replay,
    "verify-cert": cmd_verify_cert,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="write the JSON document here instead of stdout")
    common.add_argument("--partition", help="bipartition m,n (first m modes form A)")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="infeasibility threshold")
    common.add_argument("--delta-feas", type=float, default=DEFAULT_DELTA_FEAS, help="feasibility threshold")
    common.add_argument("--tol-phys", type=float, default=1e-9, help="eigenvalue slack for physicality/PPT")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-candidates", type=int)
    common.add_argument("--quiet", action="store_true", help="no diagnostics on stderr")

    parser = _Parser(prog="gaussent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaussent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "physical": "uncertainty-relation test and symplectic spectrum",
        "ppt": "partial-transpose test",
        "classify": "SEPARABLE / NPT_ENTANGLED / BOUND_ENTANGLED / MARGINAL / UNPHYSICAL",
        "construct": "covariance matrix from a recipe",
        "search": "random search for bound entangled states",
        "synthesize": "beam-splitter circuit for a recipe or unitary",
        "replay": "covariance matrix produced by a circuit",
        "verify-cert": "check an infeasibility certificate against a state",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        if name in ("construct", "synthesize"):
            p.add_argument("--recipe", help="recipe JSON (alias for --input)")
        if name == "search":
            p.add_argument("--config", help="search config JSON")
            p.add_argument("--output-dir", help="directory for hit covariance/recipe files")
            p.add_argument("--workers", type=int)
        if name == "verify-cert":
            p.add_argument("--certificate", help="certificate JSON (or a classify result)")
    return parser


def _plain(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into null."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def _emit(doc: dict, output) -> None:
    text = json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def run(argv=None) -> int:
    quiet = False
    try:
        args = build_parser().parse_args(argv)
        quiet = args.quiet
        result = COMMANDS[args.command](args)
        _emit({"tool_version": __version__, "command": args.command, "result": result}, args.output)
        return EXIT_OK
    except InputError as exc:
        code, err = EXIT_INPUT, exc
    except NumericalError as exc:
        code, err = EXIT_NUMERICAL, exc
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        code, err = EXIT_NUMERICAL, exc
    if not quiet:
        print(f"gaussent: error: {err}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
