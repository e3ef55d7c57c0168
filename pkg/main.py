import argparse
import logging
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from config.run_config import (COMMANDS, OUTPUT_FORMATS, RunConfig, build_run_config, format_complex,
                               load_config_file, parse_complex, parse_radii)
from config.settings import DEDUP_TOLERANCE, HOCHSCHILD_DEPTH, HOCHSCHILD_TOLERANCE, MAX_WORKERS, TOOL_VERSION
from services.axiom_service import AxiomService
from services.classify_service import ClassifyService
from services.hochschild_service import HochschildService, HochschildVerdict
from services.spectrum_service import SpectrumService, resolvent_growth_for
from services.triple_service import (DiracCase, DiracParams, RealStructureParams, SpectralTripleBundle,
                                     build_bundle)
from utils.errors import NCTorusError
from utils.file_utils import dumps_deterministic, spectrum_csv_text, spin_filename, write_csv, write_json
from utils.lattice import SpinStructure, Truncation
from utils.opalg import PhaseAngle

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=getattr(logging, os.environ.get("LOG_LEVEL", "INFO")),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARAMETER_ERROR = 2

CommandResult = Tuple[int, Dict[str, Any]]


def _lam(config: RunConfig) -> PhaseAngle:
    return PhaseAngle(config.lambda_turns)


def _rparams(config: RunConfig) -> RealStructureParams:
    return RealStructureParams(config.phi, config.psi, config.theta)


def _dparams(config: RunConfig) -> DiracParams:
    return DiracParams(config.tau1, config.tau2, config.tau0, config.eps_const)


def _bundles(config: RunConfig) -> List[SpectralTripleBundle]:
    return [build_bundle(Truncation(config.n_max, spin), _lam(config), _rparams(config), _dparams(config))
            for spin in config.spins]


def _payload(config: RunConfig) -> Dict[str, Any]:
    return {"tool_version": TOOL_VERSION, "config_echo": config.echo(), "checks": []}


def _check(name: str, residual: float, tolerance: float, mask_depth: int) -> Dict[str, Any]:
    return {"name": name, "residual": float(residual), "tolerance": tolerance,
            "pass": bool(residual <= tolerance), "mask_depth": mask_depth}


def _exit_code(payload: Dict[str, Any]) -> int:
    return EXIT_OK if all(check["pass"] for check in payload["checks"]) else EXIT_CHECK_FAILED


def cmd_verify(config: RunConfig) -> CommandResult:
    payload = _payload(config)
    reports = AxiomService(config.tolerance, config.depth).verify(_bundles(config))
    prefix = len(reports) > 1
    notes: List[str] = []
    for spin, report in zip(config.spins, reports):
        for check in report.checks:
            record = check.to_dict()
            if prefix:
                record["name"] = f"{spin.label}:{record['name']}"
            payload["checks"].append(record)
        notes.extend(f"({spin.label}) {note}" if prefix else note for note in report.notes)
    if notes:
        payload["notes"] = notes
    write_json(payload, config.out, "verify_report.json")
    return _exit_code(payload), payload


def cmd_spectrum(config: RunConfig) -> CommandResult:
    payload = _payload(config)
    bundles = _bundles(config)
    service = SpectrumService()

    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        results = list(executor.map(service.spectrum, bundles))

    summary = []
    for bundle, (table, deviation) in zip(bundles, results):
        label = bundle.spin.label
        write_csv(table.entries, config.out, spin_filename("spectrum", label, "csv"))
        payload["checks"].append(_check(f"{label}:oracle_agreement", deviation, DEDUP_TOLERANCE, 0))
        payload["checks"].append(_check(f"{label}:spectral_symmetry", 0.0 if table.is_symmetric() else 1.0,
                                        0.0, 0))
        summary.append({
            "spin": label,
            "n_max": table.n_max,
            "dim": table.dim,
            "kernel_dimension": table.kernel_dimension,
            "distinct_abs_eigenvalues": table.distinct_abs(10),
        })
    payload["tables"] = {"spectra": summary}

    if config.hochschild:
        verdicts = {}
        for bundle, report in zip(bundles, HochschildService().evaluate(bundles)):
            payload["checks"].append(_check(f"{bundle.spin.label}:{report.check_name}", report.residual,
                                            report.tolerance, report.mask_depth))
            verdicts[bundle.spin.label] = report.verdict.value
        payload["verdicts"] = {"hochschild": verdicts}

    write_json(payload, config.out, "spectrum_summary.json")
    payload["_csv"] = {bundle.spin.label: spectrum_csv_text(table.entries)
                       for bundle, (table, _) in zip(bundles, results)}
    return _exit_code(payload), payload


def cmd_classify(config: RunConfig) -> CommandResult:
    payload = _payload(config)
    lam = _lam(config)
    service = ClassifyService(config.k_window)
    verdicts = service.classify(lam, SpinStructure.all())
    matrix = verdicts.matrix()
    labels = [spin.label for spin in verdicts.spins]

    certificates = []
    for (i, j), certificate in sorted(verdicts.certificates.items()):
        certificates.append({
            "source": labels[i],
            "target": labels[j],
            "equivalent": certificate.equivalent,
            "admissible_shifts": [list(shift) for shift in certificate.admissible.shifts],
            "shift": list(certificate.shift) if certificate.shift else None,
            "identity_sign": certificate.identity_sign,
            "intertwining_residual": certificate.intertwining_residual,
            "algebra_residual": certificate.algebra_residual,
        })

    size = len(labels)
    relation_defects = sum(
        1 for i in range(size) for j in range(size)
        if matrix[i][j] != matrix[j][i] or (i == j and not matrix[i][i])
        or any(matrix[i][k] and matrix[k][j] and not matrix[i][j] for k in range(size)))
    payload["checks"].append(_check("equivalence_relation", float(relation_defects), 0.0, 0))
    payload["verdicts"] = {"spins": labels, "matrix": matrix, "certificates": certificates}

    notes = list(verdicts.warnings)
    if config.counterexample:
        report = service.counterexample(lam)
        payload["checks"].append(_check("counterexample_intertwining", report.intertwining_residual,
                                        config.tolerance, report.mask_depth))
        payload["checks"].append(_check("counterexample_unitarity", report.unitarity_residual,
                                        config.tolerance, report.mask_depth))
        payload["tables"] = {"counterexample": {
            "intertwining_residual": report.intertwining_residual,
            "grading_commutator": report.grading_commutator,
            "grading_anticommutator": report.grading_anticommutator,
            "commutator_u": report.commutator_u,
            "commutator_v": report.commutator_v,
        }}
        notes.append("counterexample W intertwines J(0,0) with J(0,1/2) but violates the grading "
                     "and algebra conditions")
    if notes:
        payload["notes"] = notes
    write_json(payload, config.out, "classify_report.json")
    return _exit_code(payload), payload


def cmd_hochschild(config: RunConfig) -> CommandResult:
    payload = _payload(config)
    depth = HOCHSCHILD_DEPTH if config.depth is None else config.depth
    verdicts = {}
    scans = {}
    notes = []
    bundles = _bundles(config)
    for bundle, report in zip(bundles, HochschildService(HOCHSCHILD_TOLERANCE, depth).evaluate(bundles)):
        label = bundle.spin.label
        payload["checks"].append(_check(f"{label}:{report.check_name}", report.residual,
                                        report.tolerance, report.mask_depth))
        verdicts[label] = report.verdict.value
        if report.scan:
            scans[label] = [{
                "a0": s.a0, "a1": s.a1, "a2": s.a2,
                "multi_degree": list(s.multi_degree),
                "C": format_complex(s.constant),
                "C_left": format_complex(s.constant_left),
                "C_right": format_complex(s.constant_right),
                "fit_residual": s.fit_residual,
                "identity_component": format_complex(s.identity_component),
            } for s in report.scan]
        notes.extend(f"({label}) {note}" for note in report.notes)
    payload["verdicts"] = {"hochschild": verdicts}
    if scans:
        payload["tables"] = {"commutator_scan": scans}
    if notes:
        payload["notes"] = notes
    write_json(payload, config.out, "hochschild_report.json")
    code = _exit_code(payload)
    if any(v == HochschildVerdict.FAILED.value for v in verdicts.values()):
        code = EXIT_CHECK_FAILED
    return code, payload


def cmd_resolvent(config: RunConfig) -> CommandResult:
    payload = _payload(config)
    rparams = _rparams(config)
    dparams = _dparams(config)
    dparams.validate(rparams)
    verdicts = {}
    tables = {}
    for spin in config.spins:
        report = resolvent_growth_for(spin, dparams, rparams, config.radii)
        verdicts[spin.label] = report.verdict.value
        tables[spin.label] = report.table()
    payload["verdicts"] = {"resolvent": verdicts}
    payload["tables"] = {"counting_function": tables}
    if DiracCase.from_angles(rparams.phi, rparams.psi) is not DiracCase.LINEAR:
        payload["notes"] = ["growth verdicts are trends over the listed windows, not a proof of compact resolvent"]
    write_json(payload, config.out, "resolvent_report.json")
    return _exit_code(payload), payload


COMMAND_HANDLERS = {
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "classify": cmd_classify,
    "hochschild": cmd_hochschild,
    "resolvent": cmd_resolvent,
}


def print_summary(command: str, code: int, payload: Dict[str, Any]):
    print("\n" + "="*60)
    print(f"{command.upper()} SUMMARY")
    print("="*60)
    checks = payload["checks"]
    print(f"Checks passed: {sum(1 for c in checks if c['pass'])}/{len(checks)}")
    for check in checks:
        status = "ok" if check["pass"] else "FAIL"
        print(f"  [{status}] {check['name']}: {check['residual']:.3e} (depth {check['mask_depth']})")
    for name, value in payload.get("verdicts", {}).items():
        if name == "matrix":
            print("\nVerdict matrix:")
            for row in value:
                print("  " + " ".join("T" if cell else "F" for cell in row))
        elif name in ("hochschild", "resolvent"):
            for label, verdict in value.items():
                print(f"{name} ({label}): {verdict}")
    counterexample = payload.get("tables", {}).get("counterexample")
    if counterexample:
        print("\nCounterexample W:")
        print(f"  W* J W - J':   {counterexample['intertwining_residual']:.3e}")
        print(f"  W g - g W:     {counterexample['grading_commutator']:.3e}")
        print(f"  [W, pi(U)]:    {counterexample['commutator_u']:.3e}")
        print(f"  [W, pi(V)]:    {counterexample['commutator_v']:.3e}")
    for note in payload.get("notes", []):
        print(f"Note: {note}")
    print(f"Exit code: {code}")
    print("="*60)


def emit(command: str, code: int, payload: Dict[str, Any], output_format: str):
    csv_tables = payload.pop("_csv", None)
    if output_format == "csv" and csv_tables:
        for label, text in csv_tables.items():
            if len(csv_tables) > 1:
                print(f"# spin {label}")
            sys.stdout.write(text)
    elif output_format == "text":
        print_summary(command, code, payload)
    else:
        sys.stdout.write(dumps_deterministic(payload))


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='Flat key=value config file; flags override it')
    parser.add_argument('--n-max', type=int, help='Lattice window half-width (default 6)')
    parser.add_argument('--spin', action='append', help="Spin structure such as '0,0' or '1/2,0'; repeatable")
    parser.add_argument('--all-spins', action='store_true', help='Use all four spin structures')
    parser.add_argument('--lambda-turns', '--lambda', dest='lambda_turns', type=float,
                        help='Deformation angle in turns (default (sqrt5-1)/2)')
    parser.add_argument('--phi', type=float)
    parser.add_argument('--psi', type=float)
    parser.add_argument('--theta', type=float)
    parser.add_argument('--tau1', type=parse_complex)
    parser.add_argument('--tau2', type=parse_complex)
    parser.add_argument('--tau0', type=parse_complex)
    parser.add_argument('--eps-const', type=parse_complex)
    parser.add_argument('--tolerance', type=float)
    parser.add_argument('--depth', type=int, help='Override the base mask depth of masked checks')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--format', dest='output_format', choices=OUTPUT_FORMATS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Equivariant spectral triples on the noncommutative torus')
    subparsers = parser.add_subparsers(dest='command', required=True)
    commands = {name: subparsers.add_parser(name) for name in COMMANDS}
    for sub in commands.values():
        _add_common_flags(sub)
    commands['spectrum'].add_argument('--hochschild', action='store_true', default=None,
                                      help='Also evaluate the Hochschild cycle')
    commands['classify'].add_argument('--counterexample', action='store_true', default=None,
                                      help='Also evaluate the unconstrained counterexample W')
    commands['classify'].add_argument('--k-window', type=int, help='Shift search window K (default 3)')
    commands['resolvent'].add_argument('--radii', help='Comma-separated radii (default 1.0,1.5,2.0)')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flags = {key: value for key, value in vars(args).items()
             if key not in ('config', 'spin', 'all_spins', 'radii')}
    if args.all_spins:
        flags['spins'] = tuple(SpinStructure.all())
    elif args.spin:
        flags['spins'] = tuple(SpinStructure.parse(text) for text in args.spin)
    if getattr(args, 'radii', None):
        flags['radii'] = parse_radii(args.radii)
    return build_run_config(file_values, flags)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        logger.info(f"Running {config.command} (n_max={config.n_max}, "
                    f"spins={[spin.label for spin in config.spins]})")
        code, payload = COMMAND_HANDLERS[config.command](config)
    except NCTorusError as e:
        logger.error(f"{args.command} refused: {e}")
        logger.debug(traceback.format_exc())
        print(f"\nError: {e}", file=sys.stderr)
        return EXIT_PARAMETER_ERROR
    emit(config.command, code, payload, config.output_format)
    logger.info(f"{config.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
