"""Command handlers. Each returns an exit status: 0 pass, 1 a check failed, 2 bad input."""
import logging
import sys
from typing import Optional

from pydantic import ValidationError

from app.cli import output
from app.core.config import settings
from app.core.exceptions import IdentityError, InputFormatError, NotHomogeneousError, PolyballError
from app.models.constructions import Construction
from app.models.invariants import CheckReport
from app.schemas.files import RunConfig
from app.services import construction_service, polyball_service, subspace_service, suite_service
from app.services.invariant_service import (
    CoinvariantSource,
    InvariantService,
    InvariantSource,
    RestrictionSource,
    TupleSource,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _q_max(config: RunConfig, k: int) -> tuple[int, ...]:
    q = config.q_max or [settings.DEFAULT_QMAX]
    if len(q) == 1:
        q = q * k
    if len(q) != k:
        raise InputFormatError(f"--qmax has {len(q)} entries for {k} factors")
    return tuple(q)


def _source(config: RunConfig) -> tuple[InvariantSource, Optional[Construction]]:
    given = [x for x in (config.tuple_path, config.subspace_path, config.construction) if x is not None]
    if len(given) != 1:
        raise InputFormatError("give exactly one of --tuple, --subspace, --construct")
    if config.tuple_path:
        T, grading = polyball_service.load_tuple(config.tuple_path)
        return TupleSource(T, grading), None
    if config.construction is not None:
        construction = construction_service.build(config.construction)
        return CoinvariantSource(construction.subspace), construction
    M = subspace_service.load_subspace(config.subspace_path)
    if config.source == "restriction":
        return RestrictionSource(M), None
    return CoinvariantSource(M), None


def _numeric(config: RunConfig) -> int:
    """Non-homogeneous generators: approximate trace at growing inner cutoffs."""
    shape, r, gens = subspace_service.load_generators(config.subspace_path)
    q = _q_max(config, shape.k)
    cutoff = tuple(config.inner_cutoff)
    if len(cutoff) == 1:
        cutoff = cutoff * shape.k
    report = subspace_service.numeric_mode_trace(gens, q, cutoff, shape, r)
    output.emit(report, "json", config.out_dir, "numeric")
    return EXIT_OK


def sequence_command(config: RunConfig) -> int:
    try:
        src, construction = _source(config)
    except NotHomogeneousError:
        if config.inner_cutoff is None or not config.subspace_path:
            raise
        logger.warning("non-homogeneous generators; falling back to numeric mode")
        return _numeric(config)
    with InvariantService(config.workers) as service:
        if config.command == "chi":
            sequence = service.chi_sequence(src, _q_max(config, src.shape.k), construction, config.chain)
        elif config.command == "curv":
            sequence = service.curv_sequence(src, _q_max(config, src.shape.k), construction)
        else:
            sequence = service.curv_simplex_sequence(src, _q_max(config, 1)[0])
    output.emit(sequence, config.output_format, config.out_dir, config.command)
    return EXIT_OK


def _finish(reports: list[CheckReport], config: RunConfig, name: str, summary: str) -> int:
    passed = all(r.passed for r in reports)
    if len(reports) == 1:
        output.emit(reports[0], config.output_format, config.out_dir, name)
    else:
        output.emit_checks(reports, config.output_format, config.out_dir, name)
    sys.stderr.write(f"{summary}: {'pass' if passed else 'FAIL'}\n")
    if not passed:
        output.emit_failures(reports)
        return EXIT_FAILED
    return EXIT_OK


def gbc_command(config: RunConfig) -> int:
    src, _ = _source(config)
    with InvariantService(config.workers) as service:
        report = service.gbc_check(src, _q_max(config, src.shape.k))
    return _finish([report], config, "gbc", "trace=rank at all q")


def verify_command(config: RunConfig) -> int:
    """Exact identities for a tuple, or invariance and Beurling checks for a subspace."""
    reports = []
    with InvariantService(config.workers) as service:
        if config.tuple_path:
            T, grading = polyball_service.load_tuple(config.tuple_path)
            polyball_service.require_membership(T)
            q = _q_max(config, T.shape.k)
            reports += [
                polyball_service.kpk_check(T, q),
                polyball_service.telescoping_check(T, q),
                polyball_service.range_identity_check(T, q),
                polyball_service.psd_chain_check(T, q),
                service.concordance_check(T, q),
                service.inequality_check(TupleSource(T, cross_check=False), q),
            ]
            if grading is not None:
                reports.append(polyball_service.grading_commutation_check(T, grading))
        elif config.subspace_path:
            M = subspace_service.load_subspace(config.subspace_path)
            q = _q_max(config, M.shape.k)
            reports.append(subspace_service.check_invariance(M, q))
            if M.kind == "generated" and M.generators:
                reports.append(subspace_service.beurling_verify(list(M.generators), q))
        elif config.construction is not None:
            construction = construction_service.build(config.construction)
            q = _q_max(config, construction.subspace.shape.k)
            for spec in construction.expansions:
                reports.append(construction_service.suffix_free_check(construction_service.build_Ji(spec)))
            reports.append(service.construction_check(construction, q))
            reports.append(service.coinvariant_tensor_check(construction.subspace, q))
        else:
            raise InputFormatError("verify-identities needs --tuple, --subspace or --construct")
    return _finish(reports, config, "verify-identities", "identities")


def construct_command(config: RunConfig) -> int:
    if config.construction is None:
        raise InputFormatError("construct needs --construct t=...")
    construction = construction_service.build(config.construction)
    q = _q_max(config, 1)[0]
    output.emit(construction_service.report(construction, q), config.output_format, config.out_dir, "construct")
    return EXIT_OK


def suite_command(config: RunConfig) -> int:
    report = suite_service.run_suites(config.suites or None, config.seed, config.size, config.workers)
    output.emit(report, config.output_format, config.out_dir, "suite")
    for r in report.reports:
        sys.stderr.write(f"{r.check}: {'pass' if r.passed else 'FAIL'}\n")
    if not report.passed:
        output.emit_failures(report.reports)
        return EXIT_FAILED
    return EXIT_OK


HANDLERS = {
    "chi": sequence_command,
    "curv": sequence_command,
    "curv-simplex": sequence_command,
    "gbc-check": gbc_command,
    "verify-identities": verify_command,
    "construct": construct_command,
    "suite": suite_command,
}


def run(config: RunConfig) -> int:
    """Dispatch one command; library errors become exit codes and JSON on stderr."""
    try:
        return HANDLERS[config.command](config)
    except IdentityError as e:
        output.emit_error(e)
        return EXIT_FAILED
    except (PolyballError, ValidationError, OSError) as e:
        output.emit_error(e)
        return EXIT_INPUT
