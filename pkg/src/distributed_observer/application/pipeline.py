"""
Observer pipeline – orchestrates decompose → design gains → error model → certificates → choose q,
then simulate and verify on top of a synthesis.
Depends only on port interfaces for swappable stages (placement, q selection, I/O).
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from distributed_observer.adapters.placement import placement_adapter
from distributed_observer.adapters.q_selection import q_selector
from distributed_observer.adapters.scenario import schedule_to_document
from distributed_observer.application.verification import (
    all_passed,
    certificate_suite,
    decay_rows,
    failures,
    oracle_rows,
)
from distributed_observer.config import RATE_SLACK
from distributed_observer.core.observer_design import build_error_model, transition_product
from distributed_observer.core.plant import decompose_all, joint_observability, plant_to_document
from distributed_observer.core.random_scenarios import RandomCase, random_cases
from distributed_observer.core.simulator import SimScenario, estimate_rate, fit_rate_constant, run
from distributed_observer.domain.models import (
    AgentGain,
    CertificateRow,
    ErrorModel,
    ObservabilityDecomposition,
    QSelection,
    ScenarioConfig,
    SimTrace,
)
from distributed_observer.errors import CertificateError, InvalidInputError
from distributed_observer.ports.interfaces import (
    IQSelector,
    IReportWriter,
    IScenarioSource,
    ISpectrumAssigner,
    ITraceWriter,
)

logger = logging.getLogger(__name__)

DECAY_HORIZON = 5


@dataclass
class SynthesisResult:
    config: ScenarioConfig
    decomps: List[ObservabilityDecomposition]
    gains: List[AgentGain]
    model: Optional[ErrorModel] = None
    selection: Optional[QSelection] = None
    rows: List[CertificateRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all_passed(self.rows)


@dataclass
class SimulationResult:
    synthesis: SynthesisResult
    trace: SimTrace
    summary: Dict[str, Any]
    trace_path: Optional[str] = None


class ObserverPipeline:
    """
    Orchestrates synthesis, certification and simulation of the distributed observer.
    All swappable stages are injected (ports).
    """

    def __init__(
        self,
        *,
        spectrum_assigner: ISpectrumAssigner,
        scenario_source: IScenarioSource,
        trace_writer: ITraceWriter,
        report_writer: IReportWriter,
        q_selector: Optional[IQSelector] = None,
    ):
        self._placement = spectrum_assigner
        self._scenarios = scenario_source
        self._traces = trace_writer
        self._reports = report_writer
        self._q_selector = q_selector

    def load(self, path: str, **overrides) -> ScenarioConfig:
        return self._scenarios.load(path, overrides)

    def _selector(self, config: ScenarioConfig) -> IQSelector:
        return self._q_selector or q_selector(config.q_method, config.q)

    # --- synthesis ---------------------------------------------------------------

    def synthesize(self, config: ScenarioConfig, gains_path: Optional[str] = None, strict: bool = True) -> SynthesisResult:
        """Run every synthesis stage. With strict=True any failed certificate raises CertificateError."""
        logger.info("=" * 60)
        logger.info("Synthesizing distributed observer for '%s' (m=%d, n=%d, lambda=%g)",
                    config.name, config.plant.m, config.plant.n, config.lam)
        logger.info("=" * 60)

        logger.info("[1/5] Checking joint observability...")
        if not joint_observability(config.plant):
            raise InvalidInputError("joint observability violated", label="joint observability")

        logger.info("[2/5] Decomposing per-agent unobservable spaces...")
        decomps = decompose_all(config.plant)
        for d in decomps:
            logger.info("  agent %d: n_i=%d", d.agent + 1, d.n_i)

        if gains_path:
            logger.info("[3/5] Loading gains from %s...", gains_path)
            gains = self._scenarios.load_gains(gains_path, config.plant, decomps)
        else:
            logger.info("[3/5] Placing quotient spectra (%s)...", config.placement)
            gains = self._assigner(config).design(config.plant, decomps, config.lam, seed=config.seed)
        result = SynthesisResult(config=config, decomps=decomps, gains=gains)

        result.rows = certificate_suite(config.plant, decomps, gains, config.schedule, config.lam)
        if not result.passed:
            logger.warning("⚠️  Gain certificates failed; skipping error model")
            return self._finish(result, strict)

        logger.info("[4/5] Building stacked error model...")
        result.model = build_error_model(config.plant, decomps, gains, config.schedule)
        logger.info("  n_bar=%d over %d declared graph(s)", result.model.n_bar, len(config.schedule.graphs))

        logger.info("[5/5] Choosing consensus rounds q (%s)...", config.q_method)
        result.selection = self._selector(config).select(result.model, config.schedule, config.lam)
        sel = result.selection
        logger.info("  q=%d (p=%d, p_bar=%d), certified bound %.6f", sel.q, sel.p, sel.p_bar, sel.certified_bound)
        for row in sel.per_graph:
            logger.debug("  %s", row)

        result.rows = certificate_suite(
            config.plant, decomps, gains, config.schedule, config.lam, model=result.model, selection=sel
        )
        return self._finish(result, strict)

    def _assigner(self, config: ScenarioConfig) -> ISpectrumAssigner:
        if self._placement.name == config.placement:
            return self._placement
        return placement_adapter(config.placement)

    def _finish(self, result: SynthesisResult, strict: bool) -> SynthesisResult:
        failed = failures(result.rows)
        if not failed:
            logger.info("✅ All %d certificates passed", len(result.rows))
            return result
        for row in failed:
            logger.warning("❌ %s [%s]: %s", row["check"], row["label"], row.get("detail", ""))
        if strict:
            first = failed[0]
            raise CertificateError(f"{len(failed)} certificate(s) failed, first: {first['check']}",
                                   label=first["label"], value=first.get("value"))
        return result

    def write_synthesis(self, result: SynthesisResult, out_dir: Optional[str] = None) -> Dict[str, str]:
        config = result.config
        out = Path(out_dir or config.output_dir)
        artifact = {
            "schema_version": 1,
            "name": config.name,
            "lambda": config.lam,
            "plant": plant_to_document(config.plant),
            "network": schedule_to_document(config.schedule),
            "decompositions": [
                {"agent": d.agent + 1, "n_i": d.n_i, "V": d.V, "V_shape": list(d.V.shape), "Q": d.Q,
                 "Q_shape": list(d.Q.shape), "A_bar": d.A_bar, "C_bar": d.C_bar}
                for d in result.decomps
            ],
            "gains": [
                {"agent": g.agent + 1, "K_bar": g.K_bar, "K_bar_shape": list(g.K_bar.shape), "K": g.K,
                 "K_shape": list(g.K.shape), "A_restr": g.A_restr, "A_restr_shape": list(g.A_restr.shape)}
                for g in result.gains
            ],
            "q_selection": _selection_record(result.selection),
        }
        paths = {
            "synthesis": self._reports.write(artifact, str(out / f"{config.name}_synthesis.json")),
            "certificates": self._reports.write(self.certificate_report(result),
                                                str(out / f"{config.name}_certificates.json")),
        }
        logger.info("Artifacts written to %s", out)
        return paths

    def certificate_report(self, result: SynthesisResult) -> Dict[str, Any]:
        return {
            "name": result.config.name,
            "lambda": result.config.lam,
            "passed": result.passed,
            "q_selection": _selection_record(result.selection),
            "checks": list(result.rows),
        }

    # --- simulation ----------------------------------------------------------------

    def simulate(self, config: ScenarioConfig, gains_path: Optional[str] = None,
                 out_dir: Optional[str] = None) -> SimulationResult:
        synthesis = self.synthesize(config, gains_path)
        sel = synthesis.selection
        logger.info("Simulating %d events with q=%d...", config.tau_max, sel.q)
        trace = run(SimScenario(
            plant=config.plant,
            schedule=config.schedule,
            gains=synthesis.gains,
            projections=[d.P for d in synthesis.decomps],
            q=sel.q,
            tau_max=config.tau_max,
            x0=config.x0,
            x_hat0=config.x_hat0,
            seed=config.seed,
            record_rounds=config.verbose,
        ))

        window = None
        rate = None
        if config.tau_max >= 2:
            window = (max(1, config.tau_max // 2), config.tau_max)
            rate = estimate_rate(trace, window)
        met = sel.certified_bound <= config.lam and (rate is None or rate <= config.lam + RATE_SLACK)
        summary = {
            "name": config.name,
            "lambda": config.lam,
            "q": sel.q,
            "q_method": sel.method,
            "certified_bound": sel.certified_bound,
            "tau_max": config.tau_max,
            "rate_window": list(window) if window else None,
            "measured_rate": rate,
            "rate_target_met": met,
            "initial_error_norm": trace.total_error_norms[0],
            "final_error_norm": trace.total_error_norms[-1],
        }
        if met:
            logger.info("✅ Measured rate %s (lambda=%g)", "n/a" if rate is None else f"{rate:.4f}", config.lam)
        else:
            logger.warning("⚠️  Rate target not met: measured %s, certified bound %.4f, lambda=%g",
                           "n/a" if rate is None else f"{rate:.4f}", sel.certified_bound, config.lam)

        out = Path(out_dir or config.output_dir)
        trace_path = self._traces.write(trace, str(out / f"{config.name}_trace.csv"), include_states=config.verbose)
        if config.verbose:
            summary["round_trace"] = self._traces.write_rounds(trace, str(out / f"{config.name}_rounds.csv"))
        summary["trace"] = trace_path
        self._reports.write(summary, str(out / f"{config.name}_summary.json"))
        return SimulationResult(synthesis=synthesis, trace=trace, summary=summary, trace_path=trace_path)

    # --- verification -----------------------------------------------------------------

    def verify(
        self, config: ScenarioConfig, gains_path: Optional[str] = None, tau_max: Optional[int] = None
    ) -> List[CertificateRow]:
        """Certificate suite for one scenario, plus oracle equivalence of a simulation when synthesis passes."""
        result = self.synthesize(config, gains_path, strict=False)
        rows = list(result.rows)
        if result.passed and result.selection is not None:
            rows += self._simulation_rows(result, config.tau_max if tau_max is None else tau_max)
        return rows

    def verify_random(self, count: int = 20, seed: int = 0, tau_max: int = 50) -> List[CertificateRow]:
        """Randomized suite: both q methods on every case, with oracle and decay checks."""
        rows: List[CertificateRow] = []
        cases = random_cases(count, seed)
        for k, case in enumerate(cases, 1):
            logger.info("[%d/%d] %s (m=%d, n=%d, lambda=%g)", k, len(cases), case.name, case.plant.m,
                        case.plant.n, case.lam)
            for method in ("weighted", "mixed"):
                config = _case_config(case, method, tau_max)
                result = self.synthesize(config, strict=False)
                case_rows = list(result.rows)
                if result.passed and result.selection is not None:
                    case_rows += self._simulation_rows(result, tau_max)
                for row in case_rows:
                    row["detail"] = f"{case.name}/{method} {row.get('detail', '')}".strip()
                rows += case_rows
        return rows

    def _simulation_rows(self, result: SynthesisResult, tau_max: int) -> List[CertificateRow]:
        config = result.config
        trace = run(SimScenario(
            plant=config.plant,
            schedule=config.schedule,
            gains=result.gains,
            projections=[d.P for d in result.decomps],
            q=result.selection.q,
            tau_max=tau_max,
            seed=config.seed,
        ))
        phis = transition_product(result.model, config.schedule, result.selection.q, tau_max)
        rows = oracle_rows(trace, phis)
        if result.selection.method != "explicit":
            constant = fit_rate_constant(trace, config.lam, horizon=DECAY_HORIZON)
            rows += decay_rows(trace, config.lam, constant)
        return rows


def _selection_record(sel: Optional[QSelection]) -> Optional[Dict[str, Any]]:
    if sel is None:
        return None
    return {
        "q": sel.q,
        "method": sel.method,
        "p": sel.p,
        "p_bar": sel.p_bar,
        "certified_bound": sel.certified_bound,
        "p_min_observed": sel.p_min_observed,
        "per_graph": list(sel.per_graph),
    }


def _case_config(case: RandomCase, method: str, tau_max: int) -> ScenarioConfig:
    return ScenarioConfig(
        name=case.name,
        plant=case.plant,
        schedule=case.schedule,
        lam=case.lam,
        q_method=method,
        tau_max=tau_max,
        seed=case.seed,
    )
