"""Lab controller: runs one configured command and writes its report."""

import os
from typing import Any, Dict, Optional

from CGM_Engine.calculus.minkowski import rotation_generator
from CGM_Engine.exceptions import ConfigError, GeometryError, ReportError, UnsupportedHypothesisError
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import ErrorTypes, RunMessages, format_message
from CGM_Engine.services.energy_service import (
    ep_lower_bound_check,
    functional_values,
    grad_h_identity_residual,
    neck_fit,
    neck_scaling,
    reference_energies,
    scal_bar_integral_residual,
)
from CGM_Engine.services.moebius_service import composition_check, moebius_summary
from CGM_Engine.services.variational_service import HIGH_ORDER, conservation_residual
from CGM_Engine.services.verification_service import pointwise_suites
from CGM_Engine.surfaces.catalog import make_surface
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.moebius_map import MoebiusMap
from models.run_config import RunConfig
from models.surface_atlas import SurfaceAtlas
from report_manager import ReportManager

# Initialize logger
logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TOLERANCE = 2


class ConformalGaussLab:
    """Runs verify | energy | duality | invariance | neck-scan | sweep for one RunConfig."""

    def __init__(self, config: RunConfig, log_callback=None) -> None:
        self.config = config
        self.tolerances = config.tolerance_table()
        self.log_callback = log_callback
        self.report = ReportManager(
            command=config.command,
            config=config.model_dump(mode="json"),
            seed=config.seed,
            tolerances=self.tolerances,
            log_callback=log_callback,
        )
        self.handlers = {
            "verify": self.run_verify,
            "energy": self.run_energy,
            "duality": self.run_duality,
            "invariance": self.run_invariance,
            "neck-scan": self.run_neck_scan,
            "sweep": self.run_sweep,
        }

    # ========================================================================
    # ENTRY POINT
    # ========================================================================

    def run(self) -> int:
        """
        Execute the configured command, write the report and return the exit code.

        0: every residual within tolerance; 2: some residual over tolerance;
        1: validation, unsupported combination or I/O failure.
        """
        config = self.config
        logger.info(
            format_message(
                RunMessages.SUITE_STARTED,
                command=config.command,
                surface=config.surface.kind,
                level=config.level,
                order=config.order,
            )
        )
        executor = SafeThreadExecutor()
        try:
            atlas = None if config.command == "neck-scan" else make_surface(config.surface.to_spec())
            self.handlers[config.command](atlas, executor)
            self.write_report()
        except UnsupportedHypothesisError as e:
            logger.error(format_message(RunMessages.UNSUPPORTED, reason=e))
            self._notify(format_message(RunMessages.UNSUPPORTED, reason=e))
            return EXIT_ERROR
        except (ConfigError, ReportError) as e:
            logger.error(f"Controller: {e}")
            self._notify(str(e))
            return EXIT_ERROR
        except GeometryError as e:
            logger.error(f"Controller: run '{config.command}' failed: {e}", exc_info=True)
            self._notify(str(e))
            return EXIT_ERROR
        finally:
            executor.shutdown(wait=True)
            logger.debug("Controller: worker pool closed")

        logger.info(
            format_message(
                RunMessages.SUITE_FINISHED,
                command=config.command,
                passed=self.report.passed_count,
                total=len(self.report.residuals),
            )
        )
        return EXIT_OK if self.report.all_passed else EXIT_TOLERANCE

    def write_report(self) -> Optional[str]:
        output = self.config.output
        path = self.report.write(output.path, output.format)
        if self.report.fields:
            base, _ = os.path.splitext(path)
            self.report.write_fields(f"{base}_fields.csv")
        return path

    # ========================================================================
    # COMMANDS
    # ========================================================================

    def run_verify(self, atlas: SurfaceAtlas, executor: SafeThreadExecutor) -> None:
        config = self.config
        outcome = pointwise_suites(atlas, config.points, config.seed, config.order, executor)
        for name in sorted(outcome.residuals):
            self.report.add_residual(name, outcome.residuals[name])
        for name, rows in outcome.fields.items():
            self.report.add_field(name, rows)
        if config.order < HIGH_ORDER:
            logger.info(RunMessages.HIGH_ORDER_SKIPPED)
            self.report.add_result("note", RunMessages.HIGH_ORDER_SKIPPED)
        if atlas.closed:
            self._integral_identities(atlas, executor, outcome.skipped)
        self.report.add_result("skipped", outcome.skipped)
        self.report.add_result("diagnostics", outcome.diagnostics)

    def _integral_identities(self, atlas: SurfaceAtlas, executor, skipped: Dict[str, str]) -> None:
        level = self.config.level
        grad_h = grad_h_identity_residual(atlas, level, executor)
        self.report.add_result("grad_h_identity", grad_h)
        self.report.add_residual("grad_h_identity", grad_h["residual"])
        lower = ep_lower_bound_check(atlas, level, executor)
        self.report.add_result("ep_lower_bound", lower)
        self.report.add_residual("ep_lower_bound", lower["violation"])
        try:
            scal = scal_bar_integral_residual(atlas, level, executor)
            self.report.add_result("scal_bar_integral", scal)
            self.report.add_residual("scal_bar_integral", scal["residual"])
        except UnsupportedHypothesisError as e:
            skipped["scal_bar_integral"] = str(e)
            logger.info(f"scal_bar_integral skipped: {e}")
        if self.config.order >= HIGH_ORDER:
            conservation = conservation_residual(atlas, rotation_generator(0, 1), level, executor=executor)
            self.report.add_result("conservation", conservation)
            self.report.add_residual("conservation_weak", abs(conservation["weak"]), suite="conservation_flux")
            self.report.add_residual("conservation_flux", abs(conservation["flux"]))

    def _energies(self, atlas: SurfaceAtlas, executor, require_scal: bool) -> None:
        report = functional_values(atlas, self.config.level, require_scal, executor)
        self.report.add_result("energies", report.to_dict())
        for name in sorted(report.residuals):
            self.report.add_residual(name, report.residuals[name])
        for name, expected in sorted(reference_energies(atlas).items()):
            value = report.value(name)
            drift = abs(value - expected) / max(1.0, abs(expected))
            self.report.add_residual(f"reference_{name}", drift, suite="energy_reference")

    def run_energy(self, atlas: SurfaceAtlas, executor: SafeThreadExecutor) -> None:
        self._energies(atlas, executor, require_scal=False)

    def run_duality(self, atlas: SurfaceAtlas, executor: SafeThreadExecutor) -> None:
        """Both duality identities; refuses surfaces where S is undefined."""
        self._energies(atlas, executor, require_scal=True)

    def run_invariance(self, atlas: SurfaceAtlas, executor: SafeThreadExecutor) -> None:
        if self.config.moebius is None or not self.config.moebius.primitives:
            raise ConfigError(format_message(RunMessages.UNSUPPORTED, reason="invariance needs --moebius"))
        m = self.config.moebius.to_map()
        summary = moebius_summary(m, atlas, self.config.level, executor)
        if not summary["success"]:
            if summary["error_type"] == ErrorTypes.MOEBIUS:
                raise ConfigError(summary["message"])
            raise GeometryError(summary["message"])
        invariance = summary["invariance"]
        self.report.add_result("invariance", invariance)
        for name, drift in sorted(invariance["drift"].items()):
            if drift is not None:
                self.report.add_residual(f"drift_{name}", drift, suite="invariance")
        self.report.add_residual("g_bar_drift", invariance["g_bar_drift"], suite="invariance")
        equivariance = summary["equivariance"]
        if equivariance is None:
            self.report.add_result("equivariance", {"skipped": summary["message"]})
            return
        self.report.add_result("equivariance", equivariance)
        self.report.add_residual("lorentz", equivariance["lorentz_residual"])
        self.report.add_residual("equivariance_fit", equivariance["fit_residual"])
        self.report.add_residual("equivariance_analytic", equivariance["analytic_residual"], suite="lorentz")
        if len(m.primitives) > 1:
            first = MoebiusMap(m.primitives[:1])
            rest = MoebiusMap(m.primitives[1:])
            composed = composition_check(first, rest, atlas)
            self.report.add_result("composition", composed)
            self.report.add_residual("composition", composed["residual"], suite="lorentz")

    def run_neck_scan(self, atlas: Optional[SurfaceAtlas], executor: SafeThreadExecutor) -> None:
        """E_GR of [0, L]^2 x S^2 for each L and the fit against -(pi/4) L^2."""
        lengths = list(self.config.neck_lengths)
        values = [neck_scaling(L, self.config.level, executor).value for L in lengths]
        self.report.add_result("scan", {f"L={L:g}": value for L, value in zip(lengths, values)})
        if len(lengths) < 2:
            return
        fit = neck_fit(lengths, values)
        self.report.add_result("fit", fit)
        self.report.add_residual("neck_fit", fit["relative_error"])
        self.report.add_residual("neck_r_squared", 1.0 - fit["r_squared"], suite="neck_fit")

    def run_sweep(self, atlas: SurfaceAtlas, executor: SafeThreadExecutor) -> None:
        """Functional values at levels 0..level with the increments between levels."""
        table: Dict[str, Any] = {}
        previous: Dict[str, float] = {}
        report = None
        for level in range(self.config.level + 1):
            report = functional_values(atlas, level, executor=executor, estimate_error=False)
            row = {}
            for name, result in report.functionals.items():
                increment = None if name not in previous else abs(result.value - previous[name])
                row[name] = {"value": result.value, "increment": increment, "nodes": result.nodes}
                previous[name] = result.value
            table[f"level_{level}"] = row
            logger.debug(f"Sweep level {level} done")
        self.report.add_result("convergence", table)
        if report is not None and "gauss_bonnet" in report.residuals:
            self.report.add_residual("gauss_bonnet", report.residuals["gauss_bonnet"])

    # ========================================================================
    # HELPERS
    # ========================================================================

    def _notify(self, message: str) -> None:
        if self.log_callback:
            self.log_callback(message)
