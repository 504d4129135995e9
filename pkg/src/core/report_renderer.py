"""Text and CSV rendering of predictions, runs, purity and optimizer reports."""

import csv
import io
import math

from src.core.alicki_test import (
    REFERENCE_PREVIOUS_WORK,
    REFERENCE_THIS_WORK,
    FeasibilityWindow,
    Optimum,
    StateScan,
    TestPrediction,
    Verdict,
)
from src.core.experiment_sim import EstimateWithUncertainty, MeasuredPurity, RunResult
from src.core.photon_source import PurityStats, SourceDiagnosis
from src.core.qubit_core import ObservableParams, QubitState

# Minimum column width in table mode
COLUMN_MIN_WIDTH = 12
COLUMN_GAP = "  "


def _fmt_float(value: float | None, digits: int = 4) -> str:
    if value is None:
        return "undefined"
    return f"{value:.{digits}f}"


def _fmt_theory(value: float | None) -> str:
    """Closed-form values print exactly as computed (0 stays 0)."""
    if value is None:
        return "undefined"
    return f"{value:.6g}"


def _fmt_estimate(estimate: EstimateWithUncertainty | None) -> str:
    return "undefined" if estimate is None else str(estimate)


def _fmt_sigma(value: float) -> str:
    return "n/a" if not math.isfinite(value) else f"{value:.1f} sigma"


def _fmt_window(window: FeasibilityWindow | None) -> str:
    if window is None:
        return "degenerate (r = 1, beta = 0)"
    suffix = " empty" if window.empty else ""
    return f"({window.lower:.4f}, {window.upper:.4f}){suffix}"


class ReportRenderer:
    """Renders reports as aligned text tables or as CSV rows."""

    def __init__(self, output_format: str = "table"):
        if output_format not in ("table", "csv"):
            raise ValueError(f"Unknown output format: {output_format}")
        self.output_format = output_format

    def _render(self, header: list[str], rows: list[list[str]], title: str | None = None) -> str:
        if self.output_format == "csv":
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            return buffer.getvalue()

        widths = [
            max(COLUMN_MIN_WIDTH, len(header[i]), *(len(row[i]) for row in rows))
            for i in range(len(header))
        ]
        lines = []
        if title:
            lines.append(title)
            lines.append("=" * len(title))
        lines.append(COLUMN_GAP.join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
        lines.append(COLUMN_GAP.join("-" * w for w in widths))
        for row in rows:
            lines.append(COLUMN_GAP.join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # Reports
    # ------------------------------------------------------------------

    def render_prediction(
        self,
        params: ObservableParams,
        state: QubitState,
        prediction: TestPrediction,
        window: FeasibilityWindow | None,
        verdict: Verdict,
        scan: StateScan,
    ) -> str:
        """Exact predictions for one parameter point."""
        rows = [
            ["a", _fmt_float(params.a)],
            ["b", _fmt_float(params.b)],
            ["r", _fmt_float(params.r)],
            ["beta_rad", _fmt_float(params.beta, 6)],
            ["psi_rad", _fmt_float(state.psi, 6)],
            ["<B> - <A>", _fmt_float(prediction.mean_diff)],
            ["<B^2> - <A^2>", _fmt_float(prediction.square_diff)],
            ["d_minus", _fmt_float(prediction.d_minus)],
            ["a/b", _fmt_float(params.ratio)],
            ["feasibility window", _fmt_window(window)],
            ["psi scan", f"{scan.n_violating}/{scan.n_points} violating, best psi_rad {scan.best_psi:.6f}"],
            ["verdict", verdict.value],
        ]
        return self._render(["quantity", "QM theory"], rows, title="Nonclassicality test prediction")

    def render_run(self, result: RunResult, theory: TestPrediction) -> str:
        """Simulated results beside theory and the published measurements."""
        this, prev = REFERENCE_THIS_WORK, REFERENCE_PREVIOUS_WORK
        if self.output_format == "csv":
            rows = [
                [name, repr(est.value), repr(est.std_uncertainty)]
                for name, est in (
                    ("mean_A", result.mean_A),
                    ("sq_A", result.sq_A),
                    ("mean_B", result.mean_B),
                    ("sq_B", result.sq_B),
                    ("mean_diff", result.mean_diff),
                    ("square_diff", result.square_diff),
                )
            ]
            rows.append(["significance", repr(result.significance), ""])
            return self._render(["quantity", "value", "uncertainty"], rows)

        rows = [
            [
                "<B> - <A>",
                str(result.mean_diff),
                _fmt_float(theory.mean_diff),
                str(EstimateWithUncertainty(*this.mean_diff)),
                str(EstimateWithUncertainty(*prev.mean_diff)),
            ],
            [
                "<B^2> - <A^2>",
                str(result.square_diff),
                _fmt_float(theory.square_diff),
                str(EstimateWithUncertainty(*this.square_diff)),
                str(EstimateWithUncertainty(*prev.square_diff)),
            ],
            [
                "deviation from classicality",
                _fmt_sigma(result.significance),
                "",
                _fmt_sigma(this.reported_sigma),
                _fmt_sigma(prev.reported_sigma),
            ],
        ]
        header = ["quantity", "simulated", "QM theory", f"measured ({this.label})", f"measured ({prev.label})"]
        return self._render(header, rows, title="Nonclassicality test results")

    def render_purity(
        self,
        poisson: PurityStats | None,
        ideal: PurityStats | None,
        raw: MeasuredPurity,
        subtracted: MeasuredPurity,
        diagnoses: list[SourceDiagnosis],
        poisson_label: str = "Poisson source",
        ideal_label: str = "ideal single photon",
    ) -> str:
        """Theory columns next to the measured (raw and subtracted) columns."""

        def theory(stats: PurityStats | None, name: str) -> str:
            return "undefined" if stats is None else _fmt_theory(getattr(stats, name))

        names = [
            ("theta(0)", "theta0"),
            ("theta(1)", "theta1"),
            ("theta(2)", "theta2"),
            ("gamma1", "gamma1"),
            ("gamma2", "gamma2"),
            ("gamma2/gamma1", "ratio"),
        ]
        if self.output_format == "csv":
            rows = []
            for label, name in names:
                for column, estimate in (("raw", getattr(raw, name)), ("subtracted", getattr(subtracted, name))):
                    value = "" if estimate is None else repr(estimate.value)
                    uncertainty = "" if estimate is None else repr(estimate.std_uncertainty)
                    rows.append([f"{name}_{column}", value, uncertainty])
                rows.append([f"{name}_poisson", theory(poisson, name), ""])
                rows.append([f"{name}_ideal", theory(ideal, name), ""])
            return self._render(["quantity", "value", "uncertainty"], rows)

        rows = [
            [
                label,
                theory(poisson, name),
                theory(ideal, name),
                _fmt_estimate(getattr(raw, name)),
                _fmt_estimate(getattr(subtracted, name)),
            ]
            for label, name in names
        ]
        header = ["parameter", poisson_label, ideal_label, "without background subtracted", "background subtracted"]
        report = self._render(header, rows, title="Photon source parameters")
        for diagnosis in diagnoses:
            report += (
                f"{diagnosis.label}: gamma2/gamma1 = {diagnosis.ratio:.4f} "
                f"(Poisson 0.25, ideal 0), inferred mu*tau = {diagnosis.mu_tau:.5f}, "
                f"dominance = {diagnosis.dominance:.3f} -> {diagnosis.verdict.value}\n"
            )
        return report

    def render_optimum(self, optimum: Optimum, window: FeasibilityWindow | None, verdict: Verdict) -> str:
        params, state, prediction = optimum
        rows = [
            ["a", _fmt_float(params.a, 6)],
            ["b", _fmt_float(params.b, 6)],
            ["r", _fmt_float(params.r, 6)],
            ["beta_rad", _fmt_float(params.beta, 6)],
            ["beta_deg", _fmt_float(math.degrees(params.beta), 3)],
            ["psi_rad", _fmt_float(state.psi, 6)],
            ["psi_deg", _fmt_float(math.degrees(state.psi), 3)],
            ["<B> - <A>", _fmt_float(prediction.mean_diff, 6)],
            ["<B^2> - <A^2>", _fmt_float(prediction.square_diff, 6)],
            ["d_minus", _fmt_float(prediction.d_minus, 6)],
            ["a/b", _fmt_float(params.ratio, 6)],
            ["feasibility window", _fmt_window(window)],
            ["verdict", verdict.value],
        ]
        return self._render(["quantity", "optimum"], rows, title="Maximal violation search")
