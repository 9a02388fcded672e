"""Command-line front end."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from psiotdr import __version__
from psiotdr.config import ensure_directories, settings
from psiotdr.errors import EXIT_OK, EXIT_UNEXPECTED, ConfigurationError, Diagnostic, PsiOtdrError
from psiotdr.logging_config import setup_logging
from psiotdr.models.scenario_schema import scenario_hash
from psiotdr.monitoring import start_monitoring
from psiotdr.services.analysis_service import TraceAnalyzer, accuracy_experiment
from psiotdr.services.export_service import (
    atomic_write_text,
    plot_trace,
    read_histogram,
    report_to_json,
    write_histogram,
    write_report,
    write_trace,
)
from psiotdr.services.preset_service import get_preset, list_presets
from psiotdr.services.scenario_service import (
    air_regions,
    derived_quantities,
    display_context,
    dump_scenario,
    load_scenario,
    simulate_scenario,
    validate_scenario,
)

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports bad flags as configuration errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigurationError(Diagnostic("arguments", message))


def parse_window(text: str) -> Tuple[float, float]:
    """Parse an ``a,b`` distance window in metres."""
    parts = text.split(",")
    try:
        start, end = (float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(Diagnostic("window", f"expected 'start,end' in metres, got {text!r}"))
    if end <= start:
        raise ConfigurationError(Diagnostic("window", f"window end must exceed its start, got {text!r}"))
    return start, end


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psiotdr", description="Photon-counting OTDR simulator and trace analyzer")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--metrics-port", type=int, default=None, help="expose prometheus metrics on this port")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run the Monte Carlo for a scenario")
    simulate.add_argument("scenario", type=Path)
    simulate.add_argument("--out", type=Path, required=True, help="histogram CSV")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--shots", type=int, default=None)
    simulate.add_argument("--threads", type=int, default=None)

    analyze = commands.add_parser("analyze", help="extract figures of merit from a histogram")
    analyze.add_argument("histogram", type=Path)
    analyze.add_argument("--out", type=Path, default=None, help="report JSON (stdout when omitted)")
    analyze.add_argument("--scenario", type=Path, default=None)
    analyze.add_argument("--fit-window", type=parse_window, default=None)
    analyze.add_argument("--beat-window", type=parse_window, default=None)
    analyze.add_argument("--noise-start", type=float, default=None)
    analyze.add_argument("--min-prominence", type=float, default=None)

    trace = commands.add_parser("trace", help="export a histogram as a dB trace")
    trace.add_argument("histogram", type=Path)
    trace.add_argument("--out", type=Path, required=True, help="trace CSV")
    trace.add_argument("--plot", type=Path, default=None, help="SVG plot")
    trace.add_argument("--scenario", type=Path, default=None)

    accuracy = commands.add_parser("accuracy", help="repeat a measurement and report the distance spread")
    accuracy.add_argument("scenario", type=Path)
    accuracy.add_argument("--repeats", type=int, required=True)
    accuracy.add_argument("--seed", type=int, default=None)
    accuracy.add_argument("--threads", type=int, default=None)
    accuracy.add_argument("--out", type=Path, default=None)

    preset = commands.add_parser("preset", help="write a built-in scenario file")
    preset.add_argument("name", nargs="?", default=None)
    preset.add_argument("--out", type=Path, default=None)
    preset.add_argument("--list", action="store_true", help="list the available presets")

    validate = commands.add_parser("validate", help="check a scenario and print derived quantities")
    validate.add_argument("scenario", type=Path)
    return parser


class OtdrApp:
    """Runs one subcommand and maps failures to exit codes."""

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self.analyzer = TraceAnalyzer()

    def run(self, args: argparse.Namespace) -> int:
        handler = getattr(self, f"cmd_{args.command}")
        try:
            handler(args)
        except PsiOtdrError as e:
            logger.error(f"{args.command} failed: {e}")
            for line in self._diagnostic_lines(e):
                print(f"error: {line}", file=self.stderr)
            return e.exit_code
        except Exception as e:
            logger.exception(f"Unexpected failure in {args.command}: {e}")
            print(f"error: {e}", file=self.stderr)
            return EXIT_UNEXPECTED
        return EXIT_OK

    @staticmethod
    def _diagnostic_lines(error: PsiOtdrError) -> List[str]:
        if isinstance(error, ConfigurationError):
            return [str(d) for d in error.diagnostics]
        return [str(error)]

    def _emit(self, text: str, out: Optional[Path]) -> None:
        if out is None:
            self.stdout.write(text)
        else:
            atomic_write_text(out, text)

    def cmd_simulate(self, args: argparse.Namespace) -> None:
        scenario = load_scenario(args.scenario)
        derived_quantities(scenario)
        histogram = simulate_scenario(scenario, seed=args.seed, shots=args.shots, threads=args.threads)
        write_histogram(histogram, args.out)
        print(f"{args.out}: {histogram.shots} starts, {histogram.total} stops", file=self.stdout)

    def cmd_analyze(self, args: argparse.Namespace) -> None:
        histogram = read_histogram(args.histogram)
        scenario = load_scenario(args.scenario) if args.scenario else None
        if scenario is not None and histogram.scenario_hash and histogram.scenario_hash != scenario_hash(scenario):
            logger.warning(f"{args.histogram} was not simulated from {args.scenario}")
        report = self.analyzer.analyze(
            histogram,
            scenario=scenario,
            fit_window=args.fit_window,
            beat_window=args.beat_window,
            noise_start=args.noise_start,
            min_prominence=args.min_prominence,
        )
        if args.out is None:
            self.stdout.write(report_to_json(report))
        else:
            write_report(report, args.out)

    def cmd_trace(self, args: argparse.Namespace) -> None:
        histogram = read_histogram(args.histogram)
        scenario = load_scenario(args.scenario) if args.scenario else None
        if scenario is not None:
            trace = self.analyzer.to_trace(histogram, display_context(scenario.link), air_regions=air_regions(scenario))
        else:
            trace = self.analyzer.to_trace(histogram)
        write_trace(trace, args.out)
        if args.plot is not None:
            peaks = self.analyzer.find_peaks(trace)
            plot_trace(trace, args.plot, peaks, title=scenario.name if scenario else args.histogram.name)

    def cmd_accuracy(self, args: argparse.Namespace) -> None:
        scenario = load_scenario(args.scenario)
        result = accuracy_experiment(
            scenario, args.repeats, seed=args.seed, threads=args.threads, analyzer=self.analyzer
        )
        self._emit(json.dumps(result.to_dict(), indent=2) + "\n", args.out)

    def cmd_preset(self, args: argparse.Namespace) -> None:
        if args.list:
            for name in list_presets():
                print(name, file=self.stdout)
            return
        if args.name is None:
            raise ConfigurationError(Diagnostic("preset", "a preset name or --list is required"))
        self._emit(dump_scenario(get_preset(args.name)), args.out)

    def cmd_validate(self, args: argparse.Namespace) -> None:
        report = validate_scenario(args.scenario)
        for line in report.lines():
            print(line, file=self.stdout)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, configure logging and metrics, run the subcommand."""
    app = OtdrApp()
    try:
        args = build_parser().parse_args(argv)
    except ConfigurationError as e:
        for line in app._diagnostic_lines(e):
            print(f"error: {line}", file=app.stderr)
        return e.exit_code

    ensure_directories()
    setup_logging(f"psiotdr {__version__} {args.command}", args.log_level)
    port = args.metrics_port if args.metrics_port is not None else settings.monitoring.port
    if port is not None:
        start_monitoring(port)
        logger.info(f"Metrics exposed on port {port}")
    return app.run(args)


if __name__ == "__main__":
    sys.exit(main())
