"""Monitoring configuration for the simulator."""
from prometheus_client import Counter, Histogram, start_http_server

# Simulation metrics
shots_simulated = Counter(
    "psiotdr_shots_simulated_total",
    "Total number of laser shots simulated",
)

starts_recorded = Counter(
    "psiotdr_starts_total",
    "Total number of TAC starts (shots that triggered the start channel)",
)

stops_recorded = Counter(
    "psiotdr_stops_total",
    "Total number of stop events binned into histograms",
)

dark_events = Counter(
    "psiotdr_dark_events_total",
    "Total number of dark counts drawn by the detector model",
)

simulation_runs = Counter(
    "psiotdr_simulation_runs_total",
    "Total number of completed simulate() calls",
    ["mode"],
)

# Performance metrics
simulation_duration = Histogram(
    "psiotdr_simulation_duration_seconds",
    "Wall-clock duration of simulate() calls",
    buckets=[0.1, 1.0, 5.0, 15.0, 60.0, 120.0, 600.0],
)

analysis_duration = Histogram(
    "psiotdr_analysis_duration_seconds",
    "Wall-clock duration of trace analyses",
    ["operation"],
    buckets=[0.01, 0.1, 0.5, 1.0, 5.0],
)

# Error metrics
analysis_failures = Counter(
    "psiotdr_analysis_failures_total",
    "Total number of figures of merit that could not be extracted",
    ["error_type"],
)


def start_monitoring(port: int = 9090) -> None:
    """Start the Prometheus metrics server."""
    start_http_server(port)
