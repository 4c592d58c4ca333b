"""
Prometheus metrics for solver runs.

Metrics live in a private registry so that several runs in one process (tests,
suite runs) never collide with the default global registry.
"""
from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

from .constants import PROMETHEUS_NAMESPACE


registry = CollectorRegistry()

objective_evaluations = Counter(
    'objective_evaluations_total', 'Objective, gradient and Hessian evaluations',
    ['kind'], namespace=PROMETHEUS_NAMESPACE, registry=registry
)
trials = Counter(
    'trials_total', 'Inner-loop trials by outcome',
    ['outcome'], namespace=PROMETHEUS_NAMESPACE, registry=registry
)
run_duration = Histogram(
    'run_duration_seconds', 'Wall time of complete solver runs',
    ['problem'], namespace=PROMETHEUS_NAMESPACE, registry=registry
)
sigma = Gauge(
    'sigma', 'Regularization parameter after the last accepted step',
    ['problem'], namespace=PROMETHEUS_NAMESPACE, registry=registry
)


def record_evaluations(f_calls: int = 0, grad_calls: int = 0, hess_calls: int = 0):
    """Add evaluation counts from one trial."""
    if f_calls:
        objective_evaluations.labels(kind='f').inc(f_calls)
    if grad_calls:
        objective_evaluations.labels(kind='grad').inc(grad_calls)
    if hess_calls:
        objective_evaluations.labels(kind='hess').inc(hess_calls)


def record_trial(outcome: str):
    trials.labels(outcome=outcome).inc()


def record_run(problem: str, seconds: float, last_sigma: float):
    run_duration.labels(problem=problem).observe(seconds)
    sigma.labels(problem=problem).set(last_sigma)


def write_metrics(path: str):
    """Dump the registry in the text exposition format."""
    write_to_textfile(path, registry)
