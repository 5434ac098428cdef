from app.harness.config import ExperimentConfig, load_config, validate_config
from app.harness.runner import ExperimentResult, ExperimentRunner, run
from app.harness.plot_data import PANELS, emit_plot_data
from app.harness.selftest import CheckResult, SelftestSummary, run_selftest
from app.harness.experiments import EXPERIMENTS, ExperimentOutput
from app.harness.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, create_parser, main
