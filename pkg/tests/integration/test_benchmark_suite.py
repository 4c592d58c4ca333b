"""
Integration tests for the benchmark suite and its artifacts.
"""
import csv
import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from unittest.mock import patch

from client.cli import main
from common.records import RunStatus
from problems.generators import PROBLEM_NAMES
from scripts.benchmark import benchmark_problem


def read_bytes(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


class TestBenchmarkSuite(unittest.TestCase):
    """End-to-end suite runs through the CLI."""

    @classmethod
    def setUpClass(cls):
        """Run the suite serially and with two workers."""
        cls.test_dir = tempfile.mkdtemp()
        cls.serial_dir = os.path.join(cls.test_dir, 'serial')
        cls.parallel_dir = os.path.join(cls.test_dir, 'parallel')
        cls.metrics_file = os.path.join(cls.test_dir, 'metrics.prom')

        with patch.dict(os.environ, {'RARC_SEED': '11'}):
            cls.codes = []
            for out_dir, extra in [(cls.serial_dir, ['--metrics-file', cls.metrics_file]),
                                   (cls.parallel_dir, ['--jobs', '2'])]:
                with redirect_stdout(io.StringIO()), redirect_stderr(io.StringIO()):
                    cls.codes.append(main(['--out', out_dir] + extra))

        with open(os.path.join(cls.serial_dir, 'summary.json')) as f:
            cls.summary = json.load(f)

    @classmethod
    def tearDownClass(cls):
        """Clean up test environment."""
        shutil.rmtree(cls.test_dir)

    def test_exit_codes(self):
        """Test both runs converge on every problem and exit 0."""
        self.assertEqual(self.codes, [0, 0])
        statuses = [r['status'] for r in self.summary['reports']]
        self.assertEqual(statuses, [RunStatus.FIRST_ORDER_CONVERGED.value] * len(PROBLEM_NAMES))

    def test_byte_identical_outputs(self):
        """Test serial and concurrent runs write identical files."""
        files = ['summary.json'] + [f"{name}_history.csv" for name in PROBLEM_NAMES]
        for name in files:
            with self.subTest(file=name):
                self.assertEqual(read_bytes(os.path.join(self.serial_dir, name)),
                                 read_bytes(os.path.join(self.parallel_dir, name)))

    def test_report_order(self):
        """Test reports follow the suite order."""
        reports = self.summary['reports']
        self.assertEqual([r['problem_name'] for r in reports], PROBLEM_NAMES)
        self.assertEqual(self.summary['config']['seed'], 11)

    def test_ofv_matches_history(self):
        """Test each OFV equals the last f in its history."""
        for report in self.summary['reports']:
            with open(os.path.join(self.serial_dir, f"{report['problem_name']}_history.csv")) as f:
                rows = list(csv.DictReader(f))
            with self.subTest(problem=report['problem_name']):
                self.assertEqual(float(rows[-1]['f']), report['OFV'])
                self.assertEqual(int(rows[-1]['k']), report['iters'])
                self.assertEqual(int(rows[-1]['f_evals_cum']), report['f_evals'])

    def test_metrics_file(self):
        """Test the Prometheus text file holds the trial counters."""
        with open(self.metrics_file) as f:
            text = f.read()
        self.assertIn('rarc_trials_total', text)
        self.assertIn('rarc_objective_evaluations_total', text)


class TestOracleBenchmark(unittest.TestCase):
    """Test cases for the multi-seed oracle benchmark script."""

    def test_benchmark_problem(self):
        """Test one exact-mode benchmark row closes the oracle gap."""
        row = benchmark_problem('top-eig', {'n': 10}, seed=1, mode='exact')
        self.assertEqual(row['status'], RunStatus.FIRST_ORDER_CONVERGED.value)
        self.assertLessEqual(abs(row['gap']), 1e-6)
        self.assertEqual(row['audit'], 'ok')
        self.assertEqual(row['manifold'], 'Sp(10)')


if __name__ == '__main__':
    unittest.main()
