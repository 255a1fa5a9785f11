import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from pivot_ci.censoring import LifeTestOutcome
from pivot_ci.cli import EXIT_DEGENERATE, EXIT_NO_MLE, EXIT_OK, EXIT_VALIDATION, main

from test.data import *


def run_cli(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = main(list(argv))
    return code, stdout.getvalue(), stderr.getvalue()


class CiCommandTest(unittest.TestCase):
    def test_type1_json(self):
        code, out, _ = run_cli('-f', 'json', 'ci', '--model', 'type1', '--n', '10', '--T', '1',
                               '--failures', '0.1,0.2,0.5')
        self.assertEqual(code, EXIT_OK)
        data = json.loads(out)
        self.assertEqual(data['schema_version'], 1)
        self.assertAlmostEqual(data['statistic'], 2.6, delta=1e-9)
        self.assertTrue(0 < data['lower'] < 2.6 < data['upper'])
        self.assertFalse(data['upper_infinite'])
        self.assertEqual(data['alpha1'], 0.025)

    def test_no_failures(self):
        code, out, err = run_cli('ci', '--model', 'type1', '--n', '10', '--T', '1', '--failures', '')
        self.assertEqual(code, EXIT_NO_MLE)
        self.assertEqual(out, '')
        self.assertIn("MLE does not exist; no interval can be formed", err)

    def test_binomial(self):
        code, out, _ = run_cli('ci', '--model', 'binomial', '--n', '10', '--x', '3', '--alpha', '0.05')
        self.assertEqual(code, EXIT_OK)
        lower, upper = (float(v) for v in out.split())
        self.assertAlmostEqual(lower, CLOPPER_PEARSON_N10_X3[0], delta=1e-4)
        self.assertAlmostEqual(upper, CLOPPER_PEARSON_N10_X3[1], delta=1e-4)

    def test_infinite_upper(self):
        code, out, _ = run_cli('ci', '--n', '10', '--T', '1', '--failures', '0.3', '--alpha1', '0.05',
                               '--alpha2', '0.05')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.split()[1], 'inf')
        code, out, _ = run_cli('-f', 'json', 'ci', '--n', '10', '--T', '1', '--failures', '0.3')
        data = json.loads(out)
        self.assertIsNone(data['upper'])
        self.assertTrue(data['upper_infinite'])

    def test_degenerate(self):
        code, _, err = run_cli('ci', '--n', '10', '--T', '1', '--failures', '0.999')
        self.assertEqual(code, EXIT_DEGENERATE)
        self.assertIn("interval degenerates at the parameter-space boundary", err)

    def test_bounded(self):
        code, out, _ = run_cli('ci', '--n', '10', '--T', '1', '--failures', '0.5', '--upper', '10')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(float(out.split()[1]), 10.0)

    def test_data_file(self):
        outcome = LifeTestOutcome.from_failures([0.3, 0.9], 4, 5.0, r=2)
        with tempfile.NamedTemporaryFile('w', suffix='.json', delete=False) as f:
            outcome.dump(f)
        try:
            code, out, _ = run_cli('-f', 'csv', 'ci', '--model', 'hybrid', '--data', f.name)
            self.assertEqual(code, EXIT_OK)
            header, row = out.splitlines()
            self.assertEqual(header.split(',')[0], 'statistic')
            self.assertAlmostEqual(float(row.split(',')[0]), 1.5, delta=1e-9)
            code, _, err = run_cli('ci', '--model', 'type1', '--data', f.name)
            self.assertEqual(code, EXIT_VALIDATION)
            code, _, _ = run_cli('ci', '--model', 'hybrid', '--n', '5', '--data', f.name)
            self.assertEqual(code, EXIT_VALIDATION)
        finally:
            os.remove(f.name)

    def test_data_file_stopping_rule(self):
        record = {'n': 4, 'T': 5.0, 'failures': [0.3, 0.9, 2.0], 'r': 2, 'stop_time': 5.0}
        with tempfile.NamedTemporaryFile('w', suffix='.json', delete=False) as f:
            json.dump(record, f)
        try:
            code, out, err = run_cli('ci', '--model', 'hybrid', '--data', f.name)
            self.assertEqual(code, EXIT_VALIDATION)
            self.assertEqual(out, '')
            self.assertTrue(err.startswith('error:'))
        finally:
            os.remove(f.name)

    def test_truncated_logistic(self):
        code, out, _ = run_cli('ci', '--model', 'trunc-logistic', '--T1', '0', '--y', '2', '--alpha', '0.1')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.split()[0], '-inf')

    def test_validation(self):
        code, _, err = run_cli('ci', '--model', 'type1', '--n', '0', '--T', '1', '--failures', '0.5')
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertTrue(err.startswith('error:'))
        code, _, _ = run_cli('ci', '--model', 'type1', '--T', '1', '--failures', '0.5')
        self.assertEqual(code, EXIT_VALIDATION)
        code, _, _ = run_cli('ci', '--model', 'type1', '--n', '3', '--T', '1', '--failures', 'a,b')
        self.assertEqual(code, EXIT_VALIDATION)
        code, _, _ = run_cli('ci', '--model', 'binomial', '--n', '10', '--x', '11')
        self.assertEqual(code, EXIT_VALIDATION)

    def test_below_threshold(self):
        code, out, err = run_cli('ci', '--n', '10', '--T', '1', '--d0', '5', '--failures', '0.1,0.2,0.3,0.4')
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertEqual(out, '')
        self.assertTrue(err.startswith('error:'))
        code, _, _ = run_cli('ci', '--n', '10', '--T', '1', '--d0', '4', '--failures', '0.1,0.2,0.3,0.4')
        self.assertIn(code, (EXIT_OK, EXIT_DEGENERATE))

    def test_usage_error(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as se:
                main(['ci', '--model', 'weibull'])
            self.assertEqual(se.exception.code, EXIT_VALIDATION)
            with self.assertRaises(SystemExit) as se:
                main([])
            self.assertEqual(se.exception.code, EXIT_VALIDATION)
            with self.assertRaises(SystemExit) as se:
                main(['--log-level', 'verbose', 'cdf', '--n', '1', '--T', '1', '--theta', '1', '--y', '0.5'])
            self.assertEqual(se.exception.code, EXIT_VALIDATION)

    def test_log_level_case(self):
        code, _, _ = run_cli('--log-level', 'WARNING', 'cdf', '--n', '1', '--T', '1', '--theta', '1', '--y', '0.5')
        self.assertEqual(code, EXIT_OK)


class InspectCommandTest(unittest.TestCase):
    def test_limits(self):
        code, out, _ = run_cli('limits', '--model', 'type1', '--n', '10', '--T', '1', '--y', '9.3')
        self.assertEqual(code, EXIT_OK)
        limit_high, limit_low = (float(v) for v in out.split())
        self.assertAlmostEqual(limit_high, 0.3, delta=1e-9)
        self.assertEqual(limit_low, 1.0)

    def test_cdf(self):
        code, out, _ = run_cli('cdf', '--model', 'type1', '--n', '1', '--T', '1', '--theta', '1', '--y', '0.5')
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(float(out), n1_closed_form(0.5, 1.0), delta=1e-9)
        self.assertAlmostEqual(float(out), 0.62246, delta=1e-5)

    def test_cdf_binomial(self):
        code, out, _ = run_cli('cdf', '--model', 'binomial', '--n', '10', '--x', '10', '--theta', '0.5')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(float(out), 1.0)

    def test_precision(self):
        _, out, _ = run_cli('--precision', '3', 'cdf', '--n', '1', '--T', '1', '--theta', '1', '--y', '0.5')
        self.assertEqual(out.strip(), '0.622')

    def test_support(self):
        code, out, _ = run_cli('-f', 'json', 'support', '--model', 'type1', '--n', '2', '--T', '1')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(json.loads(out)['intervals'], [[0.0, 2.0]])
        _, out, _ = run_cli('support', '--n', '5', '--T', '1')
        self.assertEqual(out.splitlines(), ['[0, 2.5]', '[4, 5]'])
        _, out, _ = run_cli('-f', 'csv', 'support', '--n', '5', '--T', '1')
        self.assertEqual(out.splitlines(), ['lower,upper', '0,2.5', '4,5'])
        code, _, _ = run_cli('support', '--model', 'binomial', '--n', '5')
        self.assertEqual(code, EXIT_VALIDATION)


class SimulateCommandTest(unittest.TestCase):
    def test_single_replication(self):
        code, out, _ = run_cli('simulate', '--n', '5', '--reps', '1')
        self.assertEqual(code, EXIT_OK)
        values = dict(line.split(' ', 1) for line in out.splitlines())
        self.assertEqual(float(values['coverage_se']), 0.0)
        self.assertEqual(values['replications_used'], '1')

    def test_deterministic(self):
        args = ('-f', 'json', 'simulate', '--n', '5', '--reps', '40', '--seed', '3', '--streams', '2')
        code, first, _ = run_cli(*args)
        _, second, _ = run_cli(*args)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(first, second)
        data = json.loads(first)
        self.assertEqual(data['replications_used'], 40)
        self.assertTrue(0.0 <= data['coverage_hat'] <= 1.0)

    def test_csv(self):
        code, out, _ = run_cli('-f', 'csv', 'simulate', '--n', '3', '--reps', '5')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith('coverage_hat,'))

    def test_skip_widths(self):
        code, out, _ = run_cli('-f', 'json', 'simulate', '--n', '5', '--reps', '40', '--skip-widths')
        self.assertEqual(code, EXIT_OK)
        data = json.loads(out)
        self.assertIsNone(data['mean_finite_width'])
        self.assertEqual(data['replications_used'], 40)
