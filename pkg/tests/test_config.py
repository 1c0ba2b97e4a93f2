import os
import tempfile
import unittest

from median_risk.config import ConfigError, load_config


class LoadConfigTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp_files: list[str] = []
        self._saved_env = os.environ.copy()
        for name in ("MEDIAN_RISK_RUNS", "MEDIAN_RISK_SEED", "MEDIAN_RISK_THREADS", "MEDIAN_RISK_LOG"):
            os.environ.pop(name, None)

    def tearDown(self) -> None:
        os.environ.clear()
        os.environ.update(self._saved_env)
        for path in self._tmp_files:
            try:
                os.remove(path)
            except FileNotFoundError:
                pass

    def _write_tmp(self, content: str, suffix: str = ".yaml") -> str:
        f = tempfile.NamedTemporaryFile("w", delete=False, suffix=suffix, encoding="utf-8")
        try:
            f.write(content)
        finally:
            f.close()
        self._tmp_files.append(f.name)
        return f.name

    def test_defaults_without_file(self) -> None:
        cfg = load_config(None)
        self.assertEqual(cfg.quadrature.rel_tol, 1e-10)
        self.assertEqual(cfg.simulation.runs, 10_000)
        self.assertEqual(cfg.simulation.seed, 20100731)
        self.assertEqual(cfg.simulation.contamination_point, 100.0)
        self.assertIsNone(cfg.contamination.contamination_point)
        self.assertTrue(cfg.contamination.renormalize_weights)
        self.assertEqual(cfg.execution.threads, 1)
        self.assertIsNone(cfg.logging.main_log)

    def test_parses_all_sections(self) -> None:
        path = self._write_tmp(
            """
quadrature:
  rel_tol: 1.0e-8
  abs_tol: 1.0e-12
  max_subdivisions: 500
  tail_mass: 1.0e-12
  weight_floor: 0
contamination:
  renormalize_weights: false
  contamination_point: 100
simulation:
  runs: 2000
  seed: 7
  block_size: 250
  contamination_point: 50
execution:
  threads: 3
logging:
  main_log: "out/run.log"
  level: debug
""".lstrip()
        )
        cfg = load_config(path)
        self.assertEqual(cfg.quadrature.rel_tol, 1e-8)
        self.assertEqual(cfg.quadrature.max_subdivisions, 500)
        self.assertEqual(cfg.quadrature.weight_floor, 0.0)
        self.assertFalse(cfg.contamination.renormalize_weights)
        self.assertEqual(cfg.contamination.contamination_point, 100.0)
        self.assertEqual(cfg.simulation.runs, 2000)
        self.assertEqual(cfg.simulation.block_size, 250)
        self.assertEqual(cfg.simulation.contamination_point, 50.0)
        self.assertEqual(cfg.execution.threads, 3)
        self.assertEqual(cfg.logging.main_log, "out/run.log")
        self.assertEqual(cfg.logging.level, "DEBUG")

    def test_accepts_plain_exponent_notation(self) -> None:
        # YAML 1.1 reads 1e-9 (no dot) as a string.
        path = self._write_tmp("quadrature:\n  rel_tol: 1e-9\n")
        self.assertEqual(load_config(path).quadrature.rel_tol, 1e-9)

    def test_reads_json_by_suffix(self) -> None:
        path = self._write_tmp('{"simulation": {"runs": 123}}', suffix=".json")
        self.assertEqual(load_config(path).simulation.runs, 123)

    def test_rejects_unknown_keys(self) -> None:
        path = self._write_tmp("simulation:\n  runz: 10\n")
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_rejects_non_mapping_section(self) -> None:
        path = self._write_tmp("quadrature: []\n")
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_rejects_non_positive_tolerance(self) -> None:
        path = self._write_tmp("quadrature:\n  rel_tol: 0\n")
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_rejects_large_tail_mass(self) -> None:
        path = self._write_tmp("quadrature:\n  tail_mass: 0.01\n")
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_rejects_non_boolean_renormalize(self) -> None:
        path = self._write_tmp('contamination:\n  renormalize_weights: "yes"\n')
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_rejects_unknown_log_level(self) -> None:
        path = self._write_tmp("logging:\n  level: chatty\n")
        with self.assertRaises(ConfigError):
            load_config(path)

    def test_expands_env_vars_in_config_values(self) -> None:
        os.environ["RISK_LOG_DIR"] = "/tmp/risk"
        path = self._write_tmp('logging:\n  main_log: "${RISK_LOG_DIR}/main.log"\nsimulation:\n  runs: "${RISK_RUNS_X}"\n')
        with self.assertRaises(ConfigError):
            load_config(path)
        os.environ["RISK_RUNS_X"] = "500"
        cfg = load_config(path)
        self.assertEqual(cfg.logging.main_log, "/tmp/risk/main.log")
        self.assertEqual(cfg.simulation.runs, 500)

    def test_env_overrides_config_values(self) -> None:
        os.environ["MEDIAN_RISK_RUNS"] = "42"
        os.environ["MEDIAN_RISK_SEED"] = "9"
        os.environ["MEDIAN_RISK_THREADS"] = "2"
        os.environ["MEDIAN_RISK_LOG"] = "env.log"
        path = self._write_tmp("simulation:\n  runs: 1000\n  seed: 1\nexecution:\n  threads: 8\n")
        cfg = load_config(path)
        self.assertEqual(cfg.simulation.runs, 42)
        self.assertEqual(cfg.simulation.seed, 9)
        self.assertEqual(cfg.execution.threads, 2)
        self.assertEqual(cfg.logging.main_log, "env.log")

    def test_rejects_bad_env_override(self) -> None:
        os.environ["MEDIAN_RISK_THREADS"] = "many"
        with self.assertRaises(ConfigError):
            load_config(None)


if __name__ == "__main__":
    unittest.main()
