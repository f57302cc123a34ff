"""
Unit tests for utility functions.
"""

import pytest
import tempfile
import shutil
from pathlib import Path

from errors import ConfigError
from utils import (
    build_mesh, coerce_config_value, env_int, ensure_output_dir, format_display,
    load_config_file, parse_config_text, parse_mesh, safe_int
)


class TestMeshFunctions:
    """Test mesh parsing and construction."""

    def test_parse_mesh(self):
        assert parse_mesh("0.1,0.2, 0.3") == [0.1, 0.2, 0.3]
        assert parse_mesh("0.5 1.0") == [0.5, 1.0]
        assert parse_mesh("") == []

    def test_parse_mesh_invalid(self):
        with pytest.raises(ValueError):
            parse_mesh("0.1,abc")

    def test_build_mesh(self):
        mesh = build_mesh(0.25, 4)
        assert mesh == [0.25, 0.5, 0.75, 1.0]

    def test_build_mesh_invalid(self):
        with pytest.raises(ValueError):
            build_mesh(0.0, 3)
        with pytest.raises(ValueError):
            build_mesh(0.1, 0)


class TestConfigParsing:
    """Test the flat key = value config format."""

    def test_typed_values(self):
        text = """
# experiment
problem = riccati
eps = 1e-4
h1-factor = 2      # initial step is 2*eps
mesh_count = 32
mesh_step = 0.05
simplified_js = yes
"""
        values = parse_config_text(text)
        assert values == {
            "problem": "riccati",
            "eps": 1e-4,
            "h1_factor": 2.0,
            "mesh_count": 32,
            "mesh_step": 0.05,
            "simplified_js": True,
        }

    def test_mesh_value(self):
        assert parse_config_text("mesh = 0.5, 1.0")["mesh"] == [0.5, 1.0]

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text("eps = 1e-4\n\ntolerance = 3")
        assert exc_info.value.line == 3
        assert exc_info.value.field == "tolerance"
        assert str(exc_info.value).startswith("[line 3, field 'tolerance'] ")

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text("problem linear")
        assert exc_info.value.line == 1

    def test_bad_value(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text("eps = small")
        assert exc_info.value.field == "eps"

    def test_bad_boolean(self):
        with pytest.raises(ConfigError):
            coerce_config_value("simplified_js", "maybe")

    def test_repeated_key(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text("eps = 1e-4\neps = 1e-3")
        assert exc_info.value.line == 2

    def test_integer_from_float_text(self):
        assert coerce_config_value("node_cap", "1e6") == 1000000


class TestConfigFiles:
    """Test config files on disk."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_load_config_file(self):
        path = Path(self.temp_dir) / "run.cfg"
        path.write_text("problem = linear\nalgorithm = mesh\n", encoding="utf-8")
        assert load_config_file(str(path)) == {"problem": "linear", "algorithm": "mesh"}

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config_file(str(Path(self.temp_dir) / "absent.cfg"))

    def test_ensure_output_dir(self):
        output_dir = Path(self.temp_dir) / "results" / "nested"
        result = ensure_output_dir(str(output_dir))
        assert result.exists()
        assert result.is_dir()
        assert result == output_dir


class TestConversions:
    """Test display formatting and environment defaults."""

    def test_format_display(self):
        assert format_display(2.50006) == "2.5001"
        assert format_display(0.05127) == "0.0513"
        assert format_display(None) is None

    def test_safe_int(self):
        assert safe_int("123") == 123
        assert safe_int("1e3") == 1000
        assert safe_int(None) == 0
        assert safe_int("") == 0
        assert safe_int("abc", default=999) == 999

    def test_env_int(self, monkeypatch):
        monkeypatch.setenv("INTEGRATING_TEST_VALUE", "250")
        assert env_int("INTEGRATING_TEST_VALUE", 7) == 250

    def test_env_int_fallback(self, monkeypatch):
        monkeypatch.delenv("INTEGRATING_TEST_VALUE", raising=False)
        assert env_int("INTEGRATING_TEST_VALUE", 7) == 7
        monkeypatch.setenv("INTEGRATING_TEST_VALUE", "-3")
        assert env_int("INTEGRATING_TEST_VALUE", 7) == 7
        monkeypatch.setenv("INTEGRATING_TEST_VALUE", "lots")
        assert env_int("INTEGRATING_TEST_VALUE", 7) == 7
