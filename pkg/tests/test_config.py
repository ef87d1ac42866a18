"""
Tests for settings loading.
"""

import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from choi_ladder.config import Settings


class TestConfiguration:
    """Test configuration management and edge cases."""

    def test_settings_defaults(self):
        """Test default values are correct."""
        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=None)

        assert settings.debug is False
        assert settings.psd_tol == 1e-9
        assert settings.rank_tol == 1e-10
        assert settings.eigensolver == "jacobi"
        assert settings.jacobi_max_sweeps == 100
        assert settings.default_schedule == [2, 4, 8, 16, 32]
        assert settings.max_dimension == 4096
        assert settings.seed == 0

    def test_settings_from_environment(self):
        """Test settings with environment variables."""
        with patch.dict(
            os.environ,
            {
                "CHOI_LADDER_PSD_TOL": "1e-6",
                "CHOI_LADDER_EIGENSOLVER": "lapack",
                "CHOI_LADDER_DEFAULT_SCHEDULE": "[1, 2]",
                "CHOI_LADDER_DEBUG": "true",
            },
            clear=True,
        ):
            settings = Settings(_env_file=None)

        assert settings.psd_tol == 1e-6
        assert settings.eigensolver == "lapack"
        assert settings.default_schedule == [1, 2]
        assert settings.debug is True

    def test_env_file(self, tmp_path):
        env_file = tmp_path / ".env"
        env_file.write_text("CHOI_LADDER_JACOBI_MAX_SWEEPS=7\n", encoding="utf-8")

        with patch.dict(os.environ, {}, clear=True):
            settings = Settings(_env_file=env_file)

        assert settings.jacobi_max_sweeps == 7

    @pytest.mark.parametrize(
        ("name", "value"),
        [
            ("CHOI_LADDER_PSD_TOL", "0"),
            ("CHOI_LADDER_EIGENSOLVER", "qr"),
            ("CHOI_LADDER_JACOBI_MAX_SWEEPS", "0"),
        ],
    )
    def test_invalid_values_rejected(self, name, value):
        with patch.dict(os.environ, {name: value}, clear=True):
            with pytest.raises(ValidationError):
                Settings(_env_file=None)
