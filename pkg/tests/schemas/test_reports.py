import numpy as np
import pytest
from pydantic import ValidationError

from lnamor.lib import constants as c
from lnamor.lib.lnamor import Lnamor
from lnamor.lib.matclass import classify
from lnamor.lib.timescale import SweepResult, SweepRow
from lnamor.schemas.reports import MatrixClassSchema, Meta, ReductionReport, SweepSummary

META = Meta(version=c.VERSION, config_hash="0" * 64)


class TestMeta:
    def test_hash_length(self):
        with pytest.raises(ValidationError):
            Meta(version=c.VERSION, config_hash="abc")


class TestMatrixClassSchema:
    def test_toy_classes(self):
        lna = Lnamor.from_builtin("toy")
        schema = MatrixClassSchema.from_report(classify(lna.analyze().drift))
        assert schema.is_sign_metzler
        assert not schema.is_metzler
        assert schema.signature == [1, -1, 1, -1]
        assert schema.is_diagonally_stable
        assert len(schema.certificate) == 4
        assert len(schema.companion_spectrum_real) == 4

    def test_no_certificate(self):
        schema = MatrixClassSchema.from_report(classify(np.array([[1.0, 0.0], [0.0, -1.0]])))
        assert schema.certificate is None
        assert not schema.is_diagonally_stable


class TestReductionReport:
    def test_restores_result(self):
        """A report written for a reduction lifts back to the same reduction"""
        result = Lnamor.from_builtin("toy").reduce(["S1", "S3"], [["S2", "S4"]], [1])
        report = ReductionReport.from_result(META, result, measured_hinf_error=0.1)
        assert report.species == ["S1", "S3", "S2", "S4"]
        assert report.preserved == 2
        assert report.groups == [2]
        assert report.bound == pytest.approx(result.hankel_tail)

        restored = ReductionReport.model_validate_json(report.model_dump_json()).to_result()
        np.testing.assert_allclose(restored.reduced.A, result.reduced.A)
        np.testing.assert_allclose(restored.projections.W_r, result.projections.W_r)
        assert restored.permutation == result.permutation
        assert restored.method == result.method


class TestSweepSummary:
    def test_nan_slopes_become_null(self):
        result = SweepResult(
            rows=(SweepRow(epsilon=0.1, mean_err=1e-2, ms_err=1e-3),),
            mean_slope=float("nan"),
            ms_slope=float("nan"),
        )
        summary = SweepSummary.from_result(META, ["S1"], result)
        assert summary.mean_slope is None
        assert summary.ms_slope is None
        assert summary.rows[0].epsilon == 0.1
