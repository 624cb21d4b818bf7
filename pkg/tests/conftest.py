import numpy as np
import pytest

from streampcq.calibration import TrainingRecord
from streampcq.model import ModelParams, h_of_qp, j_of_qp, pmos_g, tqs_from_qp

PQS_GRID = (0.125, 0.25, 0.5, 1.0)
QP_GRID = (22, 28, 34, 40, 46)


def make_synthetic_records(params=None, tc_values=None, noise_sigma=0.0, rng=None):
    """Noise-free (or noisy-MOS) dataset generated from the alpha*tqs law.

    tbpp is chosen per (content, qp) so the texture-complexity chain
    tc = H(qp)*tbpp + J(qp) holds exactly, making every calibration stage
    recoverable in closed form.
    """
    params = params or ModelParams()
    if tc_values is None:
        tc_values = [10.0 + 6.5 * i for i in range(20)]  # 10 .. 133.5
    rng = rng or np.random.default_rng(0)
    records = []
    for ci, tc in enumerate(tc_values):
        content = f"content{ci:02d}"
        alpha = params.c * tc + params.d
        for pqs in PQS_GRID:
            beta = pmos_g(params, pqs)
            for qp in QP_GRID:
                tbpp = (tc - j_of_qp(params, qp)) / h_of_qp(params, qp)
                mos = alpha * tqs_from_qp(qp) + beta
                if noise_sigma:
                    mos += rng.normal(0.0, noise_sigma)
                records.append(TrainingRecord(content=content, pqs=pqs, qp=qp,
                                              tbpp=tbpp, tc=tc, mos=mos))
    return records


@pytest.fixture
def table_params():
    return ModelParams()


@pytest.fixture
def synthetic_records():
    return make_synthetic_records()
