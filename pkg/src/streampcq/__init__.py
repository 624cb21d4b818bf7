"""streampcq: bitstream-layer no-reference quality toolkit for
G-PCC Octree-RAHT compressed point clouds."""

from .bitstream import (
    BitstreamFeatures,
    SyntaxSchema,
    TlvUnit,
    compute_tbpp,
    default_schema,
    extract_features,
    read_tlv_units,
    synthesize_bitstream,
)
from .model import ModelParams, QualityPrediction, predict, tqs_from_qp
from .pointcloud import PointCloud, TcResult, compute_tc, read_ply, rgb_to_luma
from .calibration import TrainingRecord, train_full
from .subjective import SubjectiveMatrix, compute_mos
from .evaluation import (
    EvalReport,
    ScorePairSet,
    evaluate,
    f_test,
    fit_logistic,
    loocv,
    plcc,
    random_split_eval,
    rmse,
    srcc,
)

__version__ = "0.1.0"
