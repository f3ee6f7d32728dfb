import math

from lfdeblur.utils.template_utils import format_metric, get_template


def test_format_metric():
    assert format_metric(0.123456) == "0.1235"
    assert format_metric(27.5, 2) == "27.50"
    assert format_metric(math.inf) == "inf"
    assert format_metric(-math.inf) == "-inf"
    assert format_metric(math.nan) == "nan"


def test_report_template_loads():
    assert get_template("metric_report.txt.j2").render(report={"per_scene": [], "mean": None, "failures": []}).split() == [
        "name", "psnr", "ssim", "ncc", "lmse"
    ]
