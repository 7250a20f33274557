"""Dynamic regression with ARIMA errors."""

from .arima import (
    ArimaFit,
    ArimaOrder,
    CoefTest,
    arma_loglik,
    coef_test,
    difference,
    fit_arima,
)
from .auto import auto_arima, choose_d, trace_jsonl
from .kpss import CRITICAL_5PCT, kpss_rejects, kpss_stat

__all__ = [
    "ArimaFit", "ArimaOrder", "CoefTest", "CRITICAL_5PCT", "arma_loglik",
    "auto_arima", "choose_d", "coef_test", "difference", "fit_arima",
    "kpss_rejects", "kpss_stat", "trace_jsonl",
]
